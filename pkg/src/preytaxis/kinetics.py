"""Reaction kinetics for the predator (p) and prey (s) densities.

Models follow ``p_t = ... + p f(p, s)`` and ``s_t = ... + s g(p, s)``. Every
built-in model carries analytic partial derivatives, and the p-linear ones
also expose the decomposition ``f = f(s)``, ``g = g0(s) - g1(s) p / s``.

Averaging over the fast torus replaces ``f`` and ``g`` by::

    fbar(P, S) = < e_* f(e_* P, S) >,   gbar(P, S) = < g(e_* P, S) >

which is what :class:`AveragedKinetics` evaluates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KineticsModel",
    "LotkaVolterra",
    "Holling",
    "ArditiGinzburg",
    "NullKinetics",
    "make_model",
    "AveragedKinetics",
    "Equilibrium",
    "EquilibriumError",
    "BranchResult",
    "find_equilibrium",
    "quasi_equilibrium_branch",
    "check_pcr_condition",
]


class EquilibriumError(RuntimeError):
    pass


def _require_positive(**params):
    for k, v in params.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"parameter {k} must be positive, got {v}")


class KineticsModel:
    """Base class; subclasses implement ``f``, ``g`` and their four partials."""

    name = "abstract"
    p_linear = False

    def params(self) -> dict:
        return {}

    def f(self, p, s):
        raise NotImplementedError

    def g(self, p, s):
        raise NotImplementedError

    def f_p(self, p, s):
        raise NotImplementedError

    def f_s(self, p, s):
        raise NotImplementedError

    def g_p(self, p, s):
        raise NotImplementedError

    def g_s(self, p, s):
        raise NotImplementedError

    def in_domain(self, p, s) -> np.ndarray:
        return (np.asarray(p) > 0) & (np.asarray(s) > 0)

    def jacobian_reaction(self, p, s) -> np.ndarray:
        """``a_ij = dF_i/dz_j`` for ``F1 = p f``, ``F2 = s g``; shape ``(2, 2, ...)``."""
        f, g = self.f(p, s), self.g(p, s)
        return np.array([[f + p * self.f_p(p, s), p * self.f_s(p, s)],
                         [s * self.g_p(p, s), g + s * self.g_s(p, s)]])

    def equilibrium(self) -> tuple[float, float] | None:
        """Closed-form coexistence equilibrium without a signal, when known."""
        return None

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class LotkaVolterra(KineticsModel):
    """``f = gamma s - beta``, ``g = 1 - s - p``."""

    name = "lotka-volterra"
    p_linear = True

    def __init__(self, gamma: float, beta: float):
        _require_positive(gamma=gamma, beta=beta)
        self.gamma, self.beta = float(gamma), float(beta)

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def f(self, p, s):
        return self.gamma * s - self.beta + 0 * p

    def g(self, p, s):
        return 1 - s - p

    def f_p(self, p, s):
        return np.zeros_like(np.asarray(p + s, dtype=float))

    def f_s(self, p, s):
        return self.gamma + 0 * (p + s)

    def g_p(self, p, s):
        return -1.0 + 0 * (p + s)

    def g_s(self, p, s):
        return -1.0 + 0 * (p + s)

    def g0(self, s):
        return 1 - s

    def g0_s(self, s):
        return -1.0 + 0 * s

    def g1(self, s):
        return s

    def g1_over_s_s(self, s):
        return 0 * s

    def equilibrium(self):
        s = self.beta / self.gamma
        return (1 - s, s) if s < 1 else None


class Holling(KineticsModel):
    """Holling type kinetics with ``g1 = alpha s^n / (1 + alpha s^n)``.

    ``f = gamma g1(s) - beta`` and ``g = 1 - s - g1(s) p / s``. ``n = 1`` is
    the dimensionless Holling II form, ``n = 2`` Holling III.
    """

    name = "holling"
    p_linear = True

    def __init__(self, gamma: float, beta: float, alpha: float, n: int = 1):
        _require_positive(gamma=gamma, beta=beta, alpha=alpha)
        if int(n) != n or n < 1:
            raise ValueError("Holling exponent must be a positive integer")
        self.gamma, self.beta, self.alpha, self.n = float(gamma), float(beta), float(alpha), int(n)

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta, "alpha": self.alpha, "n": self.n}

    def g1(self, s):
        sn = self.alpha * s ** self.n
        return sn / (1 + sn)

    def g1_s(self, s):
        sn = self.alpha * s ** self.n
        return self.n * sn / (s * (1 + sn) ** 2)

    def g0(self, s):
        return 1 - s

    def g0_s(self, s):
        return -1.0 + 0 * s

    def g1_over_s_s(self, s):
        return (s * self.g1_s(s) - self.g1(s)) / s**2

    def f(self, p, s):
        return self.gamma * self.g1(s) - self.beta + 0 * p

    def g(self, p, s):
        return 1 - s - self.g1(s) * p / s

    def f_p(self, p, s):
        return np.zeros_like(np.asarray(p + s, dtype=float))

    def f_s(self, p, s):
        return self.gamma * self.g1_s(s) + 0 * p

    def g_p(self, p, s):
        return -self.g1(s) / s + 0 * p

    def g_s(self, p, s):
        return -1 - p * self.g1_over_s_s(s)

    def equilibrium(self):
        ratio = self.beta / self.gamma
        if ratio >= 1:
            return None
        s = (ratio / (self.alpha * (1 - ratio))) ** (1.0 / self.n)
        if not 0 < s < 1:
            return None
        return s * (1 - s) / self.g1(s), s


class ArditiGinzburg(KineticsModel):
    """Ratio-dependent kinetics ``f = gamma s/(s+p) - beta``, ``g = 1 - s - r p/(s+p)``."""

    name = "arditi-ginzburg"
    p_linear = False

    def __init__(self, gamma: float, beta: float, r: float):
        _require_positive(gamma=gamma, beta=beta, r=r)
        self.gamma, self.beta, self.r = float(gamma), float(beta), float(r)

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta, "r": self.r}

    def f(self, p, s):
        return self.gamma * s / (s + p) - self.beta

    def g(self, p, s):
        return 1 - s - self.r * p / (s + p)

    def f_p(self, p, s):
        return -self.gamma * s / (s + p) ** 2

    def f_s(self, p, s):
        return self.gamma * p / (s + p) ** 2

    def g_p(self, p, s):
        return -self.r * s / (s + p) ** 2

    def g_s(self, p, s):
        return -1 + self.r * p / (s + p) ** 2

    def equilibrium(self):
        u = self.beta / self.gamma
        if u >= 1:
            return None
        s = 1 - self.r * (1 - u)
        if s <= 0:
            return None
        return s * (1 - u) / u, s


class NullKinetics(KineticsModel):
    """No reactions (``f = g = 0``); isolates transport in convergence studies."""

    name = "none"
    p_linear = True

    def _zero(self, p, s):
        return np.zeros(np.broadcast(np.asarray(p), np.asarray(s)).shape)

    f = g = f_p = f_s = g_p = g_s = _zero

    def equilibrium(self):
        return None


_REGISTRY = {
    "none": NullKinetics,
    "lotka-volterra": LotkaVolterra,
    "holling": Holling,
    "holling2": lambda **kw: Holling(n=1, **kw),
    "holling3": lambda **kw: Holling(n=2, **kw),
    "arditi-ginzburg": ArditiGinzburg,
}


def make_model(name: str, **params) -> KineticsModel:
    """Build a registered model by name, e.g. ``make_model("lotka-volterra", gamma=2, beta=1)``."""
    try:
        factory = _REGISTRY[name.lower()]
    except KeyError:
        raise ValueError(f"unknown kinetics model {name!r}; known: {sorted(_REGISTRY)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"invalid parameters for {name}: {exc}") from None


@dataclass(frozen=True)
class AveragedKinetics:
    """Averaged kinetics over the samples of ``e_*`` on the fast torus."""

    model: KineticsModel
    estar: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        object.__setattr__(self, "estar", np.asarray(self.estar, dtype=float).reshape(-1))

    @classmethod
    def from_weight(cls, model: KineticsModel, weight) -> "AveragedKinetics":
        if weight is None:
            return cls(model)
        return cls(model, weight.estar.values)

    def _points(self, p, s):
        p = np.asarray(p, dtype=float)
        s = np.asarray(s, dtype=float)
        if np.any(p <= 0) or np.any(s <= 0):
            raise ValueError("averaged kinetics evaluated outside the positive cone")
        p, s = np.broadcast_arrays(p, s)
        return self.estar * p[..., None], s[..., None]

    def fbar(self, p, s):
        z1, z2 = self._points(p, s)
        return np.mean(self.estar * self.model.f(z1, z2), axis=-1)

    def gbar(self, p, s):
        z1, z2 = self._points(p, s)
        return np.mean(self.model.g(z1, z2), axis=-1)

    def jacobian_fg(self, p, s) -> np.ndarray:
        """Jacobian of ``(fbar, gbar)`` in ``(P, S)``."""
        z1, z2 = self._points(p, s)
        e = self.estar
        m = self.model
        return np.array([[np.mean(e * e * m.f_p(z1, z2), axis=-1), np.mean(e * m.f_s(z1, z2), axis=-1)],
                         [np.mean(e * m.g_p(z1, z2), axis=-1), np.mean(m.g_s(z1, z2), axis=-1)]])

    def linearization(self, p, s) -> np.ndarray:
        """Averaged ``a_ij`` with ``e_*`` inserted for derivatives in the predator density.

        Equals the Jacobian of ``(P fbar, S gbar)``.
        """
        z1, z2 = self._points(p, s)
        a = self.model.jacobian_reaction(z1, z2)
        weight = np.array([self.estar, np.ones_like(self.estar)])
        return np.mean(a * weight[None, :, ...], axis=-1)


@dataclass(frozen=True)
class Equilibrium:
    p_e: float
    s_e: float
    nondegenerate: bool
    residual: float
    iterations: int = 0


def find_equilibrium(model: KineticsModel, averaged: AveragedKinetics | None = None,
                     guess: tuple[float, float] | None = None, tol: float = 1e-12,
                     max_iter: int = 50) -> Equilibrium:
    """Coexistence solution of ``fbar = gbar = 0`` by damped Newton iteration."""
    kin = averaged or AveragedKinetics(model)
    if guess is None:
        guess = model.equilibrium()
        if guess is None:
            raise EquilibriumError(f"{model!r} has no closed-form guess; pass one")
    z = np.array(guess, dtype=float)
    if np.any(z <= 0):
        raise ValueError("initial guess must lie in the positive cone")

    def resid(v):
        return np.array([kin.fbar(*v), kin.gbar(*v)])

    r = resid(z)
    it = 0
    while np.max(np.abs(r)) > tol:
        if it >= max_iter:
            raise EquilibriumError(f"Newton did not converge in {max_iter} iterations "
                                   f"(residual {np.max(np.abs(r)):.3e})")
        step = np.linalg.solve(kin.jacobian_fg(*z), -r)
        lam = 1.0
        while True:
            trial = z + lam * step
            if np.all(trial > 0):
                r_trial = resid(trial)
                if np.linalg.norm(r_trial) < np.linalg.norm(r) or lam < 1e-3:
                    break
            lam *= 0.5
            if lam < 1e-8:
                raise EquilibriumError("Newton step left the positive cone (boundary equilibrium?)")
        z, r = trial, r_trial
        it += 1
    jac = np.diag(z) @ kin.jacobian_fg(*z)
    nondeg = bool(np.linalg.cond(jac) < 1e12)
    return Equilibrium(float(z[0]), float(z[1]), nondeg, float(np.max(np.abs(r))), it)


@dataclass(frozen=True)
class BranchResult:
    amplitudes: tuple[float, ...]
    equilibria: tuple[Equilibrium, ...]
    terminated_at: float | None = None
    message: str = ""


def quasi_equilibrium_branch(model: KineticsModel, averaged_for_amplitude, a_values) -> BranchResult:
    """Continue the coexistence quasi-equilibrium in the effective amplitude.

    ``averaged_for_amplitude(a)`` returns the :class:`AveragedKinetics` of the
    signal scaled to effective amplitude ``a``; each solve starts from the
    previous point.
    """
    a_values = [float(a) for a in a_values]
    if any(b < a for a, b in zip(a_values, a_values[1:])) or (a_values and a_values[0] != 0):
        raise ValueError("a_values must be sorted ascending and start at 0")
    eqs: list[Equilibrium] = []
    guess = None
    for k, a in enumerate(a_values):
        try:
            eq = find_equilibrium(model, averaged_for_amplitude(a), guess)
        except (EquilibriumError, ValueError, np.linalg.LinAlgError) as exc:
            if k == 0:
                raise
            return BranchResult(tuple(a_values[:k]), tuple(eqs), a,
                                f"continuation failed at a={a} (last good a={a_values[k - 1]}): {exc}")
        if k == 0 and not eq.nondegenerate:
            raise EquilibriumError("branch root is degenerate")
        eqs.append(eq)
        guess = (eq.p_e, eq.s_e)
    return BranchResult(tuple(a_values), tuple(eqs))


def check_pcr_condition(model: KineticsModel, s_values) -> np.ndarray:
    """Sample ``g0' - (s g0 / g1) (g1 / s)' < 0``.

    Returns a boolean per sample; samples with ``g0(s) <= 0`` lie outside the
    condition's range and are reported as True.
    """
    if not hasattr(model, "g0"):
        raise ValueError(f"{model.name} has no g0/g1 decomposition")
    s = np.asarray(s_values, dtype=float)
    lhs = model.g0_s(s) - s * model.g0(s) / model.g1(s) * model.g1_over_s_s(s)
    return np.where(model.g0(s) > 0, lhs < 0, True)
