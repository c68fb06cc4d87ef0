"""Time integration of the leading slow system on a periodic box.

    P_t + div(P cbar + chi P Dbar grad S - mu Dbar grad P) = P fbar(P, S)
    S_t = S gbar(P, S) + delta_hat lap S        (delta_hat = 0 by default)

Pseudo-spectral in space. The linear constant-coefficient part (anisotropic
diffusion and drift) is integrated exactly by an integrating factor, the
taxis and reaction terms by classical RK4 in the transformed variable
(Lawson's scheme). A pure diffusion mode therefore decays exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .effective import EffectiveCoefficients

__all__ = [
    "SlowGrid",
    "SlowState",
    "SlowRun",
    "SlowTrajectory",
    "PositivityError",
    "step",
    "run",
    "stable_dt",
    "mode_amplitude",
]

POSITIVITY_FLOOR = 1e-14


class PositivityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SlowGrid:
    lengths: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        object.__setattr__(self, "points", tuple(int(x) for x in self.points))
        if len(self.lengths) != len(self.points) or not 1 <= len(self.points) <= 3:
            raise ValueError("lengths and points must have the same length in 1..3")
        if any(x <= 0 for x in self.lengths) or any(m < 4 for m in self.points):
            raise ValueError("lengths must be positive and resolutions at least 4")

    @classmethod
    def uniform(cls, n: int, length: float = 2 * np.pi, points: int = 64) -> "SlowGrid":
        return cls((length,) * n, (points,) * n)

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(ell / m for ell, m in zip(self.lengths, self.points))

    @property
    def x(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*[np.arange(m) * ell / m for ell, m in zip(self.lengths, self.points)],
                                 indexing="ij"))

    @property
    def wavenumbers(self) -> np.ndarray:
        """Shape ``(n, *points)``; Nyquist modes zeroed for odd derivatives."""
        ks = []
        for ell, m in zip(self.lengths, self.points):
            k = 2 * np.pi * np.fft.fftfreq(m, d=ell / m)
            k[m // 2] = 0.0
            ks.append(k)
        return np.array(np.meshgrid(*ks, indexing="ij"))

    @property
    def full_wavenumbers(self) -> np.ndarray:
        """Like :attr:`wavenumbers` but keeping the Nyquist mode (for even symbols)."""
        ks = [2 * np.pi * np.fft.fftfreq(m, d=ell / m) for ell, m in zip(self.lengths, self.points)]
        return np.array(np.meshgrid(*ks, indexing="ij"))

    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))


@dataclass(frozen=True)
class SlowState:
    p: np.ndarray
    s: np.ndarray
    t: float = 0.0

    def mass(self, grid: SlowGrid) -> float:
        return float(self.p.sum() * grid.cell_volume())


@dataclass(frozen=True)
class SlowRun:
    grid: SlowGrid
    initial: SlowState
    coeffs: EffectiveCoefficients
    mu: float
    chi: float
    t_end: float
    dt: float
    snapshot_every: float | None = None
    prey_diffusivity: float = 0.0

    def __post_init__(self):
        if np.min(self.initial.p) <= 0 or np.min(self.initial.s) <= 0:
            raise ValueError("initial densities must be positive")
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("need dt > 0 and t_end >= 0")


@dataclass
class SlowTrajectory:
    times: list[float] = field(default_factory=list)
    states: list[SlowState] = field(default_factory=list)

    @property
    def final(self) -> SlowState:
        return self.states[-1]


def _axes(grid):
    return tuple(range(grid.dim))


class _Operator:
    """Cached linear symbols and the explicit right-hand side for one configuration."""

    def __init__(self, grid: SlowGrid, coeffs: EffectiveCoefficients, mu, chi, prey_diffusivity):
        if coeffs.dim != grid.dim:
            raise ValueError("coefficients and slow grid differ in dimension")
        self.grid = grid
        self.k = grid.wavenumbers
        kf = grid.full_wavenumbers
        d = coeffs.dbar
        kdk = np.einsum("i...,ij,j...->...", kf, d, kf)
        self.lin_p = -mu * kdk - 1j * np.einsum("i,i...->...", coeffs.cbar, self.k)
        self.lin_s = -prey_diffusivity * np.sum(kf * kf, axis=0)
        self.dbar = d
        self.chi = chi
        self.kin = coeffs.kinetics
        if self.kin is None:
            raise ValueError("coefficients carry no averaged kinetics")
        self.axes = _axes(grid)

    def _fbar(self, p, s):
        m = self.kin.model
        return m.f(p, s) if m.p_linear else self.kin.fbar(p, s)

    def _gbar(self, p, s):
        m = self.kin.model
        return m.g(p, s) if m.p_linear else self.kin.gbar(p, s)

    def explicit(self, ph, sh):
        ax = self.axes
        p = np.fft.ifftn(ph, axes=ax).real
        s = np.fft.ifftn(sh, axes=ax).real
        if np.min(p) <= POSITIVITY_FLOOR or np.min(s) <= POSITIVITY_FLOOR:
            raise PositivityError(f"density below floor {POSITIVITY_FLOOR} "
                                  f"(min p={np.min(p):.3e}, min s={np.min(s):.3e})")
        rp = p * self._fbar(p, s)
        if self.chi:
            grad_s = np.fft.ifftn(1j * self.k * sh[None], axes=tuple(a + 1 for a in ax)).real
            flux = self.chi * p * np.einsum("ij,j...->i...", self.dbar, grad_s)
            div = np.sum(1j * self.k * np.fft.fftn(flux, axes=tuple(a + 1 for a in ax)), axis=0)
            np_ = np.fft.fftn(rp, axes=ax) - div
        else:
            np_ = np.fft.fftn(rp, axes=ax)
        ns = np.fft.fftn(s * self._gbar(p, s), axes=ax)
        return np_, ns

    def step(self, ph, sh, dt):
        ep, ep2 = np.exp(self.lin_p * dt), np.exp(self.lin_p * dt / 2)
        es, es2 = np.exp(self.lin_s * dt), np.exp(self.lin_s * dt / 2)
        k1p, k1s = self.explicit(ph, sh)
        k2p, k2s = self.explicit(ep2 * (ph + 0.5 * dt * k1p), es2 * (sh + 0.5 * dt * k1s))
        k3p, k3s = self.explicit(ep2 * ph + 0.5 * dt * k2p, es2 * sh + 0.5 * dt * k2s)
        k4p, k4s = self.explicit(ep * ph + dt * ep2 * k3p, es * sh + dt * es2 * k3s)
        ph = ep * ph + dt / 6 * (ep * k1p + 2 * ep2 * (k2p + k3p) + k4p)
        sh = es * sh + dt / 6 * (es * k1s + 2 * es2 * (k2s + k3s) + k4s)
        return ph, sh


def _to_state(grid, ph, sh, t):
    ax = _axes(grid)
    p = np.fft.ifftn(ph, axes=ax).real
    s = np.fft.ifftn(sh, axes=ax).real
    if np.min(p) <= POSITIVITY_FLOOR or np.min(s) <= POSITIVITY_FLOOR:
        raise PositivityError(f"t={t:.6g}: density below floor {POSITIVITY_FLOOR}")
    return SlowState(p, s, t)


def step(state: SlowState, coeffs: EffectiveCoefficients, dt: float, grid: SlowGrid, mu: float,
         chi: float, prey_diffusivity: float = 0.0) -> SlowState:
    """One integrating-factor RK4 step."""
    op = _Operator(grid, coeffs, mu, chi, prey_diffusivity)
    ax = _axes(grid)
    ph, sh = op.step(np.fft.fftn(state.p, axes=ax), np.fft.fftn(state.s, axes=ax), dt)
    return _to_state(grid, ph, sh, state.t + dt)


def stable_dt(state: SlowState, coeffs: EffectiveCoefficients, grid: SlowGrid, chi: float,
              cfl: float = 0.5) -> float:
    """Explicit limit from the taxis velocity and the reaction rates."""
    k = grid.wavenumbers
    sh = np.fft.fftn(state.s)
    grad_s = np.fft.ifftn(1j * k * sh[None], axes=tuple(range(1, grid.dim + 1))).real
    vel = chi * np.abs(np.einsum("ij,j...->i...", coeffs.dbar, grad_s)).max() if chi else 0.0
    dx = min(grid.spacing)
    rate = np.max(np.abs(coeffs.kinetics.linearization(float(state.p.mean()), float(state.s.mean()))))
    limits = [cfl * dx / vel if vel > 0 else np.inf, 0.5 / rate if rate > 0 else np.inf]
    return float(min(limits))


def run(r: SlowRun) -> SlowTrajectory:
    grid = r.grid
    op = _Operator(grid, r.coeffs, r.mu, r.chi, r.prey_diffusivity)
    ax = _axes(grid)
    ph = np.fft.fftn(r.initial.p, axes=ax)
    sh = np.fft.fftn(r.initial.s, axes=ax)
    nsteps = int(np.ceil(r.t_end / r.dt - 1e-12))
    dt = r.t_end / nsteps if nsteps else 0.0
    every = r.snapshot_every
    stride = max(1, int(round(every / dt))) if every and dt else None
    traj = SlowTrajectory([r.initial.t], [r.initial])
    t = r.initial.t
    for n in range(1, nsteps + 1):
        try:
            ph, sh = op.step(ph, sh, dt)
        except PositivityError as exc:
            raise PositivityError(f"t={t:.6g}: {exc}") from None
        t = r.initial.t + n * dt
        if (stride and n % stride == 0) or n == nsteps:
            traj.times.append(t)
            traj.states.append(_to_state(grid, ph, sh, t))
    return traj


def mode_amplitude(grid: SlowGrid, state: SlowState, mode: tuple[int, ...]) -> float:
    """Euclidean norm of the (p, s) Fourier coefficients at integer ``mode``."""
    ph = np.fft.fftn(state.p) / state.p.size
    sh = np.fft.fftn(state.s) / state.s.size
    idx = tuple(m % n for m, n in zip(mode, grid.points))
    return float(np.hypot(abs(ph[idx]), abs(sh[idx])))
