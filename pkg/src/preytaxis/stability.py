"""Linear stability of quasi-equilibria of the leading slow system.

A normal mode ``exp(i k.x + lambda t)`` about ``(P_e, S_e)`` solves the
2x2 eigenproblem::

    lambda P = (a11 - mu_hat - i c_hat) P + (a12 + chi_hat) S
    lambda S = a21 P + (a22 - delta_hat) S

whose characteristic polynomial is ``lambda^2 + (D2 + i c_hat) lambda + ...``.
The number of sign changes in ``(1, D2, D4)`` counts its roots with positive
real part; :func:`eigen_oracle` solves the matrix directly as an independent
check.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModeParams",
    "TriadResult",
    "ThresholdResult",
    "StabilityReport",
    "hat_params",
    "triad",
    "lemma_preconditions",
    "threshold_chat2",
    "eigen_oracle",
    "mode_matrix",
    "scan",
]

NEUTRAL_RTOL = 1e-12
ORACLE_RE_TOL = 1e-12


@dataclass(frozen=True)
class ModeParams:
    k: np.ndarray
    mu_hat: float
    chi_hat: float
    delta_hat: float = 0.0
    c_hat: float = 0.0

    @property
    def alpha(self) -> float:
        return float(np.linalg.norm(self.k))

    @property
    def kbar(self) -> np.ndarray:
        a = self.alpha
        return self.k / a if a > 0 else np.zeros_like(self.k)

    def with_c_hat(self, c_hat: float) -> "ModeParams":
        return ModeParams(self.k, self.mu_hat, self.chi_hat, self.delta_hat, float(c_hat))


def hat_params(k, dbar, cbar, mu: float, chi: float, delta_hat: float, p_e: float) -> ModeParams:
    """``mu_hat = mu k.Dk``, ``chi_hat = p_e chi k.Dk``, ``c_hat = cbar.k``.

    Passing the normalized drift (computed for unit frequency) as ``cbar``
    gives ``c_hat`` per unit frequency.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    dbar = np.atleast_2d(np.asarray(dbar, dtype=float))
    kdk = float(k @ dbar @ k)
    if kdk < -1e-14:
        raise ValueError("Dbar is not positive definite")
    kdk = max(kdk, 0.0)
    if chi < 0 or mu < 0 or delta_hat < 0 or p_e <= 0:
        raise ValueError("need mu, chi, delta_hat >= 0 and p_e > 0")
    c_hat = float(np.atleast_1d(np.asarray(cbar, dtype=float)) @ k)
    return ModeParams(k, mu * kdk, p_e * chi * kdk, float(delta_hat), c_hat)


@dataclass(frozen=True)
class TriadResult:
    delta0: float
    delta2: float
    delta4: float
    sign_changes: int
    neutral: bool


def _scale(m: ModeParams, abar) -> float:
    return max(1.0, m.mu_hat, m.chi_hat, m.delta_hat, abs(m.c_hat), float(np.max(np.abs(abar))))


def _delta4(m: ModeParams, abar, c_hat2: float) -> float:
    a = np.asarray(abar, dtype=float)
    d2 = m.mu_hat + m.delta_hat - a[0, 0] - a[1, 1]
    return ((c_hat2 + d2 * d2) * (m.delta_hat - a[1, 1]) * (m.mu_hat - a[0, 0])
            - a[1, 0] * d2 * d2 * (a[0, 1] + m.chi_hat))


def triad(m: ModeParams, abar) -> TriadResult:
    a = np.asarray(abar, dtype=float)
    d2 = m.mu_hat + m.delta_hat - a[0, 0] - a[1, 1]
    d4 = _delta4(m, a, m.c_hat ** 2)
    s = _scale(m, a)
    neutral = abs(d2) < NEUTRAL_RTOL * s or abs(d4) < NEUTRAL_RTOL * s ** 4
    signs = np.sign([1.0, d2, d4])
    changes = int(np.sum(signs[1:] * signs[:-1] < 0))
    return TriadResult(1.0, float(d2), float(d4), changes, bool(neutral))


def lemma_preconditions(m: ModeParams, abar) -> dict[str, bool]:
    """Each inequality of the threshold lemma, by name."""
    a = np.asarray(abar, dtype=float)
    x = (m.delta_hat - a[1, 1]) * (m.mu_hat - a[0, 0])
    return {
        "det_positive": bool(a[0, 0] * a[1, 1] - a[1, 0] * a[0, 1] > 0),
        "trace_negative": bool(a[0, 0] + a[1, 1] < 0),
        "diagonal_opposite": bool(a[0, 0] * a[1, 1] < 0),
        "diffusive_product_negative": bool(x < 0),
        "taxis_determinant_positive": bool(x - a[1, 0] * (a[0, 1] + m.chi_hat) > 0),
        "hats_nonnegative": bool(m.mu_hat >= 0 and m.delta_hat >= 0 and m.chi_hat >= 0),
    }


@dataclass(frozen=True)
class ThresholdResult:
    value: float | None
    preconditions: dict

    @property
    def failed(self) -> list[str]:
        return [k for k, ok in self.preconditions.items() if not ok]


def threshold_chat2(m: ModeParams, abar) -> ThresholdResult:
    """Critical ``c_hat^2`` beyond which the mode destabilizes, or None with the failed conditions."""
    a = np.asarray(abar, dtype=float)
    pre = lemma_preconditions(m, a)
    if not all(pre.values()):
        return ThresholdResult(None, pre)
    d2 = m.mu_hat + m.delta_hat - a[0, 0] - a[1, 1]
    x = (m.delta_hat - a[1, 1]) * (m.mu_hat - a[0, 0])
    value = -d2 * d2 * (x - a[1, 0] * (a[0, 1] + m.chi_hat)) / x
    return ThresholdResult(float(value), pre)


def mode_matrix(m: ModeParams, abar) -> np.ndarray:
    a = np.asarray(abar, dtype=float)
    return np.array([[a[0, 0] - m.mu_hat - 1j * m.c_hat, a[0, 1] + m.chi_hat],
                     [a[1, 0], a[1, 1] - m.delta_hat]], dtype=complex)


def eigen_oracle(m: ModeParams, abar) -> tuple[np.ndarray, int]:
    lam = np.linalg.eigvals(mode_matrix(m, abar))
    lam = lam[np.argsort(-lam.real)]
    return lam, int(np.sum(lam.real > ORACLE_RE_TOL))


@dataclass
class StabilityReport:
    rows: list[dict] = field(default_factory=list)
    thresholds: list[dict] = field(default_factory=list)
    longwave: list[dict] = field(default_factory=list)

    def threshold(self, direction_index: int, alpha: float) -> float | None:
        for t in self.thresholds:
            if t["direction"] == direction_index and np.isclose(t["alpha"], alpha, rtol=0, atol=1e-15):
                return t["c_star"]
        raise KeyError((direction_index, alpha))

    def oracle_agreement(self) -> bool:
        return all(r["oracle_agrees"] for r in self.rows if not r["neutral"])

    def write_csv(self, path) -> None:
        cols = ["direction", "kbar", "alpha", "c", "delta2", "delta4", "sign_changes",
                "unstable_count", "neutral", "threshold"]
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(cols)
            for r in self.rows:
                out.writerow([r["direction"], " ".join(repr(float(x)) for x in r["kbar"]),
                              repr(r["alpha"]), repr(r["c"]), repr(r["delta2"]), repr(r["delta4"]),
                              r["sign_changes"], r["unstable_count"], int(r["neutral"]),
                              "" if r["threshold"] is None else repr(r["threshold"])])


def _c_star(dbar, cbar1, mu, chi, p_e, abar, kvec, prey_diffusivity):
    alpha2 = float(kvec @ kvec)
    m = hat_params(kvec, dbar, cbar1, mu, chi, prey_diffusivity * alpha2, p_e)
    th = threshold_chat2(m, abar)
    if th.value is None or abs(m.c_hat) < 1e-14:
        return m, th, None
    return m, th, float(np.sqrt(th.value) / abs(m.c_hat))


def scan(dbar, cbar1, abar, p_e: float, mu: float, chi: float, directions, alphas, c_values,
         prey_diffusivity: float = 0.0, longwave_levels: int = 6) -> StabilityReport:
    """Sweep directions, wave numbers and frequencies.

    ``cbar1`` is the drift for unit frequency, so the mode at frequency ``c``
    has ``c_hat = c cbar1.k``. The prey diffusion enters as
    ``delta_hat = prey_diffusivity |k|^2``. Thresholds are reported in terms
    of ``c``.
    """
    report = StabilityReport()
    for di, kbar in enumerate(directions):
        kbar = np.atleast_1d(np.asarray(kbar, dtype=float))
        kbar = kbar / np.linalg.norm(kbar)
        for alpha in alphas:
            kvec = alpha * kbar
            m, th, cstar = _c_star(dbar, cbar1, mu, chi, p_e, abar, kvec, prey_diffusivity)
            report.thresholds.append({"direction": di, "kbar": kbar, "alpha": float(alpha),
                                      "c_star": cstar, "preconditions": th.preconditions})
            for c in c_values:
                mc = m.with_c_hat(c * m.c_hat)
                t = triad(mc, abar)
                _, count = eigen_oracle(mc, abar)
                report.rows.append({"direction": di, "kbar": kbar, "alpha": float(alpha),
                                    "c": float(c), "delta2": t.delta2, "delta4": t.delta4,
                                    "sign_changes": t.sign_changes, "unstable_count": count,
                                    "neutral": t.neutral, "oracle_agrees": t.sign_changes == count,
                                    "threshold": cstar})
        a0 = float(min(alphas))
        levels = [a0 / 2 ** j for j in range(longwave_levels)]
        values = [_c_star(dbar, cbar1, mu, chi, p_e, abar, a * kbar, prey_diffusivity)[2]
                  for a in levels]
        finite = all(v is not None for v in values)
        diverges = finite and all(b > a for a, b in zip(values, values[1:]))
        report.longwave.append({"direction": di, "alphas": levels, "c_star": values,
                                "diverges": bool(diverges)})
    return report
