"""Coefficients of the leading slow system.

Given the weight fields of a signal, this module assembles::

    Dbar = E - < rho M >^tau
    cbar = mu < (E - rho M) grad ln <e>^xi >^tau - < grad_e L^{-1} d_tau e_* >

together with the averaged kinetics and their linearization. The 1-D and
traveling-wave reductions are kept here as independent closed-form oracles.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .cells import e_gradient_values, L_inverse_values, matrix_values
from .kinetics import AveragedKinetics, KineticsModel
from .signal import WeightField
from .torus import tau_derivative

__all__ = [
    "EffectiveCoefficients",
    "effective_diffusivity",
    "effective_drift",
    "averaged_kinetics",
    "averaged_linearization",
    "homogenize",
    "bessel_i0",
    "closed_form_dbar_1d",
    "closed_form_m_1d",
    "traveling_wave_dbar",
    "traveling_wave_speed_factor",
    "write_coefficients_csv",
]


def bessel_i0(a: float, terms: int = 60) -> float:
    """Modified Bessel function of the first kind ``I0`` by its power series."""
    total, term = 1.0, 1.0
    q = (a / 2.0) ** 2
    for m in range(1, terms):
        term *= q / (m * m)
        total += term
        if term < 1e-17 * total:
            break
    return total


def _rho_m(w: WeightField, tol=1e-11, max_iter=1000) -> np.ndarray:
    m = matrix_values(w.grid, w.e.values, tol, max_iter)
    return w.rho.values[:, None, None] * m


def effective_diffusivity(w: WeightField, tol: float = 1e-11, max_iter: int = 1000) -> np.ndarray:
    """``Dbar = E - <rho M>^tau``; symmetrized against round-off."""
    n = w.grid.dim
    d = np.eye(n) - _rho_m(w, tol, max_iter).mean(axis=0)
    return 0.5 * (d + d.T)


def effective_drift(w: WeightField, mu: float, slow_log_gradient=None, tol: float = 1e-11,
                    max_iter: int = 1000) -> np.ndarray:
    """Drift ``cbar``.

    ``slow_log_gradient`` is the slow gradient of ``ln <e>^xi``, either an
    n-vector or an array of shape ``(n, Ntau)``; None (the unmodulated case)
    skips the first term entirely.
    """
    grid = w.grid
    n = grid.dim
    c = np.zeros(n)
    if slow_log_gradient is not None:
        g = np.asarray(slow_log_gradient, dtype=float)
        if g.ndim == 1:
            g = np.repeat(g[:, None], grid.tau_points, axis=1)
        if g.shape != (n, grid.tau_points):
            raise ValueError(f"slow_log_gradient must have shape ({n},) or ({n}, {grid.tau_points})")
        if np.any(g != 0):
            rm = _rho_m(w, tol, max_iter)
            proj = g.T - np.einsum("tij,tj->ti", rm, g.T)
            c += mu * proj.mean(axis=0)
    if w.time_dependent:
        et = tau_derivative(grid, w.estar.values)
        u = L_inverse_values(grid, w.e.values, et, tol, max_iter)
        v = e_gradient_values(grid, w.e.values, u)
        c -= v.reshape(n, -1).mean(axis=1)
    return c


def averaged_kinetics(w: WeightField | None, model: KineticsModel) -> AveragedKinetics:
    """Closures ``fbar``/``gbar`` (methods of the returned object) by torus quadrature."""
    return AveragedKinetics.from_weight(model, w)


def averaged_linearization(w: WeightField | None, model: KineticsModel, pbar_e: float,
                           sbar_e: float) -> np.ndarray:
    """Averaged 2x2 linearization at a quasi-equilibrium.

    The weight ``e_*`` multiplies the entries differentiated in the predator
    density, which makes the result the Jacobian of ``(P fbar, S gbar)``.
    """
    return averaged_kinetics(w, model).linearization(pbar_e, sbar_e)


@dataclass(frozen=True)
class EffectiveCoefficients:
    dbar: np.ndarray
    cbar: np.ndarray
    kinetics: AveragedKinetics | None = None
    abar: np.ndarray | None = None
    equilibrium: tuple[float, float] | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.dbar.shape[0]

    def fbar(self, p, s):
        return self.kinetics.fbar(p, s)

    def gbar(self, p, s):
        return self.kinetics.gbar(p, s)

    def with_equilibrium(self, p_e: float, s_e: float) -> "EffectiveCoefficients":
        abar = self.kinetics.linearization(p_e, s_e)
        return EffectiveCoefficients(self.dbar, self.cbar, self.kinetics, abar, (p_e, s_e),
                                     dict(self.provenance))


def homogenize(w: WeightField, mu: float, model: KineticsModel | None = None,
               slow_log_gradient=None, provenance: dict | None = None,
               tol: float = 1e-11) -> EffectiveCoefficients:
    dbar = effective_diffusivity(w, tol)
    cbar = effective_drift(w, mu, slow_log_gradient, tol)
    kin = averaged_kinetics(w, model) if model is not None else None
    prov = {"effective_amplitude": w.amplitude, "kappa": w.kappa, "mu": w.mu}
    if model is not None:
        prov["kinetics"] = repr(model)
    prov.update(provenance or {})
    return EffectiveCoefficients(dbar, cbar, kin, provenance=prov)


# closed-form reductions


def closed_form_m_1d(w: WeightField) -> np.ndarray:
    """Per-tau 1-D matrix ``<e>^xi - 1 / <1/e>^xi``."""
    return w.mean_e - 1.0 / w.mean_inv_e


def closed_form_dbar_1d(w: WeightField) -> float:
    """``< 1 / (<e>^xi <1/e>^xi) >^tau``; valid for 1-D signals."""
    return float(np.mean(1.0 / (w.mean_e * w.mean_inv_e)))


def traveling_wave_speed_factor(w: WeightField) -> float:
    """``1 - 1/(<e><1/e>)`` for a traveling wave (the products do not depend on tau)."""
    return float(1.0 - np.mean(1.0 / (w.mean_e * w.mean_inv_e)))


def traveling_wave_dbar(direction, w: WeightField) -> np.ndarray:
    theta = np.asarray(direction, dtype=float)
    tt = np.outer(theta, theta)
    return np.eye(theta.size) - tt + tt * float(np.mean(1.0 / (w.mean_e * w.mean_inv_e)))


def write_coefficients_csv(path, coeffs: EffectiveCoefficients, scenario: str = "default") -> None:
    """Flat long-form export: ``scenario, quantity, i, j, value``."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["scenario", "quantity", "i", "j", "value"])
        n = coeffs.dim
        for i in range(n):
            for j in range(n):
                out.writerow([scenario, "dbar", i, j, repr(float(coeffs.dbar[i, j]))])
        for i in range(n):
            out.writerow([scenario, "cbar", i, "", repr(float(coeffs.cbar[i]))])
        if coeffs.equilibrium is not None:
            out.writerow([scenario, "p_e", "", "", repr(coeffs.equilibrium[0])])
            out.writerow([scenario, "s_e", "", "", repr(coeffs.equilibrium[1])])
        if coeffs.abar is not None:
            for i in range(2):
                for j in range(2):
                    out.writerow([scenario, "abar", i, j, repr(float(coeffs.abar[i, j]))])
        for key in sorted(coeffs.provenance):
            out.writerow([scenario, f"meta:{key}", "", "", coeffs.provenance[key]])
