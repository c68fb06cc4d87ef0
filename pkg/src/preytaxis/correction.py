"""Order-delta correction fields of the two-scale expansion.

With ``p0 = P e_*`` and ``s0 = S`` the first corrections are::

    s1~      = H^{-1}( S g(P e_*, S) - S_t )
    q0       = -P grad_e L^{-1} d_tau e_* + (I - Proj) u,
               u = e_* ( P grad(chi S + mu ln <e>^xi) - mu grad P )
    mu p1v   = chi Q(p0 s1~) + L^{-1}( div_xi u + P d_tau e_* )
    p1o      = e_* d_tau^{-1} < p0 f(p0, S) - P_t e_* - div_x q0 >^xi

The mean parts ``<p1>`` and the prey mean correction are left at zero.
For an unmodulated signal every field is a linear combination of a few
cell solutions that do not depend on the slow point; :class:`CorrectionCells`
computes those once and the builders combine them for a batch of slow points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cells import (L_inverse_values, P_values, dtau_inverse_values, e_gradient_values,
                    heat_inverse_values, projector_vector_values)
from .effective import EffectiveCoefficients
from .kinetics import KineticsModel
from .signal import WeightField
from .slow import SlowGrid, SlowState
from .torus import TorusGrid, tau_derivative, xi_gradient, xi_mean

__all__ = [
    "SlowPoint",
    "CorrectionCells",
    "CorrectionBundle",
    "slow_point_from_state",
    "build_s1",
    "build_q0",
    "build_p1_components",
    "build_bundle",
    "evaluate_on_line",
]


@dataclass(frozen=True)
class SlowPoint:
    """Slow fields and derivatives at a batch of slow nodes (leading axis)."""

    p: np.ndarray
    s: np.ndarray
    grad_p: np.ndarray  # (B, n)
    grad_s: np.ndarray
    hess_p: np.ndarray  # (B, n, n)
    hess_s: np.ndarray
    p_t: np.ndarray
    s_t: np.ndarray

    @classmethod
    def uniform(cls, p: float, s: float, n: int = 1, p_t: float = 0.0, s_t: float = 0.0):
        z = np.zeros((1, n))
        return cls(np.array([p]), np.array([s]), z, z, np.zeros((1, n, n)), np.zeros((1, n, n)),
                   np.array([p_t]), np.array([s_t]))

    @property
    def size(self) -> int:
        return self.p.size


def slow_point_from_state(grid: SlowGrid, state: SlowState, coeffs: EffectiveCoefficients,
                          mu: float, chi: float) -> SlowPoint:
    """Spectral derivatives of a slow state; time derivatives from the slow equations."""
    ax = tuple(range(grid.dim))
    k = grid.wavenumbers
    kf = grid.full_wavenumbers
    ph, sh = np.fft.fftn(state.p), np.fft.fftn(state.s)
    vax = tuple(a + 1 for a in ax)
    grad = lambda fh: np.fft.ifftn(1j * k * fh[None], axes=vax).real
    hess = lambda fh: np.fft.ifftn(-kf[:, None] * kf[None, :] * fh[None, None],
                                   axes=tuple(a + 2 for a in ax)).real
    gp, gs = grad(ph), grad(sh)
    hp, hs = hess(ph), hess(sh)
    d, c = coeffs.dbar, coeffs.cbar
    flux = (np.einsum("i,...->i...", c, state.p)
            + chi * state.p * np.einsum("ij,j...->i...", d, gs)
            - mu * np.einsum("ij,j...->i...", d, gp))
    div = np.sum(np.fft.ifftn(1j * k * np.fft.fftn(flux, axes=vax), axes=vax).real, axis=0)
    p_t = -div + state.p * coeffs.fbar(state.p, state.s)
    s_t = state.s * coeffs.gbar(state.p, state.s)
    flat = lambda a, lead: np.moveaxis(a, list(range(lead)), list(range(-lead, 0))).reshape(-1, *a.shape[:lead])
    return SlowPoint(state.p.reshape(-1), state.s.reshape(-1), flat(gp, 1), flat(gs, 1),
                     flat(hp, 2), flat(hs, 2), p_t.reshape(-1), s_t.reshape(-1))


class CorrectionCells:
    """Slow-point independent cell solutions for an unmodulated weight."""

    def __init__(self, w: WeightField, tol: float = 1e-11):
        grid = w.grid
        self.w = w
        self.grid = grid
        e, es = w.e.values, w.estar.values
        n = grid.dim
        self.estar = es
        et = tau_derivative(grid, es) if w.time_dependent else np.zeros_like(es)
        self.Z = L_inverse_values(grid, e, et, tol) if w.time_dependent else np.zeros_like(es)
        self.V = e_gradient_values(grid, e, self.Z)
        dxi = xi_gradient(grid, es)
        self.Lam = L_inverse_values(grid, e, dxi, tol)
        basis = np.zeros((n, n) + es.shape)
        for j in range(n):
            basis[j, j] = es
        proj = projector_vector_values(grid, e, np.moveaxis(basis, 0, 1), tol)
        self.B = basis - np.moveaxis(proj, 1, 0)  # (j, component, ...)


def _expand(a, grid: TorusGrid):
    a = np.asarray(a, dtype=float)
    return a.reshape(a.shape + (1,) * (grid.dim + 1))


def build_s1(w: WeightField, model: KineticsModel, pbar, sbar, sbar_t) -> np.ndarray:
    """``H^{-1}(S g(P e_*, S) - S_t)`` for a batch of slow points; shape ``(B, xi..., tau)``."""
    grid = w.grid
    es = w.estar.values
    P, S, St = (_expand(np.atleast_1d(v), grid) for v in (pbar, sbar, sbar_t))
    rhs = S * model.g(P * es, S) - St
    return heat_inverse_values(grid, rhs)


def build_q0(cells: CorrectionCells, mu: float, chi: float, pbar, sbar, grad_pbar,
             grad_sbar) -> np.ndarray:
    """Order-zero flux, shape ``(n, B, xi..., tau)``."""
    grid = cells.grid
    P = np.atleast_1d(np.asarray(pbar, dtype=float))
    gp = np.atleast_2d(np.asarray(grad_pbar, dtype=float))
    gs = np.atleast_2d(np.asarray(grad_sbar, dtype=float))
    v = chi * P[:, None] * gs - mu * gp  # (B, n)
    q = -_expand(P, grid)[None] * cells.V[:, None]
    q = q + np.einsum("bj,ji...->ib...", v, cells.B)
    return q


@dataclass(frozen=True)
class CorrectionBundle:
    s1_tilde: np.ndarray
    q0: np.ndarray
    p1_check: np.ndarray
    p1_circ: np.ndarray
    grid: TorusGrid
    undetermined: tuple[str, ...] = ("p1_bullet", "s1_bar")

    @property
    def p1(self) -> np.ndarray:
        return self.p1_check + self.p1_circ


def build_p1_components(cells: CorrectionCells, model: KineticsModel, mu: float, chi: float,
                        pt: SlowPoint, s1: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Range-Q part ``p1v`` and range-Q1 part ``p1o`` of the predator correction."""
    grid = cells.grid
    es = cells.estar
    if s1 is None:
        s1 = build_s1(cells.w, model, pt.p, pt.s, pt.s_t)
    P = _expand(pt.p, grid)
    S = _expand(pt.s, grid)
    p0 = P * es
    v = chi * pt.p[:, None] * pt.grad_s - mu * pt.grad_p
    # chi Q(p0 s1) + L^{-1} div u + P L^{-1} d_tau e_*
    ps = p0 * s1
    qpart = ps - P_values(grid, es, ps)
    mu_p1 = chi * qpart + np.einsum("bj,j...->b...", v, cells.Lam) + P * cells.Z
    p1_check = mu_p1 / mu

    wmat = (chi * (pt.grad_p[:, :, None] * pt.grad_s[:, None, :] + pt.p[:, None, None] * pt.hess_s)
            - mu * pt.hess_p)  # (B, i, j)
    div_q0 = (-np.einsum("bi,i...->b...", pt.grad_p, cells.V)
              + np.einsum("bij,ji...->b...", wmat, cells.B))
    r = p0 * model.f(p0, S) - _expand(pt.p_t, grid) * es - div_q0
    rm = xi_mean(grid, r)  # (B, tau)
    p1_circ = np.expand_dims(dtau_inverse_values(grid, rm), grid.xi_axes) * es
    return p1_check, p1_circ


def build_bundle(w: WeightField, model: KineticsModel, mu: float, chi: float, pt: SlowPoint,
                 cells: CorrectionCells | None = None) -> CorrectionBundle:
    if cells is None:
        cells = CorrectionCells(w)
    s1 = build_s1(w, model, pt.p, pt.s, pt.s_t)
    q0 = build_q0(cells, mu, chi, pt.p, pt.s, pt.grad_p, pt.grad_s)
    p1c, p1o = build_p1_components(cells, model, mu, chi, pt, s1)
    return CorrectionBundle(s1, q0, p1c, p1o, w.grid)


def evaluate_on_line(grid: TorusGrid, fields: np.ndarray, slow_points: int, x: np.ndarray,
                     delta: float, t: float) -> np.ndarray:
    """Evaluate ``F(x, x/delta, t/delta)`` on a fine 1-D line.

    ``fields`` has shape ``(B, Nxi, Ntau)`` with ``B = slow_points`` nodes of
    a uniform periodic slow grid over ``[0, L)`` where ``L`` is the period of
    ``x``. The slow dependence is Fourier-interpolated and the fast one is
    evaluated by trigonometric interpolation.
    """
    from .direct import fourier_resample

    if grid.dim != 1:
        raise ValueError("line evaluation is one-dimensional")
    nx = x.size
    tau = t / delta
    # tau interpolation
    fh = np.fft.fft(fields, axis=-1) / grid.tau_points
    wt = 2 * np.pi * np.fft.fftfreq(grid.tau_points, d=grid.tau_period / grid.tau_points)
    g = (fh @ np.exp(1j * wt * (tau % grid.tau_period))).real  # (B, Nxi)
    # slow interpolation, one fast node at a time
    fine = np.stack([fourier_resample(g[:, i], nx) for i in range(g.shape[1])], axis=1)  # (nx, Nxi)
    xi = (x / delta) % grid.xi_periods[0]
    gh = np.fft.fft(fine, axis=1) / grid.xi_points[0]
    kx = 2 * np.pi * np.fft.fftfreq(grid.xi_points[0], d=grid.xi_periods[0] / grid.xi_points[0])
    return np.einsum("jk,jk->j", gh, np.exp(1j * np.outer(xi, kx))).real
