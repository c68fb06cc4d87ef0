"""Cell problems on the fast torus.

Operators, for a positive weight ``e`` on the torus::

    L u   = div_xi( e grad_xi(u / e) )       (per tau slice)
    H u   = d_tau u - lap_xi u
    P u   = <u>^xi e_*,   Q = I - P
    P1    = P (I - M^xi + M) P,   Q1 = P (M^xi - M) P
    Pv    = e grad_xi( L^{-1} div_xi v ) / e ...   (vector projector, see project_vector)

Right inverses are normalized so that ``<H^{-1} v> = 0``, ``<L^{-1} v>^xi = 0``,
``M^tau d_tau^{-1} = 0`` and ``M^xi d_xi^{-1} = 0``.

``L`` is inverted through ``div(e grad phi) = r`` with ``u = e phi`` shifted
into the kernel complement. The elliptic problem is solved by conjugate
gradients preconditioned with the spectral Laplacian, batched over tau
slices and right-hand sides.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .signal import WeightField
from .torus import (FastField, TauProfile, TorusGrid, XiProfile, tau_derivative, xi_divergence,
                    xi_fft, xi_gradient, xi_ifft, xi_mean)

__all__ = [
    "CellOperatorContext",
    "EffectiveMatrix",
    "SolvabilityError",
    "ConvergenceError",
    "apply_L",
    "apply_H",
    "solve_heat",
    "solve_L",
    "project_P",
    "project_Q",
    "project_P1",
    "project_Q1",
    "project_vector",
    "matrix_M",
    "invert_dtau",
    "invert_dxi",
    "e_inner",
]

SOLVABILITY_TOLERANCE = 1e-10
VERIFY = bool(os.environ.get("PREYTAXIS_VERIFY"))


class SolvabilityError(ValueError):
    """Right-hand side is outside the range of the operator."""


class ConvergenceError(RuntimeError):
    """Iterative solve did not reach its tolerance."""


@dataclass(frozen=True)
class CellOperatorContext:
    weight: WeightField
    tol: float = 1e-11
    max_iter: int = 1000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("solver tolerance must be positive")

    @property
    def grid(self) -> TorusGrid:
        return self.weight.grid

    @property
    def e(self) -> np.ndarray:
        return self.weight.e.values

    @property
    def estar(self) -> np.ndarray:
        return self.weight.estar.values


@dataclass(frozen=True)
class EffectiveMatrix:
    """``b . M a = (e b, Proj(e a))_e``; ``m`` has shape ``(n, n)`` or ``(Ntau, n, n)``."""

    m: np.ndarray
    label: str = "per-tau"

    def tau_average(self) -> "EffectiveMatrix":
        if self.m.ndim == 2:
            return self
        return EffectiveMatrix(self.m.mean(axis=0), "tau-averaged")


def _check_mean(mean, scale, what: str) -> None:
    bad = np.abs(mean) > SOLVABILITY_TOLERANCE * np.maximum(1.0, scale)
    if np.any(bad):
        raise SolvabilityError(f"{what}: mean {np.max(np.abs(mean)):.3e} violates solvability")


def _slice_scale(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    return np.max(np.abs(a), axis=grid.xi_axes)


def _drop_xi_kernel(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    ah = xi_fft(grid, a)
    ah[..., grid.xi_kernel_mask, :] = 0.0
    return xi_ifft(grid, ah)


def _apply_A(grid, e, x):
    """``-div(e grad x)``: symmetric positive semidefinite."""
    return -xi_divergence(grid, e * xi_gradient(grid, x))


def weighted_poisson(grid: TorusGrid, e: np.ndarray, rhs: np.ndarray, tol: float = 1e-11,
                     max_iter: int = 1000) -> np.ndarray:
    """Solve ``div(e grad phi) = rhs`` per tau slice; ``rhs`` may carry leading batch axes.

    ``rhs`` must have zero xi-mean on every slice; ``phi`` is returned free of
    the derivative kernel (mean and Nyquist corners).
    """
    _check_mean(xi_mean(grid, rhs), _slice_scale(grid, rhs), "weighted Poisson problem")
    b = -_drop_xi_kernel(grid, rhs)
    k2 = grid.xi_k2[..., None]
    ebar = xi_mean(grid, e)
    with np.errstate(divide="ignore"):
        inv_symbol = np.where(k2 > 0, 1.0 / (k2 * ebar), 0.0)

    def precondition(r):
        return xi_ifft(grid, xi_fft(grid, r) * inv_symbol)

    def dot(u, v):
        return np.sum(u * v, axis=grid.xi_axes)

    def expand(s):
        return np.expand_dims(s, grid.xi_axes)

    bound = tol * _slice_scale(grid, b)
    # iterate past the target so the recomputed residual also meets it
    inner = 0.25 * bound
    x = np.zeros_like(b)
    r = b.copy()
    z = precondition(r)
    p = z.copy()
    rz = dot(r, z)
    for _ in range(max_iter):
        active = _slice_scale(grid, r) > inner
        if not np.any(active):
            break
        ap = _apply_A(grid, e, p)
        pap = dot(p, ap)
        alpha = np.where(active & (pap > 0), rz / np.where(pap > 0, pap, 1.0), 0.0)
        x += expand(alpha) * p
        r -= expand(alpha) * ap
        z = precondition(r)
        rz_new = dot(r, z)
        beta = np.where(active & (rz != 0), rz_new / np.where(rz != 0, rz, 1.0), 0.0)
        p = z + expand(beta) * p
        rz = rz_new
    res = _slice_scale(grid, b - _apply_A(grid, e, x))
    if np.any(res > bound):
        raise ConvergenceError(f"weighted Poisson solve stalled: residual {np.max(res):.3e}, "
                               f"target {np.max(bound):.3e}")
    return x


# array-level operators


def L_values(grid: TorusGrid, e: np.ndarray, u: np.ndarray) -> np.ndarray:
    return xi_divergence(grid, e * xi_gradient(grid, u / e))


def L_inverse_values(grid: TorusGrid, e: np.ndarray, rhs: np.ndarray, tol=1e-11, max_iter=1000):
    phi = weighted_poisson(grid, e, rhs, tol, max_iter)
    shift = xi_mean(grid, e * phi) / xi_mean(grid, e)
    u = e * (phi - np.expand_dims(shift, grid.xi_axes))
    if VERIFY:
        res = L_values(grid, e, u) - _drop_xi_kernel(grid, rhs)
        assert np.max(np.abs(res)) <= 1e-8 * max(1.0, np.max(np.abs(rhs))), "L^{-1} residual"
        assert np.max(np.abs(xi_mean(grid, u))) <= 1e-10 * max(1.0, np.max(np.abs(u))), "L^{-1} normalization"
    return u


def e_gradient_values(grid: TorusGrid, e: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Weighted gradient ``e grad_xi(u / e)``."""
    return e * xi_gradient(grid, u / e)


def projector_vector_values(grid, e, v, tol=1e-11, max_iter=1000) -> np.ndarray:
    """Vector projector applied to ``v`` of shape ``(n, ..., xi..., tau)``."""
    u = L_inverse_values(grid, e, xi_divergence(grid, v), tol, max_iter)
    return e_gradient_values(grid, e, u)


def heat_inverse_values(grid: TorusGrid, rhs: np.ndarray) -> np.ndarray:
    axes = tuple(range(-grid.dim - 1, 0))
    scale = np.max(np.abs(rhs), axis=axes)
    _check_mean(rhs.mean(axis=axes), scale, "heat problem")
    symbol = 1j * grid.tau_wavenumbers + grid.xi_k2[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(symbol != 0, 1.0 / np.where(symbol != 0, symbol, 1.0), 0.0)
    return np.fft.ifftn(np.fft.fftn(rhs, axes=axes) * inv, axes=axes).real


def heat_values(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    axes = tuple(range(-grid.dim - 1, 0))
    symbol = 1j * grid.tau_wavenumbers + grid.xi_k2[..., None]
    return np.fft.ifftn(np.fft.fftn(u, axes=axes) * symbol, axes=axes).real


def dtau_inverse_values(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    """Right inverse of ``d_tau`` along the last axis with zero tau-mean."""
    _check_mean(a.mean(axis=-1), np.max(np.abs(a), axis=-1), "tau antiderivative")
    w = grid.tau_wavenumbers
    inv = np.where(w != 0, 1.0 / np.where(w != 0, 1j * w, 1.0), 0.0)
    return np.fft.ifft(np.fft.fft(a, axis=-1) * inv, axis=-1).real


def P_values(grid: TorusGrid, estar: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.expand_dims(xi_mean(grid, u), grid.xi_axes) * estar


# public API on field objects


def _weight_slice(ctx: CellOperatorContext, tau_slice):
    if tau_slice is None:
        return ctx.e
    return ctx.e[..., tau_slice:tau_slice + 1]


def _as_slab(ctx, f, tau_slice) -> np.ndarray:
    v = f.values if hasattr(f, "values") else np.asarray(f, dtype=float)
    if tau_slice is None:
        return v
    if v.shape == ctx.grid.xi_points:
        return v[..., None]
    return v[..., tau_slice:tau_slice + 1]


def _out(ctx, v, tau_slice):
    if tau_slice is None:
        return FastField(ctx.grid, v)
    return XiProfile(ctx.grid, v[..., 0])


def apply_L(ctx: CellOperatorContext, u, tau_slice=None):
    return _out(ctx, L_values(ctx.grid, _weight_slice(ctx, tau_slice), _as_slab(ctx, u, tau_slice)),
                tau_slice)


def solve_L(ctx: CellOperatorContext, rhs, tau_slice=None):
    """Right inverse of ``L`` normalized by ``<u>^xi = 0``.

    With ``tau_slice=None`` every slice of a :class:`FastField` is solved;
    otherwise the given slice is solved and an :class:`XiProfile` returned.
    """
    e = _weight_slice(ctx, tau_slice)
    u = L_inverse_values(ctx.grid, e, _as_slab(ctx, rhs, tau_slice), ctx.tol, ctx.max_iter)
    return _out(ctx, u, tau_slice)


def apply_H(u: FastField) -> FastField:
    return FastField(u.grid, heat_values(u.grid, u.values))


def solve_heat(rhs: FastField) -> FastField:
    """Right inverse of ``H = d_tau - lap_xi`` with zero full mean."""
    return FastField(rhs.grid, heat_inverse_values(rhs.grid, rhs.values))


def project_P(ctx: CellOperatorContext, u: FastField) -> FastField:
    return FastField(ctx.grid, P_values(ctx.grid, ctx.estar, u.values))


def project_Q(ctx: CellOperatorContext, u: FastField) -> FastField:
    return u - project_P(ctx, u)


def _MxiM(u: FastField, sign: float) -> FastField:
    # (I - M^xi + M) for sign=+1, (M^xi - M) for sign=-1
    grid = u.grid
    sp = np.expand_dims(xi_mean(grid, u.values), grid.xi_axes)
    full = u.values.mean()
    if sign > 0:
        return FastField(grid, u.values - sp + full)
    return FastField(grid, np.broadcast_to(sp - full, grid.shape))


def project_P1(ctx: CellOperatorContext, u: FastField) -> FastField:
    return project_P(ctx, _MxiM(project_P(ctx, u), +1))


def project_Q1(ctx: CellOperatorContext, u: FastField) -> FastField:
    return project_P(ctx, _MxiM(project_P(ctx, u), -1))


def project_vector(ctx: CellOperatorContext, v, tau_slice=None):
    """Vector projector ``v -> grad_e L^{-1} div v`` on xi vector fields.

    ``v`` is a sequence of n fields (FastField or XiProfile when a slice is given).
    """
    e = _weight_slice(ctx, tau_slice)
    stacked = np.stack([_as_slab(ctx, c, tau_slice) for c in v])
    out = projector_vector_values(ctx.grid, e, stacked, ctx.tol, ctx.max_iter)
    return tuple(_out(ctx, c, tau_slice) for c in out)


def e_inner(grid: TorusGrid, e: np.ndarray, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``(f, g)_e = <f . g / e>^xi`` for vector fields with a leading component axis."""
    return xi_mean(grid, np.sum(f * g, axis=0) / e)


def matrix_values(grid: TorusGrid, e: np.ndarray, tol=1e-11, max_iter=1000) -> np.ndarray:
    """Per-tau matrix with entries ``(e b_i, Proj(e b_j))_e``; shape ``(Ntau, n, n)``."""
    n = grid.dim
    basis = np.zeros((n, n) + e.shape)
    for j in range(n):
        basis[j, j] = e
    # columns: Proj(e b_j), batched over j
    cols = projector_vector_values(grid, e, np.moveaxis(basis, 0, 1), tol, max_iter)
    cols = np.moveaxis(cols, 1, 0)  # (j, component, xi..., tau)
    m = np.empty((e.shape[-1], n, n))
    for i in range(n):
        for j in range(n):
            m[:, i, j] = e_inner(grid, e, basis[i], cols[j])
    return m


def matrix_M(ctx: CellOperatorContext, tau_slice=None) -> EffectiveMatrix:
    e = _weight_slice(ctx, tau_slice)
    m = matrix_values(ctx.grid, e, ctx.tol, ctx.max_iter)
    if tau_slice is None:
        return EffectiveMatrix(m)
    return EffectiveMatrix(m[0], f"tau[{tau_slice}]")


def invert_dtau(p: TauProfile) -> TauProfile:
    """Right inverse of ``d_tau`` on tau profiles, zero tau-mean."""
    return TauProfile(p.grid, dtau_inverse_values(p.grid, p.values))


def invert_dxi(f, axis: int = 0, tau_slice=None):
    """Right inverse of ``d/d xi_axis`` with zero mean along that axis.

    Accepts a FastField (all slices) or an XiProfile; the input must average
    to zero along ``axis`` on every line.
    """
    grid = f.grid
    v = f.values
    if isinstance(f, FastField) and tau_slice is not None:
        v = v[..., tau_slice]
    ax = axis
    _check_mean(v.mean(axis=ax), np.max(np.abs(v)), "xi antiderivative")
    k = grid.xi_wavenumbers[axis].reshape(-1)
    shp = [1] * v.ndim
    shp[ax] = k.size
    k = k.reshape(shp)
    inv = np.where(k != 0, 1.0 / np.where(k != 0, 1j * k, 1.0), 0.0)
    out = np.fft.ifft(np.fft.fft(v, axis=ax) * inv, axis=ax).real
    if v.shape == grid.shape:
        return FastField(grid, out)
    return XiProfile(grid, out)
