"""Periodic fields on the fast torus (xi in T^n, tau in T^1).

Samples live on a uniform tensor grid. Arrays are laid out with the xi axes
first and the tau axis last, so a field on an ``n = 2`` torus has shape
``(N1, N2, Ntau)``. Internal helpers accept arbitrary leading batch axes.

Derivatives are spectral. The Nyquist wavenumber of every axis is treated
as unresolved: first derivatives annihilate it, and the right inverses in
:mod:`preytaxis.cells` drop it, so the discrete operators keep the symmetry
properties of their continuous counterparts.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "TorusGrid",
    "FastField",
    "TauProfile",
    "XiProfile",
    "average_full",
    "average_spatial",
    "average_temporal",
    "fast_gradient",
    "fast_divergence",
    "fast_laplacian",
    "fast_dtau",
    "dealiased_product",
    "spectral_energy",
    "write_csv",
]


def _check_axis(period: float, points: int, label: str) -> None:
    if not np.isfinite(period) or period <= 0:
        raise ValueError(f"period of axis {label} must be positive, got {period}")
    if points < 8 or points % 2:
        raise ValueError(f"resolution of axis {label} must be even and >= 8, got {points}")


def _derivative_symbol(period: float, points: int) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(points, d=period / points)
    k[points // 2] = 0.0
    return k


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the torus with xi periods ``xi_periods`` and tau period ``tau_period``."""

    xi_periods: tuple[float, ...]
    tau_period: float
    xi_points: tuple[int, ...]
    tau_points: int

    def __post_init__(self):
        object.__setattr__(self, "xi_periods", tuple(float(p) for p in self.xi_periods))
        object.__setattr__(self, "xi_points", tuple(int(m) for m in self.xi_points))
        object.__setattr__(self, "tau_period", float(self.tau_period))
        object.__setattr__(self, "tau_points", int(self.tau_points))
        if not 1 <= len(self.xi_periods) <= 3:
            raise ValueError("fast spatial dimension must be 1, 2 or 3")
        if len(self.xi_points) != len(self.xi_periods):
            raise ValueError("xi_points and xi_periods differ in length")
        for i, (ell, m) in enumerate(zip(self.xi_periods, self.xi_points)):
            _check_axis(ell, m, f"xi{i + 1}")
        _check_axis(self.tau_period, self.tau_points, "tau")

    @classmethod
    def uniform(cls, n: int, points: int = 32, tau_points: int | None = None,
                period: float = 2 * np.pi, tau_period: float = 2 * np.pi) -> "TorusGrid":
        return cls((period,) * n, tau_period, (points,) * n, tau_points or points)

    @property
    def dim(self) -> int:
        return len(self.xi_periods)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.xi_points + (self.tau_points,)

    @property
    def xi_axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim - 1, -1))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(ell / m for ell, m in zip(self.xi_periods, self.xi_points)) + (
            self.tau_period / self.tau_points,)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable against ``shape``."""
        out = []
        for i, (ell, m) in enumerate(zip(self.xi_periods, self.xi_points)):
            c = np.arange(m) * (ell / m)
            shp = [1] * (self.dim + 1)
            shp[i] = m
            out.append(c.reshape(shp))
        return tuple(out)

    @cached_property
    def tau(self) -> np.ndarray:
        c = np.arange(self.tau_points) * (self.tau_period / self.tau_points)
        return c.reshape((1,) * self.dim + (self.tau_points,))

    @cached_property
    def xi_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Derivative symbols per xi axis, broadcastable over the xi shape."""
        out = []
        for i, (ell, m) in enumerate(zip(self.xi_periods, self.xi_points)):
            shp = [1] * self.dim
            shp[i] = m
            out.append(_derivative_symbol(ell, m).reshape(shp))
        return tuple(out)

    @cached_property
    def tau_wavenumbers(self) -> np.ndarray:
        return _derivative_symbol(self.tau_period, self.tau_points)

    @cached_property
    def xi_k2(self) -> np.ndarray:
        return sum(k**2 for k in self.xi_wavenumbers)

    @cached_property
    def xi_kernel_mask(self) -> np.ndarray:
        """Modes annihilated by every first xi derivative (mean and Nyquist corners)."""
        mask = np.ones(self.xi_points, dtype=bool)
        for k in self.xi_wavenumbers:
            mask = mask & (k == 0)
        return mask

    def refined(self, factor: int = 2) -> "TorusGrid":
        return TorusGrid(self.xi_periods, self.tau_period,
                         tuple(m * factor for m in self.xi_points), self.tau_points * factor)

    def zeros(self) -> "FastField":
        return FastField(self, np.zeros(self.shape))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FastField:
    """Real samples of a smooth function on the fast torus."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: TorusGrid, fn) -> "FastField":
        """Sample ``fn(*xi, tau)`` on the grid."""
        return cls(grid, np.broadcast_to(fn(*grid.xi, grid.tau), grid.shape))

    def _wrap(self, values) -> "FastField":
        return FastField(self.grid, values)

    def __add__(self, other):
        return self._wrap(self.values + _raw(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.values - _raw(other))

    def __rsub__(self, other):
        return self._wrap(_raw(other) - self.values)

    def __mul__(self, other):
        return self._wrap(self.values * _raw(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.values / _raw(other))

    def __neg__(self):
        return self._wrap(-self.values)

    def mean(self) -> float:
        return average_full(self)

    def slice(self, tau_index: int) -> "XiProfile":
        return XiProfile(self.grid, self.values[..., tau_index])

    def evaluate(self, xi_points: np.ndarray, tau: float) -> np.ndarray:
        """Trigonometric interpolation at points ``xi_points`` (shape ``(m, n)``) and time ``tau``."""
        return trig_interpolate(self.grid, self.values, np.atleast_2d(xi_points), tau)


@dataclass(frozen=True)
class TauProfile:
    """Samples depending on tau only, shape ``(Ntau,)``."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.tau_points,):
            raise ValueError("tau profile has the wrong length")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile contains non-finite samples")
        object.__setattr__(self, "values", v)

    def as_field(self) -> FastField:
        return FastField(self.grid, np.broadcast_to(self.values, self.grid.shape))


@dataclass(frozen=True)
class XiProfile:
    """Samples depending on xi only, shape ``xi_points``."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.xi_points:
            raise ValueError("xi profile has the wrong shape")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile contains non-finite samples")
        object.__setattr__(self, "values", v)

    def as_field(self) -> FastField:
        return FastField(self.grid, np.broadcast_to(self.values[..., None], self.grid.shape))


def _raw(x):
    return x.values if isinstance(x, (FastField, TauProfile, XiProfile)) else x


# array-level kernels; leading batch axes are allowed everywhere


def xi_mean(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    return a.mean(axis=grid.xi_axes)


def xi_fft(grid: TorusGrid, a):
    return np.fft.fftn(a, axes=grid.xi_axes)


def xi_ifft(grid: TorusGrid, a):
    return np.fft.ifftn(a, axes=grid.xi_axes).real


def _xi_symbol(grid: TorusGrid, k: np.ndarray) -> np.ndarray:
    # lift a symbol over the xi shape to broadcast against (..., xi..., tau)
    return k[..., None]


def xi_gradient(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    """Spectral gradient over xi; returns an array with a new leading axis of length n."""
    ah = xi_fft(grid, a)
    return np.stack([xi_ifft(grid, 1j * _xi_symbol(grid, k) * ah) for k in grid.xi_wavenumbers])


def xi_divergence(grid: TorusGrid, v: np.ndarray) -> np.ndarray:
    out = 0.0
    for i, k in enumerate(grid.xi_wavenumbers):
        out = out + 1j * _xi_symbol(grid, k) * xi_fft(grid, v[i])
    return xi_ifft(grid, out)


def xi_laplacian(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    return xi_ifft(grid, -_xi_symbol(grid, grid.xi_k2) * xi_fft(grid, a))


def tau_derivative(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    ah = np.fft.fft(a, axis=-1)
    return np.fft.ifft(1j * grid.tau_wavenumbers * ah, axis=-1).real


def _pad_spectrum(ah: np.ndarray, axes, new_sizes) -> np.ndarray:
    out = ah
    for ax, m_new in zip(axes, new_sizes):
        m = out.shape[ax]
        half = m // 2
        shape = list(out.shape)
        shape[ax] = m_new
        padded = np.zeros(shape, dtype=complex)
        lo = [slice(None)] * out.ndim
        hi = [slice(None)] * out.ndim
        lo[ax] = slice(0, half)
        hi[ax] = slice(m - half + 1, m)
        dst_hi = [slice(None)] * out.ndim
        dst_hi[ax] = slice(m_new - half + 1, m_new)
        padded[tuple(lo)] = out[tuple(lo)]
        padded[tuple(dst_hi)] = out[tuple(hi)]
        out = padded
    return out


def _truncate_spectrum(ah: np.ndarray, axes, sizes) -> np.ndarray:
    out = ah
    for ax, m in zip(axes, sizes):
        big = out.shape[ax]
        half = m // 2
        shape = list(out.shape)
        shape[ax] = m
        small = np.zeros(shape, dtype=complex)
        src_lo = [slice(None)] * out.ndim
        src_hi = [slice(None)] * out.ndim
        dst_hi = [slice(None)] * out.ndim
        src_lo[ax] = slice(0, half)
        src_hi[ax] = slice(big - half + 1, big)
        dst_hi[ax] = slice(half + 1, m)
        small[tuple(src_lo)] = out[tuple(src_lo)]
        small[tuple(dst_hi)] = out[tuple(src_hi)]
        out = small
    return out


def _padded_size(m: int) -> int:
    p = (3 * m) // 2
    return p + (p % 2)


def pad_values(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    """Resample band-limited samples onto the 3/2-padded grid."""
    axes = tuple(range(-grid.dim - 1, 0))
    sizes = [_padded_size(m) for m in grid.shape]
    ah = np.fft.fftn(a, axes=axes)
    scale = np.prod(sizes) / np.prod(grid.shape)
    return np.fft.ifftn(_pad_spectrum(ah, axes, sizes), axes=axes).real * scale


def unpad_values(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    """Project samples on the padded grid back to ``grid`` by spectral truncation."""
    axes = tuple(range(-grid.dim - 1, 0))
    ah = np.fft.fftn(a, axes=axes)
    scale = np.prod(grid.shape) / np.prod(a.shape[-grid.dim - 1:])
    return np.fft.ifftn(_truncate_spectrum(ah, axes, grid.shape), axes=axes).real * scale


def padded_grid(grid: TorusGrid) -> TorusGrid:
    return TorusGrid(grid.xi_periods, grid.tau_period,
                     tuple(_padded_size(m) for m in grid.xi_points), _padded_size(grid.tau_points))


def dealiased_product_values(grid: TorusGrid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return unpad_values(grid, pad_values(grid, a) * pad_values(grid, b))


def trig_interpolate(grid: TorusGrid, a: np.ndarray, xi_points: np.ndarray, tau: float) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``a`` at ``(xi_points[j], tau)``."""
    ah = np.fft.fftn(a, axes=tuple(range(-grid.dim - 1, 0))) / np.prod(grid.shape)
    ktau = 2 * np.pi * np.fft.fftfreq(grid.tau_points, d=grid.tau_period / grid.tau_points)
    c = ah @ np.exp(1j * ktau * tau)
    for i, (ell, m) in enumerate(zip(grid.xi_periods, grid.xi_points)):
        k = 2 * np.pi * np.fft.fftfreq(m, d=ell / m)
        phase = np.exp(1j * np.outer(xi_points[:, i], k))
        c = np.einsum("pk,k...->p...", phase, c) if i == 0 else np.einsum("pk,pk...->p...", phase, c)
    return c.real


# public operations on field objects


def average_full(f: FastField) -> float:
    """Mean over the whole torus."""
    return float(f.values.mean())


def average_spatial(f: FastField) -> TauProfile:
    """Mean over xi for every tau sample."""
    return TauProfile(f.grid, xi_mean(f.grid, f.values))


def average_temporal(f: FastField) -> XiProfile:
    """Mean over tau for every xi sample."""
    return XiProfile(f.grid, f.values.mean(axis=-1))


def fast_gradient(f: FastField) -> tuple[FastField, ...]:
    return tuple(FastField(f.grid, g) for g in xi_gradient(f.grid, f.values))


def fast_divergence(v) -> FastField:
    grid = v[0].grid
    return FastField(grid, xi_divergence(grid, np.stack([c.values for c in v])))


def fast_laplacian(f: FastField) -> FastField:
    return FastField(f.grid, xi_laplacian(f.grid, f.values))


def fast_dtau(f: FastField) -> FastField:
    return FastField(f.grid, tau_derivative(f.grid, f.values))


def dealiased_product(f: FastField, g: FastField) -> FastField:
    """Pointwise product formed on the 3/2-padded grid and truncated back."""
    return FastField(f.grid, dealiased_product_values(f.grid, f.values, g.values))


def spectral_energy(f: FastField) -> float:
    """Sum of squared normalized Fourier magnitudes (equals the mean of f^2)."""
    ah = np.fft.fftn(f.values) / f.values.size
    return float(np.sum(np.abs(ah) ** 2))


def tail_fraction(grid: TorusGrid, a: np.ndarray) -> float:
    """Energy fraction in the outer half of the spectrum (|k| above half the Nyquist) on any axis."""
    ah = np.abs(np.fft.fftn(a, axes=tuple(range(-grid.dim - 1, 0)))) ** 2
    total = ah.sum()
    if total == 0:
        return 0.0
    outer = np.zeros(grid.shape, dtype=bool)
    for ax, m in enumerate(grid.shape):
        idx = np.abs(np.fft.fftfreq(m, d=1.0 / m))
        shp = [1] * len(grid.shape)
        shp[ax] = m
        outer = outer | (idx.reshape(shp) >= m // 4)
    return float(ah[outer].sum() / total)


def write_csv(path, field: FastField | TauProfile | XiProfile, name: str = "value") -> None:
    """Dump samples as CSV: one index column per axis, then the value."""
    values = field.values
    grid = field.grid
    if isinstance(field, FastField):
        cols = [f"i_xi{k + 1}" for k in range(grid.dim)] + ["i_tau"]
    elif isinstance(field, TauProfile):
        cols = ["i_tau"]
    else:
        cols = [f"i_xi{k + 1}" for k in range(grid.dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + [name])
        for idx in itertools.product(*(range(m) for m in values.shape)):
            w.writerow(list(idx) + [repr(float(values[idx]))])
