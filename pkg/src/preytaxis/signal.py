"""External shortwave signals and the weight fields they induce.

A signal is a zero-mean function ``h(xi, tau)`` on the fast torus, possibly
scaled by a slow amplitude ``m(x)``. The predators' fast equilibrium profile
is the weight ``e = exp(kappa h / mu)``; every cell problem is driven by it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .torus import (FastField, TauProfile, TorusGrid, padded_grid, tail_fraction,
                    unpad_values, pad_values, xi_mean)

__all__ = [
    "CosineTerm",
    "CosineSignal",
    "TravelingWave",
    "TabulatedSignal",
    "WeightField",
    "SignalError",
    "build_weight",
    "validate_signal",
    "effective_amplitude",
    "slow_log_gradient",
]

MEAN_REJECT = 1e-10
TABULATED_MEAN_TOLERANCE = 1e-6


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class CosineTerm:
    """``amplitude * prod_i cos(2 pi m_i xi_i / l_i + phi_i) * cos(2 pi m_0 tau / l_0 + phi_0)``.

    A zero ``tau_mode`` with zero ``tau_phase`` makes the term time independent.
    """

    amplitude: float
    modes: tuple[int, ...]
    phases: tuple[float, ...] | None = None
    tau_mode: int = 0
    tau_phase: float = 0.0

    def __call__(self, grid: TorusGrid, xi, tau):
        phases = self.phases or (0.0,) * len(self.modes)
        out = self.amplitude * np.cos(2 * np.pi * self.tau_mode * tau / grid.tau_period + self.tau_phase)
        for m, ph, x, ell in zip(self.modes, phases, xi, grid.xi_periods):
            out = out * np.cos(2 * np.pi * m * x / ell + ph)
        return out

    def nonconstant(self) -> bool:
        return any(self.modes) or self.tau_mode != 0


@dataclass(frozen=True)
class CosineSignal:
    """Sum of cosine products; every term must oscillate in at least one fast variable."""

    terms: tuple[CosineTerm, ...]
    modulation: Callable | None = None
    family: str = field(default="cosine-product", init=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not t.nonconstant():
                raise SignalError("a cosine term with all modes zero has nonzero mean")

    @classmethod
    def single(cls, amplitude: float, modes: Sequence[int], phases=None, tau_mode: int = 0,
               tau_phase: float = 0.0, modulation=None) -> "CosineSignal":
        return cls((CosineTerm(amplitude, tuple(modes), phases, tau_mode, tau_phase),), modulation)

    @property
    def amplitude(self) -> float:
        return float(sum(abs(t.amplitude) for t in self.terms))

    def evaluate(self, grid: TorusGrid, xi, tau):
        return sum(t(grid, xi, tau) for t in self.terms)


@dataclass(frozen=True)
class TravelingWave:
    """``h = amplitude * profile(theta . xi - speed * tau + phase)`` with a 2 pi periodic profile.

    The torus must be compatible: ``theta_i * l_i`` and ``speed * l_0`` have
    to be integer multiples of ``2 pi``. :meth:`natural_grid` builds one.
    """

    amplitude: float
    direction: tuple[float, ...]
    speed: float = 0.0
    phase: float = 0.0
    profile: Callable = np.cos
    modulation: Callable | None = None
    family: str = field(default="traveling-wave", init=False)

    def __post_init__(self):
        theta = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(theta) - 1.0) > 1e-12:
            raise SignalError("traveling-wave direction must be a unit vector")
        object.__setattr__(self, "direction", tuple(theta))

    def natural_grid(self, points: int = 32, tau_points: int | None = None) -> TorusGrid:
        periods = tuple(2 * np.pi / abs(t) if abs(t) > 1e-12 else 2 * np.pi for t in self.direction)
        tau_period = 2 * np.pi / abs(self.speed) if self.speed else 2 * np.pi
        return TorusGrid(periods, tau_period, (points,) * len(periods), tau_points or points)

    def check_grid(self, grid: TorusGrid) -> None:
        if grid.dim != len(self.direction):
            raise SignalError("direction and torus dimension differ")
        turns = [t * ell / (2 * np.pi) for t, ell in zip(self.direction, grid.xi_periods)]
        turns.append(self.speed * grid.tau_period / (2 * np.pi))
        if any(abs(w - round(w)) > 1e-9 for w in turns):
            raise SignalError("traveling wave is not periodic on this torus")

    def evaluate(self, grid: TorusGrid, xi, tau):
        self.check_grid(grid)
        eta = sum(t * x for t, x in zip(self.direction, xi)) - self.speed * tau + self.phase
        return self.amplitude * self.profile(eta)


@dataclass(frozen=True)
class TabulatedSignal:
    """Samples of ``h`` on a given torus grid."""

    grid: TorusGrid
    values: np.ndarray
    modulation: Callable | None = None
    family: str = field(default="tabulated", init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise SignalError("tabulated signal does not match its grid")
        mean = v.mean()
        if abs(mean) > TABULATED_MEAN_TOLERANCE:
            raise SignalError(f"tabulated signal has mean {mean:.3e}; refusing a biased signal")
        v = v - mean
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.values)))

    def evaluate(self, grid: TorusGrid, xi, tau):
        if grid != self.grid:
            raise SignalError("tabulated signals can only be sampled on their own grid")
        return self.values


def _amplitude_factor(spec, x) -> float:
    if spec.modulation is None or x is None:
        return 1.0
    return float(spec.modulation(np.asarray(x, dtype=float)))


def sample_signal(spec, grid: TorusGrid, x=None) -> np.ndarray:
    """Samples of ``h`` (times the slow amplitude at ``x``) on ``grid``."""
    h = np.broadcast_to(spec.evaluate(grid, grid.xi, grid.tau), grid.shape)
    return _amplitude_factor(spec, x) * h


def _sample_padded(spec, grid: TorusGrid, x=None) -> np.ndarray:
    if isinstance(spec, TabulatedSignal):
        return _amplitude_factor(spec, x) * pad_values(grid, spec.values)
    fine = padded_grid(grid)
    return sample_signal(spec, fine, x)


@dataclass(frozen=True)
class WeightField:
    """``e = exp(kappa h / mu)``, ``rho = 1 / <e>^xi`` and ``e_* = rho e``."""

    e: FastField
    rho: TauProfile
    estar: FastField
    kappa: float
    mu: float
    amplitude: float = 0.0

    @property
    def grid(self) -> TorusGrid:
        return self.e.grid

    @property
    def mean_e(self) -> np.ndarray:
        return 1.0 / self.rho.values

    @property
    def mean_inv_e(self) -> np.ndarray:
        return xi_mean(self.grid, 1.0 / self.e.values)

    @property
    def time_dependent(self) -> bool:
        v = self.estar.values
        return bool(np.max(np.abs(v - v[..., :1])) > 1e-14)


def effective_amplitude(amplitude: float, kappa: float, mu: float) -> float:
    """Effective amplitude ``a = a0 kappa / mu``."""
    return amplitude * kappa / mu


def build_weight(spec, kappa: float, mu: float, grid: TorusGrid, x=None) -> WeightField:
    """Weight fields of ``spec`` on ``grid`` (at slow point ``x`` for modulated signals).

    The exponential is taken on the 3/2-padded grid and truncated back, so
    ``e`` is the band-limited projection of the weight rather than an aliased
    interpolant.
    """
    if not kappa > 0 or not mu > 0:
        raise SignalError("kappa and mu must be positive")
    h = sample_signal(spec, grid, x)
    if abs(h.mean()) > MEAN_REJECT:
        raise SignalError(f"signal mean {h.mean():.3e} exceeds {MEAN_REJECT}")
    hp = _sample_padded(spec, grid, x)
    e = unpad_values(grid, np.exp(kappa * hp / mu))
    if np.min(e) <= 0:
        raise SignalError("weight lost positivity after truncation; refine the torus grid")
    mean_e = xi_mean(grid, e)
    rho = 1.0 / mean_e
    amp = getattr(spec, "amplitude", float(np.max(np.abs(h)))) * _amplitude_factor(spec, x)
    return WeightField(FastField(grid, e), TauProfile(grid, rho), FastField(grid, e * rho),
                       float(kappa), float(mu), effective_amplitude(amp, kappa, mu))


def validate_signal(spec, grid: TorusGrid, kappa: float = 1.0, mu: float = 1.0, x=None) -> dict:
    """Report-only diagnostics: mean, spectral tail fraction, weight range."""
    h = sample_signal(spec, grid, x)
    if isinstance(spec, TabulatedSignal):
        tail = _outer_band_fraction(grid, h)
    else:
        fine = grid.refined(2)
        tail = _unrepresentable_fraction(fine, grid, sample_signal(spec, fine, x))
    e = np.exp(kappa * h / mu)
    return {
        "mean": float(h.mean()),
        "tail_fraction": tail,
        "under_resolved": tail > 1e-6,
        "weight_tail_fraction": tail_fraction(grid, e - e.mean()),
        "e_min": float(e.min()),
        "e_max": float(e.max()),
    }


def _unrepresentable_fraction(fine: TorusGrid, coarse: TorusGrid, a: np.ndarray) -> float:
    power = np.abs(np.fft.fftn(a)) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    outside = np.zeros(fine.shape, dtype=bool)
    for ax, (mf, mc) in enumerate(zip(fine.shape, coarse.shape)):
        idx = np.abs(np.fft.fftfreq(mf, d=1.0 / mf))
        shp = [1] * len(fine.shape)
        shp[ax] = mf
        outside = outside | (idx.reshape(shp) >= mc // 2)
    return float(power[outside].sum() / total)


def _outer_band_fraction(grid: TorusGrid, a: np.ndarray) -> float:
    power = np.abs(np.fft.fftn(a)) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    outer = np.zeros(grid.shape, dtype=bool)
    for ax, m in enumerate(grid.shape):
        idx = np.abs(np.fft.fftfreq(m, d=1.0 / m))
        shp = [1] * len(grid.shape)
        shp[ax] = m
        outer = outer | (idx.reshape(shp) >= 3 * m // 8)
    return float(power[outer].sum() / total)


def slow_log_gradient(spec, kappa: float, mu: float, grid: TorusGrid, x, step: float = 1e-4) -> np.ndarray:
    """Central-difference slow gradient of ``ln <e>^xi`` at ``x``; shape ``(n_slow, Ntau)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = []
    for j in range(x.size):
        dx = np.zeros_like(x)
        dx[j] = step
        up = np.log(build_weight(spec, kappa, mu, grid, x + dx).mean_e)
        dn = np.log(build_weight(spec, kappa, mu, grid, x - dx).mean_e)
        out.append((up - dn) / (2 * step))
    return np.array(out)
