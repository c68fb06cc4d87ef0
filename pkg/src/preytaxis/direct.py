"""Direct simulation of the fast-forced system in one space dimension.

    p_t + q_x = p f(p, s),      q = chi p s_x + kappa p h_x - mu p_x
    s_t = delta s_xx + s g(p, s)

with ``h = h(x, t, x/delta, t/delta)``. The same small parameter ``delta``
sets the prey diffusivity and the scale separation. The logarithmic flux
``-mu p (ln p)_x`` is written as ``-mu p_x`` before discretization.

Spectral in x on a periodic interval; linear diffusion of both species is
integrated exactly (integrating factor) and the transport and reaction terms
by RK4, with the step bounded by the forcing period and an advective limit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kinetics import KineticsModel
from .signal import TabulatedSignal
from .slow import PositivityError
from .torus import TorusGrid

__all__ = [
    "DirectRun",
    "DirectTrajectory",
    "CFLError",
    "simulate",
    "signal_on_line",
    "fourier_resample",
    "compare_leading",
    "error_metrics",
]

MIN_POINTS_PER_PERIOD = 16


class CFLError(ValueError):
    pass


def fourier_resample(values: np.ndarray, points: int) -> np.ndarray:
    """Band-limited interpolation of periodic samples onto ``points`` nodes.

    Upsampling splits the source Nyquist coefficient evenly; downsampling
    drops the target Nyquist mode.
    """
    n = values.size
    if points == n:
        return np.array(values, dtype=float)
    vh = np.fft.rfft(values) / n
    out = np.zeros(points // 2 + 1, dtype=complex)
    m = min(n, points) // 2
    out[:m] = vh[:m]
    if points > n and n % 2 == 0:
        out[m] = 0.5 * vh[m]
    elif points > n:
        out[m] = vh[m]
    return np.fft.irfft(out * points, points)


@dataclass(frozen=True)
class DirectRun:
    delta: float
    signal: object
    torus: TorusGrid
    model: KineticsModel
    chi: float
    kappa: float
    mu: float
    length: float
    p0: Callable | np.ndarray
    s0: Callable | np.ndarray
    t_end: float
    points_per_period: int = 32
    dt: float | None = None
    snapshots: int = 0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.torus.dim != 1:
            raise ValueError("the direct solver is one-dimensional")
        if isinstance(self.signal, TabulatedSignal):
            raise ValueError("direct simulation needs an analytic signal")
        if self.points_per_period < MIN_POINTS_PER_PERIOD:
            raise ValueError(f"need at least {MIN_POINTS_PER_PERIOD} points per fast period")
        periods = self.length / (self.torus.xi_periods[0] * self.delta)
        if abs(periods - round(periods)) > 1e-9 or round(periods) < 1:
            raise ValueError("domain length must hold an integer number of fast periods")

    @property
    def points(self) -> int:
        periods = int(round(self.length / (self.torus.xi_periods[0] * self.delta)))
        return periods * self.points_per_period

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.points) * self.length / self.points


@dataclass
class DirectTrajectory:
    x: np.ndarray
    times: list[float] = field(default_factory=list)
    p: list[np.ndarray] = field(default_factory=list)
    s: list[np.ndarray] = field(default_factory=list)
    steps: int = 0
    dt: float = 0.0


def signal_on_line(r: DirectRun, t: float) -> np.ndarray:
    """``h(x, t, x/delta, t/delta)`` on the direct grid."""
    x = r.x
    h = np.broadcast_to(r.signal.evaluate(r.torus, (x / r.delta,), t / r.delta), x.shape)
    mod = getattr(r.signal, "modulation", None)
    if mod is not None:
        h = h * np.array([mod(np.array([xi])) for xi in x])
    return np.asarray(h, dtype=float)


def _initial(f, x):
    return np.asarray(f(x) if callable(f) else f, dtype=float).copy()


def simulate(r: DirectRun) -> DirectTrajectory:
    x = r.x
    n = x.size
    k = 2 * np.pi * np.fft.rfftfreq(n, d=r.length / n)
    k_odd = k.copy()
    if n % 2 == 0:
        k_odd[-1] = 0.0
    p = _initial(r.p0, x)
    s = _initial(r.s0, x)
    if p.shape != x.shape or s.shape != x.shape:
        raise ValueError("initial data do not match the direct grid")
    if np.min(p) <= 0 or np.min(s) <= 0:
        raise ValueError("initial densities must be strictly positive")

    def ddx(a):
        return np.fft.irfft(1j * k_odd * np.fft.rfft(a), n)

    hx_peak = max(np.max(np.abs(ddx(signal_on_line(r, t)))) for t in
                  np.linspace(0, r.torus.tau_period * r.delta, 9))
    kmax = np.max(np.abs(k))
    vel = r.kappa * hx_peak + r.chi * np.max(np.abs(ddx(s))) + 1e-300
    dt_cfl = 1.0 / (vel * kmax)
    dt_force = r.torus.tau_period * r.delta / 32
    dt = r.dt if r.dt is not None else min(dt_cfl, dt_force)
    if dt > 2.5 * dt_cfl:
        raise CFLError(f"dt={dt:.3e} exceeds the advective limit {dt_cfl:.3e}")
    nsteps = max(1, int(np.ceil(r.t_end / dt - 1e-12)))
    dt = r.t_end / nsteps

    lp = -r.mu * k * k
    ls = -r.delta * k * k
    ep, ep2 = np.exp(lp * dt), np.exp(lp * dt / 2)
    es, es2 = np.exp(ls * dt), np.exp(ls * dt / 2)
    model = r.model

    def explicit(ph, sh, t):
        pp = np.fft.irfft(ph, n)
        ss = np.fft.irfft(sh, n)
        if np.min(pp) <= 1e-14 or np.min(ss) <= 1e-14:
            raise PositivityError(f"t={t:.6g}: density below floor")
        hx = ddx(signal_on_line(r, t))
        drift = r.kappa * hx
        if r.chi:
            drift = drift + r.chi * np.fft.irfft(1j * k_odd * sh, n)
        flux_h = np.fft.rfft(pp * drift)
        np_ = np.fft.rfft(pp * model.f(pp, ss)) - 1j * k_odd * flux_h
        ns = np.fft.rfft(ss * model.g(pp, ss))
        return np_, ns

    traj = DirectTrajectory(x, [0.0], [p.copy()], [s.copy()], nsteps, dt)
    stride = max(1, nsteps // r.snapshots) if r.snapshots else None
    ph, sh = np.fft.rfft(p), np.fft.rfft(s)
    t = 0.0
    for step in range(1, nsteps + 1):
        k1p, k1s = explicit(ph, sh, t)
        k2p, k2s = explicit(ep2 * (ph + 0.5 * dt * k1p), es2 * (sh + 0.5 * dt * k1s), t + dt / 2)
        k3p, k3s = explicit(ep2 * ph + 0.5 * dt * k2p, es2 * sh + 0.5 * dt * k2s, t + dt / 2)
        k4p, k4s = explicit(ep * ph + dt * ep2 * k3p, es * sh + dt * es2 * k3s, t + dt)
        ph = ep * ph + dt / 6 * (ep * k1p + 2 * ep2 * (k2p + k3p) + k4p)
        sh = es * sh + dt / 6 * (es * k1s + 2 * es2 * (k2s + k3s) + k4s)
        t = step * dt
        if (stride and step % stride == 0) or step == nsteps:
            pp, ss = np.fft.irfft(ph, n), np.fft.irfft(sh, n)
            if np.min(pp) <= 1e-14 or np.min(ss) <= 1e-14:
                raise PositivityError(f"t={t:.6g}: density below floor")
            traj.times.append(t)
            traj.p.append(pp)
            traj.s.append(ss)
    return traj


def error_metrics(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Max-norm and root-mean-square distance."""
    d = a - b
    return float(np.max(np.abs(d))), float(np.sqrt(np.mean(d * d)))


def compare_leading(r: DirectRun, traj: DirectTrajectory, pbar: np.ndarray, sbar: np.ndarray,
                    weight_estar: Callable[[np.ndarray, float], np.ndarray] | None = None) -> dict:
    """Distance between the final direct state and ``pbar e_*`` and ``sbar``.

    ``pbar`` and ``sbar`` are slow-grid samples at the final time (any
    resolution; they are Fourier-interpolated). ``e_*`` at ``xi = x/delta``,
    ``tau = t/delta`` is recomputed on the direct grid unless a callable
    ``weight_estar(x, t)`` is supplied.
    """
    t = traj.times[-1]
    n = traj.x.size
    if pbar.ndim != 1 or sbar.shape != pbar.shape:
        raise ValueError("slow fields must be 1-D and of equal size")
    pb = fourier_resample(pbar, n)
    sb = fourier_resample(sbar, n)
    if weight_estar is None:
        e = np.exp(r.kappa * signal_on_line(r, t) / r.mu)
        estar = e / e.mean()
    else:
        estar = weight_estar(traj.x, t)
    p_lead = pb * estar
    emax, el2 = error_metrics(traj.p[-1], p_lead)
    smax, sl2 = error_metrics(traj.s[-1], sb)
    return {"delta": r.delta, "t": t, "p_max": emax, "p_l2": el2, "s_max": smax, "s_l2": sl2,
            "points": n, "steps": traj.steps}
