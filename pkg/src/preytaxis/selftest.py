"""Closed-form and oracle cross-checks bundled for the ``selftest`` command.

Every check is deterministic for a given seed and returns the computed
value, the reference, the error and the tolerance it is held to.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .cells import L_inverse_values, L_values, P_values, matrix_values
from .effective import (averaged_kinetics, bessel_i0, closed_form_dbar_1d, closed_form_m_1d,
                        effective_diffusivity, effective_drift, traveling_wave_dbar,
                        traveling_wave_speed_factor)
from .kinetics import find_equilibrium, make_model
from .signal import CosineSignal, CosineTerm, TravelingWave, build_weight
from .stability import ModeParams, eigen_oracle, lemma_preconditions, threshold_chat2, triad, _delta4
from .torus import TorusGrid, xi_mean

__all__ = ["Check", "run_selftest", "write_selftest_csv", "random_cosine_signal",
           "random_lemma_point", "random_trig_field"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    reference: float
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


def random_cosine_signal(rng: np.random.Generator, dim: int, terms: int = 3, max_mode: int = 3,
                         amplitude: float = 0.6, time_dependent: bool = True) -> CosineSignal:
    """A random smooth zero-mean cosine-product signal."""
    out = []
    for _ in range(terms):
        modes = tuple(int(m) for m in rng.integers(0, max_mode + 1, size=dim))
        tau_mode = int(rng.integers(0, 3)) if time_dependent else 0
        if not any(modes):
            modes = (1,) + modes[1:]
        out.append(CosineTerm(float(rng.uniform(-amplitude, amplitude)), modes,
                              tuple(float(x) for x in rng.uniform(0, 2 * np.pi, size=dim)),
                              tau_mode, float(rng.uniform(0, 2 * np.pi)) if tau_mode else 0.0))
    return CosineSignal(tuple(out))


def random_trig_field(rng: np.random.Generator, grid: TorusGrid, max_mode: int = 4) -> np.ndarray:
    """Random real trigonometric polynomial with modes up to ``max_mode`` per axis.

    Used as ``phi / e`` in operator checks so that the field carries no
    content in the kernel modes of the discrete operators.
    """
    shape = grid.shape
    spec = np.zeros(shape, dtype=complex)
    idx = [np.r_[0:max_mode + 1, m - max_mode:m] for m in shape]
    block = np.ix_(*idx)
    spec[block] = rng.normal(size=spec[block].shape) + 1j * rng.normal(size=spec[block].shape)
    out = np.fft.ifftn(spec).real
    return out / np.max(np.abs(out))


def random_lemma_point(rng: np.random.Generator, max_tries: int = 10000):
    """Random ``(ModeParams, abar)`` satisfying the threshold lemma's preconditions."""
    for _ in range(max_tries):
        a11 = -rng.uniform(0.05, 2.0)
        a22 = rng.uniform(0.05, 2.0)
        a12 = rng.uniform(-1.0, 2.0)
        a21 = rng.uniform(-2.0, -0.01)
        abar = np.array([[a11, a12], [a21, a22]])
        m = ModeParams(np.array([1.0]), rng.uniform(0, 3), rng.uniform(0, 3),
                       rng.uniform(0, 0.99 * a22), 0.0)
        if all(lemma_preconditions(m, abar).values()):
            return m, abar
    raise RuntimeError("no precondition-satisfying point found")


def _rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(1e-300, np.max(np.abs(b))))


def run_selftest(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks: list[Check] = []
    g1 = TorusGrid.uniform(1, 32, tau_points=8)

    for a in (0.5, 1.0, 2.0):
        w = build_weight(CosineSignal.single(a, (1,), phases=(0.3,)), 1.0, 1.0, g1)
        ref = bessel_i0(a)
        checks.append(Check(f"bessel_mean_e[a={a}]", float(w.mean_e[0]), ref,
                            abs(w.mean_e[0] - ref), 1e-10))
        checks.append(Check(f"bessel_mean_inv_e[a={a}]", float(w.mean_inv_e[0]), ref,
                            abs(w.mean_inv_e[0] - ref), 1e-10))

    w1 = build_weight(CosineSignal.single(1.0, (1,)), 1.0, 1.0, g1)
    m = matrix_values(g1, w1.e.values)[0, 0, 0]
    ref = bessel_i0(1.0) - 1 / bessel_i0(1.0)
    checks.append(Check("matrix_1d_closed_form", float(m), ref, abs(m - ref), 1e-8))
    d = effective_diffusivity(w1)[0, 0]
    ref = 1 / bessel_i0(1.0) ** 2
    checks.append(Check("dbar_1d_bessel", float(d), ref, abs(d - ref), 1e-8))

    sig = random_cosine_signal(rng, 1)
    wr = build_weight(sig, 1.0, 1.0, g1)
    d = effective_diffusivity(wr)[0, 0]
    ref = closed_form_dbar_1d(wr)
    checks.append(Check("dbar_1d_random_signal", float(d), ref, abs(d - ref) / ref, 1e-8))
    mm = matrix_values(g1, wr.e.values)[:, 0, 0]
    checks.append(Check("matrix_1d_random_signal", float(mm[0]), float(closed_form_m_1d(wr)[0]),
                        _rel(mm, closed_form_m_1d(wr)), 1e-8))

    tw = TravelingWave(1.0, (1.0,), speed=2.0)
    wt = build_weight(tw, 1.0, 1.0, tw.natural_grid(32, 32))
    c = effective_drift(wt, 1.0)[0]
    ref = 2.0 * traveling_wave_speed_factor(wt)
    checks.append(Check("drift_1d_traveling_wave", float(c), ref, abs(c - ref) / ref, 1e-8))

    theta = np.array([0.6, 0.8])
    tw2 = TravelingWave(0.8, tuple(theta), speed=1.0)
    w2 = build_weight(tw2, 1.0, 1.0, tw2.natural_grid(32, 16))
    d2 = effective_diffusivity(w2)
    ref2 = traveling_wave_dbar(theta, w2)
    checks.append(Check("dbar_2d_traveling_wave", float(d2[0, 0]), float(ref2[0, 0]),
                        float(np.max(np.abs(d2 - ref2))), 1e-8))
    c2 = effective_drift(w2, 1.0)
    checks.append(Check("drift_2d_parallel", float(np.linalg.norm(c2)), 0.0,
                        float(abs(c2[0] * theta[1] - c2[1] * theta[0]) / np.linalg.norm(c2)), 1e-9))

    g2 = TorusGrid.uniform(2, 32, tau_points=8)
    w = build_weight(random_cosine_signal(rng, 2), 1.0, 1.0, g2)
    phi = w.e.values * random_trig_field(rng, g2)
    lhs = L_inverse_values(g2, w.e.values, L_values(g2, w.e.values, phi))
    rhs = phi - P_values(g2, w.estar.values, phi)
    checks.append(Check("L_inverse_of_L", 0.0, 0.0, float(np.max(np.abs(lhs - rhs))), 1e-9))
    comm = (P_values(g2, w.estar.values, L_values(g2, w.e.values, phi))
            - L_values(g2, w.e.values, P_values(g2, w.estar.values, phi)))
    checks.append(Check("P_commutes_with_L", 0.0, 0.0, float(np.max(np.abs(comm))), 1e-9))
    u = phi
    pu = P_values(g2, w.estar.values, u)
    checks.append(Check("MP_equals_M", float(pu.mean()), float(u.mean()), abs(pu.mean() - u.mean()), 1e-12))
    checks.append(Check("MxiQ_zero", 0.0, 0.0, float(np.max(np.abs(xi_mean(g2, u - pu)))), 1e-12))

    mm = matrix_values(g2, w.e.values)
    eig = np.linalg.eigvalsh(0.5 * (mm + np.swapaxes(mm, 1, 2)))
    checks.append(Check("matrix_symmetric", 0.0, 0.0, float(np.max(np.abs(mm - np.swapaxes(mm, 1, 2)))), 1e-10))
    checks.append(Check("matrix_below_mean_e", float(np.max(eig[:, -1] - w.mean_e)), 0.0,
                        float(max(0.0, np.max(eig[:, -1] - w.mean_e))), 0.0))

    lv = make_model("lotka-volterra", gamma=2.0, beta=1.0)
    kin = averaged_kinetics(w, lv)
    pp, ss = np.meshgrid(np.linspace(0.1, 2, 5), np.linspace(0.1, 2, 5))
    err = max(np.max(np.abs(kin.fbar(pp, ss) - lv.f(pp, ss))), np.max(np.abs(kin.gbar(pp, ss) - lv.g(pp, ss))))
    checks.append(Check("p_linear_neutrality", 0.0, 0.0, float(err), 1e-12))
    eq = find_equilibrium(lv, kin)
    checks.append(Check("lotka_volterra_equilibrium", eq.p_e, 0.5,
                        float(max(abs(eq.p_e - 0.5), abs(eq.s_e - 0.5))), 1e-12))

    mismatches = 0
    draws = 0
    worst_root = 0.0
    while draws < 200:
        mp, ab = random_lemma_point(rng)
        mp = mp.with_c_hat(rng.normal() * 4.0)
        t = triad(mp, ab)
        scale = max(1.0, mp.mu_hat, mp.chi_hat, abs(mp.c_hat), float(np.max(np.abs(ab))))
        if abs(t.delta4) < 1e-9 * scale ** 4:
            continue
        draws += 1
        mismatches += int(t.sign_changes != eigen_oracle(mp, ab)[1])
        th = threshold_chat2(mp, ab).value
        d2 = mp.mu_hat + mp.delta_hat - ab[0, 0] - ab[1, 1]
        worst_root = max(worst_root, abs(_delta4(mp, ab, th)) / max(1e-300, d2 * d2 * th))
    checks.append(Check("triad_vs_oracle_mismatches", float(mismatches), 0.0, float(mismatches), 0.0))
    checks.append(Check("threshold_is_delta4_root", worst_root, 0.0, worst_root, 1e-10))
    return checks


def write_selftest_csv(path, checks: list[Check]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["check", "value", "reference", "error", "tolerance", "passed"])
        for c in checks:
            out.writerow([c.name, repr(c.value), repr(c.reference), repr(c.error), repr(c.tolerance),
                          int(c.passed)])
