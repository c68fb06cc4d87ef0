import numpy as np
import pytest

from preytaxis.correction import (CorrectionCells, SlowPoint, build_bundle, build_q0, build_s1,
                                  evaluate_on_line, slow_point_from_state)
from preytaxis.cells import SolvabilityError
from preytaxis.effective import homogenize
from preytaxis.kinetics import make_model
from preytaxis.signal import CosineSignal, TravelingWave, build_weight
from preytaxis.slow import SlowGrid, SlowState
from preytaxis.torus import TorusGrid, tau_derivative, xi_divergence, xi_mean


@pytest.fixture(scope="module")
def tw_cells():
    tw = TravelingWave(1.0, (1.0,), speed=1.0)
    w = build_weight(tw, 1.0, 1.0, tw.natural_grid(32, 32))
    return w, CorrectionCells(w)


def batch():
    return SlowPoint(np.array([0.5, 0.6]), np.array([0.5, 0.4]), np.array([[0.1], [-0.2]]),
                     np.array([[0.05], [0.3]]), np.zeros((2, 1, 1)), np.zeros((2, 1, 1)),
                     np.zeros(2), np.zeros(2))


class TestFlux:
    def test_flux_balances_fast_time_derivative(self, tw_cells):
        w, cells = tw_cells
        pt = batch()
        q0 = build_q0(cells, 1.0, 0.5, pt.p, pt.s, pt.grad_p, pt.grad_s)
        p0_t = pt.p[:, None, None] * tau_derivative(w.grid, w.estar.values)
        assert np.max(np.abs(xi_divergence(w.grid, q0) + p0_t)) < 1e-10

    def test_one_dimensional_reduction(self, tw_cells):
        w, cells = tw_cells
        v = cells.V[0] + (w.estar.values - 1)
        assert np.max(np.abs(v - v.mean())) < 1e-10


class TestCorrectors:
    def test_s1_solves_heat_problem(self, tw_cells):
        w, _ = tw_cells
        model = make_model("lotka-volterra", gamma=2.0, beta=1.0)
        s1 = build_s1(w, model, [0.5], [0.5], [0.0])
        assert s1.shape == (1,) + w.grid.shape
        assert abs(s1.mean()) < 1e-14

    def test_bundle_shapes_and_means(self, tw_cells):
        w, cells = tw_cells
        model = make_model("lotka-volterra", gamma=2.0, beta=1.0)
        co = homogenize(w, 1.0, model)
        g = SlowGrid((2 * np.pi,), (8,))
        x = g.x[0]
        pt = slow_point_from_state(g, SlowState(0.5 + 0.1 * np.cos(x), 0.5 + 0.1 * np.sin(x)),
                                   co, 1.0, 0.5)
        b = build_bundle(w, model, 1.0, 0.5, pt, cells)
        assert b.p1.shape == (8,) + w.grid.shape
        assert b.q0.shape == (1, 8) + w.grid.shape
        # the mean part of p1 is left undetermined and set to zero
        assert np.max(np.abs(xi_mean(w.grid, b.p1_check))) < 1e-10
        assert np.max(np.abs(b.p1_circ.mean(axis=(-2, -1)))) < 1e-12
        assert "p1_bullet" in b.undetermined

    def test_inconsistent_time_derivative_rejected(self, tw_cells):
        w, cells = tw_cells
        with pytest.raises(SolvabilityError):
            build_bundle(w, make_model("lotka-volterra", gamma=2.0, beta=1.0), 1.0, 0.5, batch(), cells)

    def test_static_uniform_point_has_no_correction(self):
        g = TorusGrid.uniform(1, 16, tau_points=8)
        w = build_weight(CosineSignal.single(1.0, (1,)), 1.0, 1.0, g)
        b = build_bundle(w, make_model("none"), 1.0, 0.0, SlowPoint.uniform(0.7, 0.5))
        assert np.max(np.abs(b.p1)) < 1e-12
        assert np.max(np.abs(b.s1_tilde)) < 1e-14


class TestSlowDerivatives:
    def test_spectral_derivatives(self):
        w = build_weight(CosineSignal.single(1.0, (1,)), 1.0, 1.0, TorusGrid.uniform(1, 16, tau_points=8))
        co = homogenize(w, 1.0, make_model("none"))
        g = SlowGrid((2 * np.pi,), (32,))
        x = g.x[0]
        pt = slow_point_from_state(g, SlowState(1 + 0.1 * np.sin(x), 1 + 0 * x), co, 1.0, 0.0)
        assert np.allclose(pt.grad_p[:, 0], 0.1 * np.cos(x), atol=1e-13)
        assert np.allclose(pt.hess_p[:, 0, 0], -0.1 * np.sin(x), atol=1e-13)
        assert np.allclose(pt.p_t, -co.dbar[0, 0] * 0.1 * np.sin(x), atol=1e-13)


class TestLineEvaluation:
    def test_separable_field(self):
        g = TorusGrid.uniform(1, 16, tau_points=8)
        slow = np.cos(np.arange(8) * 2 * np.pi / 8)
        fields = slow[:, None, None] * (np.sin(g.xi[0]) * np.cos(g.tau))[None]
        x = np.arange(64) * 2 * np.pi / 64
        delta, t = 2 * np.pi / (4 * 2 * np.pi), 0.3
        got = evaluate_on_line(g, fields, 8, x, delta, t)
        assert np.allclose(got, np.cos(x) * np.sin(x / delta) * np.cos(t / delta), atol=1e-12)
