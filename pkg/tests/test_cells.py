"""Cell operators: inverses, projectors and the effective matrix."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from preytaxis.cells import (CellOperatorContext, L_inverse_values, L_values, P_values,
                             SolvabilityError, apply_H, apply_L, dtau_inverse_values,
                             heat_inverse_values, invert_dtau, invert_dxi, matrix_M,
                             matrix_values, project_P, project_P1, project_Q, project_Q1,
                             project_vector, solve_heat, solve_L)
from preytaxis.effective import bessel_i0, closed_form_m_1d
from preytaxis.selftest import random_cosine_signal, random_trig_field
from preytaxis.signal import CosineSignal, build_weight
from preytaxis.torus import FastField, TauProfile, TorusGrid, xi_mean


@pytest.fixture(scope="module")
def ctx2():
    g = TorusGrid.uniform(2, 16, tau_points=8)
    sig = random_cosine_signal(np.random.default_rng(3), 2, max_mode=2)
    return CellOperatorContext(build_weight(sig, 1.0, 1.0, g))


class TestLInverse:
    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_inverse_of_L_1d(self, seed):
        rng = np.random.default_rng(seed)
        g = TorusGrid.uniform(1, 32, tau_points=8)
        w = build_weight(random_cosine_signal(rng, 1), 1.0, 1.0, g)
        e = w.e.values
        u = e * random_trig_field(rng, g)
        back = L_inverse_values(g, e, L_values(g, e, u))
        assert np.allclose(back, u - P_values(g, w.estar.values, u), atol=1e-9)

    def test_normalization(self, ctx2):
        rng = np.random.default_rng(0)
        r = apply_L(ctx2, FastField(ctx2.grid, ctx2.e * random_trig_field(rng, ctx2.grid)))
        u = solve_L(ctx2, r)
        assert np.max(np.abs(xi_mean(ctx2.grid, u.values))) < 1e-11
        assert np.allclose(apply_L(ctx2, u).values, r.values, atol=1e-9)

    def test_single_slice(self, ctx2):
        rng = np.random.default_rng(1)
        u = ctx2.e * random_trig_field(rng, ctx2.grid)
        full = solve_L(ctx2, apply_L(ctx2, FastField(ctx2.grid, u))).values
        one = solve_L(ctx2, apply_L(ctx2, FastField(ctx2.grid, u), tau_slice=3), tau_slice=3)
        assert np.allclose(one.values, full[..., 3], atol=1e-10)

    def test_solvability(self):
        g = TorusGrid.uniform(1, 16, tau_points=8)
        with pytest.raises(SolvabilityError):
            heat_inverse_values(g, np.ones(g.shape))
        with pytest.raises(SolvabilityError):
            dtau_inverse_values(g, np.ones(g.shape))


class TestProjectors:
    def test_scalar_projectors(self, ctx2):
        rng = np.random.default_rng(2)
        u = FastField(ctx2.grid, random_trig_field(rng, ctx2.grid))
        p = project_P(ctx2, u)
        q = project_Q(ctx2, u)
        assert np.allclose(project_P(ctx2, p).values, p.values)
        assert np.allclose(project_P(ctx2, q).values, 0, atol=1e-14)
        assert np.allclose(xi_mean(ctx2.grid, q.values), 0, atol=1e-14)
        p1, q1 = project_P1(ctx2, u), project_Q1(ctx2, u)
        assert np.allclose((p1 + q1).values, p.values)
        assert np.allclose(project_P1(ctx2, p1).values, p1.values)

    def test_vector_projector_idempotent(self, ctx2):
        rng = np.random.default_rng(4)
        v = [FastField(ctx2.grid, ctx2.e * random_trig_field(rng, ctx2.grid)) for _ in range(2)]
        pv = project_vector(ctx2, v)
        ppv = project_vector(ctx2, pv)
        for a, b in zip(pv, ppv):
            assert np.allclose(a.values, b.values, atol=1e-9)


class TestMatrix:
    def test_closed_form_1d(self):
        g = TorusGrid.uniform(1, 32, tau_points=8)
        w = build_weight(CosineSignal.single(1.0, (1,)), 1.0, 1.0, g)
        m = matrix_values(g, w.e.values)[:, 0, 0]
        assert np.allclose(m, bessel_i0(1.0) - 1 / bessel_i0(1.0), atol=1e-9)
        assert np.allclose(m, closed_form_m_1d(w), atol=1e-9)

    def test_matrix_properties(self, ctx2):
        m = matrix_M(ctx2).m
        assert m.shape == (8, 2, 2)
        assert np.allclose(m, np.swapaxes(m, 1, 2), atol=1e-10)
        eig = np.linalg.eigvalsh(m)
        assert np.all(eig >= -1e-12)
        assert np.all(eig[:, -1] < ctx2.weight.mean_e)
        assert matrix_M(ctx2).tau_average().m.shape == (2, 2)
        assert np.allclose(matrix_M(ctx2, tau_slice=2).m, m[2])


class TestHeatAndAntiderivatives:
    def test_heat_inverse(self):
        g = TorusGrid.uniform(1, 16, tau_points=8)
        x, t = g.xi[0], g.tau
        rhs = FastField(g, np.cos(x) * np.sin(t) + np.sin(2 * x))
        u = solve_heat(rhs)
        assert np.allclose(apply_H(u).values, rhs.values, atol=1e-12)
        assert abs(u.values.mean()) < 1e-14

    def test_dtau_inverse(self):
        g = TorusGrid.uniform(1, 16, tau_points=8)
        p = TauProfile(g, np.cos(g.tau.reshape(-1)))
        assert np.allclose(invert_dtau(p).values, np.sin(g.tau.reshape(-1)), atol=1e-12)

    def test_dxi_inverse(self):
        g = TorusGrid.uniform(1, 16, tau_points=8)
        f = FastField(g, np.cos(g.xi[0]) + 0 * g.tau)
        assert np.allclose(invert_dxi(f).values, np.sin(g.xi[0]) + 0 * g.tau, atol=1e-12)
