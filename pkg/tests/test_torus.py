import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from preytaxis.torus import (FastField, TorusGrid, pad_values, tau_derivative, tail_fraction,
                             trig_interpolate, unpad_values, write_csv, xi_divergence,
                             xi_gradient, xi_laplacian, xi_mean)


class TestTorusGrid:
    def test_uniform_shape(self):
        g = TorusGrid.uniform(2, 16, tau_points=8)
        assert g.shape == (16, 16, 8)
        assert g.dim == 2
        assert g.xi_axes == (-3, -2)

    @pytest.mark.parametrize("points", [6, 15])
    def test_rejects_bad_resolution(self, points):
        with pytest.raises(ValueError):
            TorusGrid.uniform(1, points)

    def test_rejects_dimension_four(self):
        with pytest.raises(ValueError):
            TorusGrid.uniform(4, 8)

    def test_nyquist_symbol_zeroed(self):
        g = TorusGrid.uniform(1, 16)
        k = g.xi_wavenumbers[0]
        assert k[8] == 0
        assert g.xi_kernel_mask.sum() == 2

    def test_refined(self):
        g = TorusGrid.uniform(1, 16, tau_points=8).refined()
        assert g.shape == (32, 16)


class TestSpectralCalculus:
    def setup_method(self):
        self.g = TorusGrid((2 * np.pi, 4 * np.pi), 2 * np.pi, (16, 32), 8)
        x, y = self.g.xi
        self.f = np.sin(x) * np.cos(0.5 * y) * np.cos(self.g.tau) + 0 * x

    def test_gradient(self):
        x, y = self.g.xi
        gr = xi_gradient(self.g, self.f)
        tau = self.g.tau
        assert np.allclose(gr[0], np.cos(x) * np.cos(0.5 * y) * np.cos(tau), atol=1e-12)
        assert np.allclose(gr[1], -0.5 * np.sin(x) * np.sin(0.5 * y) * np.cos(tau), atol=1e-12)

    def test_divergence_of_gradient_is_laplacian(self):
        lap = xi_laplacian(self.g, self.f)
        assert np.allclose(xi_divergence(self.g, xi_gradient(self.g, self.f)), lap, atol=1e-12)
        assert np.allclose(lap, -1.25 * self.f, atol=1e-12)

    def test_tau_derivative(self):
        x, y = self.g.xi
        assert np.allclose(tau_derivative(self.g, self.f),
                           -np.sin(x) * np.cos(0.5 * y) * np.sin(self.g.tau), atol=1e-12)

    def test_mean_over_xi(self):
        assert np.allclose(xi_mean(self.g, self.f + 2.0), 2.0)


class TestPadding:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_pad_unpad_roundtrip(self, seed):
        g = TorusGrid.uniform(1, 16, tau_points=8)
        rng = np.random.default_rng(seed)
        a = rng.normal(size=g.shape)
        # the Nyquist modes are split on padding; compare band-limited content
        ah = np.fft.fftn(a)
        ah[8, :] = 0
        ah[:, 4] = 0
        a = np.fft.ifftn(ah).real
        assert np.allclose(unpad_values(g, pad_values(g, a)), a, atol=1e-12)

    def test_interpolation_exact_for_trig_polynomial(self):
        g = TorusGrid.uniform(1, 16, tau_points=8)
        x = g.xi[0]
        a = np.cos(2 * x + 0.3) * np.sin(g.tau) + 0 * x
        pts = np.array([[0.1], [1.7], [5.0]])
        got = trig_interpolate(g, a, pts, 0.4)
        assert np.allclose(got, np.cos(2 * pts[:, 0] + 0.3) * np.sin(0.4), atol=1e-12)


class TestDiagnostics:
    def test_tail_fraction_smooth_is_small(self):
        g = TorusGrid.uniform(1, 32, tau_points=8)
        a = np.cos(g.xi[0]) + 0 * g.tau
        assert tail_fraction(g, a) < 1e-28

    def test_write_csv(self, tmp_path):
        g = TorusGrid.uniform(1, 8, tau_points=8)
        f = FastField(g, np.ones(g.shape))
        write_csv(tmp_path / "f.csv", f)
        lines = (tmp_path / "f.csv").read_text().splitlines()
        assert len(lines) == 1 + 64
