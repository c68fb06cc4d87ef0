import numpy as np
import pytest

from preytaxis.direct import DirectRun, compare_leading, error_metrics, fourier_resample, simulate
from preytaxis.kinetics import make_model
from preytaxis.signal import CosineSignal, TravelingWave
from preytaxis.torus import TorusGrid


def tw_run(delta=0.25, **kw):
    sig = TravelingWave(1.0, (1.0,), speed=1.0)
    args = dict(delta=delta, signal=sig, torus=sig.natural_grid(32, 32),
                model=make_model("lotka-volterra", gamma=2.0, beta=1.0), chi=0.5, kappa=1.0,
                mu=1.0, length=2 * np.pi, p0=lambda x: 0.5 + 0 * x, s0=lambda x: 0.5 + 0 * x,
                t_end=0.1)
    args.update(kw)
    return DirectRun(**args)


class TestResample:
    def test_roundtrip(self):
        x = np.arange(16) * 2 * np.pi / 16
        f = np.cos(x) + 0.3 * np.sin(3 * x)
        up = fourier_resample(f, 64)
        xf = np.arange(64) * 2 * np.pi / 64
        assert np.allclose(up, np.cos(xf) + 0.3 * np.sin(3 * xf), atol=1e-14)
        assert np.allclose(fourier_resample(up, 16), f, atol=1e-14)


class TestDirectRun:
    def test_validation(self):
        with pytest.raises(ValueError):
            tw_run(delta=0.3)
        with pytest.raises(ValueError):
            tw_run(points_per_period=8)
        with pytest.raises(ValueError):
            tw_run(delta=-1.0)

    def test_grid(self):
        r = tw_run(delta=0.25)
        assert r.points == 4 * 32
        assert r.x[1] == pytest.approx(2 * np.pi / 128)


class TestSimulate:
    def test_quasi_steady_profile_is_preserved(self):
        """p = c e (stationary signal, no kinetics, no taxis) is an exact steady state."""
        sig = CosineSignal.single(1.0, (1,))
        r = DirectRun(0.25, sig, TorusGrid.uniform(1, 32, tau_points=8), make_model("none"), 0.0,
                      1.0, 1.0, 2 * np.pi, lambda x: np.exp(np.cos(x / 0.25)),
                      lambda x: 1.0 + 0 * x, 0.2)
        traj = simulate(r)
        assert np.allclose(traj.p[-1], traj.p[0], atol=1e-10)

    def test_mass_conserved_without_kinetics(self):
        r = tw_run(model=make_model("none"), p0=lambda x: 1 + 0.2 * np.cos(x),
                   s0=lambda x: 1 + 0.1 * np.sin(x))
        traj = simulate(r)
        assert traj.p[-1].mean() == pytest.approx(traj.p[0].mean(), rel=1e-12)
        assert np.min(traj.p[-1]) > 0

    def test_compare_leading(self):
        r = tw_run()
        traj = simulate(r)
        m = compare_leading(r, traj, np.full(8, 0.5), np.full(8, 0.5))
        assert set(m) >= {"delta", "p_max", "p_l2", "s_max", "s_l2", "points", "steps"}
        assert m["points"] == r.points
        assert error_metrics(np.ones(3), np.zeros(3)) == (1.0, 1.0)
