import csv

import numpy as np
import pytest

from preytaxis.selftest import random_lemma_point
from preytaxis.stability import (ModeParams, eigen_oracle, hat_params, lemma_preconditions, scan,
                                 threshold_chat2, triad)


class TestHatParams:
    def test_zero_wavevector(self):
        m = hat_params([0.0], np.eye(1), [1.0], 1.0, 2.0, 0.0, 0.5)
        assert (m.mu_hat, m.chi_hat, m.c_hat) == (0.0, 0.0, 0.0)

    def test_no_signal(self):
        m = hat_params([1.0, 0.0], np.eye(2), [0.0, 0.0], 1.5, 2.0, 0.0, 0.5)
        assert m.mu_hat == 1.5 and m.chi_hat == 1.0 and m.c_hat == 0.0
        assert m.alpha == 1.0

    def test_bessel_diffusivity(self):
        m = hat_params([2.0], [[0.623929]], [0.0], 1.0, 0.0, 0.0, 1.0)
        assert m.mu_hat == pytest.approx(4 * 0.623929)

    def test_invalid(self):
        with pytest.raises(ValueError):
            hat_params([1.0], [[-1.0]], [0.0], 1.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            hat_params([1.0], [[1.0]], [0.0], 1.0, 1.0, 0.0, 0.0)


class TestTriad:
    def test_pure_diffusion(self):
        m = ModeParams(np.array([1.0]), 1.0, 0.0, 1.0, 0.0)
        t = triad(m, np.zeros((2, 2)))
        assert (t.delta2, t.delta4, t.sign_changes) == (2.0, 4.0, 0)
        lam, count = eigen_oracle(m, np.zeros((2, 2)))
        assert np.allclose(sorted(lam.real), [-1.0, -1.0]) and count == 0

    def test_decoupled_eigenvalues(self):
        m = ModeParams(np.array([1.0]), 2.0, 0.0, 0.5, 0.0)
        lam, _ = eigen_oracle(m, np.zeros((2, 2)))
        assert np.allclose(sorted(lam.real), [-2.0, -0.5])

    def test_neutral_flag(self):
        m = ModeParams(np.array([1.0]), 0.0, 0.0, 0.0, 0.0)
        assert triad(m, np.zeros((2, 2))).neutral

    def test_agreement_with_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            m, abar = random_lemma_point(rng)
            m = m.with_c_hat(rng.normal() * 4)
            t = triad(m, abar)
            if t.neutral:
                continue
            assert t.sign_changes == eigen_oracle(m, abar)[1]


class TestThreshold:
    def test_preconditions_reported(self):
        m = ModeParams(np.array([1.0]), 1.0, 0.0, 1.0, 0.0)
        res = threshold_chat2(m, np.zeros((2, 2)))
        assert res.value is None
        assert "det_positive" in res.failed

    def test_sign_flip_at_threshold(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            m, abar = random_lemma_point(rng)
            assert all(lemma_preconditions(m, abar).values())
            c2 = threshold_chat2(m, abar).value
            assert c2 > 0
            below = triad(m.with_c_hat(np.sqrt(c2 * (1 - 1e-6))), abar)
            above = triad(m.with_c_hat(np.sqrt(c2 * (1 + 1e-6))), abar)
            assert (below.sign_changes, above.sign_changes) == (0, 1)

    def test_large_drift_one_unstable_mode(self):
        m, abar = random_lemma_point(np.random.default_rng(1))
        assert eigen_oracle(m.with_c_hat(1e4), abar)[1] == 1


class TestScan:
    ABAR = np.array([[-0.4975496, 0.49261153], [-0.40196032, 0.19003111]])

    def test_thresholds_and_longwave(self, tmp_path):
        rep = scan(np.eye(2) * 0.98, np.array([0.02, 0.0]), self.ABAR, 0.2059, 1.0, 5.0,
                   [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)], [0.5, 1.0], [0.0, 50.0, 200.0])
        assert rep.oracle_agreement()
        assert rep.threshold(1, 0.5) is None          # orthogonal to the drift
        parallel, oblique = rep.threshold(0, 0.5), rep.threshold(2, 0.5)
        assert parallel < oblique
        assert rep.longwave[0]["diverges"]
        assert not rep.longwave[1]["diverges"]
        with pytest.raises(KeyError):
            rep.threshold(0, 0.3)
        rep.write_csv(tmp_path / "s.csv")
        rows = list(csv.DictReader(open(tmp_path / "s.csv")))
        assert len(rows) == 3 * 2 * 3
