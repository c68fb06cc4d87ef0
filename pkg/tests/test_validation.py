import numpy as np
import pytest

from preytaxis.validation import (convergence_study, error_ratios, observed_orders,
                                  symmetric_case, traveling_wave_case)


class TestOrders:
    def test_helpers(self):
        rows = [{"delta": 0.1, "p_max": 4.0}, {"delta": 0.05, "p_max": 1.0}]
        assert error_ratios(rows) == [4.0]
        assert observed_orders(rows) == pytest.approx([2.0])


@pytest.mark.slow
class TestStudies:
    def test_leading_order_first_order(self):
        rows = convergence_study(traveling_wave_case(t_end=0.1), [1 / 4, 1 / 8])
        assert rows[0]["p_max"] > rows[1]["p_max"]
        assert 1.5 < error_ratios(rows)[0] < 2.5

    def test_corrected_symmetric_second_order(self):
        rows = convergence_study(symmetric_case(t_end=0.25), [1 / 4, 1 / 8], corrected=True)
        assert observed_orders(rows)[0] > 1.7
        assert all(r["corrected"] for r in rows)

    def test_threads_match_serial(self):
        case = traveling_wave_case(t_end=0.05)
        a = convergence_study(case, [1 / 4, 1 / 8], threads=1)
        b = convergence_study(case, [1 / 4, 1 / 8], threads=2)
        assert [r["p_max"] for r in a] == [r["p_max"] for r in b]
