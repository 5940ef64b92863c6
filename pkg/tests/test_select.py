"""Group-number selection by penalized objective."""

import math

import numpy as np
import pytest

from gmnar.estimate import FitOptions
from gmnar.select import penalty_eta, qic, select_group_numbers
from gmnar.simulate import SimConfig, simulate_gmnar


class TestPenalty:
    def test_known_values(self):
        assert penalty_eta(20) == pytest.approx(
            1.0 / (40 * math.log(20) * 20 ** 0.125), rel=1e-12)
        assert penalty_eta(20) == pytest.approx(0.00574, abs=5e-6)
        assert penalty_eta(40) == pytest.approx(0.004274, abs=5e-6)

    def test_decreasing_in_t(self):
        etas = [penalty_eta(T) for T in (5, 10, 50, 200, 1000)]
        assert all(a > b for a, b in zip(etas, etas[1:]))

    def test_rejects_tiny_t(self):
        with pytest.raises(ValueError):
            penalty_eta(1)


class TestQic:
    def test_formula(self):
        n = 1000
        q = 1234.5
        eta = penalty_eta(25)
        assert qic(q, 2, 3, eta, n) == pytest.approx(
            math.log(q / n) + eta * 5, rel=1e-12)

    def test_penalty_separates_equal_fits(self):
        eta = penalty_eta(30)
        n = 500
        assert qic(100.0, 2, 2, eta, n) < qic(100.0, 3, 3, eta, n)

    def test_perfect_fit_sentinel(self):
        eta = penalty_eta(30)
        with pytest.warns(UserWarning):
            v = qic(1e-15, 2, 2, eta, n_obs=600)
        assert v == -math.inf


class TestSelect:
    def test_recovers_truth_small_noisy(self):
        cfg = SimConfig(N1=40, N2=30, T=30, scenario=1, seed=21)
        data, nets, _, _ = simulate_gmnar(cfg)
        res = select_group_numbers(data, nets, 3, 3,
                                   FitOptions(n_init=2, seed=0))
        assert res.chosen == (2, 2)
        assert res.eta == pytest.approx(penalty_eta(30))
        assert set(res.grid) == {(G, H) for G in (1, 2, 3) for H in (1, 2, 3)}

    def test_zero_noise_prefers_smallest_perfect_cell(self):
        cfg = SimConfig(N1=30, N2=24, T=12, scenario=1, noise_sd=0.0,
                        burn_in=30, seed=22)
        data, nets, _, _ = simulate_gmnar(cfg)
        with pytest.warns(UserWarning):
            res = select_group_numbers(data, nets, 3, 3,
                                       FitOptions(n_init=2, seed=0))
        # every cell containing the truth fits perfectly; ties break toward
        # the smallest G + H, then smallest G
        assert res.chosen == (2, 2)

    def test_gmin_hmin_window(self):
        cfg = SimConfig(N1=24, N2=20, T=10, scenario=1, seed=23)
        data, nets, _, _ = simulate_gmnar(cfg)
        res = select_group_numbers(data, nets, 3, 3,
                                   FitOptions(n_init=1, seed=0),
                                   Gmin=2, Hmin=2)
        assert set(res.grid) == {(2, 2), (2, 3), (3, 2), (3, 3)}
        assert res.chosen[0] >= 2 and res.chosen[1] >= 2

    def test_diagonal_restricts_grid(self):
        cfg = SimConfig(N1=24, N2=20, T=10, scenario=1, seed=24)
        data, nets, _, _ = simulate_gmnar(cfg)
        res = select_group_numbers(data, nets, 3, 3,
                                   FitOptions(n_init=1, seed=0),
                                   diagonal=True)
        assert set(res.grid) == {(1, 1), (2, 2), (3, 3)}
        assert res.chosen[0] == res.chosen[1]

    def test_grid_entries_and_report(self):
        cfg = SimConfig(N1=20, N2=16, T=8, scenario=1, seed=25)
        data, nets, _, _ = simulate_gmnar(cfg)
        res = select_group_numbers(data, nets, 2, 2,
                                   FitOptions(n_init=1, seed=0))
        n = 20 * 16 * 8
        for (G, H), cell in res.grid.items():
            assert cell["qic"] == pytest.approx(
                math.log(cell["q"] / n) + res.eta * (G + H), rel=1e-10)
            assert cell["fit"].assign.G == G
        report = res.to_report()
        assert report["chosen"] == {"G": res.chosen[0], "H": res.chosen[1]}
        assert len(report["grid"]) == len(res.grid)
        assert all("qic" in row for row in report["grid"])

    def test_chosen_minimizes_qic(self):
        cfg = SimConfig(N1=20, N2=16, T=8, scenario=2, seed=26)
        data, nets, _, _ = simulate_gmnar(cfg)
        res = select_group_numbers(data, nets, 3, 3,
                                   FitOptions(n_init=1, seed=0))
        best = min(res.grid.items(),
                   key=lambda kv: (kv[1]["qic"], kv[0][0] + kv[0][1], kv[0][0]))
        assert res.chosen == best[0]
