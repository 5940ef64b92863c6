"""Standard errors, confidence intervals, and the parameter naming scheme."""

import numpy as np
import pytest
from scipy.stats import norm

from gmnar.estimate import (FitOptions, assemble_normal_equations, fit,
                            solve_theta)
from gmnar.inference import (confidence_intervals, covariance, infer,
                             parameter_names)
from gmnar.metrics import best_permutation
from gmnar.simulate import SimConfig, simulate_gmnar

from conftest import stacked_design


def _fit_sim(N1=30, N2=24, T=12, scenario=1, seed=0, G=2, H=2, n_init=2):
    data, nets, assign, params = simulate_gmnar(
        SimConfig(N1=N1, N2=N2, T=T, scenario=scenario, seed=seed))
    res = fit(data, nets, G, H, FitOptions(n_init=n_init, seed=seed))
    return data, nets, assign, params, res


class TestParameterNames:
    def test_layout(self):
        names = parameter_names(2, 1, p1=1, p2=2)
        assert names == [
            "lambda_1", "zeta_1,1", "lambda_2", "zeta_2,1",
            "gamma_1", "delta_1,1", "delta_1,2",
            "alpha_1,1", "alpha_2,1",
        ]

    def test_alpha_block_column_major(self):
        names = parameter_names(2, 2, p1=0, p2=0)
        assert names[-4:] == ["alpha_1,1", "alpha_2,1",
                              "alpha_1,2", "alpha_2,2"]

    def test_length_matches_q(self):
        G, H, p1, p2 = 3, 2, 2, 1
        assert len(parameter_names(G, H, p1, p2)) == (
            G * (1 + p1) + H * (1 + p2) + G * H)


class TestCovariance:
    def test_matches_classical_least_squares(self):
        # With the labels held at the fitted values, the covariance is the
        # textbook sigma2 (D'D)^{-1} of the stacked regression.
        data, nets, _, _, res = _fit_sim(seed=3)
        ne = assemble_normal_equations(data, nets, res.assign)
        D, y = stacked_design(data, nets, res.assign)
        ref = res.sigma2_hat * np.linalg.inv(D.T @ D)
        cov = covariance(res, data, nets)
        assert np.allclose(cov, ref, rtol=1e-6, atol=1e-12)

    def test_symmetric_positive_diagonal(self):
        data, nets, _, _, res = _fit_sim(seed=4)
        cov = covariance(res, data, nets)
        assert np.allclose(cov, cov.T)
        assert np.all(np.diag(cov) > 0)


class TestIntervals:
    def test_default_level_quantile(self):
        data, nets, _, _, res = _fit_sim(seed=5)
        inf = infer(res, data, nets)
        z = norm.ppf(0.975)
        assert z == pytest.approx(1.959964, abs=1e-6)
        assert np.allclose(inf.ci_upper - inf.theta_hat, z * inf.se)
        assert np.allclose(inf.theta_hat - inf.ci_lower, z * inf.se)

    def test_level_half_uses_two_thirds_sigma(self):
        data, nets, _, _, res = _fit_sim(seed=5)
        inf = infer(res, data, nets, level=0.5)
        z = norm.ppf(0.75)
        assert z == pytest.approx(0.674490, abs=1e-6)
        assert np.allclose(inf.ci_upper - inf.theta_hat, z * inf.se)

    def test_wider_level_wider_interval(self):
        data, nets, _, _, res = _fit_sim(seed=6)
        r90 = confidence_intervals(infer(res, data, nets), 0.90)
        r99 = confidence_intervals(infer(res, data, nets), 0.99)
        assert np.all(r99.ci_lower <= r90.ci_lower)
        assert np.all(r99.ci_upper >= r90.ci_upper)

    def test_result_report_and_pvalues(self):
        data, nets, _, _, res = _fit_sim(seed=7)
        inf = infer(res, data, nets)
        assert len(inf.names) == inf.theta_hat.size
        p = inf.p_values()
        assert np.all((p >= 0) & (p <= 1))
        rep = inf.to_report()
        assert len(rep["parameters"]) == inf.theta_hat.size


class TestSamplingBehavior:
    def test_se_shrinks_roughly_root_n_in_t(self):
        # Quadrupling T should cut standard errors roughly in half.
        d1, n1, _, _, r1 = _fit_sim(T=10, seed=8)
        d2, n2, _, _, r2 = _fit_sim(T=40, seed=8)
        inf1 = infer(r1, d1, n1)
        inf2 = infer(r2, d2, n2)
        ratio = np.median(inf1.se / inf2.se)
        assert 1.6 < ratio < 2.6

    def test_monte_carlo_sd_matches_mean_se(self):
        # Over repeated panels the sampling SD of lambda-hat should match
        # the average reported standard error.
        lam_hats, ses = [], []
        for rep in range(40):
            data, nets, assign, params, res = _fit_sim(
                N1=30, N2=24, T=15, seed=100 + rep, n_init=2)
            pi = best_permutation(res.assign.g, assign.g, 2)
            inv = np.argsort(pi)
            lam_hats.append(res.params.lam[inv][0])
            inf = infer(res, data, nets)
            ses.append(inf.se[np.argsort(pi)[0] * (1 + data.p1)])
        sd = np.std(lam_hats, ddof=1)
        assert np.mean(ses) == pytest.approx(sd, rel=0.35)
