import math

import numpy as np
import pytest
from scipy.integrate import quad

from hidalgo.twonn import pareto_quantile, twonn_fit


def pareto_sample(d, n, seed):
    u = np.random.default_rng(seed).random(n)
    return (1.0 - u) ** (-1.0 / d)


class TestTwonnFit:
    def test_conjugacy_arithmetic(self):
        mu = np.full(4, np.e)
        est = twonn_fit(mu, prior_a=1.0, prior_b=1.0)
        assert est.v == pytest.approx(4.0)
        assert est.d_mle == pytest.approx(1.0)
        assert est.d_post_mean == pytest.approx(1.0)
        assert est.d_post_sd == pytest.approx(math.sqrt(5.0) / 5.0)
        assert est.n_used == 4

    def test_recovers_pareto_dimension(self):
        n = 10000
        mu = pareto_sample(4.0, n, seed=5)
        est = twonn_fit(mu)
        assert abs(est.d_mle - 4.0) <= 3.0 * 4.0 / math.sqrt(n)

    def test_degenerate_all_ones(self):
        with pytest.raises(ValueError, match="degenerate"):
            twonn_fit(np.ones(3))

    def test_mu_below_one_rejected(self):
        with pytest.raises(ValueError):
            twonn_fit(np.array([0.9, 2.0]))

    def test_bad_priors_rejected(self):
        with pytest.raises(ValueError):
            twonn_fit(np.array([2.0, 3.0]), prior_a=0.0)

    def test_posterior_matches_quadrature(self):
        # the closed-form Gamma posterior against numerical integration of
        # prior x likelihood on d
        mu = pareto_sample(3.0, 50, seed=7)
        a, b = 1.5, 0.8
        est = twonn_fit(mu, prior_a=a, prior_b=b)
        n, v = mu.size, float(np.sum(np.log(mu)))

        def unnorm(d):
            return math.exp(n * math.log(d) - (d + 1.0) * v
                            + (a - 1.0) * math.log(d) - b * d)

        z0 = quad(unnorm, 0, np.inf)[0]
        m1 = quad(lambda d: d * unnorm(d), 0, np.inf)[0] / z0
        m2 = quad(lambda d: d * d * unnorm(d), 0, np.inf)[0] / z0
        assert est.d_post_mean == pytest.approx(m1, rel=1e-6)
        assert est.d_post_sd == pytest.approx(math.sqrt(m2 - m1 * m1), rel=1e-6)

    def test_rmse_shrinks_with_sample_size(self):
        d_true = 2.5

        def rmse(n):
            errs = [twonn_fit(pareto_sample(d_true, n, seed=s)).d_mle - d_true
                    for s in range(50)]
            return float(np.sqrt(np.mean(np.square(errs))))

        r_small, r_large = rmse(1000), rmse(4000)
        assert r_large < r_small
        # quadrupling the sample should roughly halve the error
        assert 1.3 <= r_small / r_large <= 3.0


class TestParetoQuantile:
    def test_median_of_unit_pareto(self):
        assert pareto_quantile(1.0, 0.5) == pytest.approx(2.0)

    def test_median_of_pareto_four(self):
        assert pareto_quantile(4.0, 0.5) == pytest.approx(2.0 ** 0.25)

    def test_lower_support_bound(self):
        for d in (0.5, 1.0, 7.3):
            assert pareto_quantile(d, 1e-12) == pytest.approx(1.0, abs=1e-9)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            pareto_quantile(-1.0, 0.5)
        with pytest.raises(ValueError):
            pareto_quantile(2.0, 0.0)
        with pytest.raises(ValueError):
            pareto_quantile(2.0, 1.0)

    def test_inverse_of_cdf(self):
        d = 3.7
        for u in (0.01, 0.4, 0.99):
            mu = pareto_quantile(d, u)
            assert 1.0 - mu ** -d == pytest.approx(u, rel=1e-12)
