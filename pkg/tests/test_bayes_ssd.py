import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bearing_ssd.bayes_ssd import (PriorSpec, SampleSizeQuery, SampleStats, achieved_moe, fpcf,
                                   inverse_std_normal, iterative_sample_size, margin_of_error_mean,
                                   per_class, posterior, posterior_mean, posterior_sigma,
                                   posterior_sigma_of_mean, quantile_for_confidence,
                                   required_sample_size_closed_form)
from bearing_ssd.features import DatasetMatrix, FeatureId

from oracles import bisect_normal_quantile, smallest_n


def query(confidence=0.95, moe=1.0, sigma_prime=19.9251, N=400, sigma_s=19.9251):
    return SampleSizeQuery(confidence, moe, PriorSpec(7.8093, sigma_prime, N), sigma_s)


class TestQuantile:
    def test_median(self):
        assert inverse_std_normal(0.5) == 0.0

    def test_975(self):
        assert abs(inverse_std_normal(0.975) - 1.959964) < 1e-6

    @pytest.mark.parametrize("p", [1e-6, 0.001, 0.02425, 0.2, 0.7, 0.975, 0.99, 1 - 1e-6])
    def test_against_bisection(self, p):
        assert abs(inverse_std_normal(p) - bisect_normal_quantile(p)) < 1e-9

    def test_symmetry(self, rng):
        for p in rng.uniform(1e-6, 1 - 1e-6, 100):
            assert inverse_std_normal(p) == pytest.approx(-inverse_std_normal(1 - p), abs=1e-9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 2.0])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            inverse_std_normal(p)

    def test_confidence_convention(self):
        assert quantile_for_confidence(0.95) == pytest.approx(1.959964, abs=1e-6)
        with pytest.raises(ValueError):
            quantile_for_confidence(1.0)


class TestFpcf:
    def test_census(self):
        assert fpcf(400, 400) == 0.0

    def test_zero(self):
        assert fpcf(0, 400) == 1.0
        assert fpcf(0, 400, exact=True) == pytest.approx(math.sqrt(400 / 399))

    def test_quarter(self):
        assert fpcf(100, 400) == pytest.approx(math.sqrt(0.75), rel=1e-15)

    def test_over(self):
        with pytest.raises(ValueError):
            fpcf(401, 400)


class TestPosterior:
    def test_equal_sigmas(self):
        assert abs(posterior_sigma(3.0, 3.0) - 3.0 / math.sqrt(2)) < 1e-12
        assert posterior_sigma(19.9251, 19.9251) == pytest.approx(14.0891, abs=1e-4)  # quoted value is truncated

    def test_certain_sample(self):
        assert posterior_sigma(5.0, 0.0) == 0.0

    def test_both_zero(self):
        with pytest.raises(ValueError):
            posterior_sigma(0.0, 0.0)

    def test_mean_fixed_point(self):
        m = posterior_mean(PriorSpec(4.2, 3.0, 400), SampleStats(10, 4.2, 9.0))
        assert abs(m - 4.2) < 1e-12

    def test_mean_symmetric_weights(self):
        assert posterior_mean(PriorSpec(1.0, 2.0, 400), SampleStats(10, 3.0, 2.0)) == 2.0

    def test_mean_sample_limit(self):
        # sample mean weighted by the prior variance
        assert posterior_mean(PriorSpec(1.0, 2.0, 400), SampleStats(10, 3.0, 0.0)) == 3.0

    @given(st.floats(0.01, 50), st.floats(0.01, 50), st.floats(-10, 10), st.floats(-10, 10))
    def test_bounds(self, sp, ss, mp, ms):
        s2 = posterior_sigma(sp, ss)
        assert s2 <= min(sp, ss) * (1 + 1e-12)
        m = posterior_mean(PriorSpec(mp, sp, 10), SampleStats(5, ms, ss))
        assert min(mp, ms) - 1e-9 <= m <= max(mp, ms) + 1e-9

    def test_sigma_of_mean(self):
        assert posterior_sigma_of_mean(10.0, 25, 400) == pytest.approx(1.9365, abs=5e-5)
        assert posterior_sigma_of_mean(7.0, 400, 400) == 0.0
        with pytest.raises(ValueError):
            posterior_sigma_of_mean(7.0, 401, 400)

    def test_infinite_population_limit(self):
        assert posterior_sigma_of_mean(10.0, 30, 10**12) == pytest.approx(10 / math.sqrt(30), rel=1e-6)

    def test_combined(self):
        est = posterior(PriorSpec(0.0, 3.0, 100), SampleStats(25, 1.0, 4.0))
        assert est.sigma_doubleprime == pytest.approx(2.4)
        assert est.sigma_mu_doubleprime == pytest.approx(2.4 * math.sqrt(1 / 25 - 1 / 100))


class TestClosedForm:
    def test_zero_moe(self):
        assert required_sample_size_closed_form(query(moe=0.0)) == 400

    def test_worked_example(self):
        # sigma'' = 10 needs sigma' = sigma_s = 10 sqrt 2
        s = 10 * math.sqrt(2)
        assert required_sample_size_closed_form(query(moe=1.0, sigma_prime=s, sigma_s=s)) == 196

    @settings(max_examples=300, deadline=None)
    @given(st.integers(1, 30), st.integers(1, 30), st.sampled_from([0.1, 0.25, 0.5, 1, 2, 3.3, 5]),
           st.sampled_from([0.90, 0.95, 0.99, 0.995, 0.998]), st.sampled_from([50, 400, 10_000]))
    def test_brute_force(self, sp, ss, moe, c, N):
        q = query(c, moe, sp, N, ss)
        ref = smallest_n(quantile_for_confidence(c), posterior_sigma(sp, ss), moe, N)
        assert required_sample_size_closed_form(q) == ref

    def test_monotone(self):
        moes = np.linspace(0.05, 5, 60)
        ns = [required_sample_size_closed_form(query(moe=m)) for m in moes]
        assert all(a >= b for a, b in zip(ns, ns[1:]))
        cs = [0.5, 0.8, 0.9, 0.95, 0.99, 0.995, 0.998, 0.9999]
        ns = [required_sample_size_closed_form(query(confidence=c)) for c in cs]
        assert all(a <= b for a, b in zip(ns, ns[1:]))

    def test_infinite_population(self):
        p, s2 = quantile_for_confidence(0.95), posterior_sigma(19.9251, 19.9251)
        n_inf = (p * s2 / 1.0) ** 2
        n = required_sample_size_closed_form(query(moe=1.0, N=10**12))
        assert abs(n - n_inf) <= 1

    def test_invalid_confidence(self):
        with pytest.raises(ValueError):
            query(confidence=1.0)

    def test_achieved_within_budget(self):
        q = query(moe=0.8)
        n = required_sample_size_closed_form(q)
        s2 = posterior_sigma(19.9251, 19.9251)
        assert achieved_moe(n, s2, 0.95, 400) <= 0.8
        assert achieved_moe(n - 1, s2, 0.95, 400) > 0.8


class TestPerClass:
    def test_rounding(self):
        assert per_class(99) == (24, 25)
        assert per_class(400) == (100, 100)
        assert per_class(370) == (92, 93)


class TestMoe:
    def test_values(self):
        assert margin_of_error_mean(7.8093, 7.8093) == 0
        assert margin_of_error_mean(7.8093, 9.0) == pytest.approx(1.1907)
        assert margin_of_error_mean(1.0, 4.0) == margin_of_error_mean(4.0, 1.0)


def _pop(values):
    values = np.asarray(values, float)
    labels = np.arange(values.size) % 4
    return DatasetMatrix([str(i) for i in range(values.size)], labels, values[:, None],
                         [FeatureId.KURTOSIS])


class TestIterative:
    def test_zero_moe(self, kurtosis_table):
        r = iterative_sample_size(kurtosis_table, query(moe=0.0), seed=1)
        assert (r.n_total, r.n_per_class, r.converged) == (400, 100, True)

    def test_constant_population(self):
        r = iterative_sample_size(_pop(np.full(400, 3.0)), query(moe=1.0), seed=0)
        assert r.n_total == 1 and r.converged

    def test_deterministic_with_trace(self, kurtosis_table):
        a = iterative_sample_size(kurtosis_table, query(moe=1.2), seed=4)
        b = iterative_sample_size(kurtosis_table, query(moe=1.2), seed=4)
        assert a == b
        assert a.iterations[0].assumed_n == 200
        assert a.iterations[-1].next_n == a.n_total or a.oscillation

    def test_achieved_moe(self, kurtosis_table):
        r = iterative_sample_size(kurtosis_table, query(moe=1.6), seed=2)
        if r.converged:
            assert r.achieved_moe <= 1.6

    def test_population_too_small(self):
        with pytest.raises(ValueError):
            iterative_sample_size(_pop(np.arange(40.0)), query(N=400))

    def test_serialisation(self, kurtosis_table):
        q = query(moe=2.0)
        r = iterative_sample_size(kurtosis_table, q, seed=3)
        kv = dict(line.split(" = ") for line in r.to_kv(q).splitlines())
        assert int(kv["n_total"]) == r.n_total
        assert len(r.csv_row(q)) == 7
