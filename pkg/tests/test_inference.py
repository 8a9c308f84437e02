import itertools
import math

import numpy as np
import pytest
from scipy import stats as sps

from cbdiv import (
    GaussianAffineSampler,
    InvalidInputError,
    ResamplePlan,
    ks_two_sample,
    resampling_pvalue,
    run_test,
)
from cbdiv.datagen import ScenarioSpec, gen_scenario, true_sampler

from conftest import random_dataset


class TestResamplingPvalue:
    def test_observed_above_all(self):
        assert resampling_pvalue(100.0, np.arange(19.0)) == pytest.approx(1 / 20)

    def test_all_ties_count(self):
        assert resampling_pvalue(1.0, np.ones(7)) == 1.0

    def test_direct_count(self):
        assert resampling_pvalue(5.5, np.arange(1.0, 10.0)) == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            resampling_pvalue(1.0, np.array([]))

    def test_super_uniformity_under_exchangeability(self):
        # pooled vector with ties; every choice of which entry plays the
        # observed role is equally likely under exchangeability
        pooled = np.array([0.3, 0.3, 0.1, 0.9, 0.5, 0.5, 0.5, 0.2, 0.8, 0.4])
        m = pooled.size
        pvals = [
            resampling_pvalue(pooled[i], np.delete(pooled, i)) for i in range(m)
        ]
        for alpha in np.linspace(0.01, 0.99, 33):
            assert np.mean(np.array(pvals) <= alpha) <= alpha + 1e-12

    def test_monotone_in_observed(self, rng):
        stats = rng.standard_normal(50)
        grid = np.sort(rng.standard_normal(20))
        pvals = [resampling_pvalue(s, stats) for s in grid]
        assert all(a >= b for a, b in zip(pvals, pvals[1:]))


class TestRunTest:
    def test_result_fields_and_reject_rule(self, rng):
        ds = random_dataset(rng, 20)
        plan = ResamplePlan(method="lwb", M=39, seed=3)
        res = run_test(ds, plan, alpha=0.10)
        assert res.M == 39 and res.resampled.shape == (39,)
        assert res.p_value == resampling_pvalue(res.statistic, res.resampled)
        assert res.reject == (res.p_value <= 0.10)
        payload = res.to_dict()
        for key in ("method", "estimator", "weight", "M", "alpha", "seed", "statistic", "p_value", "reject", "resampled", "bandwidths"):
            assert key in payload

    def test_alpha_below_resolution_never_rejects(self, rng):
        # with M = 19 the smallest attainable p-value is 1/20 = 0.05
        for seed in range(8):
            ds = gen_scenario(ScenarioSpec(id="ex4a", n=15, r=2.0), np.random.default_rng(seed))
            plan = ResamplePlan(method="crt", M=19, seed=seed, sampler=true_sampler("ex4a", 2.0))
            res = run_test(ds, plan, alpha=0.04)
            assert res.p_value >= 1 / 20
            assert not res.reject

    def test_determinism(self, rng):
        ds = random_dataset(rng, 15)
        plan = ResamplePlan(method="lwb", M=11, seed=21)
        a = run_test(ds, plan)
        b = run_test(ds, plan)
        assert a.statistic == b.statistic
        assert np.array_equal(a.resampled, b.resampled)

    def test_bandwidths_fixed_from_observed_data(self, rng):
        ds = random_dataset(rng, 25)
        plan = ResamplePlan(method="lwb", M=5, seed=0)
        res = run_test(ds, plan)
        from cbdiv import default_bandwidths

        bw = default_bandwidths(ds)
        assert res.bandwidths.h1 == bw.h1 and res.bandwidths.h2 == bw.h2

    def test_h1_rejects_strong_dependence(self):
        rng = np.random.default_rng(10)
        rejections = 0
        for t in range(20):
            ds = gen_scenario(ScenarioSpec(id="ex4a", n=50, r=2.0), rng)
            plan = ResamplePlan(method="lwb", M=99, seed=t)
            rejections += run_test(ds, plan, alpha=0.05).reject
        assert rejections >= 17


class TestKsTwoSample:
    def test_identical_samples(self):
        a = np.array([1.0, 2.0, 3.0])
        res = ks_two_sample(a, a.copy())
        assert res.d_statistic == 0.0
        assert res.p_value == 1.0

    def test_disjoint_supports(self):
        res = ks_two_sample([1.0, 2.0], [5.0, 6.0, 7.0])
        assert res.d_statistic == 1.0

    def test_interleaved_hand_case(self):
        res = ks_two_sample([1.0, 3.0], [2.0, 4.0])
        assert res.d_statistic == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            ks_two_sample([], [1.0])

    def test_matches_scipy_asymptotic(self, rng):
        # D against scipy's statistic; the p-value against the limiting
        # Kolmogorov law evaluated at sqrt(n1 n2 / (n1 + n2)) * D. (scipy's
        # "asymp" p additionally applies a small-sample continuity correction,
        # so it is only an oracle for the distribution function itself.)
        for _ in range(100):
            a = rng.standard_normal(int(rng.integers(2, 60)))
            b = rng.standard_normal(int(rng.integers(2, 60))) + 0.3
            mine = ks_two_sample(a, b)
            ref = sps.ks_2samp(a, b, method="asymp")
            assert mine.d_statistic == pytest.approx(ref.statistic, abs=1e-12)
            en = math.sqrt(a.size * b.size / (a.size + b.size))
            assert mine.p_value == pytest.approx(
                min(1.0, sps.kstwobign.sf(en * mine.d_statistic)), abs=1e-9
            )

    def test_invariant_under_increasing_transform(self, rng):
        a = rng.standard_normal(30)
        b = rng.standard_normal(40) + 0.5
        base = ks_two_sample(a, b)
        moved = ks_two_sample(np.exp(a), np.exp(b))
        assert moved.d_statistic == base.d_statistic
        assert moved.p_value == base.p_value

    def test_ties_handled(self):
        res = ks_two_sample([1.0, 1.0, 2.0], [1.0, 2.0, 2.0])
        assert 0.0 <= res.d_statistic <= 1.0
