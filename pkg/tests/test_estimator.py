import numpy as np
import pytest

from cbdiv import (
    Bandwidths,
    Dataset,
    InsufficientSampleError,
    InvalidInputError,
    cbd_linear,
    cbd_ustat,
    cbd_vstat,
    default_bandwidths,
    normalized_cbd,
    pairwise_distances,
)
from cbdiv.datagen import ScenarioSpec, gen_scenario
from cbdiv.estimator import (
    VStatEvaluator,
    WeightFunction,
    ustat_core_term,
    ustat_exact_bruteforce,
)
from cbdiv.ballcore import pointwise_cbd_bruteforce

from conftest import random_dataset

WIDE = Bandwidths(h1=4.0, h2=3.5, h0=1.0)


class TestVStat:
    def test_identical_x_gives_zero_for_every_weight(self, rng):
        ds = Dataset(x=np.full((12, 2), 3.0), y=rng.standard_normal((12, 1)), z=rng.standard_normal((12, 1)))
        bw = default_bandwidths(ds)
        for w in WeightFunction:
            assert cbd_vstat(ds, bw, a=w).value == pytest.approx(0.0, abs=1e-15)

    def test_isometry_invariance_in_x(self, rng):
        ds = random_dataset(rng, 15, d_x=2)
        bw = default_bandwidths(ds)
        rot, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        ds2 = ds.with_x(0.4 * (ds.x @ rot.T) + 7.0)
        for w in WeightFunction:
            assert cbd_vstat(ds, bw, a=w).value == pytest.approx(
                cbd_vstat(ds2, bw, a=w).value, rel=1e-9
            )

    def test_matches_anchor_bruteforce(self, rng, each_backend):
        ds = random_dataset(rng, 6)
        bw = Bandwidths(h1=0.9, h2=0.8, h0=1.0)
        dist = pairwise_distances(ds.x)
        expected = np.mean([pointwise_cbd_bruteforce(ds, dist, s, 0.9, 0.8) for s in range(6)])
        assert cbd_vstat(ds, bw).value == pytest.approx(expected, rel=1e-10, abs=1e-12)

    def test_nonnegative_and_bounded(self, rng):
        for _ in range(30):
            ds = random_dataset(rng, int(rng.integers(4, 20)), tie_stress=True)
            bw = default_bandwidths(ds)
            v = cbd_vstat(ds, bw).value
            assert 0.0 <= v <= 2.0

    def test_weighted_value_nonnegative(self, rng):
        ds = random_dataset(rng, 25)
        bw = default_bandwidths(ds)
        for w in (WeightFunction.P2, WeightFunction.P4P4):
            assert cbd_vstat(ds, bw, a=w).value >= 0.0

    def test_evaluator_reuse_equals_fresh(self, rng):
        ds = random_dataset(rng, 20)
        bw = default_bandwidths(ds)
        ev = VStatEvaluator(ds, bw)
        x2 = rng.standard_normal(ds.x.shape)
        assert ev.value(x2) == cbd_vstat(ds.with_x(x2), bw).value

    def test_weight_parse(self):
        assert WeightFunction.parse("p2") is WeightFunction.P2
        with pytest.raises(InvalidInputError):
            WeightFunction.parse("bogus")


class TestUStat:
    def test_needs_nine(self, rng):
        ds = random_dataset(rng, 8)
        with pytest.raises(InsufficientSampleError):
            cbd_ustat(ds, WIDE)
        with pytest.raises(InsufficientSampleError):
            cbd_linear(ds, WIDE)

    def test_exact_refused_above_ten(self, rng):
        ds = random_dataset(rng, 11)
        with pytest.raises(InvalidInputError, match="incomplete"):
            cbd_ustat(ds, WIDE, mode="exact")

    def test_identical_x_gives_zero(self, rng):
        ds = Dataset(x=np.zeros((9, 1)), y=rng.standard_normal((9, 1)), z=rng.standard_normal((9, 1)))
        assert cbd_ustat(ds, WIDE, mode="exact").value == pytest.approx(0.0, abs=1e-12)
        assert cbd_linear(ds, WIDE).value == pytest.approx(0.0, abs=1e-12)

    def test_exact_matches_enumeration_oracle(self, rng, each_backend):
        ds = random_dataset(rng, 9)
        got = cbd_ustat(ds, WIDE, mode="exact").value
        want = ustat_exact_bruteforce(ds, WIDE)
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)

    def test_incomplete_self_consistency(self, rng):
        ds = random_dataset(rng, 30)
        a = cbd_ustat(ds, WIDE, mode="incomplete", tuples=20_000, rng=np.random.default_rng(1))
        b = cbd_ustat(ds, WIDE, mode="incomplete", tuples=20_000, rng=np.random.default_rng(2))
        se = np.hypot(a.mc_se, b.mc_se)
        assert abs(a.value - b.value) <= 4 * se
        assert a.mc_se > 0

    def test_incomplete_slack_bound(self, rng):
        # sampled core terms may be negative; the estimate must clear the
        # documented slack of -4 * (tolerance + Monte Carlo standard error)
        for seed in range(5):
            ds = random_dataset(np.random.default_rng(seed), 20)
            est = cbd_ustat(ds, WIDE, mode="incomplete", tuples=5_000, rng=np.random.default_rng(seed))
            assert est.value >= -4 * (1e-12 + est.mc_se)

    def test_incomplete_deterministic_given_rng(self, rng):
        ds = random_dataset(rng, 15)
        a = cbd_ustat(ds, WIDE, mode="incomplete", tuples=500, rng=np.random.default_rng(9))
        b = cbd_ustat(ds, WIDE, mode="incomplete", tuples=500, rng=np.random.default_rng(9))
        assert a.value == b.value


class TestLinear:
    def test_single_block_equals_core_term(self, rng):
        ds = random_dataset(rng, 9)
        assert cbd_linear(ds, WIDE).value == ustat_core_term(ds, WIDE, range(9))

    def test_three_block_hand_sum(self, rng, each_backend):
        ds = random_dataset(rng, 27)
        terms = [ustat_core_term(ds, WIDE, range(9 * i, 9 * i + 9)) for i in range(3)]
        assert cbd_linear(ds, WIDE).value == pytest.approx(np.mean(terms), rel=1e-12)

    def test_leftover_rows_ignored(self, rng):
        ds = random_dataset(rng, 21)  # two blocks, three leftovers
        terms = [ustat_core_term(ds, WIDE, range(9 * i, 9 * i + 9)) for i in range(2)]
        assert cbd_linear(ds, WIDE).value == pytest.approx(np.mean(terms), rel=1e-12)


class TestNormalized:
    def test_identical_x_maps_to_zero(self, rng):
        ds = Dataset(x=np.ones((10, 1)), y=rng.standard_normal((10, 1)), z=rng.standard_normal((10, 1)))
        assert normalized_cbd(ds, default_bandwidths(ds)) == 0.0

    def test_unit_interval(self, rng):
        for k in range(40):
            ds = random_dataset(rng, int(rng.integers(4, 25)), tie_stress=(k % 4 == 0))
            r = normalized_cbd(ds, default_bandwidths(ds))
            assert 0.0 <= r <= 1.0

    def test_dependence_raises_value(self):
        # conditional dependence (r=2) must raise the coefficient relative to
        # conditional independence (r=0) by a clear margin
        rng = np.random.default_rng(123)
        vals = {0.0: [], 2.0: []}
        for r in vals:
            for t in range(100):
                ds = gen_scenario(ScenarioSpec(id="ex4a", n=200, r=r), rng)
                vals[r].append(normalized_cbd(ds, default_bandwidths(ds)))
        a, b = np.array(vals[0.0]), np.array(vals[2.0])
        gap = b.mean() - a.mean()
        se = np.hypot(a.std(ddof=1) / 10, b.std(ddof=1) / 10)
        # one-sided two-sample test at the 1% level
        assert gap / se > 2.33
