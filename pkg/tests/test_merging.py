"""Combination rule arithmetic, batch/scalar agreement, and the PIT helper."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvmerge.merging import (
    Bonferroni,
    DiscreteDistribution,
    Hommel,
    MergedPValue,
    PValueVector,
    Ruger,
    ScaledAverage,
    apply_rule,
    as_pvalues,
    harmonic_number,
    merge_bonferroni,
    merge_hommel,
    merge_ruger,
    merge_scaled_average,
    randomized_pit,
    raw_batch,
)

ALL_RULES = [Bonferroni(), Ruger(1), Ruger(2), Hommel(), ScaledAverage()]

pvec = st.lists(
    st.floats(0.0, 1.0, allow_nan=False), min_size=2, max_size=6
)


class TestVectors:
    def test_validates_range(self):
        with pytest.raises(ValueError):
            PValueVector((0.2, 1.5))
        with pytest.raises(ValueError):
            PValueVector((-0.1, 0.5))
        with pytest.raises(ValueError):
            PValueVector((float("nan"), 0.5))

    def test_needs_two(self):
        with pytest.raises(ValueError):
            PValueVector((0.5,))

    def test_sorted_and_k(self):
        v = as_pvalues([0.9, 0.1, 0.4])
        assert v.k == 3
        assert v.sorted() == (0.1, 0.4, 0.9)

    def test_as_pvalues_passthrough(self):
        v = PValueVector((0.1, 0.2))
        assert as_pvalues(v) is v

    def test_merged_clips(self):
        m = MergedPValue.from_raw(1.6)
        assert (m.raw, m.clipped) == (1.6, 1.0)
        with pytest.raises(ValueError):
            MergedPValue.from_raw(-0.1)


class TestRuleArithmetic:
    # hand-computed from the defining formulas
    def test_bonferroni(self):
        assert merge_bonferroni([0.1, 0.3]).raw == pytest.approx(0.2)
        assert merge_bonferroni([0.2, 0.05, 0.9, 0.4]).raw == pytest.approx(0.2)
        assert merge_bonferroni([0.9, 0.8]).clipped == 1.0

    def test_ruger_order_statistics(self):
        # (K/k) * k-th smallest
        assert merge_ruger([0.20, 0.05, 0.90, 0.40], 2).clipped == pytest.approx(0.40)
        assert merge_ruger([0.20, 0.05, 0.90, 0.40], 4).raw == pytest.approx(0.90)
        assert merge_ruger([0.1, 0.3], 1).raw == pytest.approx(0.2)

    def test_ruger_k_bounds(self):
        with pytest.raises(ValueError):
            merge_ruger([0.1, 0.2], 0)
        with pytest.raises(ValueError):
            merge_ruger([0.1, 0.2], 3)

    def test_hommel(self):
        # (1 + 1/2 + 1/3) * min(3*0.1, 1.5*0.2, 1*0.3) = (11/6) * 0.3
        assert merge_hommel([0.1, 0.2, 0.3]).raw == pytest.approx(0.55)
        # K=2 coefficient is 1.5
        assert merge_hommel([0.2, 0.3]).raw == pytest.approx(1.5 * min(0.4, 0.3))

    def test_scaled_average_default_is_twice_the_mean(self):
        assert merge_scaled_average([0.1, 0.3]).raw == pytest.approx(0.4)
        assert merge_scaled_average([0.3, 0.3, 0.3]).raw == pytest.approx(0.6)

    def test_scaled_average_explicit_alpha(self):
        assert merge_scaled_average([0.1, 0.3], alpha=0.9).raw == pytest.approx(0.36)
        assert merge_scaled_average([0.1, 0.3], alpha=1.0).raw == pytest.approx(0.4)

    def test_average_beats_bonferroni_only_at_k2(self):
        # identical inputs: 2p vs Kp
        p = 0.2
        for k in (3, 4, 5):
            avg = merge_scaled_average([p] * k).raw
            bonf = merge_bonferroni([p] * k).raw
            assert avg == pytest.approx(2 * p)
            assert bonf == pytest.approx(k * p)
            assert avg < bonf

    def test_harmonic_numbers(self):
        assert harmonic_number(1) == 1.0
        assert harmonic_number(4) == pytest.approx(25 / 12)


class TestRuleDispatch:
    def test_apply_rule_matches_functions(self):
        p = [0.15, 0.45, 0.75]
        assert apply_rule(Bonferroni(), p) == merge_bonferroni(p)
        assert apply_rule(Ruger(2), p) == merge_ruger(p, 2)
        assert apply_rule(Hommel(), p) == merge_hommel(p)
        assert apply_rule(ScaledAverage(), p) == merge_scaled_average(p)
        assert apply_rule(ScaledAverage(0.9), p) == merge_scaled_average(p, 0.9)

    @given(pvec)
    def test_ruger_1_is_bonferroni(self, values):
        assert merge_ruger(values, 1).raw == merge_bonferroni(values).raw

    @given(pvec)
    def test_clipped_is_min_of_raw_and_one(self, values):
        for rule in ALL_RULES:
            m = apply_rule(rule, values)
            assert m.clipped == min(m.raw, 1.0)
            assert m.raw >= 0.0

    @given(pvec, st.randoms(use_true_random=False))
    def test_permutation_invariance(self, values, rnd):
        shuffled = list(values)
        rnd.shuffle(shuffled)
        for rule in ALL_RULES:
            assert apply_rule(rule, shuffled).raw == pytest.approx(
                apply_rule(rule, values).raw, abs=1e-12
            )

    @given(pvec, st.data())
    def test_monotone_in_each_coordinate(self, values, data):
        bumped = list(values)
        i = data.draw(st.integers(0, len(values) - 1))
        bumped[i] = data.draw(st.floats(values[i], 1.0, allow_nan=False))
        for rule in ALL_RULES:
            assert apply_rule(rule, bumped).raw >= apply_rule(rule, values).raw - 1e-12


class TestBatch:
    @given(
        st.lists(
            st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=3, max_size=3),
            min_size=1,
            max_size=8,
        )
    )
    @settings(max_examples=50)
    def test_batch_matches_scalar_route(self, rows):
        pts = np.array(rows)
        for rule in ALL_RULES:
            batch = raw_batch(rule, pts)
            scalar = [apply_rule(rule, row).raw for row in rows]
            np.testing.assert_allclose(batch, scalar, rtol=0, atol=1e-12)

    def test_batch_shape(self):
        out = raw_batch(Bonferroni(), np.array([[0.1, 0.2], [0.3, 0.4]]))
        np.testing.assert_allclose(out, [0.2, 0.6])


class TestDiscreteDistribution:
    def test_rejects_bad_masses(self):
        with pytest.raises(ValueError):
            DiscreteDistribution(((0.2, 0.5), (0.6, 0.6)))
        with pytest.raises(ValueError):
            DiscreteDistribution(((0.2, -0.1), (0.6, 1.1)))
        with pytest.raises(ValueError):
            DiscreteDistribution(((0.6, 0.5), (0.2, 0.5)))  # unsorted

    def test_point_probabilities(self):
        d = DiscreteDistribution(((0.1, 0.25), (0.5, 0.5), (0.9, 0.25)))
        assert d.prob_below(0.5) == pytest.approx(0.25)
        assert d.prob_below(0.05) == 0.0
        assert d.prob_at(0.5) == pytest.approx(0.5)
        assert d.prob_at(0.3) == 0.0

    def test_sampling_frequencies(self):
        d = DiscreteDistribution(((0.2, 0.3), (0.8, 0.7)))
        draws = d.sample(np.random.default_rng(11), 20_000)
        frac = float((draws == 0.2).mean())
        assert abs(frac - 0.3) < 3 * math.sqrt(0.3 * 0.7 / 20_000)

    def test_pit_endpoints(self):
        d = DiscreteDistribution(((0.25, 0.5), (0.75, 0.5)))
        assert randomized_pit(d, 0.25, 0.0) == 0.0
        assert randomized_pit(d, 0.25, 1.0) == pytest.approx(0.5)
        assert randomized_pit(d, 0.75, 1.0) == pytest.approx(1.0)

    def test_pit_validates(self):
        d = DiscreteDistribution(((0.25, 1.0),))
        with pytest.raises(ValueError):
            randomized_pit(d, 0.3, 0.5)
        with pytest.raises(ValueError):
            randomized_pit(d, 0.25, 1.5)

    @given(st.floats(0.0, 1.0, allow_nan=False))
    def test_pit_is_uniform_for_two_point_law(self, theta):
        # P(X < .25)=0, P(X = .25)=.5: pit sweeps [0, .5] linearly in theta
        d = DiscreteDistribution(((0.25, 0.5), (0.75, 0.5)))
        assert randomized_pit(d, 0.25, theta) == pytest.approx(0.5 * theta)
