"""Data model, validation and one-sample estimators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ciftest import (
    Grid,
    Jitter,
    Reject,
    Status,
    StepFunction,
    Subject,
    aalen_johansen,
    event_grid,
    kaplan_meier,
    risk_and_counting,
    validate_sample,
)
from ciftest.errors import (
    EmptyRiskSet,
    EmptySample,
    NonPositiveDuration,
    TiesPresent,
)
from ciftest.survival import risk_at

from conftest import random_sample, uncensored_sample

C1, C2, CENS = Status.CAUSE1, Status.CAUSE2, Status.CENSORED


class TestStepFunction:
    def test_right_continuous_evaluation(self):
        f = StepFunction([1.0, 2.0], [10.0, 20.0], initial=5.0)
        assert_allclose(f([0.0, 0.99, 1.0, 1.5, 2.0, 3.0]), [5, 5, 10, 10, 20, 20])

    def test_left_limits(self):
        f = StepFunction([1.0, 2.0], [10.0, 20.0], initial=5.0)
        assert f.value_left(1.0) == 5.0
        assert f.value_left(2.0) == 10.0
        assert f.value_left(1.5) == 10.0

    def test_left_side_carrier(self):
        # value attached to a jump holds strictly after it
        f = StepFunction([0.0, 1.0], [1.0, 0.0], initial=0.0, side="left")
        assert_allclose(f([0.0, 0.5, 1.0, 1.5]), [0, 1, 1, 0])

    def test_rejects_unsorted_jumps(self):
        with pytest.raises(ValueError):
            StepFunction([2.0, 1.0], [1.0, 2.0])

    def test_empty_function_is_initial(self):
        f = StepFunction([], [], initial=1.0)
        assert f(3.0) == 1.0
        assert f.value_left(3.0) == 1.0


class TestValidateSample:
    def test_no_ties_reject_policy_unchanged(self):
        s = validate_sample([Subject(0, 1, C1), Subject(0, 2, CENS)], Reject())
        assert s.n == 2
        assert_allclose(s.exit, [1.0, 2.0])

    def test_ties_reject_policy_errors(self):
        with pytest.raises(TiesPresent):
            validate_sample([Subject(0, 1, C1), Subject(0, 1, C2)], Reject())

    def test_jitter_breaks_ties_deterministically(self):
        raw = [Subject(0, 1, C1), Subject(0, 1, C2), Subject(0, 2, CENS)]
        a = validate_sample(raw, Jitter(seed=42))
        b = validate_sample(raw, Jitter(seed=42))
        assert len(np.unique(a.exit)) == 3
        # magnitude: sd is 1e-6 x range, so jittered exits stay within 1 +- 1e-4
        assert np.all(np.abs(a.exit[:2] - 1.0) < 1e-4)
        assert_allclose(a.exit, b.exit)  # bit-reproducible
        c = validate_sample(raw, Jitter(seed=43))
        assert not np.array_equal(a.exit, c.exit)

    def test_jitter_preserves_order_and_statuses(self):
        raw = [Subject(0, 1, C2), Subject(0, 1, C1)]
        s = validate_sample(raw, Jitter(seed=0))
        assert [int(x) for x in s.status] == [2, 1]

    def test_empty_sample(self):
        with pytest.raises(EmptySample):
            validate_sample([])

    @pytest.mark.parametrize(
        "subject",
        [
            Subject(1.0, 1.0, C1),
            Subject(2.0, 1.0, C1),
            Subject(-0.5, 1.0, C1),
            Subject(0.0, np.inf, C1),
            Subject(np.nan, 1.0, C1),
        ],
    )
    def test_invalid_times(self, subject):
        with pytest.raises(NonPositiveDuration):
            validate_sample([subject])


class TestRiskAndCounting:
    def test_single_subject(self):
        s = validate_sample([Subject(0, 1, C1)])
        y, n1, n2 = risk_and_counting(s)
        assert_allclose(y([0.0, 0.5, 1.0, 1.5]), [0, 1, 1, 0])
        assert_allclose(n1([0.5, 1.0, 2.0]), [0, 1, 1])
        assert_allclose(n2([0.5, 1.0, 2.0]), [0, 0, 0])

    def test_three_subjects_against_brute_force(self):
        s = validate_sample(
            [Subject(0, 1, C1), Subject(0, 2, CENS), Subject(0, 3, C2)]
        )
        y, n1, n2 = risk_and_counting(s)
        assert_allclose([y(1.0), y(2.0), y(3.0)], [3, 2, 1])
        assert n1(3.0) == 1 and n2(3.0) == 1
        # brute force over a fine time range
        for t in np.linspace(0.01, 4, 57):
            expected = sum(1 for sub in s.subjects if sub.entry < t <= sub.exit)
            assert y(t) == expected

    def test_left_truncated_subject(self):
        s = validate_sample([Subject(1.5, 2.0, C1)])
        y, _, _ = risk_and_counting(s)
        assert y(1.0) == 0.0
        assert y(2.0) == 1.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        s = random_sample(rng, 30)
        perm = rng.permutation(30)
        s_perm = validate_sample([s.subjects[i] for i in perm], Reject())
        y1, n11, n21 = risk_and_counting(s)
        y2, n12, n22 = risk_and_counting(s_perm)
        t = np.linspace(0, 4, 101)
        assert_allclose(y1(t), y2(t))
        assert_allclose(n11(t), n12(t))
        assert_allclose(n21(t), n22(t))


class TestKaplanMeier:
    def test_no_events_survival_is_one(self):
        s = validate_sample([Subject(0, 1, CENS), Subject(0, 2, CENS)])
        km = kaplan_meier(s)
        assert_allclose(km([0.5, 1.5, 5.0]), 1.0)

    def test_hand_product_limit(self):
        s = validate_sample(
            [Subject(0, 1, C1), Subject(0, 2, CENS), Subject(0, 3, C2)]
        )
        km = kaplan_meier(s)
        assert_allclose([km(1.0), km(2.0), km(3.0)], [2 / 3, 2 / 3, 0.0])

    def test_equals_empirical_survival_without_censoring(self):
        rng = np.random.default_rng(11)
        s = uncensored_sample(rng, 60)
        km = kaplan_meier(s)
        for t in s.exit:
            empirical = 1.0 - np.mean(s.exit <= t)
            assert abs(km(t) - empirical) < 1e-12

    def test_monotone_and_bounded(self):
        rng = np.random.default_rng(12)
        s = random_sample(rng, 50)
        km = kaplan_meier(s)
        assert km(0.0) == 1.0
        values = km(np.sort(s.exit))
        assert np.all(np.diff(values) <= 1e-15)
        assert np.all((values >= 0) & (values <= 1))


class TestAalenJohansen:
    def test_single_subject_indicator(self):
        s = validate_sample([Subject(0, 1, C1)])
        f1 = aalen_johansen(s, 1)
        assert_allclose(f1([0.5, 1.0, 2.0]), [0, 1, 1])

    def test_hand_oracle(self):
        s = validate_sample(
            [Subject(0, 1, C1), Subject(0, 2, CENS), Subject(0, 3, C2)]
        )
        assert_allclose(aalen_johansen(s, 1)(3.0), 1 / 3)
        assert_allclose(aalen_johansen(s, 2)(3.0), 2 / 3)

    def test_no_cause1_events(self):
        s = validate_sample([Subject(0, 1, C2), Subject(0, 2, CENS)])
        f1 = aalen_johansen(s, 1)
        assert_allclose(f1([1.0, 5.0]), 0.0)

    def test_rejects_unknown_cause(self):
        s = validate_sample([Subject(0, 1, C1)])
        with pytest.raises(ValueError):
            aalen_johansen(s, 3)

    @pytest.mark.parametrize("seed", range(6))
    def test_product_limit_identity(self, seed):
        rng = np.random.default_rng(seed)
        s = random_sample(rng, 40)
        km = kaplan_meier(s)
        f1 = aalen_johansen(s, 1)
        f2 = aalen_johansen(s, 2)
        t = np.concatenate([s.exit, np.linspace(0, 4, 33)])
        assert_allclose(f1(t) + f2(t), 1.0 - km(t), atol=1e-12)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=25, deadline=None)
    def test_product_limit_identity_property(self, seed):
        rng = np.random.default_rng(seed)
        s = random_sample(rng, int(rng.integers(2, 25)))
        t = np.sort(s.exit)
        total = aalen_johansen(s, 1)(t) + aalen_johansen(s, 2)(t)
        assert_allclose(total, 1.0 - kaplan_meier(s)(t), atol=1e-12)


class TestEventGrid:
    def test_union_of_events_and_endpoints(self):
        s1 = validate_sample([Subject(0, 0.5, C1), Subject(0, 1.2, C2), Subject(0, 2.5, CENS)])
        s2 = validate_sample([Subject(0, 0.8, C1), Subject(0, 2.1, CENS)])
        grid = event_grid(s1, s2, (0.0, 2.0))
        assert_allclose(grid.points, [0.0, 0.5, 0.8, 1.2, 2.0])

    def test_no_events_in_interval(self):
        s1 = validate_sample([Subject(0, 5.0, C1)])
        s2 = validate_sample([Subject(0, 6.0, C1)])
        grid = event_grid(s1, s2, (0.0, 2.0))
        assert_allclose(grid.points, [0.0, 2.0])

    def test_cross_sample_duplicate_appears_once(self):
        s1 = validate_sample([Subject(0, 1.0, C1), Subject(0, 3.0, CENS)])
        s2 = validate_sample([Subject(0, 1.0, C2), Subject(0, 3.0, CENS)])
        grid = event_grid(s1, s2, (0.0, 2.0))
        assert_allclose(grid.points, [0.0, 1.0, 2.0])

    def test_censoring_times_are_not_grid_points(self):
        s1 = validate_sample([Subject(0, 0.7, CENS), Subject(0, 1.0, C1), Subject(0, 2.5, CENS)])
        s2 = validate_sample([Subject(0, 1.5, C1), Subject(0, 2.2, CENS)])
        grid = event_grid(s1, s2, (0.0, 2.0))
        assert 0.7 not in grid.points
        assert_allclose(grid.points, [0.0, 1.0, 1.5, 2.0])

    def test_empty_risk_set_detected(self):
        s1 = validate_sample([Subject(0, 0.5, C1)])
        s2 = validate_sample([Subject(0, 3.0, C1)])
        with pytest.raises(EmptyRiskSet):
            event_grid(s1, s2, (0.0, 2.0))
        grid = event_grid(s1, s2, (0.0, 2.0), check_risk_set=False)
        assert grid.interval == (0.0, 2.0)

    def test_invalid_interval(self):
        s = validate_sample([Subject(0, 1.0, C1)])
        with pytest.raises(ValueError):
            event_grid(s, s, (2.0, 2.0))


class TestGridType:
    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            Grid([1.0])

    def test_strictly_increasing(self):
        with pytest.raises(ValueError):
            Grid([0.0, 0.0, 1.0])

    def test_cell_widths(self):
        assert_allclose(Grid([0.0, 1.0, 3.0]).cell_widths, [1.0, 2.0])


def test_risk_at_matches_brute_force():
    rng = np.random.default_rng(3)
    s = random_sample(rng, 35)
    times = np.linspace(0, 4, 41)
    expected = [
        sum(1 for sub in s.subjects if sub.entry < t <= sub.exit) for t in times
    ]
    assert_allclose(risk_at(s, times), expected)
