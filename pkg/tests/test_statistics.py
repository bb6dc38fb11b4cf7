"""Difference process and scalar statistics."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from ciftest import (
    ConstantWeight,
    Grid,
    StatKind,
    Status,
    StepFunction,
    Subject,
    cvm_stat,
    event_grid,
    ks_stat,
    pepe_stat,
    studentize_cvm,
    validate_sample,
    w_process,
)
from ciftest.errors import DegenerateVariance
from ciftest.statistics import DiffProcess
from ciftest.weights import AndersonDarlingWeight

from conftest import random_sample

C1, C2, CENS = Status.CAUSE1, Status.CAUSE2, Status.CENSORED


def diff_from_values(points, values, n1=1, n2=1):
    grid = Grid(points)
    return DiffProcess(StepFunction(np.asarray(points, float), np.asarray(values, float)), grid, n1, n2)


class TestWProcess:
    def test_identical_samples_zero(self):
        s = validate_sample([Subject(0, 1, C1), Subject(0, 2, C2), Subject(0, 3, CENS)])
        grid = event_grid(s, s, (0.0, 2.5))
        d = w_process(s, s, grid)
        assert_allclose(d.values, 0.0)

    def test_swap_negates(self):
        rng = np.random.default_rng(0)
        s1 = random_sample(rng, 20, label="a")
        s2 = random_sample(rng, 30, label="b")
        grid = event_grid(s1, s2, (0.0, 2.0), check_risk_set=False)
        d12 = w_process(s1, s2, grid)
        d21 = w_process(s2, s1, grid)
        assert_allclose(d12.values, -d21.values)

    def test_single_subject_pair_oracle(self):
        s1 = validate_sample([Subject(0, 1, C1)])
        s2 = validate_sample([Subject(0, 2, C1)])
        grid = event_grid(s1, s2, (0.0, 3.0), check_risk_set=False)
        d = w_process(s1, s2, grid)
        scale = np.sqrt(0.5)
        # W = sqrt(1/2) (1{t>=1} - 1{t>=2}) at grid {0, 1, 2, 3}
        assert_allclose(d.values, [0.0, scale, 0.0, 0.0])


class TestKsStat:
    def test_zero_process(self):
        d = diff_from_values([0.0, 1.0], [0.0, 0.0])
        assert ks_stat(d).value == 0.0

    def test_constant_process(self):
        d = diff_from_values([0.0, 2.0], [-1.5, -1.5])
        assert ks_stat(d).value == 1.5

    def test_two_cell_max(self):
        d = diff_from_values([0.0, 1.0, 2.0], [1.0, -2.0, -2.0])
        assert ks_stat(d).value == 2.0


class TestCvmStat:
    def test_zero(self):
        d = diff_from_values([0.0, 2.0], [0.0, 0.0])
        assert cvm_stat(d).value == 0.0

    def test_constant(self):
        d = diff_from_values([0.0, 2.0], [3.0, 3.0])
        assert_allclose(cvm_stat(d).value, 9.0 * 2.0)

    def test_two_cells(self):
        d = diff_from_values([0.0, 1.0, 2.0], [1.0, 2.0, 2.0])
        assert_allclose(cvm_stat(d).value, 1.0 + 4.0)

    def test_anderson_darling_cells_match_quadrature(self):
        d = diff_from_values([0.0, 0.6, 2.0], [1.0, -0.5, -0.5])
        ad = AndersonDarlingWeight()
        got = cvm_stat(d, ad).value
        w = lambda u: 1.0 / np.sqrt((2.0 - u) * u)
        want = integrate.quad(w, 0, 0.6, points=[0])[0] + 0.25 * integrate.quad(
            w, 0.6, 2.0, points=[2.0]
        )[0]
        assert_allclose(got, want, rtol=1e-9)


class TestPepeStat:
    def test_zero(self):
        d = diff_from_values([0.0, 2.0], [0.0, 0.0])
        assert pepe_stat(d).value == 0.0

    def test_crossing_cancellation(self):
        d = diff_from_values([0.0, 1.0, 2.0], [1.0, -1.0, -1.0])
        assert pepe_stat(d).value == 0.0

    def test_constant(self):
        d = diff_from_values([0.0, 2.0], [0.7, 0.7])
        assert_allclose(pepe_stat(d).value, 1.4)


class TestStudentize:
    def test_centering(self):
        assert studentize_cvm(2.0, 2.0, 4.0).value == 0.0

    def test_one_sigma(self):
        assert_allclose(studentize_cvm(4.0, 2.0, 4.0).value, 1.0)

    def test_degenerate_variance(self):
        with pytest.raises(DegenerateVariance):
            studentize_cvm(1.0, 1.0, 0.0)


class TestInvariants:
    def random_diff(self, rng, m=8):
        pts = np.unique(np.r_[0.0, np.sort(rng.uniform(0, 3, m - 1))])
        return diff_from_values(pts, rng.normal(size=len(pts)))

    def test_cvm_bounded_by_ks(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            d = self.random_diff(rng)
            t1, t2 = d.interval
            assert cvm_stat(d).value <= (t2 - t1) * ks_stat(d).value ** 2 + 1e-12

    def test_pepe_bounded_by_ks(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            d = self.random_diff(rng)
            t1, t2 = d.interval
            assert abs(pepe_stat(d).value) <= ks_stat(d).value * (t2 - t1) + 1e-12

    def test_sample_swap_symmetry(self):
        rng = np.random.default_rng(11)
        s1 = random_sample(rng, 25, label="a")
        s2 = random_sample(rng, 20, label="b")
        grid = event_grid(s1, s2, (0.0, 2.0), check_risk_set=False)
        d12 = w_process(s1, s2, grid)
        d21 = w_process(s2, s1, grid)
        assert_allclose(ks_stat(d12).value, ks_stat(d21).value)
        assert_allclose(cvm_stat(d12).value, cvm_stat(d21).value)
        assert_allclose(pepe_stat(d12).value, -pepe_stat(d21).value)

    def test_late_censored_subject_acts_only_through_risk_set(self):
        # adding a subject censored after t2 changes the statistics exactly
        # as an independent recomputation with the enlarged risk set predicts
        base = [Subject(0, 0.5, C1), Subject(0, 1.0, C2), Subject(0, 1.8, C1)]
        extra = Subject(0.0, 5.0, CENS)
        t1, t2 = 0.0, 2.0

        def oracle_f1(subjects, t):
            events = sorted((s.exit, int(s.status)) for s in subjects if s.status != CENS)
            def y(u):
                return sum(1 for s in subjects if s.entry < u <= s.exit)
            total, km = 0.0, 1.0
            for u, c in events:
                if u > t:
                    break
                if c == 1:
                    total += km / y(u)
                km *= 1.0 - 1.0 / y(u)
            return total

        other = validate_sample([Subject(0, 0.9, C1), Subject(0, 3.0, CENS)], label="o")
        for subjects in ([*base], [*base, extra]):
            s = validate_sample(subjects, label="s")
            grid = event_grid(s, other, (t1, t2), check_risk_set=False)
            d = w_process(s, other, grid)
            scale = np.sqrt(s.n * other.n / (s.n + other.n))
            expected = [
                scale * (oracle_f1(subjects, g) - oracle_f1(list(other.subjects), g))
                for g in grid.points
            ]
            assert_allclose(d.values, expected, atol=1e-12)

        # and the change is real: statistics do move when the subject is added
        s_without = validate_sample(base, label="s")
        s_with = validate_sample([*base, extra], label="s")
        grid = event_grid(s_without, other, (t1, t2), check_risk_set=False)
        v1 = cvm_stat(w_process(s_without, other, grid)).value
        grid2 = event_grid(s_with, other, (t1, t2), check_risk_set=False)
        v2 = cvm_stat(w_process(s_with, other, grid2)).value
        assert v1 != v2


def test_statistic_kinds_recorded():
    d = diff_from_values([0.0, 1.0], [1.0, 1.0])
    assert ks_stat(d).kind is StatKind.KS
    assert cvm_stat(d).kind is StatKind.CVM
    assert pepe_stat(d).kind is StatKind.PEPE
    assert studentize_cvm(1.0, 0.5, 1.0).kind is StatKind.CVM_STUD
