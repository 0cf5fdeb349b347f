import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lactate_lab import (
    DomainError,
    ResidualRecord,
    bca_ci,
    evaluate_acceptance,
    population_report,
    system_accuracy,
)
from lactate_lab.stats import format_mean_ci, residual_record
from oracles import direct_bca

@pytest.mark.parametrize("fixture", range(20))
def test_bca_matches_direct_formula(fixture):
    rng = np.random.default_rng(1000 + fixture)
    n = int(rng.integers(8, 60))
    x = (rng.gamma(2.0, 3.0, n) if fixture % 2 else rng.normal(59.6, 3.0, n)).tolist()
    conf = (0.9, 0.95, 0.99)[fixture % 3]
    got = bca_ci(x, 2000, conf, seed=fixture)
    want = direct_bca(x, 2000, conf, fixture)
    assert got == pytest.approx(want, abs=1e-9)


def test_degenerate_sample_zero_width():
    with pytest.warns(UserWarning, match="jackknife"):
        lo, hi = bca_ci([5.0] * 10, 500, seed=0)
    assert lo == hi == 5.0


def test_percentile_method():
    x = np.random.default_rng(0).normal(0, 1, 30)
    lo, hi = bca_ci(x, 1000, seed=4, method="percentile")
    boot = np.random.default_rng(4).integers(0, 30, (1000, 30))
    means = x[boot].mean(axis=1)
    assert (lo, hi) == pytest.approx(tuple(np.quantile(means, [0.025, 0.975])), abs=1e-12)


@pytest.mark.parametrize(
    "kw", [{"samples": [1.0, 2.0]}, {"samples": [1.0, math.nan, 2.0]}, {"confidence": 1.0}, {"n_resamples": 0}, {"method": "basic"}]
)
def test_bca_domain(kw):
    args = {"samples": [1.0, 2.0, 3.0, 4.0], "n_resamples": 100, "confidence": 0.95, "seed": 0}
    args.update(kw)
    with pytest.raises(DomainError):
        bca_ci(**args)


def test_nested_intervals():
    x = np.random.default_rng(5).normal(60, 3, 40)
    lo90, hi90 = bca_ci(x, 4000, 0.90, seed=1)
    lo99, hi99 = bca_ci(x, 4000, 0.99, seed=1)
    assert lo99 <= lo90 < hi90 <= hi99


@settings(max_examples=25, deadline=None)
@given(st.floats(-100, 100))
def test_translation_equivariance(shift):
    x = np.random.default_rng(8).gamma(2, 2, 25)
    lo, hi = bca_ci(x, 500, seed=3)
    lo2, hi2 = bca_ci(x + shift, 500, seed=3)
    assert lo2 == pytest.approx(lo + shift, abs=1e-9)
    assert hi2 == pytest.approx(hi + shift, abs=1e-9)


def test_contains_mean_and_skew_direction():
    rng = np.random.default_rng(12)
    sym = rng.normal(0, 1, 200)
    skew = rng.exponential(1.0, 200)
    for x in (sym, skew):
        lo, hi = bca_ci(x, 4000, seed=0)
        assert lo < x.mean() < hi
    lo, hi = bca_ci(skew, 4000, seed=0)
    # right-skewed data: the upper arm is the longer one
    assert hi - skew.mean() > skew.mean() - lo


def test_format_mean_ci():
    assert format_mean_ci(59.6, (58.3, 60.7)) == "59.6% (58.3 - 60.7)"
    assert format_mean_ci(59.64, (58.25, 60.74)) == "59.6% (58.2 - 60.7)"


def _rec(ok):
    return ResidualRecord("x", 14.0, 14.0, 0.0, 10.0, ok)


def test_system_accuracy():
    assert system_accuracy([_rec(True)] * 7 + [_rec(False)] * 3) == 70.0
    with pytest.raises(DomainError):
        system_accuracy([])


@given(st.permutations([True] * 6 + [False] * 4))
def test_accuracy_permutation_invariant(flags):
    assert system_accuracy([_rec(f) for f in flags]) == 60.0


def test_residual_record_sign():
    r = residual_record("a", 12.0, 60.0 / (5.0 - 10 / 60))
    assert r.residual == pytest.approx(10.0)
    assert r.acceptable_limit == 15.0 and r.within
    assert residual_record("a", 60.0 / (5.0 - 10 / 60), 12.0).residual == pytest.approx(-10.0)


class TestAcceptance:
    def test_relative(self):
        v = evaluate_acceptance(87.0, 98.8)
        assert v.relative_accuracy == pytest.approx(88.06, abs=0.01)
        assert v.gap == pytest.approx(11.8)
        assert not v.passed and not v.passed_absolute

    def test_pass(self):
        v = evaluate_acceptance(96.0, 100.0)
        assert v.passed and v.passed_absolute and v.gap == 4.0

    def test_relative_only(self):
        v = evaluate_acceptance(90.0, 92.0)
        assert v.passed and not v.passed_absolute

    def test_equal_passes(self):
        v = evaluate_acceptance(91.0, 91.0)
        assert v.gap == 0.0 and v.passed

    def test_zero_ceiling(self):
        assert evaluate_acceptance(0.0, 0.0).relative_accuracy == 100.0

    @pytest.mark.parametrize("args", [(101.0, 90.0), (50.0, -1.0), (50.0, 90.0, 120.0)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            evaluate_acceptance(*args)


class TestPopulationReport:
    def test_basic(self, population):
        rep = population_report(population, n_resamples=2000, seed=0)
        assert rep.n_included == 50 and rep.n_excluded == 0
        assert rep.ceiling_accuracy is None and rep.total_accuracy is None
        assert rep.verdict.ceiling_accuracy == 100.0
        assert rep.ci[0] < rep.mean_transformed_lt < rep.ci[1]
        assert len(rep.residuals) == 50
        assert rep.system_accuracy == system_accuracy(rep.residuals)

    def test_exclusion(self, population):
        ids = [population[0].athlete_id, population[3].athlete_id]
        rep = population_report(population, exclude=ids, n_resamples=500)
        assert rep.n_included == 48
        assert rep.excluded == [(i, "manual") for i in ids]
        assert not set(ids) & set(rep.transformed_lts)

    def test_given_ceiling(self, population):
        rep = population_report(population, n_resamples=500, ceiling=90.0)
        assert rep.total_accuracy == pytest.approx(90.0 - rep.system_accuracy)
        assert rep.verdict.relative_accuracy == pytest.approx(100 * rep.system_accuracy / 90.0)

    def test_too_few(self, population):
        with pytest.raises(DomainError):
            population_report(population[:2], n_resamples=100)

    def test_fraction_changes_accuracy(self, population):
        a = population_report(population, n_resamples=200).system_accuracy
        b = population_report(population, fraction=0.9, n_resamples=200).system_accuracy
        assert b < a


@pytest.mark.parametrize("n", [3, 4, 5])
def test_bca_permutation_ties(n):
    # tiny samples: many resamples are permutations and must tie the mean exactly
    x = np.random.default_rng(n).normal(59.6, 2.0, n).tolist()
    assert bca_ci(x, 3000, seed=n) == pytest.approx(direct_bca(x, 3000, 0.95, n), abs=1e-9)


def test_bca_n75_default_resamples():
    x = np.random.default_rng(75).normal(59.6, 3.2, 75).tolist()
    assert bca_ci(x, seed=2) == pytest.approx(direct_bca(x, 10_000, 0.95, 2), abs=1e-9)
