import numpy as np
import oracles
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hitenrich import (
    FractionGrid,
    ScoredDataset,
    ValidationError,
    empirical_cdf,
    enrichment_factor_curve,
    hit_enrichment_curve,
    recall_at,
    reference_curves,
    threshold_at,
)
from hitenrich import curves


def test_ecdf_values():
    assert empirical_cdf([1, 2, 3])(2) == pytest.approx(2 / 3)
    f = empirical_cdf([5, 5, 5])
    assert f(5) == 1.0 and f(4.9) == 0.0
    assert empirical_cdf([0.1, 0.4, 0.4, 0.9])(0.4) == 0.75


def test_ecdf_empty():
    with pytest.raises(ValidationError):
        empirical_cdf([])


def test_threshold_simple():
    assert threshold_at([1, 2, 3, 4], 0.25) == 3


def test_threshold_with_ties_matches_enumeration():
    scores = [1, 2, 2, 4]
    t = threshold_at(scores, 0.5)
    assert t == oracles.threshold(scores, 0.5) == 2
    assert [s for s in scores if s > t] == [4]


def test_threshold_all_tested():
    assert threshold_at([1, 2, 3, 4], 1.0) == -np.inf


@pytest.mark.parametrize("r", [0.0, -0.1, 1.5])
def test_threshold_domain(r):
    with pytest.raises(ValidationError):
        threshold_at([1, 2, 3], r)


@given(st.lists(st.integers(0, 6), min_size=1, max_size=25), st.integers(1, 25))
def test_threshold_matches_bruteforce(values, k):
    k = min(k, len(values))
    r = k / len(values)
    ref = oracles.threshold(values, r)
    t = threshold_at(values, r)
    assert (t == -np.inf) if ref is None else (t == ref)


def test_perfect_ranking():
    x = np.array([1] * 5 + [0] * 15)
    ds = ScoredDataset(x, {"s": -np.arange(20.0)})
    assert recall_at(ds, "s", 0.25) == 1.0
    grid = FractionGrid.from_counts([2, 5, 10, 20], 20)
    ef = enrichment_factor_curve(ds, "s", grid).values
    np.testing.assert_allclose(ef, np.minimum(1 / 0.25, 1 / grid.fractions))


def test_curve_at_one_and_monotone():
    rng = np.random.default_rng(0)
    x = (rng.random(200) < 0.1).astype(int)
    x[:2] = [1, 0]
    ds = ScoredDataset(x, {"s": rng.standard_normal(200) + x})
    grid = FractionGrid.log_spaced(200, 30)
    v = hit_enrichment_curve(ds, "s", grid).values
    assert v[-1] == 1.0
    assert np.all(np.diff(v) >= 0)
    ef = enrichment_factor_curve(ds, "s", grid).values
    assert np.array_equal(ef, v / grid.fractions)


def test_random_ranking_recall_is_r():
    # E[recall] = r for scores independent of activity; 10^4 random permutations
    rng = np.random.default_rng(1)
    n, reps = 100, 10_000
    x = np.zeros(n, dtype=int)
    x[:20] = 1
    vals = np.empty(reps)
    for i in range(reps):
        s = rng.permutation(n).astype(float)
        vals[i] = x[s >= n - 10].sum() / 20
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - 0.1) < 3 * se
    ds = ScoredDataset(x, {"s": s})
    assert recall_at(ds, "s", 0.1) == vals[-1]


def test_reference_curves():
    grid = FractionGrid.from_fractions([0.05, 0.1, 0.5], 1000)
    refs = reference_curves(0.1, grid)
    np.testing.assert_allclose(refs["ideal"].values, [0.5, 1.0, 1.0])
    np.testing.assert_allclose(refs["random"].values, [0.05, 0.1, 0.5])
    g = FractionGrid.from_fractions([0.0265], 10000)
    assert reference_curves(0.0265, g)["ideal"].values[0] == pytest.approx(1.0)


def test_grid_snapping_and_validation():
    g = FractionGrid.from_fractions([0.001, 0.01, 0.1], 3212)
    assert g.counts == (3, 32, 321)
    with pytest.raises(ValidationError):
        FractionGrid.from_fractions([0.001, 0.0011], 1000)
    with pytest.raises(ValidationError):
        FractionGrid.from_counts([0], 10)
    with pytest.raises(ValidationError):
        FractionGrid.from_counts([5, 11], 10)


@given(st.lists(st.integers(-100, 100), min_size=3, max_size=40), st.data())
def test_recall_invariant_under_monotone_transform(scores, data):
    n = len(scores)
    x = np.array([1] + [0] + data.draw(st.lists(st.integers(0, 1), min_size=n - 2, max_size=n - 2)))
    s = np.array(scores, dtype=float)
    k = data.draw(st.integers(1, n))
    a = ScoredDataset(x, {"s": s})
    b = ScoredDataset(x, {"s": np.exp(s / 50.0) * 3 + 1})
    assert recall_at(a, "s", k / n) == recall_at(b, "s", k / n)


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=40, unique=True), st.data())
def test_tie_free_tests_exactly_k(scores, data):
    k = data.draw(st.integers(1, len(scores)))
    assert curves.tested_matrix(np.array(scores), [k]).sum() == k
