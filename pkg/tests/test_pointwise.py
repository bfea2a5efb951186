import math

import numpy as np
import oracles
import pytest
from conftest import random_dataset
from hypothesis import given
from hypothesis import strategies as st
from statsmodels.stats.multitest import multipletests

from hitenrich import (
    MethodSpec,
    NumericalDegeneracyError,
    PairedCounts,
    ScoredDataset,
    ValidationError,
    bh_adjust,
    compare,
    cov_binomial,
    cov_emproc,
    var_binomial,
    var_jz,
)
from hitenrich.pointwise import compare_counts

METHODS = ["emproc", "mcnemar", "indjz", "corrbinom"]

# EmProc on the 40-ligand toy set, frozen from tests/oracles.py (factored formulas, loops).
TOY40_EMPROC = {
    2: (0.1, 0.06669109002369689, 0.13375675549300933),
    4: (0.2, 0.1311916207315888, 0.12738695024771163),
    10: (0.09999999999999998, 0.145759668686549, 0.49267474691360674),
    14: (0.30000000000000004, 0.12828298413895797, 0.019357189387455034),
    20: (0.09999999999999998, 0.0834617848855368, 0.2308574026319612),
}

# PPARg benchmark, three scoring methods at N = 3, 32, 321 tested: rounded raw p-values
# (pairs x fractions) and their BH-adjusted values.
PPARG_EMPROC_RAW = [1.000, 0.410, 0.409, 0.6200, 0.0407, 0.0281, 2.07e-02, 1.60e-08, 7.91e-05]
PPARG_EMPROC_ADJ = [1.000, 0.527, 0.527, 0.6970, 0.0733, 0.0632, 6.21e-02, 1.44e-07, 3.56e-04]
PPARG_MCNEMAR_RAW = [1.000, 0.564, 0.564, 0.705, 0.144, 0.131, 2.53e-02, 2.07e-06, 3.86e-04]
PPARG_MCNEMAR_ADJ = [1.000, 0.725, 0.725, 0.794, 0.260, 0.260, 7.60e-02, 1.86e-05, 1.74e-03]


def test_var_binomial_examples():
    assert var_binomial(0.5, 100) == 0.0025
    assert var_binomial(0.0, 10) == 0.0 and var_binomial(1.0, 10) == 0.0
    assert var_binomial(0.2, 300) == pytest.approx(0.16 / 300)
    with pytest.raises(ValidationError):
        var_binomial(0.5, 0)


def test_var_jz_reductions():
    assert var_jz(0.3, 0.0, 0.1, 0.05, 2000) == var_binomial(0.3, 100)
    # Lambda = 1, r = theta = pi = 0.5: bracket 1 - 2 + 0.25 / (0.5 * 0.25) = 1
    assert var_jz(0.5, 1.0, 0.5, 0.5, 1000) == pytest.approx(var_binomial(0.5, 500), rel=1e-14)


def test_cov_binomial_examples():
    assert cov_binomial(0.5, 0.4, 0.2, 100) == 0.0
    assert cov_binomial(0.3, 0.3, 0.3, 50) == pytest.approx(var_binomial(0.3, 50))
    assert cov_binomial(0.6, 0.5, 0.4, 100) == pytest.approx(0.001)


def _counts(q1=30, q2=24, q12=18, n_plus=60, g=0.05, n=1000, r=0.1):
    return PairedCounts(q1, q2, q12, n_plus, g, n, r, r)


def test_cov_emproc_reductions():
    c = _counts()
    assert cov_emproc(c, (0.0, 0.0)) == pytest.approx(cov_binomial(0.5, 0.4, 0.3, 60), rel=1e-14)
    # identical algorithms: theta12 = theta, gamma12 = r  ->  Var_JZ
    same = _counts(q1=30, q2=30, q12=30, g=0.1)
    assert cov_emproc(same, (0.4, 0.4)) == pytest.approx(float(var_jz(0.5, 0.4, 0.1, 0.06, 1000)), rel=1e-13)


def test_cov_emproc_factored_agreement():
    c = _counts()
    ref = oracles.cov_emproc(0.5, 0.4, 0.3, 0.05, 0.3, 0.2, 0.1, 0.1, 1000, 0.06)
    assert cov_emproc(c, (0.3, 0.2)) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("k", sorted(TOY40_EMPROC))
def test_emproc_toy_oracle(toy40, k):
    res = compare(toy40, "a", "b", k / 40)
    diff, se, p = TOY40_EMPROC[k]
    assert res.diff == pytest.approx(diff, abs=1e-15)
    assert res.se == pytest.approx(se, rel=1e-12)
    assert res.p_raw == pytest.approx(p, rel=1e-11)
    lo, hi = res.ci
    assert lo == pytest.approx(diff - 1.959963984540054 * se, rel=1e-12)


def test_oracle_reproduces_frozen_emproc():
    x, s1, s2 = oracles.TOY40_ACTIVITY, oracles.TOY40_S1, oracles.TOY40_S2
    for k, (diff, se, p) in TOY40_EMPROC.items():
        ref = oracles.emproc_compare(x, s1, s2, k / 40)
        assert (ref["diff"], ref["se"], ref["p"]) == pytest.approx((diff, se, p), rel=1e-14)


def test_independence_point_flagged():
    # theta12 = theta1 * theta2 exactly: factored covariance is 0/0, expanded form is finite
    c = _counts(q1=30, q2=20, q12=10, n_plus=60)
    res = compare_counts(c, (0.3, 0.2), MethodSpec("emproc"))
    assert "theta12-equals-product" in res.flags
    assert np.isfinite(res.se) and res.se > 0


def test_mcnemar_spec_rules():
    with pytest.raises(ValidationError):
        MethodSpec("mcnemar", plus=True)
    with pytest.raises(ValidationError):
        MethodSpec.parse("fisher")
    assert MethodSpec.parse("McNemar", pooled=True, plus=True) == MethodSpec("mcnemar")
    assert MethodSpec("emproc", pooled=True, plus=True).label == "EmProc+pooled+plus"


def test_mcnemar_values():
    c = _counts()
    res = compare_counts(c, None, MethodSpec("mcnemar"))
    assert res.z == pytest.approx((30 - 24) / math.sqrt(30 + 24 - 36))
    m = 62
    centre = 6 / m
    half = 1.959963984540054 * math.sqrt((20 - 36 / m) / m**2)
    assert res.ci == pytest.approx((centre - half, centre + half), rel=1e-12)
    assert res.se == pytest.approx(math.sqrt(18 - 36 / 60) / 60)


@pytest.mark.parametrize("method", METHODS)
def test_identical_algorithms_p_one(method):
    ds = random_dataset(np.random.default_rng(2), 300)
    ds = ScoredDataset(ds.activity, {"a": ds.score("s0"), "b": ds.score("s0")})
    for r in (0.01, 0.1, 0.5):
        res = compare(ds, "a", "b", r, MethodSpec(method))
        assert res.diff == 0.0 and res.p_raw == 1.0


def test_zero_se_with_difference_raises():
    c = PairedCounts(5, 0, 0, 5, 0.0, 100, 0.05, 0.05)
    with pytest.raises(NumericalDegeneracyError):
        compare_counts(c, (0.0, 0.0), MethodSpec("corrbinom"))


def test_negative_variance_is_floored_and_flagged():
    # two disjoint tested pairs, all actives, Lambda = 1: the difference bracket goes negative
    c = PairedCounts(2, 2, 0, 10, 0.0, 200, 0.01, 0.01)
    res = compare_counts(c, (1.0, 1.0), MethodSpec("emproc"))
    assert "negative-variance-floored" in res.flags
    assert res.se > 0


def test_plus_adjustment_recomputes_centre():
    c = _counts()
    res = compare_counts(c, (0.2, 0.2), MethodSpec("corrbinom", plus=True))
    assert res.diff == pytest.approx((31 - 25) / 62)
    assert res.raw_diff == pytest.approx(6 / 60)


def test_pooling_only_in_variance():
    c = _counts()
    a = compare_counts(c, (0.2, 0.3), MethodSpec("emproc", pooled=True))
    b = compare_counts(c, (0.2, 0.3), MethodSpec("emproc"))
    assert a.diff == b.diff and a.se != b.se


@given(st.integers(0, 10_000), st.integers(1, 99), st.sampled_from(METHODS), st.booleans(), st.booleans())
def test_antisymmetry(seed, k, method, pooled, plus):
    ds = random_dataset(np.random.default_rng(seed), 100, ties=seed % 2 == 0)
    spec = MethodSpec.parse(method, pooled, plus)
    try:
        ab = compare(ds, "s0", "s1", k / 100, spec)
    except NumericalDegeneracyError:
        with pytest.raises(NumericalDegeneracyError):
            compare(ds, "s1", "s0", k / 100, spec)
        return
    ba = compare(ds, "s1", "s0", k / 100, spec)
    assert ba.diff == pytest.approx(-ab.diff, abs=1e-15)
    assert ba.z == pytest.approx(-ab.z, abs=1e-12)
    assert ba.se == pytest.approx(ab.se, rel=1e-12, abs=1e-15)
    assert ba.p_raw == pytest.approx(ab.p_raw, rel=1e-12)
    assert 0.0 <= ab.p_raw <= 1.0 and ab.ci[0] <= ab.ci[1]


@given(st.integers(0, 10_000), st.integers(1, 99))
def test_lambda_zero_emproc_equals_corrbinom(seed, k):
    ds = random_dataset(np.random.default_rng(seed), 100)
    from hitenrich import paired_counts

    c = paired_counts(ds, "s0", "s1", k / 100)
    try:
        e = compare_counts(c, (0.0, 0.0), MethodSpec("emproc"))
        b = compare_counts(c, (0.0, 0.0), MethodSpec("corrbinom"))
    except NumericalDegeneracyError:
        return
    assert e.se == pytest.approx(b.se, rel=1e-12, abs=1e-16)
    assert e.p_raw == pytest.approx(b.p_raw, rel=1e-12)


def test_indjz_wider_when_positively_correlated():
    rng = np.random.default_rng(11)
    for _ in range(20):
        ds = random_dataset(rng, 2000, rho=0.9)
        for r in (0.02, 0.05, 0.1, 0.2):
            e = compare(ds, "s0", "s1", r, MethodSpec("emproc"))
            i = compare(ds, "s0", "s1", r, MethodSpec("indjz"))
            c = cov_emproc(e.counts, e.lambdas)
            if c >= 0 and not e.flags:
                assert i.se >= e.se


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=40))
def test_bh_matches_statsmodels(p):
    ref = multipletests(p, method="fdr_bh")[1]
    np.testing.assert_allclose(bh_adjust(p), ref, rtol=1e-12, atol=1e-15)


def test_bh_basics():
    assert bh_adjust([0.03])[0] == 0.03
    np.testing.assert_array_equal(bh_adjust([0.2] * 5), [0.2] * 5)
    with pytest.raises(ValidationError):
        bh_adjust([1.2])


@pytest.mark.parametrize("raw,adj", [(PPARG_EMPROC_RAW, PPARG_EMPROC_ADJ), (PPARG_MCNEMAR_RAW, PPARG_MCNEMAR_ADJ)])
def test_bh_reproduces_pparg_adjusted_column(raw, adj):
    got = bh_adjust(raw)
    # printed raw p-values carry 3 significant digits, so allow rounding slack
    np.testing.assert_allclose(got, adj, rtol=2e-3, atol=6e-4)
    assert got[-1] == pytest.approx(adj[-1], rel=2e-3)
