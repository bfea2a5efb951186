"""Pointwise tests and confidence intervals for the difference of two recalls.

Four ways of estimating Var(theta1 - theta2) at a fixed testing fraction:

* EmProc: threshold-estimation correlation within each algorithm and score
  correlation between algorithms;
* IndJZ: within-algorithm correction only, algorithms treated as independent;
* CorrBinom: correlated binomial counts, threshold estimation ignored;
* McNemar: paired-proportion test (null-enforced variance) with the
  Bonett-Price interval.

The variance and covariance formulas are evaluated in expanded form, e.g.
``Var_JZ = [theta(1-theta)(1-2L) + L^2 r(1-r)/pi] / (n pi)``, which equals the
factored "binomial variance times bracket" form wherever the latter is
defined and stays finite when theta is 0 or 1 or when theta12 = theta1*theta2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.stats import norm

from hitenrich.contingency import PairedCounts, lambda_hat, paired_counts
from hitenrich.dataset import ScoredDataset
from hitenrich.errors import NumericalDegeneracyError, ValidationError

# Halvings of the threshold activity rates tried before dropping them.
_MAX_HALVINGS = 60


class Method(str, enum.Enum):
    EMPROC = "emproc"
    MCNEMAR = "mcnemar"
    INDJZ = "indjz"
    CORRBINOM = "corrbinom"

    @property
    def label(self) -> str:
        return {"emproc": "EmProc", "mcnemar": "McNemar", "indjz": "IndJZ", "corrbinom": "CorrBinom"}[
            self.value
        ]

    @property
    def needs_lambda(self) -> bool:
        return self in (Method.EMPROC, Method.INDJZ)


@dataclass(frozen=True)
class MethodSpec:
    method: Method
    pooled: bool = False
    plus: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if self.method is Method.MCNEMAR and (self.pooled or self.plus):
            raise ValidationError("McNemar takes no pooled/plus modifiers")

    @property
    def label(self) -> str:
        parts = [self.method.label]
        if self.pooled:
            parts.append("pooled")
        if self.plus:
            parts.append("plus")
        return "+".join(parts)

    @classmethod
    def parse(cls, name: str, pooled: bool = False, plus: bool = False) -> "MethodSpec":
        try:
            method = Method(name.strip().lower())
        except ValueError:
            raise ValidationError(
                f"unknown method {name!r}; choose from {', '.join(m.value for m in Method)}"
            ) from None
        if method is Method.MCNEMAR:
            return cls(method)
        return cls(method, pooled, plus)


def var_binomial(theta, n_plus):
    """Binomial variance of a recall estimate, theta(1-theta)/(n pi)."""
    if np.any(np.asarray(n_plus) <= 0):
        raise ValidationError("n_plus must be positive")
    theta = np.asarray(theta, dtype=float)
    return theta * (1.0 - theta) / n_plus


def var_jz(theta, lam, r, pi_hat, n):
    """Recall variance corrected for estimating the threshold from the data.

    Not floored: the bracket can be estimated negative. Callers assembling a
    variance handle that (see :func:`compare_counts`).
    """
    theta = np.asarray(theta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    r = np.asarray(r, dtype=float)
    npi = n * pi_hat
    return (theta * (1.0 - theta) * (1.0 - 2.0 * lam) + lam**2 * r * (1.0 - r) / pi_hat) / npi


def cov_binomial(theta1, theta2, theta12, n_plus):
    return (np.asarray(theta12, dtype=float) - np.asarray(theta1) * np.asarray(theta2)) / n_plus


def cov_emproc_terms(theta1, theta2, theta12, gamma12, lam1, lam2, r1, r2, pi_hat, n):
    """Between-algorithm recall covariance, elementwise over array arguments.

    ``r1``/``r2`` are the fractions tested by each algorithm; with a single
    fraction and no ties ``r1 * r2`` is ``r**2``.
    """
    theta1, theta2, theta12 = (np.asarray(a, dtype=float) for a in (theta1, theta2, theta12))
    lam1, lam2 = np.asarray(lam1, dtype=float), np.asarray(lam2, dtype=float)
    cb = theta12 - theta1 * theta2
    return (cb * (1.0 - lam1 - lam2) + (gamma12 - np.asarray(r1) * r2) * lam1 * lam2 / pi_hat) / (n * pi_hat)


def cov_emproc(counts: PairedCounts, lambdas: tuple[float, float], r=None, pi_hat=None, n=None):
    """EmProc covariance of the two recall estimates held in ``counts``.

    ``r``, ``pi_hat`` and ``n`` default to the values carried by the counts.
    """
    r1, r2 = (counts.r1, counts.r2) if r is None else (r, r)
    pi_hat = counts.pi_hat if pi_hat is None else pi_hat
    n = counts.n if n is None else n
    return float(
        cov_emproc_terms(
            counts.theta1, counts.theta2, counts.theta12, counts.gamma12_hat,
            lambdas[0], lambdas[1], r1, r2, pi_hat, n,
        )
    )


@dataclass(frozen=True)
class ComparisonResult:
    r: float
    diff: float
    se: float
    z: float
    p_raw: float
    ci: tuple[float, float]
    method: MethodSpec
    p_adj: float | None = None
    raw_diff: float = 0.0
    counts: PairedCounts | None = None
    lambdas: tuple[float, float] | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def with_p_adj(self, p_adj: float) -> "ComparisonResult":
        return replace(self, p_adj=float(p_adj))


def _two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


@lru_cache(maxsize=64)
def z_crit(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    return float(norm.ppf(1.0 - alpha / 2.0))


def _variance(c: PairedCounts, lam: tuple[float, float], spec: MethodSpec) -> float:
    npl = c.n_plus
    t1, t2, t12 = c.theta1, c.theta2, c.theta12
    if spec.pooled:
        t1 = t2 = 0.5 * (t1 + t2)
    m = spec.method
    if m is Method.CORRBINOM:
        return float(var_binomial(t1, npl) + var_binomial(t2, npl) - 2.0 * cov_binomial(t1, t2, t12, npl))
    pi, n = c.pi_hat, c.n
    v = float(var_jz(t1, lam[0], c.r1, pi, n) + var_jz(t2, lam[1], c.r2, pi, n))
    if m is Method.EMPROC:
        v -= 2.0 * float(
            cov_emproc_terms(t1, t2, t12, c.gamma12_hat, lam[0], lam[1], c.r1, c.r2, pi, n)
        )
    return v


def _wald_se_mcnemar(q1: int, q2: int, q12: int, npl: int) -> float:
    return math.sqrt(max(q1 + q2 - 2 * q12 - (q1 - q2) ** 2 / npl, 0.0)) / npl


def compare_counts(
    counts: PairedCounts,
    lambdas: tuple[float, float] | None,
    spec: MethodSpec,
    alpha: float = 0.05,
    r: float | None = None,
) -> ComparisonResult:
    """Test and interval from paired counts and threshold activity rates.

    Pooling replaces both recalls by their mean inside the variance only.
    The plus flag (non-McNemar methods) adds one to each discordant cell and
    recomputes every recall, including the centre, from the adjusted table;
    the activity rates and gamma12 are left alone. A negative assembled
    variance is recomputed with both activity rates halved until it is
    nonnegative, and flagged.
    """
    zc = z_crit(alpha)
    flags: list[str] = []
    r = counts.r1 if r is None else r
    lam = (0.0, 0.0) if lambdas is None else (float(lambdas[0]), float(lambdas[1]))
    raw_diff = (counts.q1 - counts.q2) / counts.n_plus

    if spec.method is Method.MCNEMAR:
        q1, q2, q12, npl = counts.q1, counts.q2, counts.q12, counts.n_plus
        d = q1 + q2 - 2 * q12
        if d == 0:
            z, p = 0.0, 1.0
            flags.append("no-discordant-pairs")
        else:
            z = (q1 - q2) / math.sqrt(d)
            p = _two_sided_p(z)
        se = _wald_se_mcnemar(q1, q2, q12, npl)
        m = npl + 2
        centre = (q1 - q2) / m
        half = zc * math.sqrt(max((d + 2) - (q1 - q2) ** 2 / m, 0.0) / m**2)
        return ComparisonResult(
            r, raw_diff, se, z, p, (centre - half, centre + half), spec,
            raw_diff=raw_diff, counts=counts, lambdas=lambdas, flags=tuple(flags),
        )

    c = counts.plus_adjusted() if spec.plus else counts
    if spec.method is Method.EMPROC and c.q12 * c.n_plus == c.q1 * c.q2:
        # factored covariance is 0/0 here; the expanded form gives its limit
        flags.append("theta12-equals-product")
    diff = (c.q1 - c.q2) / c.n_plus
    var = _variance(c, lam, spec)
    if var < 0.0 and spec.method.needs_lambda:
        flags.append("negative-variance-floored")
        cur = lam
        for _ in range(_MAX_HALVINGS):
            cur = (cur[0] * 0.5, cur[1] * 0.5)
            var = _variance(c, cur, spec)
            if var >= 0.0:
                break
        else:
            var = _variance(c, (0.0, 0.0), spec)
    var = max(var, 0.0)
    se = math.sqrt(var)
    if se == 0.0:
        if diff != 0.0:
            raise NumericalDegeneracyError(
                f"{spec.label}: zero standard error with nonzero difference {diff:.4g} at r={r:.4g}"
            )
        z, p = 0.0, 1.0
        flags.append("zero-se")
    else:
        z = diff / se
        p = _two_sided_p(z)
    return ComparisonResult(
        r, diff, se, z, p, (diff - zc * se, diff + zc * se), spec,
        raw_diff=raw_diff, counts=counts, lambdas=lambdas, flags=tuple(flags),
    )


def compare(
    ds: ScoredDataset,
    algo1: str,
    algo2: str,
    r: float,
    spec: MethodSpec | None = None,
    alpha: float = 0.05,
) -> ComparisonResult:
    """Compare recall of two algorithms at testing fraction r."""
    spec = spec or MethodSpec(Method.EMPROC)
    counts = paired_counts(ds, algo1, algo2, r)
    lambdas = None
    if spec.method.needs_lambda:
        lambdas = (lambda_hat(ds, algo1, r).value, lambda_hat(ds, algo2, r).value)
    nominal = np.floor(ds.n * r + 1e-9) / ds.n
    return compare_counts(counts, lambdas, spec, alpha, r=float(nominal))


def bh_adjust(p_values: Sequence[float]) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return p.copy()
    if np.any((p < 0) | (p > 1)) or np.isnan(p).any():
        raise ValidationError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")[::-1]
    ranks = np.arange(m, 0, -1)
    adj = np.minimum.accumulate(p[order] * m / ranks)
    out = np.empty(m)
    out[order] = np.minimum(adj, 1.0)
    return out
