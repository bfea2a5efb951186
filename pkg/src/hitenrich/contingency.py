"""Paired tested/not-tested counts for two algorithms and the threshold activity rate.

The activity rate at the threshold, P(active | S = t_r), is estimated by
Nadaraya-Watson regression of activity on score with a Gaussian kernel and
the normal-reference bandwidth ``1.06 * sd(S) * n**(-1/5)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from hitenrich.curves import count_for_fraction, thresholds_from_sorted
from hitenrich.dataset import ScoredDataset, summarize
from hitenrich.errors import ValidationError


@dataclass(frozen=True)
class PairedCounts:
    """Counts of actives tested by algorithm 1, 2 and both, at one fraction per algorithm.

    ``r1``/``r2`` are the fractions of all ligands actually tested by each
    algorithm (below ``k/n`` only under ties at the threshold).
    """

    q1: int
    q2: int
    q12: int
    n_plus: int
    gamma12_hat: float
    n: int
    r1: float
    r2: float

    def __post_init__(self) -> None:
        if min(self.q1, self.q2, self.q12) < 0:
            raise ValidationError("counts must be nonnegative")
        if self.q12 > min(self.q1, self.q2):
            raise ValidationError("q12 cannot exceed q1 or q2")
        if self.q1 + self.q2 - self.q12 > self.n_plus:
            raise ValidationError("more actives tested than exist")
        if not 0.0 <= self.gamma12_hat <= 1.0:
            raise ValidationError("gamma12_hat must lie in [0, 1]")

    @property
    def theta1(self) -> float:
        return self.q1 / self.n_plus

    @property
    def theta2(self) -> float:
        return self.q2 / self.n_plus

    @property
    def theta12(self) -> float:
        return self.q12 / self.n_plus

    @property
    def pi_hat(self) -> float:
        return self.n_plus / self.n

    @property
    def discordant(self) -> tuple[int, int]:
        return self.q1 - self.q12, self.q2 - self.q12

    def plus_adjusted(self) -> "PairedCounts":
        """Add one to each discordant cell: q1, q2 and n_plus grow, q12 does not."""
        return replace(self, q1=self.q1 + 1, q2=self.q2 + 1, n_plus=self.n_plus + 2)

    def swapped(self) -> "PairedCounts":
        return replace(self, q1=self.q2, q2=self.q1, r1=self.r2, r2=self.r1)


def _tested(scores: np.ndarray, count: int) -> np.ndarray:
    thr = thresholds_from_sorted(np.sort(scores), [count])[0]
    return scores > thr


def paired_counts_rr(
    ds: ScoredDataset, algo1: str, algo2: str, r_i: float, r_j: float
) -> PairedCounts:
    """Counts with algorithm 1 at fraction ``r_i`` and algorithm 2 at ``r_j``."""
    summ = summarize(ds)
    t1 = _tested(ds.score(algo1), count_for_fraction(ds.n, r_i))
    t2 = _tested(ds.score(algo2), count_for_fraction(ds.n, r_j))
    x = ds.activity.astype(bool)
    both = t1 & t2
    return PairedCounts(
        q1=int(np.sum(t1 & x)),
        q2=int(np.sum(t2 & x)),
        q12=int(np.sum(both & x)),
        n_plus=summ.n_plus,
        gamma12_hat=float(np.sum(both)) / ds.n,
        n=ds.n,
        r1=float(np.sum(t1)) / ds.n,
        r2=float(np.sum(t2)) / ds.n,
    )


def paired_counts(ds: ScoredDataset, algo1: str, algo2: str, r: float) -> PairedCounts:
    return paired_counts_rr(ds, algo1, algo2, r, r)


@dataclass(frozen=True)
class LambdaEstimate:
    value: float
    bandwidth: float
    threshold: float
    fallback: bool = False


def rule_of_thumb_bandwidth(scores: np.ndarray) -> float:
    s = np.asarray(scores, dtype=float)
    sd = float(np.std(s, ddof=1)) if s.size > 1 else 0.0
    if not sd > 0.0:
        raise ValidationError("bandwidth needs at least two distinct scores")
    return 1.06 * sd * s.size ** (-0.2)


def nadaraya_watson(
    scores: np.ndarray, activity: np.ndarray, points, bandwidth: float
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-kernel regression of activity on score at each point.

    Returns (estimates clipped to [0, 1], fallback mask). Where every kernel
    weight underflows the estimate is the activity rate among the
    ``2*ceil(sqrt(n))`` scores nearest the point.
    """
    s = np.asarray(scores, dtype=float)
    x = np.asarray(activity, dtype=float)
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    w = np.exp(-0.5 * ((s[None, :] - pts[:, None]) / bandwidth) ** 2)
    mass = w.sum(axis=1)
    fallback = ~(mass > 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        est = (w @ x) / mass
    if fallback.any():
        m = min(s.size, 2 * math.ceil(math.sqrt(s.size)))
        for i in np.flatnonzero(fallback):
            near = np.argpartition(np.abs(s - pts[i]), m - 1)[:m]
            est[i] = x[near].mean()
    return np.clip(est, 0.0, 1.0), fallback


def lambda_many(
    scores: np.ndarray, activity: np.ndarray, thresholds: np.ndarray, bandwidth: float
) -> tuple[np.ndarray, np.ndarray]:
    """Activity rate at each threshold; 0 where the threshold is -inf (all tested)."""
    thresholds = np.asarray(thresholds, dtype=float)
    out = np.zeros(thresholds.shape)
    fb = np.zeros(thresholds.shape, dtype=bool)
    finite = np.isfinite(thresholds)
    if finite.any():
        out[finite], fb[finite] = nadaraya_watson(scores, activity, thresholds[finite], bandwidth)
    return out, fb


def lambda_hat(ds: ScoredDataset, algo: str, r: float) -> LambdaEstimate:
    if not 0.0 < r < 1.0:
        raise ValidationError(f"threshold activity rate needs r in (0, 1), got {r}")
    s = ds.score(algo)
    h = rule_of_thumb_bandwidth(s)
    t = float(thresholds_from_sorted(np.sort(s), [count_for_fraction(ds.n, r)])[0])
    val, fb = nadaraya_watson(s, ds.activity, [t], h)
    return LambdaEstimate(float(val[0]), h, t, bool(fb[0]))


@dataclass(frozen=True)
class CurveParts:
    """One algorithm's tested sets, tested-active counts, tested fractions and
    threshold activity rates at each point of a grid of test counts."""

    tested: np.ndarray
    q: np.ndarray
    r: np.ndarray
    lam: np.ndarray
    lam_fallback: np.ndarray


def prepare_curve(scores: np.ndarray, activity: np.ndarray, counts) -> CurveParts:
    thr = thresholds_from_sorted(np.sort(scores), counts)
    tested = scores[None, :] > thr[:, None]
    x = np.asarray(activity, dtype=float)
    lam, fb = lambda_many(scores, x, thr, rule_of_thumb_bandwidth(scores))
    return CurveParts(tested, tested @ x, tested.sum(axis=1) / scores.size, lam, fb)
