"""Empirical cdfs, tie-aware score thresholds and hit enrichment curves.

Testing fraction ``r`` selects the ligands scoring strictly above
``t_r = min{t : F(t) >= 1 - r}``, with ``F`` the empirical cdf of all scores.
Under ties at the threshold fewer than ``floor(n r)`` ligands are tested; no
random tie-breaking is done.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hitenrich.dataset import ScoredDataset, summarize
from hitenrich.errors import ValidationError

# Absorbs representation error in n*r when r was itself computed as k/n.
_SNAP_EPS = 1e-9


def count_for_fraction(n: int, r: float) -> int:
    """Number of ligands nominally tested at fraction r, ``floor(n r)``."""
    if not 0.0 < r <= 1.0:
        raise ValidationError(f"testing fraction must lie in (0, 1], got {r}")
    return min(int(np.floor(n * r + _SNAP_EPS)), n)


@dataclass(frozen=True)
class FractionGrid:
    """Strictly increasing testing fractions, held as integer test counts."""

    counts: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise ValidationError("grid must contain at least one point")
        if counts[0] < 1:
            raise ValidationError(f"grid point tests fewer than one ligand (count {counts[0]})")
        if counts[-1] > self.n:
            raise ValidationError(f"grid count {counts[-1]} exceeds n={self.n}")
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise ValidationError(f"grid must be strictly increasing after snapping to k/n: {counts}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_counts(cls, counts: Sequence[int], n: int) -> "FractionGrid":
        return cls(tuple(int(c) for c in counts), n)

    @classmethod
    def from_fractions(cls, fractions: Sequence[float], n: int) -> "FractionGrid":
        return cls(tuple(count_for_fraction(n, float(r)) for r in fractions), n)

    @classmethod
    def log_spaced(cls, n: int, points: int = 40, max_fraction: float = 1.0) -> "FractionGrid":
        top = max(1, count_for_fraction(n, max_fraction))
        raw = np.unique(np.round(np.logspace(0, np.log10(top), points)).astype(int))
        return cls(tuple(int(c) for c in raw if c >= 1), n)

    @property
    def fractions(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n

    def __len__(self) -> int:
        return len(self.counts)


class ECDF:
    """Right-continuous empirical cdf of a score vector."""

    def __init__(self, scores: Sequence[float]):
        s = np.sort(np.asarray(scores, dtype=float))
        if s.size == 0:
            raise ValidationError("empirical cdf of an empty sample")
        if np.isnan(s).any():
            raise ValidationError("empirical cdf input contains NaN")
        self.sorted = s
        self.n = s.size

    def __call__(self, t):
        return np.searchsorted(self.sorted, t, side="right") / self.n

    def inverse(self, p: float) -> float:
        """Smallest observed score t with F(t) >= p; -inf when p <= 0."""
        m = int(np.ceil(p * self.n - _SNAP_EPS))
        if m <= 0:
            return -np.inf
        return float(self.sorted[min(m, self.n) - 1])


def empirical_cdf(scores: Sequence[float]) -> ECDF:
    return ECDF(scores)


def thresholds_from_sorted(sorted_scores: np.ndarray, counts) -> np.ndarray:
    """Thresholds for nominal test counts; ``-inf`` where everything is tested."""
    n = sorted_scores.size
    counts = np.asarray(counts, dtype=int)
    idx = n - counts - 1
    out = np.full(counts.shape, -np.inf)
    ok = idx >= 0
    out[ok] = sorted_scores[idx[ok]]
    return out


def threshold_at(scores: Sequence[float], r: float) -> float:
    """Score threshold for testing fraction r (``-inf`` at r = 1)."""
    s = np.sort(np.asarray(scores, dtype=float))
    k = count_for_fraction(s.size, r)
    return float(thresholds_from_sorted(s, [k])[0])


def tested_matrix(scores: np.ndarray, counts) -> np.ndarray:
    """Boolean (len(counts), n) matrix: ligand i tested at grid point k."""
    thr = thresholds_from_sorted(np.sort(scores), counts)
    return scores[None, :] > thr[:, None]


def recall_at(ds: ScoredDataset, algo: str, r: float) -> float:
    summ = summarize(ds)
    s = ds.score(algo)
    t = threshold_at(s, r)
    return float(np.sum(ds.activity[s > t])) / summ.n_plus


@dataclass(frozen=True)
class CurveEstimate:
    algorithm: str
    grid: FractionGrid
    values: np.ndarray
    kind: str = "recall"

    @property
    def fractions(self) -> np.ndarray:
        return self.grid.fractions


def _recalls(ds: ScoredDataset, algo: str, grid: FractionGrid) -> np.ndarray:
    summ = summarize(ds)
    tested = tested_matrix(ds.score(algo), grid.counts)
    return (tested @ ds.activity.astype(float)) / summ.n_plus


def hit_enrichment_curve(ds: ScoredDataset, algo: str, grid: FractionGrid) -> CurveEstimate:
    _check_grid(ds, grid)
    return CurveEstimate(algo, grid, _recalls(ds, algo, grid), "recall")


def enrichment_factor_curve(ds: ScoredDataset, algo: str, grid: FractionGrid) -> CurveEstimate:
    _check_grid(ds, grid)
    return CurveEstimate(algo, grid, _recalls(ds, algo, grid) / grid.fractions, "enrichment-factor")


def reference_curves(pi_hat: float, grid: FractionGrid) -> dict[str, CurveEstimate]:
    """Ideal (all actives first) and random-ordering hit enrichment curves."""
    if not 0.0 < pi_hat < 1.0:
        raise ValidationError(f"pi_hat must lie in (0, 1), got {pi_hat}")
    r = grid.fractions
    return {
        "ideal": CurveEstimate("ideal", grid, np.minimum(r / pi_hat, 1.0)),
        "random": CurveEstimate("random", grid, r.copy()),
    }


def _check_grid(ds: ScoredDataset, grid: FractionGrid) -> None:
    if grid.n != ds.n:
        raise ValidationError(f"grid built for n={grid.n} but dataset has n={ds.n}")
