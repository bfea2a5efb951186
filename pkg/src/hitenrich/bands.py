"""Simultaneous confidence bands for one hit enrichment curve or a difference of two.

Bands are rectanguloid, ``centre_i +/- q * SE_i``. The sup-t critical value
is the (1 - alpha) quantile of ``max_i |Z_i| / SE_i`` for ``Z ~ N(0, V)``,
estimated by Monte Carlo; Bonferroni uses ``Phi^-1(1 - alpha / (2k))``.

Plus adjustments differ by setting: a single curve adds two successes and two
failures to each recall, ``(Q + 2) / (n_plus + 4)``; a difference adds one to
each discordant cell of the paired table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.stats import norm

from hitenrich.contingency import CurveParts, prepare_curve
from hitenrich.curves import FractionGrid
from hitenrich.dataset import ScoredDataset, summarize
from hitenrich.errors import ValidationError

DEFAULT_DRAWS = 100_000
# Relative eigenvalue clipping above which the repair is reported.
_REPAIR_TOL = 1e-8
_SE_TOL = 1e-12
_CANCEL_TOL = 1e-12
# Halvings of the threshold activity rates tried before dropping them.
_MAX_HALVINGS = 60


@dataclass(frozen=True)
class CovarianceMatrix:
    grid: FractionGrid
    matrix: np.ndarray
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        k = len(self.grid)
        if m.shape != (k, k):
            raise ValidationError(f"covariance shape {m.shape} does not match grid of {k}")
        object.__setattr__(self, "matrix", m)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.matrix), 0.0, None))


def _within_cov(theta: np.ndarray, lam: np.ndarray, r: np.ndarray, pi: float, n: int) -> np.ndarray:
    """Covariance of one algorithm's recalls across grid points (grid ascending)."""
    lo = np.minimum.outer(np.arange(theta.size), np.arange(theta.size))
    hi = np.maximum.outer(np.arange(theta.size), np.arange(theta.size))
    ti, tj = theta[lo], theta[hi]
    li, lj = lam[lo], lam[hi]
    ri, rj = r[lo], r[hi]
    return (ti * (1.0 - tj) * (1.0 - li - lj) + ri * (1.0 - rj) * li * lj / pi) / (n * pi)


def _cross_cov(
    th1: np.ndarray, th2: np.ndarray, th12: np.ndarray, gamma: np.ndarray,
    lam1: np.ndarray, lam2: np.ndarray, r1: np.ndarray, r2: np.ndarray, pi: float, n: int,
) -> np.ndarray:
    """Entry (i, j): covariance of algorithm 1 at r_i with algorithm 2 at r_j."""
    cb = th12 - np.outer(th1, th2)
    return (cb * (1.0 - lam1[:, None] - lam2[None, :]) + (gamma - np.outer(r1, r2)) * np.outer(lam1, lam2) / pi) / (
        n * pi
    )


def _halve_negative(build, lams: tuple[np.ndarray, ...]) -> tuple[np.ndarray, np.ndarray, bool]:
    """Evaluate ``build(*lams)``; while a diagonal entry is negative, halve the
    activity rates at that grid point (then drop them), as for pointwise variances."""
    lams = tuple(np.array(l, dtype=float) for l in lams)
    centre, v = build(*lams)
    bad = np.diag(v) < 0.0
    if not bad.any():
        return centre, v, False
    for _ in range(_MAX_HALVINGS):
        for l in lams:
            l[bad] *= 0.5
        centre, v = build(*lams)
        bad = np.diag(v) < 0.0
        if not bad.any():
            return centre, v, True
    for l in lams:
        l[bad] = 0.0
    centre, v = build(*lams)
    return centre, v, True


def single_parts(cur: CurveParts, n_plus: int, n: int, plus: bool) -> tuple[np.ndarray, np.ndarray]:
    """Recall centre and covariance matrix for one algorithm's grid."""
    return single_parts_flagged(cur, n_plus, n, plus)[:2]


def single_parts_flagged(cur: CurveParts, n_plus: int, n: int, plus: bool):
    npl = n_plus + 4 if plus else n_plus
    theta = (cur.q + 2.0) / npl if plus else cur.q / npl
    return _halve_negative(lambda lam: (theta, _within_cov(theta, lam, cur.r, npl / n, n)), (cur.lam,))


def diff_parts(
    c1: CurveParts, c2: CurveParts, activity: np.ndarray, n_plus: int, plus: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Difference centre and covariance matrix; cross counts pair every r_i with every r_j."""
    return diff_parts_flagged(c1, c2, activity, n_plus, plus)[:2]


def diff_parts_flagged(c1: CurveParts, c2: CurveParts, activity: np.ndarray, n_plus: int, plus: bool):
    n = activity.size
    x = activity.astype(float)
    t1f = c1.tested.astype(float)
    t2f = c2.tested.astype(float)
    q12 = (t1f * x) @ t2f.T
    gamma = (t1f @ t2f.T) / n
    if plus:
        npl = n_plus + 2
        th1, th2 = (c1.q + 1.0) / npl, (c2.q + 1.0) / npl
    else:
        npl = n_plus
        th1, th2 = c1.q / npl, c2.q / npl
    pi = npl / n

    def build(lam1, lam2):
        cross = _cross_cov(th1, th2, q12 / npl, gamma, lam1, lam2, c1.r, c2.r, pi, n)
        w1, w2 = _within_cov(th1, lam1, c1.r, pi, n), _within_cov(th2, lam2, c2.r, pi, n)
        v = w1 + w2 - cross - cross.T
        # entries that cancel to rounding level are zero (e.g. identical rankings)
        mag = np.abs(w1) + np.abs(w2) + np.abs(cross) + np.abs(cross.T)
        v[np.abs(v) <= _CANCEL_TOL * mag] = 0.0
        return th1 - th2, v

    return _halve_negative(build, (c1.lam, c2.lam))


def _single_parts(ds: ScoredDataset, algo: str, grid: FractionGrid, plus: bool):
    cur = prepare_curve(ds.score(algo), ds.activity, grid.counts)
    return single_parts_flagged(cur, summarize(ds).n_plus, ds.n, plus)


def _diff_parts(ds: ScoredDataset, algo1: str, algo2: str, grid: FractionGrid, plus: bool):
    n_plus = summarize(ds).n_plus
    c1 = prepare_curve(ds.score(algo1), ds.activity, grid.counts)
    c2 = prepare_curve(ds.score(algo2), ds.activity, grid.counts)
    return diff_parts_flagged(c1, c2, ds.activity, n_plus, plus)


def _flags(halved: bool) -> tuple[str, ...]:
    return ("negative-variance-floored",) if halved else ()


def cov_matrix_single(ds: ScoredDataset, algo: str, grid: FractionGrid, plus: bool = False) -> CovarianceMatrix:
    _, v, halved = _single_parts(ds, algo, grid, plus)
    return CovarianceMatrix(grid, v, _flags(halved))


def cov_matrix_diff(
    ds: ScoredDataset, algo1: str, algo2: str, grid: FractionGrid, plus: bool = False
) -> CovarianceMatrix:
    _, v, halved = _diff_parts(ds, algo1, algo2, grid, plus)
    return CovarianceMatrix(grid, v, _flags(halved))


def repair_psd(matrix: np.ndarray) -> tuple[np.ndarray, bool]:
    """Clip negative eigenvalues to zero; report whether the clipping was material."""
    m = 0.5 * (matrix + matrix.T)
    w, u = np.linalg.eigh(m)
    neg = -w[w < 0].sum()
    trace = max(float(np.abs(w).sum()), np.finfo(float).tiny)
    if neg == 0.0:
        return m, False
    fixed = (u * np.clip(w, 0.0, None)) @ u.T
    return 0.5 * (fixed + fixed.T), bool(neg > _REPAIR_TOL * trace)


@lru_cache(maxsize=8)
def _base_draws(seed: int, draws: int, k: int) -> np.ndarray:
    out = np.random.default_rng(seed).standard_normal((draws, k))
    out.setflags(write=False)
    return out


def _supt(matrix: np.ndarray, alpha: float, draws: int, seed: int) -> tuple[float, tuple[str, ...]]:
    flags: list[str] = []
    v, repaired = repair_psd(np.asarray(matrix, dtype=float))
    if repaired:
        flags.append("covariance-repaired")
    sd = np.sqrt(np.clip(np.diag(v), 0.0, None))
    active = sd > _SE_TOL
    if not active.all():
        flags.append("degenerate-points-excluded")
    if not active.any():
        return float(norm.ppf(1.0 - alpha / 2.0)), tuple(flags)
    sub = v[np.ix_(active, active)]
    corr = sub / np.outer(sd[active], sd[active])
    w, u = np.linalg.eigh(0.5 * (corr + corr.T))
    root = u * np.sqrt(np.clip(w, 0.0, None))
    xi = _base_draws(int(seed), int(draws), int(active.sum()))
    stat = np.abs(xi @ root.T).max(axis=1)
    q = float(np.quantile(stat, 1.0 - alpha))
    # the exact sup-t value never exceeds Bonferroni; MC noise can push it over
    bonf = bonferroni_critical(int(active.sum()), alpha)
    if q > bonf:
        flags.append("supt-capped-at-bonferroni")
        q = bonf
    return q, tuple(flags)


def supt_critical(
    cov: CovarianceMatrix | np.ndarray, alpha: float = 0.05, draws: int = DEFAULT_DRAWS, seed: int = 0
) -> float:
    """Monte Carlo sup-t critical value; bit-reproducible for a given (seed, draws)."""
    if draws < 10_000:
        raise ValidationError("sup-t needs at least 10,000 Monte Carlo draws")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    m = cov.matrix if isinstance(cov, CovarianceMatrix) else np.asarray(cov, dtype=float)
    return _supt(m, alpha, draws, seed)[0]


def bonferroni_critical(k: int, alpha: float = 0.05) -> float:
    if k < 1:
        raise ValidationError("k must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    return float(norm.ppf(1.0 - alpha / (2.0 * k)))


@dataclass(frozen=True)
class Band:
    grid: FractionGrid
    center: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    se: np.ndarray
    q: float
    method: str
    plus: bool
    alpha: float
    target: tuple[str, ...]
    mc_draws: int | None = None
    seed: int | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def kind(self) -> str:
        return "difference" if len(self.target) == 2 else "single"

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, values) -> bool:
        values = np.asarray(values, dtype=float)
        return bool(np.all((self.lower <= values) & (values <= self.upper)))


def band_from_parts(
    grid: FractionGrid,
    center: np.ndarray,
    v: np.ndarray,
    *,
    method: str,
    plus: bool,
    alpha: float,
    draws: int,
    seed: int,
    target: tuple[str, ...],
    flags: Sequence[str] = (),
) -> Band:
    """Build a band from a centre vector and its estimated covariance."""
    method = method.lower().replace("-", "")
    if method not in ("supt", "bonferroni"):
        raise ValidationError(f"unknown band method {method!r}; use supt or bonferroni")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    flags = list(flags)
    v_fixed, repaired = repair_psd(v)
    if repaired:
        flags.append("covariance-repaired")
    se = np.sqrt(np.clip(np.diag(v_fixed), 0.0, None))
    if np.any(se <= _SE_TOL):
        flags.append("degenerate-points-excluded")
    if method == "supt":
        if draws < 10_000:
            raise ValidationError("sup-t needs at least 10,000 Monte Carlo draws")
        q, supt_flags = _supt(v_fixed, alpha, draws, seed)
        flags += [f for f in supt_flags if f not in flags]
        mc_draws, used_seed = draws, seed
    else:
        q = bonferroni_critical(max(int(np.sum(se > _SE_TOL)), 1), alpha)
        mc_draws, used_seed = None, None
    lo_clip, hi_clip = (-1.0, 1.0) if len(target) == 2 else (0.0, 1.0)
    lower = np.clip(center - q * se, lo_clip, hi_clip)
    upper = np.clip(center + q * se, lo_clip, hi_clip)
    return Band(
        grid, np.asarray(center, dtype=float), lower, upper, se, q, method, plus, alpha, target,
        mc_draws, used_seed, tuple(flags),
    )


def band(
    ds: ScoredDataset,
    algos: str | Sequence[str],
    grid: FractionGrid,
    method: str = "supt",
    plus: bool = False,
    alpha: float = 0.05,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
) -> Band:
    """Simultaneous band for one curve (``algos`` a name) or a difference (a pair)."""
    if isinstance(algos, str):
        algos = (algos,)
    algos = tuple(algos)
    if grid.n != ds.n:
        raise ValidationError(f"grid built for n={grid.n} but dataset has n={ds.n}")
    if len(algos) == 1:
        center, v, halved = _single_parts(ds, algos[0], grid, plus)
    elif len(algos) == 2:
        center, v, halved = _diff_parts(ds, algos[0], algos[1], grid, plus)
    else:
        raise ValidationError("band takes one algorithm or a pair")
    return band_from_parts(
        grid, center, v, method=method, plus=plus, alpha=alpha, draws=draws, seed=seed, target=algos,
        flags=_flags(halved),
    )
