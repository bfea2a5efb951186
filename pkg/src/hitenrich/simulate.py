"""Synthetic screening data and Monte Carlo studies of tests, intervals and bands.

Scores are drawn class by class: actives from the positive-class marginals,
inactives from the negative-class marginals, and (for two algorithms) the
pair of scores of a ligand tied together by a Gaussian copula with parameter
``rho``. With normal marginals this is the bivariate normal; with beta or
uniform marginals ``rho`` is the copula parameter, not the Pearson
correlation of the scores.

Every replicate gets its own generator spawned from the study seed, so results
do not depend on how replicates are scheduled across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special, stats

from hitenrich.bands import DEFAULT_DRAWS, band_from_parts, diff_parts, single_parts
from hitenrich.contingency import PairedCounts, prepare_curve
from hitenrich.curves import FractionGrid
from hitenrich.dataset import ScoredDataset
from hitenrich.errors import NumericalDegeneracyError, ValidationError
from hitenrich.pointwise import MethodSpec, compare_counts, var_binomial, var_jz

WORKERS_ENV = "HITENRICH_WORKERS"

# Numbers of tests: 2^1..2^13, 3^1..3^8, 105, 300, 1500, 15000.
BENCHMARK_GRID: tuple[int, ...] = tuple(
    sorted({2**k for k in range(1, 14)} | {3**k for k in range(1, 9)} | {105, 300, 1500, 15000})
)

# Desk scale shrinks n and the replicate count; the model itself, prevalence
# included, is the benchmark's (n = 150,000, pi = 0.002).
DESK_N = 10_000
DESK_PI_PLUS = 0.002
DESK_REPLICATES = 2_000
STUDY_DRAWS = 20_000

FAMILIES = ("binormal", "bibeta", "uniform")

_BINORMAL_POS = ((0.8 * math.sqrt(2.0), 1.0), (0.6 * math.sqrt(2.0), 1.0))
_BIBETA_POS = ((5.0, 2.0), (4.0, 2.0))

CASES: dict[int, tuple[str, tuple[float, float], tuple[float, float]]] = {
    # case: (family, negative-class params, positive-class params)
    1: ("binormal", (0.0, 1.0), (1.4, 1.0)),
    2: ("binormal", (0.0, 1.0), (0.5, 1.0)),
    3: ("bibeta", (2.0, 5.0), (5.0, 2.0)),
    4: ("bibeta", (1.0, 20.0), (20.0, 1.0)),
    5: ("uniform", (0.0, 0.75), (0.25, 1.0)),
}


def _frozen_dist(family: str, params: tuple[float, float]):
    a, b = params
    if family == "binormal":
        return stats.norm(loc=a, scale=b)
    if family == "bibeta":
        return stats.beta(a, b)
    return stats.uniform(loc=a, scale=b - a)


def _transform(family: str, params: tuple[float, float], z: np.ndarray) -> np.ndarray:
    """Map standard normal draws to the marginal through its quantile function."""
    a, b = params
    if family == "binormal":
        return a + b * z
    u = special.ndtr(z)
    if family == "bibeta":
        return special.betaincinv(a, b, u)
    return a + (b - a) * u


@dataclass(frozen=True)
class ModelSpec:
    """Data-generating model: one (pos, neg) marginal pair per algorithm."""

    family: str
    params_pos: tuple[tuple[float, float], ...]
    params_neg: tuple[tuple[float, float], ...]
    rho: float = 0.0
    n: int = DESK_N
    pi_plus: float = DESK_PI_PLUS
    seed: int = 0
    names: tuple[str, ...] = ("algo1", "algo2")

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        pos = tuple(tuple(float(v) for v in p) for p in self.params_pos)
        neg = tuple(tuple(float(v) for v in p) for p in self.params_neg)
        object.__setattr__(self, "params_pos", pos)
        object.__setattr__(self, "params_neg", neg)
        object.__setattr__(self, "names", tuple(self.names[: len(pos)]))
        if not 1 <= len(pos) <= 2 or len(neg) != len(pos) or len(self.names) != len(pos):
            raise ValidationError("one or two algorithms, each with positive and negative parameters")
        if not -1.0 < self.rho < 1.0:
            raise ValidationError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.n < 2:
            raise ValidationError("n must be at least 2")
        if not 0.0 < self.pi_plus < 1.0:
            raise ValidationError(f"pi_plus must lie in (0, 1), got {self.pi_plus}")
        for a, b in pos + neg:
            if self.family == "binormal" and not b > 0:
                raise ValidationError("normal standard deviations must be positive")
            if self.family == "bibeta" and not (a > 0 and b > 0):
                raise ValidationError("beta shape parameters must be positive")
            if self.family == "uniform" and not b > a:
                raise ValidationError("uniform endpoints must satisfy low < high")

    @classmethod
    def binormal(cls, rho: float, null: int | None = None, **kw) -> "ModelSpec":
        """Two-algorithm binormal model; ``null=j`` gives both algorithms algorithm j's laws."""
        pos = _BINORMAL_POS if null is None else (_BINORMAL_POS[null - 1],) * 2
        return cls("binormal", pos, ((0.0, 1.0), (0.0, 1.0)), rho, **kw)

    @classmethod
    def bibeta(cls, rho: float, null: int | None = None, **kw) -> "ModelSpec":
        pos = _BIBETA_POS if null is None else (_BIBETA_POS[null - 1],) * 2
        return cls("bibeta", pos, ((2.0, 5.0), (2.0, 5.0)), rho, **kw)

    @classmethod
    def case(cls, case: int, **kw) -> "ModelSpec":
        if case not in CASES:
            raise ValidationError(f"case must be one of 1..5, got {case}")
        family, neg, pos = CASES[case]
        return cls(family, (pos,), (neg,), 0.0, names=(f"case{case}",), **kw)

    @property
    def k(self) -> int:
        return len(self.params_pos)

    def marginal(self, j: int, positive: bool):
        return _frozen_dist(self.family, (self.params_pos if positive else self.params_neg)[j])

    def true_recall(self, r: float, j: int = 0) -> float:
        return _true_recall(self, float(r), j)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params_pos"] = [list(p) for p in self.params_pos]
        d["params_neg"] = [list(p) for p in self.params_neg]
        d["names"] = list(self.names)
        return d


@lru_cache(maxsize=4096)
def _true_recall(model: ModelSpec, r: float, j: int) -> float:
    """Population recall at fraction r: 1 - F+(t) where P(S > t) = r."""
    if r >= 1.0:
        return 1.0
    fp, fm = model.marginal(j, True), model.marginal(j, False)
    pi = model.pi_plus

    def tail(t: float) -> float:
        return pi * fp.sf(t) + (1.0 - pi) * fm.sf(t) - r

    lo = min(fp.ppf(1e-15), fm.ppf(1e-15))
    hi = max(fp.isf(1e-15), fm.isf(1e-15))
    t = optimize.brentq(tail, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    return float(fp.sf(t))


def _draw(model: ModelSpec, rng: np.random.Generator) -> tuple[ScoredDataset, int]:
    """One dataset; redraws (and counts) samples with fewer than 2 actives."""
    redraws = 0
    while True:
        active = rng.random(model.n) < model.pi_plus
        n_plus = int(active.sum())
        if 2 <= n_plus < model.n:
            break
        redraws += 1
    z = rng.standard_normal((model.n, model.k))
    if model.k == 2:
        z[:, 1] = model.rho * z[:, 0] + math.sqrt(1.0 - model.rho**2) * z[:, 1]
    scores = {}
    for j, name in enumerate(model.names):
        s = np.empty(model.n)
        s[active] = _transform(model.family, model.params_pos[j], z[active, j])
        s[~active] = _transform(model.family, model.params_neg[j], z[~active, j])
        scores[name] = s
    return ScoredDataset(active.astype(np.int8), scores), redraws


def sample(model: ModelSpec, seed: int | None = None) -> ScoredDataset:
    """Draw one dataset; deterministic given the seed (``model.seed`` by default)."""
    rng = np.random.default_rng(model.seed if seed is None else seed)
    return _draw(model, rng)[0]


def sample_case(case: int, n: int = DESK_N, pi_plus: float = DESK_PI_PLUS, seed: int = 0) -> ScoredDataset:
    return sample(ModelSpec.case(case, n=n, pi_plus=pi_plus, seed=seed))


# ---------------------------------------------------------------- studies


@dataclass(frozen=True)
class StudyRow:
    series: str
    x: int | None
    estimate: float
    mc_se: float
    mean_width: float | None = None


@dataclass(frozen=True)
class StudyResult:
    kind: str
    rows: tuple[StudyRow, ...]
    replicates: int
    seed: int
    redraws: int
    model: dict
    counts: tuple[int, ...]
    extra: dict = field(default_factory=dict)

    def series(self, name: str) -> list[StudyRow]:
        return [row for row in self.rows if row.series == name]

    def estimates(self, name: str) -> np.ndarray:
        return np.array([row.estimate for row in self.series(name)])

    def mc_se(self, name: str) -> np.ndarray:
        return np.array([row.mc_se for row in self.series(name)])

    @property
    def series_names(self) -> list[str]:
        return list(dict.fromkeys(row.series for row in self.rows))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "replicates": self.replicates,
            "seed": self.seed,
            "redraws": self.redraws,
            "model": self.model,
            "counts": list(self.counts),
            "extra": self.extra,
            "rows": [asdict(row) for row in self.rows],
        }


def proportion_se(p, reps: int):
    return np.sqrt(np.asarray(p) * (1.0 - np.asarray(p)) / reps)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _run(fn: Callable, args: list, workers: int | None = None) -> list:
    """Map fn over args in order, optionally across processes."""
    workers = _workers() if workers is None else workers
    if workers <= 1 or len(args) < 2:
        return [fn(a) for a in args]
    chunk = max(1, len(args) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args, chunksize=chunk))


def _rep_seeds(seed: int, reps: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(reps)


def _check_counts(model: ModelSpec, counts: Sequence[int]) -> tuple[int, ...]:
    counts = tuple(int(c) for c in counts)
    if any(c > model.n for c in counts):
        raise ValidationError(f"grid point exceeds n={model.n}: {max(counts)}")
    FractionGrid(counts, model.n)
    return counts


def default_counts(n: int, max_fraction: float = 0.1) -> tuple[int, ...]:
    """The 25-point grid truncated to at most ``max_fraction * n`` tests."""
    return tuple(c for c in BENCHMARK_GRID if c <= max_fraction * n)


def _pair_at(c1, c2, x: np.ndarray, n_plus: int, i: int) -> PairedCounts:
    both = c1.tested[i] & c2.tested[i]
    return PairedCounts(
        q1=int(c1.q[i]), q2=int(c2.q[i]), q12=int(np.count_nonzero(both & x)), n_plus=n_plus,
        gamma12_hat=float(np.count_nonzero(both)) / x.size, n=x.size, r1=float(c1.r[i]), r2=float(c2.r[i]),
    )


def _pointwise_rep(job) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    model, counts, specs, alpha, truth, ss = job
    ds, redraws = _draw(model, np.random.default_rng(ss))
    a, b = model.names
    x = ds.activity.astype(bool)
    n_plus = int(x.sum())
    c1 = prepare_curve(ds.score(a), ds.activity, counts)
    c2 = prepare_curve(ds.score(b), ds.activity, counts)
    reject = np.zeros((len(specs), len(counts)), dtype=bool)
    cover = np.zeros_like(reject)
    width = np.zeros(reject.shape)
    for i in range(len(counts)):
        pc = _pair_at(c1, c2, x, n_plus, i)
        lam = (float(c1.lam[i]), float(c2.lam[i]))
        for m, spec in enumerate(specs):
            try:
                res = compare_counts(pc, lam, spec, alpha)
                lo, hi = res.ci
                reject[m, i] = res.p_raw < alpha
            except NumericalDegeneracyError:
                # zero SE with a nonzero difference: a point interval, always rejecting
                lo = hi = (pc.q1 - pc.q2) / pc.n_plus
                reject[m, i] = True
            cover[m, i] = lo <= truth[i] <= hi
            width[m, i] = hi - lo
    return reject, cover, width, redraws


def _pointwise(model: ModelSpec, specs, counts, replicates, alpha, seed):
    if model.k != 2:
        raise ValidationError("pairwise studies need a two-algorithm model")
    counts = _check_counts(model, counts)
    truth = np.array([model.true_recall(c / model.n, 0) - model.true_recall(c / model.n, 1) for c in counts])
    jobs = [(model, counts, tuple(specs), alpha, truth, ss) for ss in _rep_seeds(seed, replicates)]
    out = _run(_pointwise_rep, jobs)
    reject = np.mean([o[0] for o in out], axis=0)
    cover = np.mean([o[1] for o in out], axis=0)
    width = np.mean([o[2] for o in out], axis=0)
    redraws = int(sum(o[3] for o in out))
    return counts, truth, reject, cover, width, redraws


def power_study(
    model: ModelSpec,
    method_specs: Sequence[MethodSpec],
    grid: Sequence[int] | None = None,
    replicates: int = DESK_REPLICATES,
    alpha: float = 0.05,
    seed: int | None = None,
) -> StudyResult:
    """Rejection rate of each test at each number of tests.

    A model built with ``null=j`` makes this a type-I error study.
    """
    seed = model.seed if seed is None else seed
    counts = default_counts(model.n) if grid is None else grid
    counts, truth, reject, _, _, redraws = _pointwise(model, method_specs, counts, replicates, alpha, seed)
    rows = []
    for m, spec in enumerate(method_specs):
        for i, c in enumerate(counts):
            p = float(reject[m, i])
            rows.append(StudyRow(spec.label, c, p, float(proportion_se(p, replicates))))
    kind = "type1" if np.allclose(truth, 0.0) else "power"
    return StudyResult(kind, tuple(rows), replicates, seed, redraws, model.to_dict(), counts,
                       {"alpha": alpha, "true_diff": truth.tolist()})


BAND_SPECS: tuple[tuple[str, bool], ...] = (
    ("supt", False), ("supt", True), ("bonferroni", False), ("bonferroni", True),
)


def band_label(method: str, plus: bool) -> str:
    return ("sup-t" if method == "supt" else "Bonferroni") + ("+plus" if plus else "")


def _band_rep(job) -> tuple[np.ndarray, np.ndarray, int]:
    model, counts, band_specs, alpha, truth, draws, draw_seed, ss = job
    ds, redraws = _draw(model, np.random.default_rng(ss))
    grid = FractionGrid(counts, model.n)
    n_plus = int(ds.activity.sum())
    parts = {}
    if model.k == 1:
        cur = prepare_curve(ds.score(model.names[0]), ds.activity, counts)
        for plus in {p for _, p in band_specs}:
            parts[plus] = single_parts(cur, n_plus, model.n, plus)
    else:
        c1 = prepare_curve(ds.score(model.names[0]), ds.activity, counts)
        c2 = prepare_curve(ds.score(model.names[1]), ds.activity, counts)
        for plus in {p for _, p in band_specs}:
            parts[plus] = diff_parts(c1, c2, ds.activity, n_plus, plus)
    cover = np.zeros(len(band_specs), dtype=bool)
    width = np.zeros(len(band_specs))
    for m, (method, plus) in enumerate(band_specs):
        center, v = parts[plus]
        b = band_from_parts(grid, center, v, method=method, plus=plus, alpha=alpha, draws=draws,
                            seed=draw_seed, target=model.names)
        cover[m] = b.contains(truth)
        width[m] = float(np.mean(b.width))
    return cover, width, redraws


def _band_study(model, band_specs, counts, replicates, alpha, seed, draws) -> StudyResult:
    counts = _check_counts(model, counts)
    r = np.array(counts) / model.n
    if model.k == 1:
        truth = np.array([model.true_recall(x) for x in r])
    else:
        truth = np.array([model.true_recall(x, 0) - model.true_recall(x, 1) for x in r])
    draw_seed = int(np.random.SeedSequence(seed).generate_state(1)[0])
    jobs = [(model, counts, tuple(band_specs), alpha, truth, draws, draw_seed, ss)
            for ss in _rep_seeds(seed, replicates)]
    out = _run(_band_rep, jobs)
    cover = np.mean([o[0] for o in out], axis=0)
    width = np.mean([o[1] for o in out], axis=0)
    rows = tuple(
        StudyRow(band_label(meth, plus), None, float(cover[m]), float(proportion_se(cover[m], replicates)),
                 float(width[m]))
        for m, (meth, plus) in enumerate(band_specs)
    )
    kind = "band-single" if model.k == 1 else "band-diff"
    return StudyResult(kind, rows, replicates, seed, int(sum(o[2] for o in out)), model.to_dict(), counts,
                       {"alpha": alpha, "draws": draws, "truth": truth.tolist()})


def coverage_study(
    model: ModelSpec | int,
    target: str = "pointwise-ci",
    method_specs: Sequence[MethodSpec] | Sequence[tuple[str, bool]] | None = None,
    grid: Sequence[int] | None = None,
    replicates: int = DESK_REPLICATES,
    alpha: float = 0.05,
    seed: int | None = None,
    draws: int = STUDY_DRAWS,
) -> StudyResult:
    """Coverage and mean width of pointwise intervals or simultaneous bands.

    ``model`` may be a case number (1..5) for single-curve bands. For band
    targets ``method_specs`` holds ``(method, plus)`` pairs and defaults to
    sup-t and Bonferroni with and without the plus adjustment; band rows
    report whole-curve coverage with x = None.
    """
    if isinstance(model, int):
        model = ModelSpec.case(model)
    seed = model.seed if seed is None else seed
    counts = default_counts(model.n) if grid is None else grid
    if target == "pointwise-ci":
        specs = list(method_specs or [MethodSpec("emproc"), MethodSpec("emproc", plus=True)])
        counts, truth, _, cover, width, redraws = _pointwise(model, specs, counts, replicates, alpha, seed)
        rows = []
        for m, spec in enumerate(specs):
            for i, c in enumerate(counts):
                p = float(cover[m, i])
                rows.append(StudyRow(spec.label, c, p, float(proportion_se(p, replicates)), float(width[m, i])))
        return StudyResult("pointwise-ci", tuple(rows), replicates, seed, redraws, model.to_dict(), counts,
                           {"alpha": alpha, "true_diff": truth.tolist()})
    if target in ("band-single", "band-diff"):
        want = 1 if target == "band-single" else 2
        if model.k != want:
            raise ValidationError(f"target {target} needs a {want}-algorithm model")
        band_specs = tuple(method_specs or BAND_SPECS)
        return _band_study(model, band_specs, counts, replicates, alpha, seed, draws)
    raise ValidationError(f"unknown coverage target {target!r}")


def _variance_rep(job):
    model, counts, ss = job
    ds, redraws = _draw(model, np.random.default_rng(ss))
    n_plus = int(ds.activity.sum())
    cur = prepare_curve(ds.score(model.names[0]), ds.activity, counts)
    theta = cur.q / n_plus
    pi = n_plus / model.n
    return theta, var_jz(theta, cur.lam, cur.r, pi, model.n), var_binomial(theta, n_plus), redraws


def variance_study(
    model: ModelSpec, grid: Sequence[int], replicates: int = 20_000, seed: int | None = None
) -> StudyResult:
    """Monte Carlo variance of the recall estimate against the mean estimated variances.

    Series: ``empirical`` (with the standard error of a sample variance),
    ``var_jz`` and ``var_b`` (means over replicates with their standard errors).
    """
    seed = model.seed if seed is None else seed
    counts = _check_counts(model, grid)
    out = _run(_variance_rep, [(model, counts, ss) for ss in _rep_seeds(seed, replicates)])
    theta = np.array([o[0] for o in out])
    vjz = np.array([o[1] for o in out])
    vb = np.array([o[2] for o in out])
    emp = theta.var(axis=0, ddof=1)
    m4 = np.mean((theta - theta.mean(axis=0)) ** 4, axis=0)
    emp_se = np.sqrt(np.maximum(m4 - emp**2, 0.0) / replicates)
    rows = []
    for i, c in enumerate(counts):
        rows.append(StudyRow("empirical", c, float(emp[i]), float(emp_se[i])))
        rows.append(StudyRow("var_jz", c, float(vjz[:, i].mean()), float(vjz[:, i].std(ddof=1) / math.sqrt(replicates))))
        rows.append(StudyRow("var_b", c, float(vb[:, i].mean()), float(vb[:, i].std(ddof=1) / math.sqrt(replicates))))
    return StudyResult("variance", tuple(rows), replicates, seed, int(sum(o[3] for o in out)), model.to_dict(),
                       counts, {"mean_theta": theta.mean(axis=0).tolist()})

