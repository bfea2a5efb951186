"""Command-line interface: ``hitenrich {curve,compare,bands,simulate}``.

Every output (JSON, CSV or SVG) embeds the tool version, the resolved
configuration and the seed, and nothing time-dependent, so re-running with
``--config <previous output>`` reproduces it byte for byte. Output paths are
not part of the embedded configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from hitenrich import __version__
from hitenrich import svg
from hitenrich.bands import DEFAULT_DRAWS, Band, band
from hitenrich.contingency import lambda_hat, paired_counts
from hitenrich.curves import FractionGrid, hit_enrichment_curve, reference_curves
from hitenrich.dataset import ScoredDataset, load_csv, summarize
from hitenrich.errors import DataError, HitEnrichError, SchemaError, ValidationError
from hitenrich.pointwise import ComparisonResult, Method, MethodSpec, bh_adjust, compare_counts
from hitenrich.simulate import (
    BAND_SPECS,
    DESK_N,
    DESK_PI_PLUS,
    DESK_REPLICATES,
    STUDY_DRAWS,
    ModelSpec,
    StudyResult,
    coverage_study,
    default_counts,
    power_study,
    variance_study,
)

TOOL = "hitenrich"
# Keys never embedded in outputs: where to write is not part of what was computed.
_NOT_CONFIG = {"out", "svg", "config", "handler"}


def _split(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value if str(v).strip()]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _floats(value, what: str) -> list[float]:
    try:
        return [float(v) for v in _split(value)]
    except ValueError:
        raise ValidationError(f"{what}: expected comma-separated numbers, got {value!r}") from None


def _ints(value, what: str) -> list[int]:
    try:
        return [int(v) for v in _split(value)]
    except ValueError:
        raise ValidationError(f"{what}: expected comma-separated integers, got {value!r}") from None


# ---------------------------------------------------------------- input


def _load(args) -> ScoredDataset:
    if not args.input:
        raise ValidationError("--in is required")
    path = Path(args.input)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    algos = _split(args.algos) or None
    ds = load_csv(
        path,
        activity_column=args.activity_column,
        score_columns=algos,
        negate=_split(args.negate),
        id_column=args.id_column,
        delimiter=args.delimiter,
    )
    return ds


def _grid(args, n: int) -> FractionGrid:
    if args.grid_counts is not None and args.grid is not None:
        raise ValidationError("give --grid or --grid-counts, not both")
    if args.grid_counts is not None:
        return FractionGrid.from_counts(_ints(args.grid_counts, "--grid-counts"), n)
    if args.grid is not None:
        return FractionGrid.from_fractions(_floats(args.grid, "--grid"), n)
    if args.grid_points < 1:
        raise ValidationError("--grid-points must be at least 1")
    return FractionGrid.log_spaced(n, args.grid_points)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"--alpha must lie in (0, 1), got {alpha}")


# ---------------------------------------------------------------- output


def _config(args, **resolved) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    cfg.update(resolved)
    return cfg


def _num(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_num(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    return v


def _header(cfg: dict) -> dict:
    return {"tool": TOOL, "version": __version__, "command": cfg["command"], "seed": cfg.get("seed"), "config": cfg}


def _dump_json(cfg: dict, result: dict) -> str:
    doc = _header(cfg)
    doc["result"] = _num(result)
    return json.dumps(doc, indent=2) + "\n"


def _dump_csv(cfg: dict, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: {TOOL} {__version__}\n")
    buf.write(f"# seed: {cfg.get('seed')}\n")
    buf.write(f"# config: {json.dumps(_num(cfg), separators=(',', ':'))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(args, cfg: dict, result: dict, columns, rows, plot: svg.Plot | None) -> None:
    text = _dump_json(cfg, result) if args.format == "json" else _dump_csv(cfg, columns, rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.svg is not None:
        if plot is None:
            raise ValidationError("this output has nothing to plot")
        body = svg.render(plot)
        meta = json.dumps(_header(_num(cfg)), separators=(",", ":")).replace("--", "- -")
        body = body.replace("\n", f"\n<!-- {meta} -->\n", 1)
        Path(args.svg or _default_svg(args)).write_text(body, encoding="utf-8")


def _default_svg(args) -> str:
    if args.out:
        return str(Path(args.out).with_suffix(".svg"))
    return f"{args.command}.svg"


# ---------------------------------------------------------------- curve


def cmd_curve(args) -> None:
    ds = _load(args)
    grid = _grid(args, ds.n)
    summ = summarize(ds)
    curves = []
    for algo in ds.algorithms:
        rec = hit_enrichment_curve(ds, algo, grid)
        curves.append((algo, "recall", rec.values))
        if args.ef:
            curves.append((algo, "enrichment-factor", rec.values / grid.fractions))
    refs = reference_curves(summ.pi_hat, grid)
    for name in ("ideal", "random"):
        curves.append((name, "recall", refs[name].values))
        if args.ef:
            curves.append((name, "enrichment-factor", refs[name].values / grid.fractions))
    cfg = _config(args, algos=list(ds.algorithms), grid=None, grid_counts=list(grid.counts))
    result = {
        "n": ds.n,
        "n_plus": summ.n_plus,
        "pi_hat": summ.pi_hat,
        "counts": list(grid.counts),
        "fractions": grid.fractions,
        "curves": [{"algorithm": a, "kind": k, "values": v} for a, k, v in curves],
    }
    rows = [
        (a, k, c, r, float(val))
        for a, k, v in curves
        for c, r, val in zip(grid.counts, grid.fractions, v)
    ]
    plot = svg.Plot(
        title="Hit enrichment curves", xlabel="fraction tested", ylabel="recall", logx=True,
        lines=[svg.Line(a, grid.fractions, v, dashed=a in ("ideal", "random"),
                        color="#555555" if a in ("ideal", "random") else None)
               for a, k, v in curves if k == "recall"],
    )
    _emit(args, cfg, result, ("algorithm", "kind", "count", "r", "value"), rows, plot)


# ---------------------------------------------------------------- compare


def _pairs(args, ds: ScoredDataset) -> list[tuple[str, str]]:
    if args.pairs:
        out = []
        for item in _split(args.pairs):
            a, sep, b = item.partition(":")
            if not sep or not a or not b:
                raise ValidationError(f"--pairs entries look like a:b, got {item!r}")
            for name in (a, b):
                if name not in ds.algorithms:
                    raise SchemaError(f"unknown algorithm {name!r} in --pairs")
            out.append((a, b))
        return out
    if len(ds.algorithms) < 2:
        raise ValidationError("compare needs at least two algorithms")
    return list(itertools.combinations(ds.algorithms, 2))


def _method_specs(args) -> list[MethodSpec]:
    names = _split(args.methods) or ["emproc"]
    return [MethodSpec.parse(name, args.pooled, args.plus) for name in names]


def _compare_at(ds: ScoredDataset, a: str, b: str, count: int, spec: MethodSpec, alpha: float) -> ComparisonResult:
    r = count / ds.n
    counts = paired_counts(ds, a, b, r)
    lambdas = None
    if spec.method.needs_lambda:
        lambdas = (0.0, 0.0) if count >= ds.n else (lambda_hat(ds, a, r).value, lambda_hat(ds, b, r).value)
    return compare_counts(counts, lambdas, spec, alpha, r=r)


def cmd_compare(args) -> None:
    _check_alpha(args.alpha)
    if args.bh_scope not in ("all", "per-fraction"):
        raise ValidationError("--bh-scope is all or per-fraction")
    ds = _load(args)
    grid = _grid(args, ds.n)
    pairs = _pairs(args, ds)
    specs = _method_specs(args)
    blocks = []
    rows = []
    for spec in specs:
        res = [
            (a, b, c, _compare_at(ds, a, b, c, spec, args.alpha))
            for a, b in pairs
            for c in grid.counts
        ]
        p = np.array([x[3].p_raw for x in res])
        adj = np.empty_like(p)
        if args.bh_scope == "all":
            adj[:] = bh_adjust(p)
        else:
            for c in grid.counts:
                idx = [i for i, x in enumerate(res) if x[2] == c]
                adj[idx] = bh_adjust(p[idx])
        entries = []
        for (a, b, c, r), pa in zip(res, adj):
            r = r.with_p_adj(pa)
            pc = r.counts
            entry = {
                "algo1": a, "algo2": b, "count": c, "r": r.r, "diff": r.diff, "se": r.se, "z": r.z,
                "p_raw": r.p_raw, "p_adj": r.p_adj, "ci_lower": r.ci[0], "ci_upper": r.ci[1],
                "raw_diff": r.raw_diff, "q1": pc.q1, "q2": pc.q2, "q12": pc.q12, "n_plus": pc.n_plus,
                "gamma12": pc.gamma12_hat,
                "lambda1": None if r.lambdas is None else r.lambdas[0],
                "lambda2": None if r.lambdas is None else r.lambdas[1],
                "flags": list(r.flags),
            }
            entries.append(entry)
            rows.append((spec.label, a, b, c, r.r, r.diff, r.se, r.z, r.p_raw, r.p_adj, r.ci[0], r.ci[1],
                         ";".join(r.flags)))
        blocks.append({"method": spec.label, "rows": entries})
    cfg = _config(args, algos=list(ds.algorithms), grid=None, grid_counts=list(grid.counts),
                  pairs=[f"{a}:{b}" for a, b in pairs], methods=[s.method.value for s in specs])
    result = {"n": ds.n, "n_plus": summarize(ds).n_plus, "alpha": args.alpha, "bh_scope": args.bh_scope,
              "blocks": blocks}
    plot = svg.Plot(title="Recall differences", xlabel="fraction tested", ylabel="difference in recall")
    first = blocks[0]["rows"]
    for i, (a, b) in enumerate(pairs):
        sel = [e for e in first if e["algo1"] == a and e["algo2"] == b]
        x = [e["r"] for e in sel]
        plot.regions.append(svg.Region("", x, [e["ci_lower"] for e in sel], [e["ci_upper"] for e in sel],
                                       color=svg.PALETTE[i % len(svg.PALETTE)]))
        plot.lines.append(svg.Line(f"{a} - {b}", x, [e["diff"] for e in sel], color=svg.PALETTE[i % len(svg.PALETTE)]))
    columns = ("method", "algo1", "algo2", "count", "r", "diff", "se", "z", "p_raw", "p_adj", "ci_lower",
               "ci_upper", "flags")
    _emit(args, cfg, result, columns, rows, plot)


# ---------------------------------------------------------------- bands


def _band_dict(b: Band) -> dict:
    return {
        "target": list(b.target), "kind": b.kind, "method": b.method, "plus": b.plus, "alpha": b.alpha,
        "q": b.q, "mc_draws": b.mc_draws, "seed": b.seed, "flags": list(b.flags),
        "counts": list(b.grid.counts), "fractions": b.grid.fractions,
        "center": b.center, "lower": b.lower, "upper": b.upper, "se": b.se,
    }


def cmd_bands(args) -> None:
    _check_alpha(args.alpha)
    ds = _load(args)
    grid = _grid(args, ds.n)
    diffs = []
    for item in args.diff or []:
        pair = _split(item)
        if len(pair) != 2:
            raise ValidationError(f"--diff takes two comma-separated algorithms, got {item!r}")
        for name in pair:
            if name not in ds.algorithms:
                raise SchemaError(f"unknown algorithm {name!r} in --diff")
        diffs.append(tuple(pair))
    single = args.single or not diffs
    targets: list[tuple[str, ...]] = [(a,) for a in ds.algorithms] if single else []
    targets += diffs
    bands = [band(ds, t, grid, method=args.method, plus=args.plus, alpha=args.alpha, draws=args.draws,
                  seed=args.seed) for t in targets]
    cfg = _config(args, algos=list(ds.algorithms), grid=None, grid_counts=list(grid.counts), single=single,
                  diff=[",".join(d) for d in diffs])
    result = {"n": ds.n, "n_plus": summarize(ds).n_plus, "bands": [_band_dict(b) for b in bands]}
    rows = [
        ("-".join(b.target), b.method, b.plus, b.q, c, r, ce, lo, hi, se)
        for b in bands
        for c, r, ce, lo, hi, se in zip(b.grid.counts, b.grid.fractions, b.center, b.lower, b.upper, b.se)
    ]
    plot = svg.Plot(title="Simultaneous confidence bands", xlabel="fraction tested",
                    ylabel="difference in recall" if not single else "recall")
    for i, b in enumerate(bands):
        color = svg.PALETTE[i % len(svg.PALETTE)]
        plot.regions.append(svg.Region("", b.grid.fractions, b.lower, b.upper, color=color))
        plot.lines.append(svg.Line(" - ".join(b.target), b.grid.fractions, b.center, color=color))
    columns = ("target", "method", "plus", "q", "count", "r", "center", "lower", "upper", "se")
    _emit(args, cfg, result, columns, rows, plot)


# ---------------------------------------------------------------- simulate


def _model(args) -> ModelSpec:
    kw = dict(n=args.n, pi_plus=args.pi_plus, seed=args.seed)
    if args.target == "band-single" or args.case is not None:
        if args.case is None:
            raise ValidationError("--target band-single needs --case 1..5")
        return ModelSpec.case(args.case, **kw)
    if args.family not in ("binormal", "bibeta"):
        raise ValidationError("--family is binormal or bibeta")
    if args.null not in (None, 1, 2):
        raise ValidationError("--null is 1 or 2")
    build = ModelSpec.binormal if args.family == "binormal" else ModelSpec.bibeta
    return build(args.rho, null=args.null, **kw)


def cmd_simulate(args) -> None:
    _check_alpha(args.alpha)
    if args.reps < 1:
        raise ValidationError("--reps must be positive")
    if args.target is None:
        args.target = "band-single" if args.case is not None else "pointwise-ci"
    if args.study == "coverage" and args.target != "pointwise-ci" and args.svg is not None:
        raise ValidationError("band studies report one whole-curve number per band; no SVG is drawn")
    if args.study == "variance" and args.case is None:
        raise ValidationError("variance studies take a single-algorithm --case")
    model = _model(args)
    counts = _ints(args.grid_counts, "--grid-counts") if args.grid_counts is not None else list(default_counts(model.n))
    resolved: dict[str, Any] = {"grid_counts": counts}
    if args.study == "power":
        specs = _method_specs(args) if args.methods else [MethodSpec.parse(m, args.pooled, args.plus)
                                                         for m in ("emproc", "mcnemar", "indjz", "corrbinom")]
        resolved["methods"] = [s.method.value for s in specs]
        res = power_study(model, specs, counts, replicates=args.reps, alpha=args.alpha, seed=args.seed)
    elif args.study == "variance":
        res = variance_study(model, counts, replicates=args.reps, seed=args.seed)
    elif args.target == "pointwise-ci":
        names = _split(args.methods) or ["emproc"]
        specs = []
        for name in names:
            base = MethodSpec.parse(name)
            specs.append(base)
            if base.method is not Method.MCNEMAR:
                specs.append(MethodSpec(base.method, plus=True))
        resolved["methods"] = names
        res = coverage_study(model, "pointwise-ci", specs, counts, args.reps, args.alpha, args.seed)
    else:
        names = _split(args.methods) or ["supt", "bonferroni"]
        for name in names:
            if name not in ("supt", "bonferroni"):
                raise ValidationError(f"band methods are supt and bonferroni, got {name!r}")
        specs = [(m, p) for m, p in BAND_SPECS if m in names]
        resolved["methods"] = names
        res = coverage_study(model, args.target, specs, counts, args.reps, args.alpha, args.seed, args.draws)
    cfg = _config(args, **resolved)
    rows = [(r.series, r.x, r.estimate, r.mc_se, r.mean_width) for r in res.rows]
    _emit(args, cfg, res.to_dict(), ("series", "x", "estimate", "mc_se", "mean_width"), rows, _study_plot(res))


def _study_plot(res: StudyResult) -> svg.Plot | None:
    if any(r.x is None for r in res.rows):
        return None
    ylabel = {"power": "power", "type1": "type I error", "pointwise-ci": "coverage", "variance": "variance"}
    plot = svg.Plot(title=f"{res.kind} study ({res.replicates} replicates)", xlabel="number of tests",
                    ylabel=ylabel.get(res.kind, "estimate"))
    for i, name in enumerate(res.series_names):
        rows = res.series(name)
        x = [r.x for r in rows]
        est = np.array([r.estimate for r in rows])
        se = np.array([r.mc_se for r in rows])
        color = svg.PALETTE[i % len(svg.PALETTE)]
        plot.regions.append(svg.Region("", x, est - 1.96 * se, est + 1.96 * se, color=color))
        plot.lines.append(svg.Line(name, x, est, color=color))
    return plot


# ---------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser, data: bool = True) -> None:
    if data:
        p.add_argument("--in", dest="input", help="CSV with an activity column and one score column per algorithm")
        p.add_argument("--algos", help="comma-separated score columns (default: all but activity/id)")
        p.add_argument("--negate", help="comma-separated algorithms whose scores rank low-is-better")
        p.add_argument("--activity-column", default="activity")
        p.add_argument("--id-column", default=None)
        p.add_argument("--delimiter", default=",")
        p.add_argument("--grid", help="comma-separated testing fractions")
        p.add_argument("--grid-counts", help="comma-separated numbers of ligands tested")
        p.add_argument("--grid-points", type=int, default=40, help="log-spaced points when no grid is given")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--svg", nargs="?", const="", default=None, metavar="PATH", help="also write an SVG plot")
    p.add_argument("--config", help="JSON config, or a previous JSON output, to rerun")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="hit enrichment (and enrichment factor) curves")
    _add_common(p)
    p.add_argument("--ef", action="store_true", help="also report enrichment factors")
    p.set_defaults(handler=cmd_curve)

    p = sub.add_parser("compare", help="pointwise tests of recall differences")
    _add_common(p)
    p.add_argument("--methods", help="comma-separated: emproc, mcnemar, indjz, corrbinom")
    p.add_argument("--pooled", action="store_true")
    p.add_argument("--plus", action="store_true")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--pairs", help="comma-separated a:b pairs (default: all pairs)")
    p.add_argument("--bh-scope", default="all", help="all (every pair and fraction) or per-fraction")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("bands", help="simultaneous confidence bands")
    _add_common(p)
    p.add_argument("--single", action="store_true", help="a band for each algorithm's curve")
    p.add_argument("--diff", action="append", metavar="A,B", help="a band for curve A minus curve B")
    p.add_argument("--method", choices=("supt", "bonferroni"), default="supt")
    p.add_argument("--plus", action="store_true")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--draws", type=int, default=DEFAULT_DRAWS)
    p.set_defaults(handler=cmd_bands)

    p = sub.add_parser("simulate", help="Monte Carlo power, type I error, coverage and variance studies")
    p.add_argument("study", choices=("power", "coverage", "variance"))
    _add_common(p, data=False)
    p.add_argument("--family", default="bibeta", help="binormal or bibeta")
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--null", type=int, default=None, help="both algorithms take algorithm 1's or 2's laws")
    p.add_argument("--case", type=int, default=None, help="single-curve case 1..5")
    p.add_argument("--target", choices=("pointwise-ci", "band-single", "band-diff"), default=None,
                   help="coverage target (default: band-single with --case, else pointwise-ci)")
    p.add_argument("--n", type=int, default=DESK_N)
    p.add_argument("--pi-plus", type=float, default=DESK_PI_PLUS)
    p.add_argument("--reps", type=int, default=DESK_REPLICATES)
    p.add_argument("--methods")
    p.add_argument("--pooled", action="store_true")
    p.add_argument("--plus", action="store_true")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--draws", type=int, default=STUDY_DRAWS)
    p.add_argument("--grid-counts", help="comma-separated numbers of tests")
    p.set_defaults(handler=cmd_simulate)
    return parser


def _config_defaults(argv: list[str]) -> tuple[str | None, dict]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return None, {}
    path = Path(known.config)
    if not path.is_file():
        raise DataError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"config is not valid JSON: {exc}") from None
    cfg = doc.get("config", doc)
    if not isinstance(cfg, dict) or "command" not in cfg:
        raise DataError("config has no command")
    return cfg["command"], {k: v for k, v in cfg.items() if k != "command"}


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command, defaults = _config_defaults(argv)
    if command is not None:
        if not any(a in ("curve", "compare", "bands", "simulate") for a in argv):
            study = defaults.get("study")
            argv = [command] + ([study] if command == "simulate" and study else []) + argv
        sub = parser._subparsers._group_actions[0].choices[command]  # type: ignore[union-attr]
        known = {a.dest for a in sub._actions}
        sub.set_defaults(**{k: v for k, v in defaults.items() if k in known and k != "study"})
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        args.handler(args)
    except HitEnrichError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
