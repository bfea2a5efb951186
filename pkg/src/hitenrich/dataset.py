"""Scored screening datasets: validation, CSV ingestion and class summaries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from hitenrich.errors import DegenerateClassError, ParseError, SchemaError, ValidationError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScoredDataset:
    """n ligands with a binary activity flag and one score vector per algorithm.

    Larger scores mean stronger belief that a ligand is active. Arrays are
    copied and made read-only on construction.
    """

    activity: np.ndarray
    scores: Mapping[str, np.ndarray]
    ids: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        act = np.asarray(self.activity)
        if act.ndim != 1 or act.size == 0:
            raise ValidationError("activity must be a nonempty 1-d array")
        if not np.all((act == 0) | (act == 1)):
            raise ValidationError("activity must contain only 0/1 values")
        act = act.astype(np.int8)
        if not self.scores:
            raise ValidationError("at least one score vector is required")
        scores: dict[str, np.ndarray] = {}
        for name, s in self.scores.items():
            s = np.asarray(s, dtype=float)
            if s.shape != act.shape:
                raise ValidationError(
                    f"score vector {name!r} has length {s.size}, expected {act.size}"
                )
            if not np.all(np.isfinite(s)):
                raise ValidationError(f"score vector {name!r} contains NaN or infinite values")
            scores[str(name)] = _frozen(s)
        n_plus = int(act.sum())
        if n_plus == 0 or n_plus == act.size:
            raise DegenerateClassError(
                f"dataset needs both actives and inactives (n={act.size}, actives={n_plus})"
            )
        if self.ids is not None and len(self.ids) != act.size:
            raise ValidationError("ids length does not match activity length")
        object.__setattr__(self, "activity", _frozen(act))
        object.__setattr__(self, "scores", scores)
        if self.ids is not None:
            object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

    @property
    def n(self) -> int:
        return int(self.activity.size)

    @property
    def algorithms(self) -> tuple[str, ...]:
        return tuple(self.scores)

    def score(self, algo: str) -> np.ndarray:
        try:
            return self.scores[algo]
        except KeyError:
            raise SchemaError(
                f"unknown algorithm {algo!r}; available: {', '.join(self.scores)}"
            ) from None

    def negated(self, names: Iterable[str]) -> "ScoredDataset":
        """Copy with the listed score columns multiplied by -1."""
        names = set(names)
        for name in names:
            self.score(name)
        scores = {k: (-v if k in names else v) for k, v in self.scores.items()}
        return ScoredDataset(self.activity, scores, self.ids)

    def subset(self, algos: Sequence[str]) -> "ScoredDataset":
        return ScoredDataset(self.activity, {a: self.score(a) for a in algos}, self.ids)


@dataclass(frozen=True)
class ActivitySummary:
    n: int
    n_plus: int
    pi_hat: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pi_hat", self.n_plus / self.n)


def summarize(ds: ScoredDataset) -> ActivitySummary:
    n_plus = int(ds.activity.sum())
    if n_plus == 0 or n_plus == ds.n:
        raise DegenerateClassError(f"degenerate classes: n={ds.n}, actives={n_plus}")
    return ActivitySummary(n=ds.n, n_plus=n_plus)


def load_csv(
    path: str | Path,
    activity_column: str = "activity",
    score_columns: Sequence[str] | None = None,
    negate: Sequence[str] = (),
    *,
    id_column: str | None = None,
    delimiter: str = ",",
    active_labels: Sequence[str] | None = None,
    inactive_labels: Sequence[str] | None = None,
) -> ScoredDataset:
    """Read a screening CSV with a header row.

    ``score_columns`` defaults to every column other than the activity and id
    columns. Activity must be ``0``/``1`` unless ``active_labels`` and
    ``inactive_labels`` are given, in which case only those labels are
    accepted. Row numbers in error messages count data rows from 1.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    if active_labels is None and inactive_labels is None:
        label_map = {"0": 0, "1": 1}
    else:
        label_map = {str(v).strip(): 1 for v in active_labels or ()}
        label_map.update({str(v).strip(): 0 for v in inactive_labels or ()})
        if 0 not in label_map.values() or 1 not in label_map.values():
            raise ValidationError("both active and inactive labels must be supplied")

    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path} is empty; a header row is required") from None
        rows = [row for row in reader if any(cell.strip() for cell in row)]

    def col(name: str) -> int:
        try:
            return header.index(name)
        except ValueError:
            raise SchemaError(f"column {name!r} not found in {path}") from None

    act_idx = col(activity_column)
    if id_column is None and "id" in header:
        id_column = "id"
    id_idx = col(id_column) if id_column is not None else None
    if score_columns is None:
        skip = {act_idx} | ({id_idx} if id_idx is not None else set())
        score_columns = [h for i, h in enumerate(header) if i not in skip]
    if not score_columns:
        raise SchemaError("no score columns")
    score_idx = {name: col(name) for name in score_columns}
    for name in negate:
        if name not in score_idx:
            raise SchemaError(f"negated column {name!r} is not a selected score column")

    activity = np.empty(len(rows), dtype=np.int8)
    scores = {name: np.empty(len(rows)) for name in score_columns}
    ids: list[str] = []
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise ParseError(f"row {r}: expected {len(header)} fields, got {len(row)}")
        label = row[act_idx].strip()
        if label not in label_map:
            raise ParseError(f"row {r}: activity value {label!r} is not binary")
        activity[r - 1] = label_map[label]
        for name, j in score_idx.items():
            cell = row[j].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"row {r}, column {name!r}: cannot parse {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"row {r}, column {name!r}: score {cell!r} is not finite")
            scores[name][r - 1] = v
        if id_idx is not None:
            ids.append(row[id_idx])

    negate = set(negate)
    scores = {k: (-v if k in negate else v) for k, v in scores.items()}
    return ScoredDataset(activity, scores, tuple(ids) if id_idx is not None else None)
