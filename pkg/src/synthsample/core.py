"""Feature tables, class partitions and rater-label aggregation."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data (bad CSV cells, invalid labels, ...)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureTable:
    """Dense numeric features with one integer class label per row.

    ``n_classes`` is the number of classes L; labels must lie in ``1..L``.
    When omitted it is inferred as the largest label present.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    n_classes: int = 0

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or len(y) != X.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape} labels")
        if y.size and not np.all(np.equal(np.mod(y, 1), 0)):
            raise DataError("labels must be integers")
        y = y.astype(np.int64)
        names = tuple(str(n) for n in self.feature_names)
        if X.shape[1] < 1:
            raise DataError("a feature table needs at least one feature")
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} feature names for {X.shape[1]} columns")
        if len(set(names)) != len(names):
            raise DataError("duplicate feature names")
        if not np.all(np.isfinite(X)):
            r, c = np.argwhere(~np.isfinite(X))[0]
            raise DataError(f"non-finite value at row {r}, column {names[c]!r}")
        n_classes = int(self.n_classes) or (int(y.max()) if y.size else 0)
        if y.size and (y.min() < 1 or y.max() > n_classes):
            raise DataError(f"labels must lie in 1..{n_classes}")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "n_classes", n_classes)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, rows: Sequence[int] | np.ndarray) -> "FeatureTable":
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureTable(self.features[rows], self.labels[rows],
                            self.feature_names, self.n_classes)

    def append(self, features: np.ndarray, labels: np.ndarray) -> "FeatureTable":
        """Return a new table with extra rows stacked after the existing ones."""
        features = np.asarray(features, dtype=np.float64).reshape(-1, self.n_features)
        return FeatureTable(np.vstack([self.features, features]),
                            np.concatenate([self.labels, np.asarray(labels, dtype=np.int64)]),
                            self.feature_names, self.n_classes)


@dataclass(frozen=True)
class ClassPartition:
    """Row indices per class label, for every label in ``1..L``.

    Absent classes map to an empty index array with count 0.
    """

    indices: dict[int, np.ndarray]
    counts: dict[int, int]
    majority_class: int

    @property
    def majority_count(self) -> int:
        return self.counts[self.majority_class]

    def present_classes(self) -> list[int]:
        return [c for c, n in self.counts.items() if n > 0]

    def minority_classes(self) -> list[int]:
        return [c for c in self.present_classes() if c != self.majority_class]


@dataclass(frozen=True)
class RatingSet:
    """Four rater scores on the 1..5 scale."""

    ratings: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        r = tuple(self.ratings)
        if len(r) != 4:
            raise DataError(f"expected 4 ratings, got {len(r)}")
        for v in r:
            if isinstance(v, bool) or int(v) != v or not 1 <= v <= 5:
                raise DataError(f"rating {v!r} not an integer in 1..5")
        object.__setattr__(self, "ratings", tuple(int(v) for v in r))


def aggregate_rating(r: RatingSet | Iterable[int]) -> int:
    """Collapse four ratings to one label: the unique mode, else ceil(mean)."""
    if not isinstance(r, RatingSet):
        r = RatingSet(tuple(r))
    counts = Counter(r.ratings).most_common()
    top = counts[0][1]
    modes = [v for v, n in counts if n == top]
    if len(modes) == 1:
        return modes[0]
    # sum of four ints: exact integer ceiling, no float rounding
    return -(-sum(r.ratings) // len(r.ratings))


def partition(t: FeatureTable) -> ClassPartition:
    if len(t) == 0:
        raise DataError("cannot partition an empty table")
    labels = t.labels
    indices = {c: np.flatnonzero(labels == c) for c in range(1, t.n_classes + 1)}
    counts = {c: len(ix) for c, ix in indices.items()}
    # max() returns the first maximal key, i.e. the lowest label on ties
    majority = max(counts, key=lambda c: counts[c])
    return ClassPartition(indices, counts, majority)


def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"non-numeric value {cell!r} at row {row}, column {col!r}") from None
    if not math.isfinite(v):
        raise DataError(f"non-finite value {cell!r} at row {row}, column {col!r}")
    return v


def load_csv(path: str | Path, label_column: str, n_classes: int = 0,
             ignore_columns: Iterable[str] = ()) -> FeatureTable:
    """Read a header-first CSV into a :class:`FeatureTable`.

    Every column other than ``label_column`` (and ``ignore_columns``) is a
    feature, kept in file order. Row numbers in error messages are 1-based
    data rows (the header is not counted).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row missing") from None
        n_label = header.count(label_column)
        if n_label == 0:
            raise DataError(f"{path}: label column {label_column!r} not found")
        if n_label > 1:
            raise DataError(f"{path}: label column {label_column!r} appears {n_label} times")
        skip = set(ignore_columns)
        label_ix = header.index(label_column)
        feat_ix = [i for i, h in enumerate(header) if i != label_ix and h not in skip]
        rows, labels = [], []
        for rownum, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}: row {rownum} has {len(rec)} cells, "
                                f"header has {len(header)}")
            lab = _parse_float(rec[label_ix], rownum, label_column)
            if lab != int(lab):
                raise DataError(f"{path}: non-integer label {rec[label_ix]!r} at row {rownum}")
            labels.append(int(lab))
            rows.append([_parse_float(rec[i], rownum, header[i]) for i in feat_ix])
    names = [header[i] for i in feat_ix]
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return FeatureTable(X, np.array(labels, dtype=np.int64), names, n_classes)


def write_csv(path: str | Path, t: FeatureTable, label_column: str = "label",
              extra: dict[str, Sequence] | None = None) -> None:
    """Write a table back out; ``extra`` columns are appended after the label."""
    extra = extra or {}
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*t.feature_names, label_column, *extra])
        for i in range(len(t)):
            w.writerow([*(repr(float(v)) for v in t.features[i]), int(t.labels[i]),
                        *(col[i] for col in extra.values())])
