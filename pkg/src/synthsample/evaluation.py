"""Stratified repeated hold-out evaluation of oversampling methods.

Each repeat splits the table, oversamples the training part only, fits a
random forest on it and scores the untouched test part. Split, sampler and
forest seeds are all derived from (seed, repeat), so every method sees the
same test partitions.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FeatureTable, partition
from .forest import ForestParams, train_forest
from .oversamplers import (NO_NEIGHBOR, SYNTHETIC_METHODS, SamplerConfig, plan_balance,
                           generate)

BASELINE = "none"
METHOD_ORDER = (BASELINE, "smote", "b1", "b2", "adasyn", "random")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    repeats: int = 30
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise EvaluationError("train_fraction must lie in (0, 1)")
        if self.repeats < 1:
            raise EvaluationError("repeats must be >= 1")


def _derived_seed(seed: int, repeat: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, repeat, stream]).generate_state(1)[0])


def stratified_split(t: FeatureTable, spec: SplitSpec, repeat_index: int):
    """Return sorted (train_rows, test_rows) for one repeat.

    Each class contributes round(fraction * N_c) training rows, kept within
    1..N_c-1 so both sides see every class.
    """
    part = partition(t)
    rng = np.random.default_rng([spec.seed, repeat_index, 0])
    train, test = [], []
    for c in part.present_classes():
        rows = part.indices[c]
        n = len(rows)
        if n < 2:
            raise EvaluationError(f"class {c} has {n} row(s); stratified hold-out needs >= 2")
        n_train = int(np.floor(spec.train_fraction * n + 0.5))
        n_train = min(max(n_train, 1), n - 1)
        perm = rng.permutation(rows)
        train.append(perm[:n_train])
        test.append(perm[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def confusion_matrix(y_true, y_pred, classes) -> np.ndarray:
    """Rows are true classes, columns predicted classes, both in ``classes`` order."""
    classes = list(classes)
    pos = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, b in zip(np.asarray(y_true).tolist(), np.asarray(y_pred).tolist()):
        cm[pos[a], pos[b]] += 1
    return cm


def sensitivity(confusion: np.ndarray, cls: int, classes=None) -> float:
    """Per-class recall in percent. ``cls`` is a label when ``classes`` is given, else a position."""
    i = list(classes).index(cls) if classes is not None else cls
    n = confusion[i].sum()
    if n == 0:
        raise EvaluationError(f"class {cls} absent from the test set")
    return 100.0 * confusion[i, i] / n


def accuracy(confusion: np.ndarray) -> float:
    return 100.0 * np.trace(confusion) / confusion.sum()


@dataclass
class RepeatRecord:
    repeat: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    confusion: np.ndarray
    # synthetic provenance in original-table row ids; NO_NEIGHBOR for duplicates
    synthetic_parents: np.ndarray
    synthetic_neighbors: np.ndarray

    @property
    def n_synthetic(self) -> int:
        return len(self.synthetic_parents)


@dataclass
class ExperimentReport:
    method: str
    classes: tuple[int, ...]
    records: list[RepeatRecord]
    config: dict = field(default_factory=dict)

    def sensitivities(self) -> np.ndarray:
        """(repeats, classes) per-repeat sensitivity in percent."""
        return np.array([[sensitivity(r.confusion, i) for i in range(len(self.classes))]
                         for r in self.records])

    @property
    def sensitivity(self) -> dict[int, float]:
        means = self.sensitivities().mean(axis=0)
        return dict(zip(self.classes, means.tolist()))

    @property
    def accuracy(self) -> float:
        return float(np.mean([accuracy(r.confusion) for r in self.records]))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "config": self.config,
            "sensitivity": {str(c): v for c, v in self.sensitivity.items()},
            "accuracy": self.accuracy,
            "repeats": [{"repeat": r.repeat, "n_train": len(r.train_rows),
                         "n_test": len(r.test_rows), "n_synthetic": r.n_synthetic,
                         "confusion": r.confusion.tolist()} for r in self.records],
        }


def run_experiment(t: FeatureTable, spec: SplitSpec, sampler: SamplerConfig | None,
                   forest: ForestParams | None = None) -> ExperimentReport:
    forest = forest or ForestParams()
    classes = tuple(partition(t).present_classes())
    records = []
    for rep in range(spec.repeats):
        train_rows, test_rows = stratified_split(t, spec, rep)
        train = t.subset(train_rows)
        parents = neighbors = np.empty(0, dtype=np.int64)
        if sampler is not None:
            cfg = dataclasses.replace(sampler, seed=_derived_seed(spec.seed, rep, 1))
            batch = generate(train, plan_balance(partition(train)), cfg, None, cfg.method)
            train = train.append(batch.features, batch.labels)
            parents = train_rows[batch.parents]
            neighbors = np.where(batch.neighbors == NO_NEIGHBOR, NO_NEIGHBOR,
                                 train_rows[np.maximum(batch.neighbors, 0)])
        model = train_forest(train, seed=_derived_seed(spec.seed, rep, 2), params=forest)
        pred = model.predict(t.features[test_rows])
        cm = confusion_matrix(t.labels[test_rows], pred, classes)
        records.append(RepeatRecord(rep, train_rows, test_rows, cm, parents, neighbors))
    config = {"split": dataclasses.asdict(spec), "forest": dataclasses.asdict(forest),
              "sampler": None if sampler is None else
              {**dataclasses.asdict(sampler), "method": sampler.method.value}}
    return ExperimentReport(BASELINE if sampler is None else sampler.method.value,
                            classes, records, config)


def check_hygiene(report: ExperimentReport) -> None:
    """Raise if any repeat let test rows into training or synthetic provenance."""
    for r in report.records:
        test = set(r.test_rows.tolist())
        if test & set(r.train_rows.tolist()):
            raise EvaluationError(f"repeat {r.repeat}: train and test overlap")
        used = set(r.synthetic_parents.tolist()) | set(r.synthetic_neighbors.tolist())
        used.discard(NO_NEIGHBOR)
        if used & test:
            raise EvaluationError(f"repeat {r.repeat}: synthetic rows derived from test rows")


@dataclass
class ComparisonReport:
    """Several methods evaluated on the same splits."""

    reports: dict[str, ExperimentReport]

    @property
    def classes(self) -> tuple[int, ...]:
        return next(iter(self.reports.values())).classes

    def avg_increase(self) -> dict[int, float] | None:
        """Mean over the interpolating methods of (method - baseline) sensitivity.

        Random duplication is excluded. None without a baseline or without
        any interpolating method.
        """
        synth = [m.value for m in SYNTHETIC_METHODS if m.value in self.reports]
        if BASELINE not in self.reports or not synth:
            return None
        base = self.reports[BASELINE].sensitivity
        return {c: float(np.mean([self.reports[m].sensitivity[c] - base[c] for m in synth]))
                for c in self.classes}

    def to_dict(self) -> dict:
        inc = self.avg_increase()
        return {
            "classes": list(self.classes),
            "methods": list(self.reports),
            "sensitivity": {m: {str(c): v for c, v in r.sensitivity.items()}
                            for m, r in self.reports.items()},
            "accuracy": {m: r.accuracy for m, r in self.reports.items()},
            "avg_increase": None if inc is None else {str(c): v for c, v in inc.items()},
            "runs": {m: r.to_dict() for m, r in self.reports.items()},
        }

    def write(self, path: str | Path) -> list[Path]:
        """Write by extension; CSV also gets a ``<stem>_repeats.csv`` companion."""
        path = Path(path)
        if path.suffix.lower() == ".json":
            path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
            return [path]
        methods = list(self.reports)
        inc = self.avg_increase()
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "class", *methods, "avg_increase"])
            for c in self.classes:
                w.writerow(["sensitivity", c, *(repr(self.reports[m].sensitivity[c]) for m in methods),
                            "" if inc is None else repr(inc[c])])
            w.writerow(["accuracy", "", *(repr(self.reports[m].accuracy) for m in methods), ""])
        raw = path.with_name(path.stem + "_repeats.csv")
        with raw.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "repeat", "n_train", "n_test", "n_synthetic", "accuracy",
                        *(f"sensitivity_{c}" for c in self.classes)])
            for m, rep in self.reports.items():
                sens = rep.sensitivities()
                for r, s in zip(rep.records, sens):
                    w.writerow([m, r.repeat, len(r.train_rows), len(r.test_rows), r.n_synthetic,
                                repr(accuracy(r.confusion)), *(repr(float(v)) for v in s)])
        return [path, raw]


def run_methods(t: FeatureTable, spec: SplitSpec, methods, sampler: SamplerConfig | None = None,
                forest: ForestParams | None = None, include_baseline: bool = True
                ) -> ComparisonReport:
    """Evaluate each method (plus the no-oversampling baseline) on shared splits.

    ``sampler`` supplies K, lambda mode and the other sampler options; its
    method and seed are overridden per run.
    """
    base = sampler or SamplerConfig()
    names = [str(getattr(m, "value", m)) for m in methods]
    if include_baseline and BASELINE not in names:
        names.insert(0, BASELINE)
    names = sorted(dict.fromkeys(names), key=lambda m: METHOD_ORDER.index(m)
                   if m in METHOD_ORDER else len(METHOD_ORDER))
    reports = {}
    for name in names:
        cfg = None if name == BASELINE else dataclasses.replace(base, method=name)
        reports[name] = run_experiment(t, spec, cfg, forest)
    return ComparisonReport(reports)
