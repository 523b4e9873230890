"""Jensen-Shannon comparison of per-class feature distributions.

``js_similarity`` is the square root of the base-2 JS divergence. Despite the
name it is a distance: 0 for identical histograms, 1 for disjoint ones.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FeatureTable, partition


class DivergenceError(ValueError):
    pass


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    mass: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.mass)


def equal_width_edges(lo: float, hi: float, bins: int) -> np.ndarray:
    if bins < 1:
        raise DivergenceError("need at least one bin")
    if not hi > lo:
        raise DivergenceError(f"degenerate range [{lo}, {hi}]")
    return np.linspace(lo, hi, bins + 1)


def build_histogram(values, edges) -> Histogram:
    """Normalised bin masses; values outside the edges land in the end bins."""
    v = np.asarray(values, dtype=np.float64).ravel()
    e = np.asarray(edges, dtype=np.float64)
    if v.size == 0:
        raise DivergenceError("cannot build a histogram from no values")
    if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
        raise DivergenceError("edges must be strictly ascending with at least 2 entries")
    nb = e.size - 1
    # bins are [e_i, e_{i+1}); the top edge itself belongs to the last bin
    bins = np.clip(np.searchsorted(e, v, side="right") - 1, 0, nb - 1)
    counts = np.bincount(bins, minlength=nb).astype(np.float64)
    return Histogram(e, counts / v.size)


def _check_pair(P: Histogram, Q: Histogram) -> None:
    if P.edges.shape != Q.edges.shape or not np.array_equal(P.edges, Q.edges):
        raise DivergenceError("histograms have different bin edges")


def _kl_to_mixture(p: np.ndarray, m: np.ndarray) -> float:
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / m[nz])))


def js_divergence(P: Histogram, Q: Histogram) -> float:
    """Base-2 Jensen-Shannon divergence, in [0, 1]."""
    _check_pair(P, Q)
    p, q = P.mass, Q.mass
    m = 0.5 * (p + q)
    jsd = 0.5 * _kl_to_mixture(p, m) + 0.5 * _kl_to_mixture(q, m)
    return min(max(jsd, 0.0), 1.0)


def js_similarity(P: Histogram, Q: Histogram) -> float:
    return float(np.sqrt(js_divergence(P, Q)))


@dataclass(frozen=True)
class DivergenceReport:
    """JS similarity per (class, feature) for the minority classes.

    ``overall_mean`` averages every entry; ``mean_of_class_means`` averages
    the per-class means. With equal feature counts per class they coincide.
    """

    classes: tuple[int, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray  # shape (len(classes), len(feature_names))
    bins: int
    histograms: dict | None = None

    @property
    def per_class_mean(self) -> dict[int, float]:
        return {c: float(self.values[i].mean()) for i, c in enumerate(self.classes)}

    @property
    def overall_mean(self) -> float:
        return float(self.values.mean()) if self.values.size else 0.0

    @property
    def mean_of_class_means(self) -> float:
        means = list(self.per_class_mean.values())
        return float(np.mean(means)) if means else 0.0

    def entry(self, cls: int, feature: str) -> float:
        return float(self.values[self.classes.index(cls), self.feature_names.index(feature)])

    def ranking(self, cls: int) -> list[tuple[str, float]]:
        """Features of ``cls`` by descending similarity; file order breaks ties."""
        row = self.values[self.classes.index(cls)]
        order = np.lexsort((np.arange(len(row)), -row))
        return [(self.feature_names[j], float(row[j])) for j in order]

    def to_dict(self) -> dict:
        out = {"bins": self.bins, "overall_mean": self.overall_mean,
               "mean_of_class_means": self.mean_of_class_means, "classes": {}}
        for c in self.classes:
            out["classes"][str(c)] = {
                "mean": self.per_class_mean[c],
                "features": [{"feature": f, "js_similarity": v, "rank": r}
                             for r, (f, v) in enumerate(self.ranking(c), start=1)],
            }
        return out

    def write(self, path: str | Path) -> None:
        """Export by extension: ``.json`` nested, anything else flat CSV."""
        path = Path(path)
        if path.suffix.lower() == ".json":
            path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
            return
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["class", "feature", "js_similarity", "rank"])
            for c in self.classes:
                for r, (f, v) in enumerate(self.ranking(c), start=1):
                    w.writerow([c, f, repr(v), r])

    def write_histograms(self, path: str | Path) -> None:
        if self.histograms is None:
            raise DivergenceError("report was built without keep_histograms=True")
        dump = {f"{c}/{f}": h for (c, f), h in self.histograms.items()}
        Path(path).write_text(json.dumps(dump, indent=1, sort_keys=True) + "\n",
                              encoding="utf-8")


def compare_feature(orig: np.ndarray, resampled: np.ndarray, bins: int):
    """JS similarity of two 1-D samples on shared equal-width edges.

    Returns (similarity, edges, original mass, resampled mass); edges and
    masses are None when both samples sit on a single value.
    """
    lo = min(orig.min(), resampled.min())
    hi = max(orig.max(), resampled.max())
    if hi == lo:
        return 0.0, None, None, None
    edges = equal_width_edges(lo, hi, bins)
    P = build_histogram(orig, edges)
    Q = build_histogram(resampled, edges)
    return js_similarity(P, Q), edges, P.mass, Q.mass


def audit(original: FeatureTable, resampled: FeatureTable, bins: int = 50,
          keep_histograms: bool = False) -> DivergenceReport:
    """Per-class, per-feature JS similarity between two versions of a dataset.

    Only minority classes (every present class except the original
    majority) are compared.
    """
    if bins < 2:
        raise DivergenceError("bins must be >= 2")
    if original.feature_names != resampled.feature_names:
        raise DivergenceError("feature columns differ between original and resampled data")
    po, pr = partition(original), partition(resampled)
    present_o, present_r = set(po.present_classes()), set(pr.present_classes())
    if present_o != present_r:
        raise DivergenceError(f"classes present in only one table: "
                              f"{sorted(present_o ^ present_r)}")
    classes = tuple(c for c in sorted(present_o) if c != po.majority_class)
    values = np.zeros((len(classes), original.n_features))
    hists = {} if keep_histograms else None
    for i, c in enumerate(classes):
        Xo = original.features[po.indices[c]]
        Xr = resampled.features[pr.indices[c]]
        for j, name in enumerate(original.feature_names):
            sim, edges, pm, qm = compare_feature(Xo[:, j], Xr[:, j], bins)
            values[i, j] = sim
            if hists is not None:
                hists[(c, name)] = {
                    "edges": None if edges is None else edges.tolist(),
                    "original": None if pm is None else pm.tolist(),
                    "resampled": None if qm is None else qm.tolist(),
                }
    values.setflags(write=False)
    return DivergenceReport(classes, original.feature_names, values, bins, hists)
