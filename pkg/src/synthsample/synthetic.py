"""Labelled Gaussian test datasets shaped like a rating-scale imbalance problem."""

from __future__ import annotations

import numpy as np

from .core import FeatureTable

# rows per class 1..5 in the four-rater nodule dataset; class 3 is the majority
NODULE_CLASS_COUNTS = (117, 85, 351, 166, 110)


def _names(p: int) -> list[str]:
    return [f"f{i + 1}" for i in range(p)]


def scaled_counts(scale: float, counts=NODULE_CLASS_COUNTS) -> list[int]:
    return [max(2, int(round(c * scale))) for c in counts]


def ordinal_mixture(counts=NODULE_CLASS_COUNTS, n_features: int = 4, separation: float = 0.5,
                    seed: int = 0) -> FeatureTable:
    """Unit-variance blobs whose means step by ``separation`` along the diagonal.

    Neighbouring classes overlap heavily for small ``separation``, like
    adjacent points on a rating scale.
    """
    rng = np.random.default_rng(seed)
    mid = (len(counts) - 1) / 2
    X = np.vstack([rng.normal((c - mid) * separation, 1.0, size=(n, n_features))
                   for c, n in enumerate(counts)])
    y = np.repeat(np.arange(1, len(counts) + 1), counts)
    return FeatureTable(X, y, _names(n_features))


def clusters_with_outliers(counts=NODULE_CLASS_COUNTS, n_features: int = 6,
                           n_outliers: int = 4, spread: float = 6.0, seed: int = 0
                           ) -> FeatureTable:
    """Well-separated class clusters; each minority class gets ``n_outliers``
    rows planted inside the majority cluster."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, spread, size=(len(counts), n_features))
    major = int(np.argmax(counts))
    X = []
    for c, n in enumerate(counts):
        Xc = rng.normal(centers[c], 1.0, size=(n, n_features))
        if c != major:
            m = min(n_outliers, n - 2)
            Xc[:m] = rng.normal(centers[major], 1.0, size=(m, n_features))
        X.append(Xc)
    y = np.repeat(np.arange(1, len(counts) + 1), counts)
    return FeatureTable(np.vstack(X), y, _names(n_features))


def uniform_table(counts=NODULE_CLASS_COUNTS, n_features: int = 65, seed: int = 0
                  ) -> FeatureTable:
    rng = np.random.default_rng(seed)
    n = sum(counts)
    y = np.repeat(np.arange(1, len(counts) + 1), counts)
    return FeatureTable(rng.random((n, n_features)), y, _names(n_features))
