"""Exact Euclidean k-nearest-neighbour search.

Brute force over all rows. Ties in distance go to the lower row index, which
keeps every downstream sampler reproducible for a fixed seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import FeatureTable


class NeighborError(ValueError):
    pass


@dataclass(frozen=True)
class NeighborSet:
    """The K nearest rows to ``owner``, ascending by squared distance."""

    owner: int
    owner_class: int
    rows: np.ndarray
    classes: np.ndarray
    sq_distances: np.ndarray

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def out_of_class_count(self) -> int:
        return int(np.count_nonzero(self.classes != self.owner_class))

    def __iter__(self):
        return iter(zip(self.rows.tolist(), self.classes.tolist(), self.sq_distances.tolist()))


def min_max_scale(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map each column's observed range onto [0, 1]; constant columns become 0."""
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    Z = np.where(span > 0, (X - lo) / safe, 0.0)
    return Z, lo, span


class NeighborIndex:
    """Distance index over a :class:`FeatureTable`.

    With ``scale=True`` (the default) distances are computed on min-max
    scaled copies of the features; the table itself is untouched.
    """

    def __init__(self, table: FeatureTable, scale: bool = True):
        if len(table) == 0:
            raise NeighborError("cannot index an empty table")
        self.table = table
        self.scale = scale
        if scale:
            Z, self.offset, self.span = min_max_scale(table.features)
        else:
            Z = table.features
            self.offset = np.zeros(table.n_features)
            self.span = np.ones(table.n_features)
        self._points = np.ascontiguousarray(Z)
        self._points.setflags(write=False)

    @property
    def points(self) -> np.ndarray:
        """Coordinates used for distance computations."""
        return self._points

    def __len__(self) -> int:
        return len(self.table)

    def _query(self, owner: int, candidates: np.ndarray, k: int) -> NeighborSet:
        candidates = candidates[candidates != owner]
        diff = self._points[candidates] - self._points[owner]
        # strict left-to-right accumulation over features: exact ties stay
        # ties regardless of SIMD/pairwise summation choices
        d = np.add.accumulate(diff * diff, axis=1)[:, -1]
        # candidates ascend, so a stable sort keeps lower rows first on ties
        order = np.argsort(d, kind="stable")[:k]
        rows = candidates[order]
        labels = self.table.labels
        return NeighborSet(owner, int(labels[owner]), rows, labels[rows], d[order])

    def knn_all(self, owner: int, k: int) -> NeighborSet:
        """K nearest rows over every class, ``owner`` excluded."""
        n = len(self)
        if not 0 <= owner < n:
            raise NeighborError(f"owner row {owner} out of range 0..{n - 1}")
        if k < 1 or k > n - 1:
            raise NeighborError(f"K={k} invalid for a table of {n} rows (need 1 <= K <= {n - 1})")
        return self._query(owner, np.arange(n), k)

    def knn_within(self, owner: int, k: int, cls: int | None = None) -> NeighborSet:
        """K nearest rows of class ``cls`` (default: the owner's class).

        If the class has fewer than K other members, all of them are
        returned with a warning; no members at all is an error.
        """
        n = len(self)
        if not 0 <= owner < n:
            raise NeighborError(f"owner row {owner} out of range 0..{n - 1}")
        if k < 1:
            raise NeighborError(f"K must be >= 1, got {k}")
        labels = self.table.labels
        if cls is None:
            cls = int(labels[owner])
        members = np.flatnonzero(labels == cls)
        available = len(members) - int(labels[owner] == cls)
        if available == 0:
            raise NeighborError(f"row {owner}: class {cls} has no other members to use as neighbours")
        if available < k:
            warnings.warn(f"class {cls} has only {available} candidate neighbours for row "
                          f"{owner}; using K={available} instead of {k}", stacklevel=2)
            k = available
        return self._query(owner, members, k)


def build_index(table: FeatureTable, scale: bool = True) -> NeighborIndex:
    return NeighborIndex(table, scale=scale)


def knn_all(idx: NeighborIndex, owner: int, k: int) -> NeighborSet:
    return idx.knn_all(owner, k)


def knn_within(idx: NeighborIndex, owner: int, k: int, cls: int | None = None) -> NeighborSet:
    return idx.knn_within(owner, k, cls)
