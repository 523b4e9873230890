"""Random forest of Gini-split CART trees, written against numpy only."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import FeatureTable

# minimum impurity decrease for a split to count as an improvement
_MIN_GAIN = 1e-12


class ForestError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    mtry: int | None = None  # None -> ceil(sqrt(p))
    max_depth: int | None = None
    min_samples_leaf: int = 1
    bootstrap: bool = True

    def resolve_mtry(self, p: int) -> int:
        m = self.mtry if self.mtry is not None else math.ceil(math.sqrt(p))
        if not 1 <= m <= p:
            raise ForestError(f"mtry={m} outside 1..{p}")
        return m


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    f = counts / n
    return float(1.0 - np.dot(f, f))


def _best_split(Xn: np.ndarray, yn: np.ndarray, onehot: np.ndarray, total: np.ndarray,
                min_leaf: int):
    """Best (column, threshold, score) over the columns of ``Xn``, or None.

    ``score`` is sum(left^2)/n_left + sum(right^2)/n_right over class counts;
    maximising it minimises the weighted child Gini impurity. Ties go to the
    earlier column, then the lower threshold.
    """
    n = Xn.shape[0]
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    left = np.cumsum(onehot[yn[order]], axis=0)[:-1]  # (n-1, m, C)
    right = total - left
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    score = (left * left).sum(axis=2) / n_left + (right * right).sum(axis=2) / n_right
    ok = xs[1:] > xs[:-1]
    if min_leaf > 1:
        ok &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not ok.any():
        return None
    score = np.where(ok, score, -np.inf).T  # (m, n-1)
    col, i = divmod(int(np.argmax(score)), n - 1)
    lo, hi = xs[i, col], xs[i + 1, col]
    thr = 0.5 * (lo + hi)
    if thr >= hi:  # adjacent floats: midpoint rounds up onto the right value
        thr = lo
    return col, float(thr), float(score[col, i])


class DecisionTree:
    """Binary tree stored as flat arrays; ``feature == -1`` marks a leaf."""

    def __init__(self, n_classes: int):
        self.n_classes = n_classes
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.counts: list[np.ndarray] = []
        self.sample: np.ndarray | None = None  # training rows drawn for this tree

    def _new_node(self, counts: np.ndarray) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(counts)
        return len(self.feature) - 1

    def fit(self, X: np.ndarray, y: np.ndarray, mtry: int, rng: np.random.Generator,
            max_depth: int | None = None, min_samples_leaf: int = 1) -> "DecisionTree":
        """Grow on class codes ``y`` in ``0..n_classes-1``."""
        C = self.n_classes
        p = X.shape[1]
        onehot = np.eye(C)
        root = self._new_node(np.bincount(y, minlength=C).astype(np.float64))
        stack = [(root, np.arange(len(y)), 0)]
        while stack:
            node, rows, depth = stack.pop()
            total = self.counts[node]
            n = len(rows)
            if (total > 0).sum() < 2 or n < 2 * min_samples_leaf:
                continue
            if max_depth is not None and depth >= max_depth:
                continue
            parent_score = float(np.dot(total, total)) / n
            feats = rng.choice(p, size=mtry, replace=False) if mtry < p else np.arange(p)
            best = _best_split(X[np.ix_(rows, feats)], y[rows], onehot, total, min_samples_leaf)
            # impurity decrease = (score - parent_score) / n
            if best is None or (best[2] - parent_score) / n <= _MIN_GAIN:
                continue
            col, thr, _ = best
            f = int(feats[col])
            go_left = X[rows, f] <= thr
            lrows, rrows = rows[go_left], rows[~go_left]
            lnode = self._new_node(np.bincount(y[lrows], minlength=C).astype(np.float64))
            rnode = self._new_node(np.bincount(y[rrows], minlength=C).astype(np.float64))
            self.feature[node], self.threshold[node] = f, thr
            self.left[node], self.right[node] = lnode, rnode
            stack.append((rnode, rrows, depth + 1))
            stack.append((lnode, lrows, depth + 1))
        self._freeze()
        return self

    def _freeze(self):
        self._feature = np.array(self.feature, dtype=np.int64)
        self._threshold = np.array(self.threshold, dtype=np.float64)
        self._left = np.array(self.left, dtype=np.int64)
        self._right = np.array(self.right, dtype=np.int64)
        self._counts = np.array(self.counts).reshape(-1, self.n_classes)
        self._vote = np.argmax(self._counts, axis=1)  # lowest class code on ties

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_of(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self._feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            r, nd = rows[inner], node[inner]
            go_left = X[r, f[inner]] <= self._threshold[nd]
            node[inner] = np.where(go_left, self._left[nd], self._right[nd])

    def predict_codes(self, X: np.ndarray) -> np.ndarray:
        return self._vote[self.leaf_of(X)]

    def to_dict(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left, "right": self.right,
                "counts": [c.tolist() for c in self.counts]}


@dataclass
class RandomForest:
    classes: np.ndarray
    n_features: int
    mtry: int
    seed: int
    params: ForestParams
    trees: list[DecisionTree] = field(default_factory=list)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def votes(self, X: np.ndarray) -> np.ndarray:
        """Per-class vote counts, shape (rows, classes)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ForestError(f"expected {self.n_features} features, got {X.shape[1]}")
        tally = np.zeros((len(X), len(self.classes)), dtype=np.int64)
        rows = np.arange(len(X))
        for tree in self.trees:
            np.add.at(tally, (rows, tree.predict_codes(X)), 1)
        return tally

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote; ties go to the lowest class label."""
        return self.classes[np.argmax(self.votes(X), axis=1)]

    def predict_one(self, x) -> int:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ForestError("predict_one takes a single feature vector")
        return int(self.predict(x)[0])

    def to_json(self) -> str:
        return json.dumps({"classes": self.classes.tolist(), "mtry": self.mtry,
                           "seed": self.seed, "trees": [t.to_dict() for t in self.trees]})


def train_forest(train: FeatureTable, n_trees: int = 100, mtry: int | None = None,
                 seed: int = 0, params: ForestParams | None = None) -> RandomForest:
    """Bagged Gini trees; tree ``i`` draws from its own stream seeded by (seed, i)."""
    if params is None:
        params = ForestParams(n_trees=n_trees, mtry=mtry)
    if params.n_trees < 1:
        raise ForestError("n_trees must be >= 1")
    X, labels = train.features, train.labels
    classes, y = np.unique(labels, return_inverse=True)
    if len(classes) < 2:
        raise ForestError("training data must contain at least two classes")
    p = X.shape[1]
    m = params.resolve_mtry(p)
    forest = RandomForest(classes, p, m, seed, params)
    n = len(y)
    for i in range(params.n_trees):
        rng = np.random.default_rng([seed, i])
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        tree = DecisionTree(len(classes)).fit(
            X[rows], y[rows], m, rng, params.max_depth, params.min_samples_leaf)
        tree.sample = rows
        forest.trees.append(tree)
    return forest


def predict(f: RandomForest, x) -> int:
    return f.predict_one(x)
