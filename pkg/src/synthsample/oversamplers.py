"""Rebalancing by random duplication, SMOTE, Borderline-SMOTE 1/2 and ADASYN.

Every sampler raises each minority class to the majority count and returns
only the new rows, as a :class:`SyntheticBatch` that records where each
row came from (parent row, neighbour row, interpolation weights).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ClassPartition, FeatureTable, partition
from .neighbors import NeighborIndex, NeighborSet, build_index

NO_NEIGHBOR = -1


class SamplerError(ValueError):
    pass


class Method(str, enum.Enum):
    RANDOM = "random"
    SMOTE = "smote"
    B1 = "b1"
    B2 = "b2"
    ADASYN = "adasyn"


SYNTHETIC_METHODS = (Method.SMOTE, Method.B1, Method.B2, Method.ADASYN)


class DangerLabel(enum.Enum):
    SAFE = "safe"
    DANGER = "danger"
    NOISE = "noise"


@dataclass(frozen=True)
class SamplerConfig:
    method: Method = Method.SMOTE
    k: int = 5
    seed: int = 0
    lambda_mode: str = "per_feature"
    b2_out_of_class_lambda_max: float = 0.5
    # degrade one-member minority classes to random duplication instead of failing
    single_member_fallback: bool = False
    scale: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.k < 1:
            raise SamplerError(f"K must be >= 1, got {self.k}")
        if self.lambda_mode not in ("per_feature", "per_sample"):
            raise SamplerError(f"unknown lambda_mode {self.lambda_mode!r}")
        if not 0 < self.b2_out_of_class_lambda_max <= 1:
            raise SamplerError("b2_out_of_class_lambda_max must lie in (0, 1]")
        if self.seed < 0:
            raise SamplerError("seed must be non-negative")


@dataclass(frozen=True)
class BalancePlan:
    """Synthetic rows to create per class so every class reaches ``target``."""

    quotas: dict[int, int]
    target: int

    @property
    def total(self) -> int:
        return sum(self.quotas.values())


@dataclass(frozen=True)
class SyntheticBatch:
    """Generated rows plus per-row provenance.

    ``parents`` and ``neighbors`` index rows of the table the batch was drawn
    from; ``neighbors`` holds ``NO_NEIGHBOR`` and ``lambdas`` holds NaN for
    plain duplicates.
    """

    features: np.ndarray
    labels: np.ndarray
    methods: np.ndarray
    parents: np.ndarray
    neighbors: np.ndarray
    lambdas: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def counts(self) -> dict[int, int]:
        cls, n = np.unique(self.labels, return_counts=True)
        return dict(zip(cls.tolist(), n.tolist()))

    @classmethod
    def empty(cls, n_features: int) -> "SyntheticBatch":
        return cls(np.empty((0, n_features)), np.empty(0, dtype=np.int64),
                   np.empty(0, dtype="<U6"), np.empty(0, dtype=np.int64),
                   np.empty(0, dtype=np.int64), np.empty((0, n_features)))

    @classmethod
    def concat(cls, parts: list["SyntheticBatch"], n_features: int) -> "SyntheticBatch":
        if not parts:
            return cls.empty(n_features)
        return cls(*(np.concatenate([getattr(b, f) for b in parts])
                     for f in ("features", "labels", "methods", "parents", "neighbors", "lambdas")))


def plan_balance(part: ClassPartition) -> BalancePlan:
    """Quota per class = majority count - class count.

    Classes with no rows get quota 0: there is nothing to sample from.
    """
    target = part.majority_count
    if target == 0:
        raise SamplerError("empty partition")
    quotas = {c: (target - n if n > 0 else 0) for c, n in part.counts.items()}
    return BalancePlan(quotas, target)


def smote_interpolate(s: np.ndarray, a: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """``s + lam * (a - s)`` feature-wise, clipped to the [s, a] envelope.

    The clip only absorbs last-ulp rounding when ``lam`` is close to 1.
    """
    s = np.asarray(s, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if s.shape != a.shape or lam.shape[-1:] != s.shape[-1:]:
        raise SamplerError(f"shape mismatch: s {s.shape}, a {a.shape}, lambda {lam.shape}")
    out = s + lam * (a - s)
    return np.clip(out, np.minimum(s, a), np.maximum(s, a))


def assign_danger(ns: NeighborSet | int, k: int) -> DangerLabel:
    """Safe / Danger / Noise from the out-of-class neighbour count H.

    Noise when H == K, Danger when K/2 <= H < K, otherwise Safe. ``ns`` may
    be a :class:`NeighborSet` or H itself.
    """
    h = ns.out_of_class_count if isinstance(ns, NeighborSet) else int(ns)
    if not 0 <= h <= k:
        raise SamplerError(f"H={h} outside 0..{k}")
    if h == k:
        return DangerLabel.NOISE
    # 2H >= K is K/2 <= H without float division
    if 2 * h >= k:
        return DangerLabel.DANGER
    return DangerLabel.SAFE


def adasyn_weights(minority_rows, idx: NeighborIndex, k: int) -> np.ndarray:
    """Normalised hardness weights H_i/K over ``minority_rows``.

    Falls back to uniform weights when no row has an out-of-class neighbour.
    """
    rows = np.asarray(minority_rows, dtype=np.int64)
    if rows.size == 0:
        raise SamplerError("ADASYN weights need at least one minority row")
    h = np.array([idx.knn_all(int(r), k).out_of_class_count for r in rows], dtype=np.float64)
    ratio = h / k
    total = ratio.sum()
    if total == 0:
        return np.full(len(rows), 1.0 / len(rows))
    return ratio / total


def adasyn_counts(weights: np.ndarray, quota: int) -> np.ndarray:
    """Integer per-parent counts summing exactly to ``quota``.

    Floor of weight * quota, then the leftover handed out one at a time in
    descending weight order (lower position first on ties).
    """
    w = np.asarray(weights, dtype=np.float64)
    g = np.floor(w * quota).astype(np.int64)
    residual = quota - int(g.sum())
    if residual < 0:
        raise SamplerError("weights sum to more than 1")
    order = np.lexsort((np.arange(len(w)), -w))
    for i in range(residual):
        g[order[i % len(w)]] += 1
    return g


def _class_rng(seed: int, cls: int) -> np.random.Generator:
    return np.random.default_rng([seed, cls])


def _draw_lambdas(rng, m: int, p: int, mode: str, upper=1.0) -> np.ndarray:
    upper = np.broadcast_to(np.asarray(upper, dtype=np.float64).reshape(-1, 1), (m, 1))
    if mode == "per_sample":
        return np.repeat(rng.uniform(0.0, 1.0, size=(m, 1)), p, axis=1) * upper
    return rng.uniform(0.0, 1.0, size=(m, p)) * upper


def _cycle_parents(candidates: np.ndarray, quota: int, rng) -> np.ndarray:
    """Round-robin over ``candidates`` from a random start; leftovers drawn without replacement."""
    n = len(candidates)
    full, rem = divmod(quota, n)
    order = np.roll(candidates, -int(rng.integers(n)))
    extra = rng.choice(candidates, size=rem, replace=False)
    return np.concatenate([np.tile(order, full), extra]).astype(np.int64)


class _ClassSampler:
    """Generation for one class under one config, with its own RNG stream."""

    def __init__(self, table: FeatureTable, idx: NeighborIndex, cfg: SamplerConfig, cls: int):
        self.table = table
        self.idx = idx
        self.cfg = cfg
        self.cls = cls
        self.rng = _class_rng(cfg.seed, cls)
        self.members = np.flatnonzero(table.labels == cls)
        self._within: dict[int, NeighborSet] = {}
        self._all: dict[int, NeighborSet] = {}

    def within(self, row: int) -> NeighborSet:
        if row not in self._within:
            self._within[row] = self.idx.knn_within(row, self.cfg.k)
        return self._within[row]

    def around(self, row: int) -> NeighborSet:
        if row not in self._all:
            self._all[row] = self.idx.knn_all(row, self.cfg.k)
        return self._all[row]

    def batch(self, parents, neighbors, lambdas, method: Method) -> SyntheticBatch:
        X = self.table.features
        m = len(parents)
        if method is Method.RANDOM:
            feats = X[parents].copy()
        else:
            feats = smote_interpolate(X[parents], X[neighbors], lambdas)
        return SyntheticBatch(feats, np.full(m, self.cls, dtype=np.int64),
                              np.full(m, method.value, dtype="<U6"),
                              np.asarray(parents, dtype=np.int64),
                              np.asarray(neighbors, dtype=np.int64), lambdas)

    def duplicate(self, quota: int) -> SyntheticBatch:
        if len(self.members) == 0:
            raise SamplerError(f"class {self.cls} is empty; nothing to duplicate")
        parents = self.rng.choice(self.members, size=quota, replace=True)
        return self.batch(parents, np.full(quota, NO_NEIGHBOR),
                          np.full((quota, self.table.n_features), np.nan), Method.RANDOM)

    def interpolate_within(self, parents: np.ndarray, method: Method) -> SyntheticBatch:
        neighbors = np.array([self.rng.choice(self.within(int(r)).rows) for r in parents],
                             dtype=np.int64)
        lambdas = _draw_lambdas(self.rng, len(parents), self.table.n_features, self.cfg.lambda_mode)
        return self.batch(parents, neighbors, lambdas, method)

    def smote(self, quota: int, method=Method.SMOTE) -> SyntheticBatch:
        return self.interpolate_within(_cycle_parents(self.members, quota, self.rng), method)

    def danger_rows(self) -> np.ndarray:
        k = self.cfg.k
        return np.array([r for r in self.members
                         if assign_danger(self.around(int(r)), k) is DangerLabel.DANGER],
                        dtype=np.int64)

    def borderline1(self, quota: int) -> SyntheticBatch:
        danger = self.danger_rows()
        if len(danger) == 0:
            warnings.warn(f"class {self.cls}: no Danger instances, falling back to SMOTE",
                          stacklevel=3)
            return self.smote(quota, Method.B1)
        return self.interpolate_within(_cycle_parents(danger, quota, self.rng), Method.B1)

    def borderline2(self, quota: int) -> SyntheticBatch:
        danger = self.danger_rows()
        if len(danger) == 0:
            warnings.warn(f"class {self.cls}: no Danger instances, falling back to SMOTE",
                          stacklevel=3)
            return self.smote(quota, Method.B2)
        parents = _cycle_parents(danger, quota, self.rng)
        neighbors = np.array([self.rng.choice(self.around(int(r)).rows) for r in parents],
                             dtype=np.int64)
        foreign = self.table.labels[neighbors] != self.cls
        upper = np.where(foreign, self.cfg.b2_out_of_class_lambda_max, 1.0)
        lambdas = _draw_lambdas(self.rng, quota, self.table.n_features,
                                self.cfg.lambda_mode, upper)
        return self.batch(parents, neighbors, lambdas, Method.B2)

    def adasyn(self, quota: int) -> SyntheticBatch:
        w = adasyn_weights(self.members, self.idx, self.cfg.k)
        g = adasyn_counts(w, quota)
        parents = np.repeat(self.members, g)
        return self.interpolate_within(parents, Method.ADASYN)


def generate(table: FeatureTable, plan: BalancePlan, cfg: SamplerConfig,
              idx: NeighborIndex | None, method: Method) -> SyntheticBatch:
    if idx is None and method is not Method.RANDOM:
        idx = build_index(table, scale=cfg.scale)
    parts = []
    for cls in sorted(plan.quotas):
        quota = plan.quotas[cls]
        if quota == 0:
            continue
        s = _ClassSampler(table, idx, cfg, cls)
        n = len(s.members)
        if n == 0:
            raise SamplerError(f"class {cls} has quota {quota} but no rows")
        if method is Method.RANDOM:
            parts.append(s.duplicate(quota))
            continue
        if n == 1:
            if not cfg.single_member_fallback:
                raise SamplerError(f"class {cls} has a single member; interpolation needs two "
                                   "(set single_member_fallback to duplicate instead)")
            warnings.warn(f"class {cls} has a single member; duplicating it", stacklevel=3)
            parts.append(s.duplicate(quota))
            continue
        if method is Method.SMOTE:
            parts.append(s.smote(quota))
        elif method is Method.B1:
            parts.append(s.borderline1(quota))
        elif method is Method.B2:
            parts.append(s.borderline2(quota))
        else:
            parts.append(s.adasyn(quota))
    return SyntheticBatch.concat(parts, table.n_features)


def random_oversample(t: FeatureTable, plan: BalancePlan, cfg: SamplerConfig) -> SyntheticBatch:
    return generate(t, plan, cfg, None, Method.RANDOM)


def smote(t, plan, cfg, idx=None) -> SyntheticBatch:
    return generate(t, plan, cfg, idx, Method.SMOTE)


def borderline1(t, plan, cfg, idx=None) -> SyntheticBatch:
    return generate(t, plan, cfg, idx, Method.B1)


def borderline2(t, plan, cfg, idx=None) -> SyntheticBatch:
    return generate(t, plan, cfg, idx, Method.B2)


def adasyn(t, plan, cfg, idx=None) -> SyntheticBatch:
    return generate(t, plan, cfg, idx, Method.ADASYN)


def resample(t: FeatureTable, cfg: SamplerConfig) -> tuple[FeatureTable, SyntheticBatch]:
    """Balance ``t`` with ``cfg.method``; returns (original + synthetic rows, batch)."""
    plan = plan_balance(partition(t))
    batch = generate(t, plan, cfg, None, cfg.method)
    return t.append(batch.features, batch.labels), batch
