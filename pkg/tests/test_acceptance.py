"""Exit criteria. Each test is tagged ``acceptance`` and reported as one PASS/FAIL line."""

import json
import time
import warnings

import numpy as np
import pytest

from synthsample.cli import main
from synthsample.core import aggregate_rating, partition, write_csv
from synthsample.divergence import Histogram, js_divergence, js_similarity
from synthsample.evaluation import SplitSpec, check_hygiene, run_methods
from synthsample.forest import ForestParams
from synthsample.neighbors import build_index
from synthsample.oversamplers import (DangerLabel, SamplerConfig, adasyn_counts, assign_danger,
                                      resample)
from synthsample.synthetic import (NODULE_CLASS_COUNTS, clusters_with_outliers,
                                   ordinal_mixture, scaled_counts, uniform_table)

from conftest import make_table
from test_divergence import jsd_oracle

METHODS = ["random", "smote", "b1", "b2", "adasyn"]
SYNTHETIC = ["smote", "b1", "b2", "adasyn"]


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


@pytest.mark.acceptance("01 balance exactness (nodule class counts, every method, < 5 s)")
def test_balance_exactness():
    t = uniform_table(NODULE_CLASS_COUNTS, n_features=65, seed=11)
    for method in METHODS:
        start = time.perf_counter()
        balanced, batch = resample(t, SamplerConfig(method, seed=1))
        elapsed = time.perf_counter() - start
        assert [batch.counts().get(c, 0) for c in range(1, 6)] == [234, 266, 0, 185, 241], method
        assert [partition(balanced).counts[c] for c in range(1, 6)] == [351] * 5, method
        assert elapsed < 5.0, (method, elapsed)


@pytest.mark.acceptance("02 interpolation geometry (>= 10,000 synthetics, 1e-12)")
def test_geometry():
    total = 0
    for seed in range(3):
        t = uniform_table(NODULE_CLASS_COUNTS, n_features=65, seed=seed) if seed != 1 else \
            ordinal_mixture(NODULE_CLASS_COUNTS, n_features=65, separation=0.3, seed=seed)
        mode = "per_sample" if seed == 2 else "per_feature"
        for method in SYNTHETIC:
            b = resample(t, SamplerConfig(method, seed=seed, lambda_mode=mode))[1]
            s, a = t.features[b.parents], t.features[b.neighbors]
            assert np.max(np.abs(b.features - (s + b.lambdas * (a - s)))) <= 1e-12
            assert np.all(b.features >= np.minimum(s, a))
            assert np.all(b.features <= np.maximum(s, a))
            total += len(b)
    assert total >= 10_000


@pytest.mark.acceptance("03 Safe/Danger/Noise oracle (all K <= 20, H <= K)")
def test_danger_oracle():
    for k in range(1, 21):
        for h in range(k + 1):
            if h == k:
                expected = DangerLabel.NOISE
            elif k / 2 <= h < k:
                expected = DangerLabel.DANGER
            else:
                expected = DangerLabel.SAFE
            assert assign_danger(h, k) is expected, (k, h)


@pytest.mark.acceptance("04 ADASYN integerization (1,000 random cases)")
def test_adasyn_integerization():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 120))
        k = int(rng.integers(1, 11))
        h = rng.integers(0, k + 1, size=n).astype(float)
        w = h / h.sum() if h.sum() else np.full(n, 1.0 / n)
        quota = int(rng.integers(0, 1000))
        g = adasyn_counts(w, quota)
        assert g.sum() == quota
        floors = np.floor(w * quota)
        assert np.all(np.abs(floors - w * quota) < 1)
        assert np.all((g - floors >= 0) & (g - floors <= 1))


@pytest.mark.acceptance("05 JS divergence oracle (1,000 random pairs, 1e-12)")
def test_jsd_oracle():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(2, 60))
        edges = np.arange(n + 1, dtype=float)
        p = rng.random(n) * (rng.random(n) < 0.7)
        q = rng.random(n) * (rng.random(n) < 0.7)
        p[rng.integers(n)] += 0.1
        q[rng.integers(n)] += 0.1
        p, q = p / p.sum(), q / q.sum()
        P, Q = Histogram(edges, p), Histogram(edges, q)
        d = js_divergence(P, Q)
        assert abs(d - jsd_oracle(p, q)) <= 1e-12
        assert abs(d - js_divergence(Q, P)) <= 1e-12
        assert 0.0 <= d <= 1.0
        assert js_divergence(P, P) == 0.0
    edges = np.arange(5, dtype=float)
    disjoint = js_divergence(Histogram(edges, np.array([0.3, 0.7, 0, 0])),
                             Histogram(edges, np.array([0, 0, 0.6, 0.4])))
    assert abs(disjoint - 1.0) <= 1e-12
    assert abs(js_similarity(Histogram(edges, np.array([1.0, 0, 0, 0])),
                             Histogram(edges, np.array([0, 0, 0, 1.0]))) - 1.0) <= 1e-12


def _oracle_ranking(Z, labels, owner, k, cls=None):
    """Full pairwise squared distances, then a Python sort on (distance, row)."""
    n, p = Z.shape
    d = np.zeros(n)
    for j in range(p):
        d += (Z[:, j] - Z[owner, j]) ** 2
    cand = [(d[i], i) for i in range(n)
            if i != owner and (cls is None or labels[i] == cls)]
    return [i for _, i in sorted(cand)[:k]]


@pytest.mark.acceptance("06 k-NN equals brute force (200 tables, n <= 1000, p <= 65)")
def test_knn_oracle():
    rng = np.random.default_rng(99)
    for table_no in range(200):
        n = int(rng.integers(5, 1001))
        p = int(rng.integers(1, 66))
        if table_no % 2:
            X = rng.integers(-2, 3, size=(n, p)).astype(float)  # heavy ties
        else:
            X = rng.normal(size=(n, p)) * rng.uniform(0.1, 1000, size=p)
        y = rng.integers(1, 4, size=n)
        scale = bool(table_no % 3)
        idx = build_index(make_table(X, y), scale=scale)
        if scale:
            lo, hi = X.min(axis=0), X.max(axis=0)
            Z = np.where(hi > lo, (X - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
        else:
            Z = X
        for owner in rng.choice(n, size=min(n, 4), replace=False):
            owner = int(owner)
            k = int(rng.integers(1, min(n - 1, 30) + 1))
            ns = idx.knn_all(owner, k)
            assert ns.rows.tolist() == _oracle_ranking(Z, y, owner, k)
            assert ns.out_of_class_count == int(np.sum(y[ns.rows] != y[owner]))
            cls = int(y[owner])
            available = int(np.sum(y == cls)) - 1
            if available >= 1:
                kw = min(k, available)
                assert idx.knn_within(owner, k).rows.tolist() == \
                    _oracle_ranking(Z, y, owner, kw, cls)


@pytest.fixture(scope="module")
def trend_report():
    t = ordinal_mixture(scaled_counts(0.5), n_features=4, separation=0.5, seed=7)
    start = time.perf_counter()
    report = run_methods(t, SplitSpec(train_fraction=0.7, repeats=30, seed=1), SYNTHETIC,
                         forest=ForestParams(n_trees=25))
    return report, time.perf_counter() - start


@pytest.mark.acceptance("07 sensitivity trend (30 repeats, baseline vs oversampled direction, < 3 min)")
def test_trend(trend_report):
    report, elapsed = trend_report
    base = report.reports["none"].sensitivity
    majority = 3
    minority = [1, 2, 4, 5]
    for name, r in report.reports.items():
        sens = ", ".join(f"{c}:{v:.1f}" for c, v in r.sensitivity.items())
        print(f"{name:7s} acc {r.accuracy:.2f} | {sens}")
    # (a) majority class has the highest baseline sensitivity
    assert base[majority] == max(base.values())
    # (b) SMOTE lifts mean minority sensitivity by >= 5 points
    smote = report.reports["smote"].sensitivity
    lift = np.mean([smote[c] for c in minority]) - np.mean([base[c] for c in minority])
    assert lift >= 5.0
    # (c) every synthetic method lowers majority-class sensitivity
    for m in SYNTHETIC:
        assert report.reports[m].sensitivity[majority] < base[majority]
    assert elapsed < 180.0


@pytest.mark.acceptance("08 ADASYN has the highest mean JS similarity on outlier data")
def test_js_ordering(tmp_path):
    src = tmp_path / "outliers.csv"
    write_csv(src, clusters_with_outliers(seed=0), "label")
    overall = {}
    for m in SYNTHETIC:
        res, rep = tmp_path / f"{m}.csv", tmp_path / f"{m}_audit.json"
        assert main(["resample", "--input", str(src), "--label-col", "label", "--method", m,
                     "--seed", "3", "--out", str(res)]) == 0
        assert main(["audit", "--original", str(src), "--resampled", str(res),
                     "--label-col", "label", "--out", str(rep)]) == 0
        overall[m] = json.loads(rep.read_text())["overall_mean"]
    print(overall)
    assert all(overall["adasyn"] >= overall[m] for m in ("smote", "b1", "b2"))


@pytest.mark.acceptance("09 protocol hygiene (no test leakage, byte-identical reruns)")
def test_protocol_hygiene(trend_report, tmp_path):
    report, _ = trend_report
    for r in report.reports.values():
        check_hygiene(r)
        for rec in r.records:
            assert not set(rec.test_rows.tolist()) & set(rec.train_rows.tolist())
    small = ordinal_mixture((12, 9, 40, 18, 11), n_features=3, separation=0.6, seed=4)
    src = tmp_path / "small.csv"
    write_csv(src, small, "label")
    args = ["evaluate", "--input", str(src), "--label-col", "label", "--methods", "all",
            "--repeats", "3", "--trees", "5", "--seed", "42"]
    for ext in ("json", "csv"):
        assert main(args + ["--out", str(tmp_path / f"a.{ext}")]) == 0
        assert main(args + ["--out", str(tmp_path / f"b.{ext}")]) == 0
        assert (tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes()


@pytest.mark.acceptance("10 rating aggregation examples")
def test_aggregation():
    assert aggregate_rating([1, 1, 1, 1]) == 1
    assert aggregate_rating([4, 4, 5, 5]) == 5
    assert aggregate_rating([2, 3, 3, 5]) == 3
    assert aggregate_rating([1, 2, 4, 5]) == 3
