import warnings

import numpy as np
import pytest

from synthsample.core import FeatureTable

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, reported in the summary")
    config.stash[_RESULTS] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and rep.when == "call":
        item.config.stash[_RESULTS].append((marker.args[0], rep.passed, rep.duration))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_RESULTS]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, duration in sorted(results):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  ({duration:.1f}s)")


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def make_table(X, y, n_classes=0):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return FeatureTable(X, np.asarray(y), [f"f{i}" for i in range(X.shape[1])], n_classes)
