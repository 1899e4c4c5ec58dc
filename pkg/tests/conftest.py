import numpy as np
import pytest

from anmm.embeddings import EmbeddingStore
from anmm.synthetic import planted_fixture

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_store():
    table = {
        "king": [0.0, 3.0, 4.0],
        "queen": [0.0, 4.0, 3.0],
        "burger": [1.0, 0.0, 0.0],
        "restaurant": [0.6, 0.8, 0.0],
    }
    return EmbeddingStore(table, 3, oov_seed=1)


@pytest.fixture(scope="session")
def fixture_data():
    return planted_fixture(seed=7)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if not item.nodeid.split("::")[0].endswith("test_acceptance.py"):
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _ACCEPTANCE.append((item.name, status, doc))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, doc in _ACCEPTANCE:
        terminalreporter.write_line(f"[{status}] {doc}")
