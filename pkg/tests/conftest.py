import numpy as np
import pytest

from vault.core.data import DataManager
from vault.core.events import EventBus
from vault.core.payloads import PointPayload


@pytest.fixture
def bus():
    return EventBus()


@pytest.fixture
def data(bus):
    return DataManager(bus)


def points(n, d, seed=0):
    rng = np.random.default_rng(seed)
    return PointPayload(rng.normal(size=(n, d)).astype(np.float32))


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[{status}] acceptance: {name} ({report.duration:.1f}s)", flush=True)
