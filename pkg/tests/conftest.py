import numpy as np
import pytest
from hypothesis import settings

from qdeepcluster.datasets import make_blobs

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def blobs3():
    """Three 6-sigma blobs in 8-D, 20 points each."""
    return make_blobs(3, 20, 8, 1.0, 6.0, seed=0)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """record(n, ok, detail) stores one criterion outcome for the summary."""

    def record(n: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[n] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
