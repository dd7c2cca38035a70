import re
import contextlib

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Context manager recording PASS / FAIL for an acceptance criterion label."""

    @contextlib.contextmanager
    def run(label, note=""):
        try:
            yield
        except BaseException:
            _ACCEPTANCE[label] = ("FAIL", note)
            raise
        _ACCEPTANCE[label] = ("PASS", note)

    return run


def record_acceptance(label, status, note=""):
    _ACCEPTANCE[label] = (status, note)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: (int(re.match(r"\d+", s).group()), s)):
        status, note = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{status}  {label}" + (f"  ({note})" if note else ""))
