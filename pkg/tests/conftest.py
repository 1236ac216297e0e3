from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible pass/fail line per acceptance criterion, regardless of
    output capture."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == "test_acceptance.py":
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        sys.__stdout__.write(f"[{status}] {item.name}\n")
        sys.__stdout__.flush()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_box(rng, *, center_span=400.0, size_lo=4.0, size_hi=120.0):
    from srrt.geometry import BoundingBox

    cx, cy = rng.uniform(-center_span, center_span, 2)
    w, h = rng.uniform(size_lo, size_hi, 2)
    return BoundingBox(float(cx), float(cy), float(w), float(h))
