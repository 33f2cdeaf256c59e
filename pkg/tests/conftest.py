from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from makebelieve.llm import ReplayBackend
from makebelieve.resources import bundled_world, fixture_path


@pytest.fixture(scope="session")
def housework():
    return bundled_world("housework")


@pytest.fixture(scope="session")
def magic_bedroom():
    return bundled_world("magic_bedroom")


@pytest.fixture()
def golden_backend():
    return ReplayBackend(fixture_path("magical_golden"))


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.rsplit("::", 1)[-1]
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {status}")
