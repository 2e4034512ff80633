"""Shared fixtures: one instance of each built-in family plus an rng helper."""

import sys

import pytest
from hypothesis import HealthCheck, settings

from hmc_lab import FamilyConfig, build_family, free_particle, make_rng

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def family(variant, dim, **kw):
    """Test-side shorthand for building one member of a built-in family."""
    return build_family(FamilyConfig(variant=variant, dim=dim, **kw))


@pytest.fixture(scope="session")
def gauss1():
    return family("gaussian", 1)


@pytest.fixture(scope="session")
def gauss2():
    return family("gaussian", 2)


@pytest.fixture(scope="session")
def power1():
    return family("power", 1)


@pytest.fixture(scope="session")
def power2():
    return family("power", 2)


@pytest.fixture(scope="session")
def homog2():
    return family("homogeneous_perturbed", 2)


@pytest.fixture(scope="session")
def dwell2():
    return family("double_well", 2)


@pytest.fixture(scope="session")
def free2():
    return free_particle(2)


@pytest.fixture
def rng():
    return make_rng(0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # acceptance verdicts must survive output capture, so re-print them in
    # the summary section that pytest never swallows
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod is not None else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
