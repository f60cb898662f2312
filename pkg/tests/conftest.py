from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from jacobs_ladder import hlgrid
from jacobs_ladder.ladder import Ladder, required_grid_t_max
from jacobs_ladder.verify import DESK_T, Context

settings.register_profile(
    "default", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def context() -> Context:
    """Shared grid to cover every T <= 2e4; cached across sessions."""
    return Context()


@pytest.fixture(scope="session")
def grid(context):
    return context.grid


@pytest.fixture(scope="session")
def ladder(context) -> Ladder:
    return context.ladder


@pytest.fixture(scope="session")
def small_grid():
    return hlgrid.build_grid(2.0e3)


@pytest.fixture(scope="session")
def desk_t_max():
    return required_grid_t_max(DESK_T)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def slow_enabled() -> bool:
    return os.environ.get("JACOBS_LADDER_SLOW", "") not in ("", "0")
