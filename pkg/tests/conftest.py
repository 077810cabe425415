"""Shared fixtures: stock parameters, the default scenario, and its routes."""

import pytest

from v2xdelivery import SystemParams, default_scenario, enumerate_routes


@pytest.fixture(scope="session")
def params():
    return SystemParams()


@pytest.fixture(scope="session")
def coarse_params():
    # Half-second trials keep the breakpoint count small enough that a
    # 100-point grid can contain every one of them.
    return SystemParams(trial_time=0.5)


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


@pytest.fixture(scope="session")
def grid_routes(scenario):
    return enumerate_routes(scenario.topology, scenario.source, scenario.destination)
