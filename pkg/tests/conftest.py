"""
Pytest configuration and shared fixtures.
This file is automatically discovered by pytest and makes fixtures available to all test files.
"""

import pytest

from evflex.core.config import RunConfig, SimulationConfig, SyntheticConfig
from evflex.schemas.fleet import (
    DriverSchedule,
    FleetScenario,
    LocationPurpose,
    ParkingEvent,
    Region,
    Season,
    TripEvent,
    Urbanization,
)
from evflex.services.charging import pinned_draws


def build_schedule(driver_id: int, rows: list[tuple]) -> DriverSchedule:
    """
    Compact schedule builder.
    Parking rows: ("P", start, end, purpose_code, region)
    Trip rows:    ("T", start, end, energy_kwh, region)
    """
    events = []
    for kind, start, end, value, region in rows:
        if kind == "P":
            events.append(ParkingEvent(start, end, LocationPurpose(value), region))
        else:
            events.append(TripEvent(start, end, float(value), region))
    return DriverSchedule(driver_id, tuple(events))


# ============================================================================
# Regions
# ============================================================================

@pytest.fixture
def regions():
    """One region per urbanization level."""
    return [
        Region("R1", "City", Urbanization.URBAN),
        Region("R2", "Agglomeration", Urbanization.PERIURBAN),
        Region("R3", "Countryside", Urbanization.RURAL),
    ]


# ============================================================================
# Configurations
# ============================================================================

@pytest.fixture
def sim_config():
    """Default simulation parameters (mu 0.6, sigma 0.2, floor 0.15, 7/11/22 kW)."""
    return SimulationConfig()


@pytest.fixture
def small_run_config():
    """Run configuration with a small synthetic fleet for fast pipeline tests."""
    return RunConfig(synthetic=SyntheticConfig(driver_count=60))


# ============================================================================
# Golden two-driver scenario (hand-traced with pinned draws)
# ============================================================================

@pytest.fixture
def commuter_schedule():
    """Home until 07:00, work 07:30-16:00, home for the rest of the week."""
    return build_schedule(1, [
        ("P", -2880, 420, "H", "R1"),
        ("T", 420, 450, 30.0, "R2"),
        ("P", 450, 960, "W", "R2"),
        ("T", 960, 990, 30.0, "R1"),
        ("P", 990, 10080, "H", "R1"),
    ])


@pytest.fixture
def errand_schedule():
    """Home until 10:00, one 150 min shopping stop, home for the rest of the week."""
    return build_schedule(2, [
        ("P", -2880, 600, "H", "R3"),
        ("T", 600, 620, 40.0, "R1"),
        ("P", 620, 770, "S", "R1"),
        ("T", 770, 790, 10.0, "R3"),
        ("P", 790, 10080, "H", "R3"),
    ])


@pytest.fixture
def golden_draws(sim_config):
    """
    Pinned draws per driver: one threshold and one target uniform per eligible
    parking event (prefix parking, then the three week parkings).
    Uniform < p80 (0.5) gives target 0.80, otherwise 1.00.
    """
    return {
        1: pinned_draws([0.5, 0.5, 0.75, 0.0], [0.9, 0.9, 0.1, 0.9], sim_config),
        2: pinned_draws([0.5, 0.5, 0.6, 0.0], [0.9, 0.9, 0.9, 0.9], sim_config),
    }


@pytest.fixture
def golden_capacities():
    return {1: 100.0, 2: 70.0}


@pytest.fixture
def golden_scenario(commuter_schedule, errand_schedule, regions):
    return FleetScenario(
        drivers=(commuter_schedule, errand_schedule),
        regions=tuple(regions),
        season_label=Season.SUMMER,
        global_seed=7,
        scenario_id="golden",
    )
