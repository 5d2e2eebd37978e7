"""
Tests for the charging process and the per-driver simulation.
"""

from dataclasses import fields

import numpy as np
import pytest

from evflex.core.config import SimulationConfig
from evflex.models.rng import STREAM_CHARGING, STREAM_SYNTHETIC, driver_rng, driver_seed_sequence
from evflex.schemas.charging import (
    ClosureStatus,
    Decision,
    DecisionOutcome,
    DecisionReason,
    VehicleState,
)
from evflex.schemas.fleet import FleetScenario, LocationPurpose, ParkingEvent
from evflex.services.charging import execute_charging, pinned_draws, simulate_driver, split_phases
from evflex.services.simulation import simulate_fleet
from tests.conftest import build_schedule

SAMPLED = DecisionOutcome(Decision.POSITIVE, DecisionReason.SAMPLED_THRESHOLD, 0.9)


def charge(capacity, soc, purpose, minutes, target, config):
    state = VehicleState(capacity=capacity, soc=soc)
    parking = ParkingEvent(600, 600 + minutes, purpose, "R1")
    event = execute_charging(state, parking, SAMPLED, target, config, driver_id=1, parking_index=2)
    return state, event


# ============================================================================
# Charging process
# ============================================================================

class TestExecuteCharging:
    """Charge from arrival at the location rate until the target or departure."""

    def test_reaches_target_within_parking(self, sim_config):
        state, event = charge(70.0, 0.5, LocationPurpose.HOME, 360, 1.0, sim_config)

        assert event.energy == pytest.approx(35.0)
        assert event.charge_start == 600
        assert event.charge_end == 900
        assert event.end_soc == 1.0
        assert state.soc == 1.0
        assert event.final_minute_deficit == pytest.approx(0.0, abs=1e-9)

    def test_clipped_by_departure(self, sim_config):
        state, event = charge(70.0, 0.5, LocationPurpose.HOME, 120, 1.0, sim_config)

        assert event.duration == 120
        assert event.energy == pytest.approx(14.0)
        assert event.end_soc == pytest.approx(0.7)
        assert event.parking_end == 720

    def test_final_minute_carries_the_remainder(self, sim_config):
        # 21 kWh at 11 kW is 114.5 min; the 115th minute delivers only part of it
        state, event = charge(70.0, 0.5, LocationPurpose.WORK, 480, 0.8, sim_config)

        assert event.duration == 115
        assert event.energy == pytest.approx(21.0)
        assert event.end_soc == 0.8
        assert event.final_minute_deficit == pytest.approx(11.0 * 115 / 60 - 21.0)
        assert event.target_soc == 0.8
        assert event.rate == 11.0

    def test_exact_minute_multiple_is_not_rounded_up(self, sim_config):
        # 11 kWh at 22 kW is exactly 30 min
        _, event = charge(110.0, 0.7, LocationPurpose.SHOP, 120, 0.8, sim_config)
        assert event.duration == 30

    def test_null_charge_at_full_battery(self, sim_config):
        state, event = charge(70.0, 1.0, LocationPurpose.HOME, 600, 1.0, sim_config)
        assert event is None
        assert state.soc == 1.0

    def test_requires_positive_decision(self, sim_config):
        state = VehicleState(capacity=70.0, soc=0.5)
        parking = ParkingEvent(0, 600, LocationPurpose.HOME, "R1")
        with pytest.raises(ValueError):
            execute_charging(state, parking, DecisionOutcome(Decision.NEGATIVE), 1.0, sim_config)

    def test_vehicle_state_holds_only_capacity_and_soc(self):
        assert [f.name for f in fields(VehicleState)] == ["capacity", "soc", "week_start_soc"]


# ============================================================================
# Random streams
# ============================================================================

class TestDriverStreams:
    def test_streams_are_keyed_by_driver(self):
        a = driver_rng(5, 1).random(3)
        b = driver_rng(5, 1).random(3)
        c = driver_rng(5, 2).random(3)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_streams_are_keyed_by_purpose(self):
        assert not np.array_equal(driver_rng(5, 1, STREAM_SYNTHETIC).random(3),
                                  driver_rng(5, 1, STREAM_CHARGING).random(3))

    def test_negative_seed_is_folded(self):
        assert driver_seed_sequence(-1, 3, 2).entropy == [2 ** 64 - 1, 3, 2]

    def test_negative_driver_id_rejected(self):
        with pytest.raises(ValueError):
            driver_rng(0, -1)


# ============================================================================
# Phases
# ============================================================================

class TestSplitPhases:
    """Explicit negative-time prefix, or the first two days replicated."""

    def test_explicit_prefix(self, commuter_schedule):
        prefix, week = split_phases(commuter_schedule)
        assert [(i, e.start_time, e.end_time) for i, e in prefix] == [(0, -2880, 0)]
        assert [i for i, _ in week] == [0, 1, 2, 3, 4]
        assert week[0][1].start_time == 0

    def test_replicated_prefix(self):
        schedule = build_schedule(1, [
            ("P", 0, 480, "H", "R1"),
            ("T", 480, 500, 5.0, "R1"),
            ("P", 500, 10080, "W", "R1"),
        ])
        prefix, week = split_phases(schedule)
        assert [(i, e.start_time, e.end_time) for i, e in prefix] == [
            (0, -2880, -2400), (1, -2400, -2380), (2, -2380, 0)]
        assert len(week) == 3

    def test_replicated_prefix_cut_at_trip(self):
        schedule = build_schedule(1, [
            ("P", 0, 2850, "H", "R1"),
            ("T", 2850, 2900, 5.0, "R1"),
            ("P", 2900, 10080, "W", "R1"),
        ])
        prefix, _ = split_phases(schedule)
        assert [(i, e.start_time, e.end_time) for i, e in prefix] == [(0, -2880, -30)]

    def test_replicated_prefix_keeps_event_fields(self):
        schedule = build_schedule(1, [
            ("P", 0, 480, "H", "R1"),
            ("T", 480, 500, 5.0, "R2"),
            ("P", 500, 10080, "W", "R2"),
        ])
        (_, home), (_, trip), (_, work) = split_phases(schedule)[0]
        assert (home.purpose, home.region) == (LocationPurpose.HOME, "R1")
        assert (trip.energy_consumed, trip.destination_region) == (5.0, "R2")
        assert (work.purpose, work.region) == (LocationPurpose.WORK, "R2")


# ============================================================================
# Driver simulation
# ============================================================================

class TestSimulateDriver:
    """Prefix, week and closure for a single driver."""

    def test_zero_trip_schedule(self, sim_config):
        schedule = build_schedule(1, [("P", 0, 10080, "H", "R1")])
        result = simulate_driver(schedule, 70.0, 0, sim_config)

        assert result.events == ()
        assert result.closure.status is ClosureStatus.EXACT
        assert result.closure.week_start_soc == 1.0
        assert all(soc == 1.0 for _, soc in result.trajectory)

    def test_positive_decision_at_full_final_parking_is_a_null_charge(self, sim_config):
        schedule = build_schedule(1, [("P", 0, 10080, "H", "R1")])
        # prefix threshold 0.0 declines; week threshold 1.01 accepts at SOC 1.0
        draws = pinned_draws([0.0, 1.01], [0.9, 0.9], sim_config)
        result = simulate_driver(schedule, 70.0, 0, sim_config, draws=draws)

        assert result.events == ()
        assert result.null_charges == 1
        assert result.decisions[DecisionReason.SAMPLED_THRESHOLD.value] == 1
        assert result.closure.status is ClosureStatus.EXACT

    def test_week_closure_on_short_final_parking(self, sim_config):
        schedule = build_schedule(3, [
            ("P", 0, 9000, "H", "R1"),
            ("T", 9000, 10030, 10.0, "R2"),
            ("P", 10030, 10080, "H", "R2"),
        ])
        draws = pinned_draws([0.0, 0.0], [0.9, 0.9], sim_config)
        result = simulate_driver(schedule, 100.0, 0, sim_config, draws=draws)

        # the 50 min final parking is too short for a decision and for restoring 10 kWh at 7 kW
        (event,) = result.events
        assert event.reason is DecisionReason.WEEK_CLOSURE
        assert event.parking_index == 2
        assert (event.charge_start, event.charge_end) == (10030, 10080)
        assert event.energy == pytest.approx(7.0 * 50 / 60)
        assert result.closure.status is ClosureStatus.SHORTFALL
        assert result.closure.residual_kwh == pytest.approx(7.0 * 50 / 60 - 10.0)
        assert result.null_charges == 1
        assert result.decisions[DecisionReason.WEEK_CLOSURE_RISK.value] == 1
        assert result.decisions[DecisionReason.WEEK_CLOSURE.value] == 1

    def test_infeasible_trip_is_flagged(self, sim_config):
        schedule = build_schedule(4, [
            ("P", 0, 600, "H", "R1"),
            ("T", 600, 900, 200.0, "R1"),
            ("P", 900, 10080, "H", "R1"),
        ])
        result = simulate_driver(schedule, 70.0, 0, sim_config)

        assert result.infeasible
        assert result.closure.status is ClosureStatus.INFEASIBLE
        assert result.min_soc == 0.0

    def test_not_enough_pinned_draws(self, sim_config, commuter_schedule):
        with pytest.raises(ValueError):
            simulate_driver(commuter_schedule, 100.0, 0, sim_config, draws=pinned_draws([0.5], [0.5], sim_config))

    def test_season_factor_scales_trip_energy(self, commuter_schedule):
        summer = simulate_driver(commuter_schedule, 100.0, 1, SimulationConfig(energy_factor=1.0))
        winter = simulate_driver(commuter_schedule, 100.0, 1, SimulationConfig(energy_factor=1.16))
        assert summer.trip_energy_kwh == pytest.approx(60.0)
        assert winter.trip_energy_kwh == pytest.approx(69.6)

    def test_trajectory_can_be_dropped(self, sim_config, commuter_schedule):
        result = simulate_driver(commuter_schedule, 100.0, 1, sim_config, trajectory=False)
        assert result.trajectory == ()


class TestSimulateFleet:
    """Fleet simulation is independent of batch order and worker count."""

    def test_batch_order_does_not_matter(self, sim_config, commuter_schedule, errand_schedule, regions):
        capacities = {1: 100.0, 2: 70.0}
        forward = FleetScenario((commuter_schedule, errand_schedule), tuple(regions))
        backward = FleetScenario((errand_schedule, commuter_schedule), tuple(regions))

        a = simulate_fleet(forward, capacities, 13, sim_config)
        b = simulate_fleet(backward, capacities, 13, sim_config)
        alone = simulate_driver(errand_schedule, 70.0, 13, sim_config, trajectory=False)

        assert [r.events for r in a.results] == [r.events for r in b.results]
        assert a.results[1].events == alone.events

    def test_infeasible_driver_counted_and_excluded(self, sim_config, commuter_schedule, regions):
        bad = build_schedule(9, [
            ("P", 0, 600, "H", "R1"),
            ("T", 600, 900, 500.0, "R1"),
            ("P", 900, 10080, "H", "R1"),
        ])
        scenario = FleetScenario((commuter_schedule, bad), tuple(regions))
        run = simulate_fleet(scenario, {1: 100.0, 9: 120.0}, 0, sim_config)

        assert run.diagnostics.infeasible_drivers == [9]
        assert [r.driver_id for r in run.feasible()] == [1]
        assert run.diagnostics.drivers == 2
