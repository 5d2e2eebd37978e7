"""
Invariant suite on randomized synthetic fleets.

The fast variant runs a few hundred drivers per seed; the slow variant is
the acceptance-scale run (1,000 drivers x 20 seeds).
"""

from dataclasses import dataclass

import numpy as np
import pytest

from evflex.core.config import RunConfig, SyntheticConfig
from evflex.schemas.charging import ClosureStatus, DriverResult
from evflex.schemas.fleet import FleetScenario, Season
from evflex.schemas.flexibility import FlexCase
from evflex.services.aggregation import aggregate, check_profile
from evflex.services.battery import assign_batteries
from evflex.services.flexibility import quantify_events
from evflex.services import pipeline
from evflex.services.pipeline import parking_lookup, run_streaming
from evflex.services.simulation import simulate_fleet
from evflex.services.synthetic import generate_synthetic_fleet

TOL_KWH = 1e-6


@dataclass
class FleetRunOutputs:
    scenario: FleetScenario
    results: list[DriverResult]
    events: list
    envelopes: list


def run_fleet(drivers: int, seed: int, season: Season = Season.WINTER) -> FleetRunOutputs:
    config = RunConfig(synthetic=SyntheticConfig(driver_count=drivers)).for_season(season)
    scenario = generate_synthetic_fleet(config.synthetic, seed, season)
    assignment = assign_batteries(scenario, config.battery, config.simulation.energy_factor)
    run = simulate_fleet(scenario, assignment.capacities, seed, config.simulation)
    events = [e for r in run.feasible() for e in r.events]
    envelopes, _ = quantify_events(events, parking_lookup(scenario), config.flexibility)
    return FleetRunOutputs(scenario, run.results, events, envelopes)


def check_fleet(out: FleetRunOutputs, max_rate: float = 22.0) -> None:
    # Per driver: energy conservation, SOC range, weekly closure
    for r in out.results:
        if r.infeasible:
            assert r.closure.status is ClosureStatus.INFEASIBLE
            continue
        start_kwh = r.closure.week_start_soc * r.capacity
        end_kwh = r.closure.week_end_soc * r.capacity
        assert start_kwh - r.trip_energy_kwh + r.charged_energy_kwh == pytest.approx(end_kwh, abs=TOL_KWH)
        assert 0.0 <= r.min_soc <= 1.0
        for e in r.events:
            assert 0.0 <= e.start_soc < e.end_soc <= 1.0 + 1e-9
            assert e.energy == pytest.approx((e.end_soc - e.start_soc) * r.capacity, abs=TOL_KWH)
        if r.closure.status is ClosureStatus.EXACT:
            assert abs(r.closure.residual_kwh) <= 0.5
        else:
            assert abs(r.closure.residual_kwh) > 0.5

    # Per envelope: flexible energy is the curtailable energy and never exceeds the charge
    events = {(e.driver_id, e.parking_index): e for e in out.events}
    for env in out.envelopes:
        ev = events[env.event_ref]
        down_start, down_end = env.down_window
        assert down_start == ev.charge_start
        if env.case is FlexCase.FULL:
            assert env.flexible_energy == ev.energy
        else:
            assert env.flexible_energy == pytest.approx(ev.rate * (down_end - down_start) / 60.0, abs=1e-9)
        assert env.flexible_energy <= ev.energy + 1e-9

    # Profiles: bound ordering and energy consistency per region and nationally
    profiles, national = aggregate(out.events, out.envelopes, out.scenario.regions)
    for profile in list(profiles.values()) + [national]:
        check_profile(profile, max_rate, tolerance=TOL_KWH * max(len(out.events), 1))
        assert np.all(profile.attributed_flexible_kwh <= profile.charged_kwh + TOL_KWH)

    # Additivity: odd and even drivers aggregated separately sum to the whole
    def part(parity):
        evs = [e for e in out.events if e.driver_id % 2 == parity]
        envs = [e for e in out.envelopes if e.driver_id % 2 == parity]
        return aggregate(evs, envs, out.scenario.regions)[1]

    odd, even = part(1), part(0)
    np.testing.assert_allclose(odd.baseline_kw + even.baseline_kw, national.baseline_kw, atol=1e-9)
    np.testing.assert_allclose(odd.lower_kw + even.lower_kw, national.lower_kw, atol=1e-9)
    np.testing.assert_allclose(odd.upper_kw + even.upper_kw, national.upper_kw, atol=1e-9)
    np.testing.assert_array_equal(odd.plugged_in_count + even.plugged_in_count, national.plugged_in_count)


class TestFleetInvariants:
    """Zero violations on randomized fleets."""

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_small_fleets(self, seed):
        out = run_fleet(150, seed)
        assert out.events
        assert out.envelopes
        check_fleet(out)

    @pytest.mark.parametrize("season", list(Season))
    def test_every_season(self, season):
        check_fleet(run_fleet(80, 17, season))

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_acceptance_scale(self, seed):
        check_fleet(run_fleet(1000, seed))


class TestParallelDeterminism:
    """Worker count and chunking never change results."""

    def test_simulate_fleet_workers(self, small_run_config):
        scenario = generate_synthetic_fleet(small_run_config.synthetic, 8)
        capacities = assign_batteries(scenario, small_run_config.battery).capacities
        sim = small_run_config.simulation
        serial = simulate_fleet(scenario, capacities, 8, sim, threads=1)
        pooled = simulate_fleet(scenario, capacities, 8, sim, threads=3, chunk_size=25)

        assert [r.events for r in serial.results] == [r.events for r in pooled.results]
        assert [r.closure for r in serial.results] == [r.closure for r in pooled.results]
        assert serial.diagnostics.as_dict() == pooled.diagnostics.as_dict()

    def test_streaming_workers(self):
        config = RunConfig(synthetic=SyntheticConfig(driver_count=100))
        serial = run_streaming(config, 12, threads=1, chunk_size=40)
        pooled = run_streaming(config, 12, threads=2, chunk_size=40)

        for rid, profile in serial.accumulator.profiles().items():
            other = pooled.accumulator.profiles()[rid]
            assert np.array_equal(profile.baseline_kw, other.baseline_kw)
            assert np.array_equal(profile.lower_kw, other.lower_kw)
            assert np.array_equal(profile.upper_kw, other.upper_kw)
            assert np.array_equal(profile.plugged_in_count, other.plugged_in_count)
        assert serial.diagnostics.as_dict() == pooled.diagnostics.as_dict()
        assert serial.envelopes == pooled.envelopes

    def test_streaming_matches_in_memory_pipeline(self):
        out = run_fleet(100, 12)
        profiles, _ = aggregate(out.events, out.envelopes, out.scenario.regions)
        streamed = run_streaming(RunConfig(synthetic=SyntheticConfig(driver_count=100)), 12,
                                 threads=1, chunk_size=30)

        assert streamed.envelopes == len(out.envelopes)
        for rid, profile in streamed.accumulator.profiles().items():
            np.testing.assert_allclose(profile.baseline_kw, profiles[rid].baseline_kw, atol=1e-9)
            np.testing.assert_allclose(profile.upper_kw, profiles[rid].upper_kw, atol=1e-9)
            np.testing.assert_array_equal(profile.plugged_in_count, profiles[rid].plugged_in_count)

    def test_streaming_generates_each_driver_once(self, monkeypatch):
        calls = []
        original = pipeline.generate_driver

        def counting(config, seed, driver_id, regions=None):
            calls.append(driver_id)
            return original(config, seed, driver_id, regions)

        monkeypatch.setattr(pipeline, "generate_driver", counting)
        result = run_streaming(RunConfig(synthetic=SyntheticConfig(driver_count=50)), 3, threads=1, chunk_size=20)

        assert sorted(calls) == list(range(1, 51))
        assert result.drivers == 50
