"""
Golden trace: a commuter and an errand-runner simulated with pinned draws must
reproduce the hand-traced charging event and envelope files byte for byte.

Driver 1 (100 kWh) plugs in at work at SOC 0.70 below its 0.75 threshold and
charges to 0.80; it returns home at 0.50 and the week-closure rule restores
1.00. Driver 2 (70 kWh) reaches the shop at SOC 0.43 below 0.60, charges
40 kWh at 22 kW in 110 of its 150 parked minutes (Partial case), and closes
the week at home.
"""

from collections import Counter

from evflex.schemas.charging import ClosureStatus
from evflex.services.charging import simulate_driver
from evflex.services.flexibility import quantify_events
from evflex.services.pipeline import parking_lookup
from evflex.services.reporting import read_envelopes, read_events, write_envelopes, write_events

EXPECTED_EVENTS = (
    "driver_id,parking_index,charge_start_min,charge_end_min,parking_end_min,rate_kw,energy_kwh,"
    "target_soc,start_soc,end_soc,reason,region_id,purpose\n"
    "1,2,450,505,960,11.000000,10.000000,0.800000,0.700000,0.800000,SampledThreshold,R2,W\n"
    "1,4,990,1419,10080,7.000000,50.000000,1.000000,0.500000,1.000000,WeekClosureRisk,R1,H\n"
    "2,2,620,730,770,22.000000,40.000000,1.000000,0.428571,1.000000,SampledThreshold,R1,S\n"
    "2,4,790,876,10080,7.000000,10.000000,1.000000,0.857143,1.000000,WeekClosureRisk,R3,H\n"
)

EXPECTED_ENVELOPES = (
    "driver_id,parking_index,case,down_start,down_end,dead_start,dead_end,up_start,up_end,"
    "rate_kw,flexible_energy_kwh,days_credited,region_id,charged_energy_kwh\n"
    "1,2,F,450,505,,,505,960,11.000000,10.000000,0,R2,10.000000\n"
    "2,2,P,620,660,660,730,730,770,22.000000,14.666667,0,R1,40.000000\n"
)


def run_golden(scenario, capacities, draws, config):
    return [
        simulate_driver(schedule, capacities[schedule.driver_id], scenario.global_seed, config,
                        draws=draws[schedule.driver_id])
        for schedule in scenario.drivers
    ]


class TestGoldenTrace:
    """Hand-traced two-driver scenario."""

    def test_charging_events_file(self, golden_scenario, golden_capacities, golden_draws, sim_config, tmp_path):
        results = run_golden(golden_scenario, golden_capacities, golden_draws, sim_config)
        path = write_events([e for r in results for e in r.events], tmp_path / "events.csv")

        assert path.read_text(encoding="utf-8") == EXPECTED_EVENTS

    def test_envelope_file(self, golden_scenario, golden_capacities, golden_draws, sim_config, tmp_path):
        results = run_golden(golden_scenario, golden_capacities, golden_draws, sim_config)
        events = [e for r in results for e in r.events]
        envelopes, excluded = quantify_events(events, parking_lookup(golden_scenario))
        path = write_envelopes(envelopes, tmp_path / "envelopes.csv")

        assert path.read_text(encoding="utf-8") == EXPECTED_ENVELOPES
        assert excluded == Counter({"too_long": 2})

    def test_closure_is_exact(self, golden_scenario, golden_capacities, golden_draws, sim_config):
        results = run_golden(golden_scenario, golden_capacities, golden_draws, sim_config)

        for result in results:
            assert result.closure.status is ClosureStatus.EXACT
            assert result.closure.week_start_soc == 1.0
            assert result.closure.week_end_soc == 1.0
            assert not result.infeasible
        assert [r.trip_energy_kwh for r in results] == [60.0, 50.0]

    def test_files_read_back(self, tmp_path):
        events_path = tmp_path / "events.csv"
        envelopes_path = tmp_path / "envelopes.csv"
        events_path.write_text(EXPECTED_EVENTS, encoding="utf-8")
        envelopes_path.write_text(EXPECTED_ENVELOPES, encoding="utf-8")

        events = read_events(events_path)
        envelopes = read_envelopes(envelopes_path)
        write_events(events, tmp_path / "events2.csv")
        write_envelopes(envelopes, tmp_path / "envelopes2.csv")

        assert (tmp_path / "events2.csv").read_text(encoding="utf-8") == EXPECTED_EVENTS
        assert (tmp_path / "envelopes2.csv").read_text(encoding="utf-8") == EXPECTED_ENVELOPES
        assert envelopes[1].flex_deadline == 660
        assert envelopes[1].dead_window == (660, 730)
