"""
Tests for schedule and region file ingestion and the scenario directory round trip.
"""

import io

import pytest

from evflex.schemas.fleet import FleetScenario, LocationPurpose, Season, Urbanization
from evflex.services.ingestion import (
    REGIONS_FILE,
    SCENARIO_FILE,
    SCHEDULES_FILE,
    ScheduleFormat,
    load_fleet,
    load_regions,
    load_scenario,
    write_scenario,
)
from evflex.utils.exceptions import ChronologyError, ScheduleFormatError, UnknownRegionError

HEADER = "driver_id,event_kind,start_min,end_min,purpose,energy_kwh,region_id\n"

TWO_DRIVERS = HEADER + (
    "1,P,0,420,H,,R1\n"
    "1,T,420,450,,6.5,R2\n"
    "1,P,450,960,W,,R2\n"
    "1,T,960,990,,6.5,R1\n"
    "1,P,990,10080,H,,R1\n"
    "2,P,0,10080,H,,R3\n"
)

REGIONS = (
    "region_id,name,urbanization\n"
    "R1,City,urban\n"
    "R2,Agglomeration,periurban\n"
    "R3,Countryside,rural\n"
)


class TestLoadFleet:
    """Parsing of the tabular schedule format."""

    def test_well_formed_two_driver_file(self):
        scenario = load_fleet(io.StringIO(TWO_DRIVERS))

        assert isinstance(scenario, FleetScenario)
        assert [s.driver_id for s in scenario.drivers] == [1, 2]
        commuter = scenario.driver(1)
        assert len(commuter.events) == 5
        assert commuter.events[2].purpose is LocationPurpose.WORK
        assert commuter.trips()[0].energy_consumed == pytest.approx(6.5)

    def test_overlapping_events_name_the_driver(self):
        text = HEADER + (
            "7,P,0,500,H,,R1\n"
            "7,T,400,520,,3.0,R1\n"
            "7,P,520,10080,H,,R1\n"
        )
        with pytest.raises(ChronologyError) as exc_info:
            load_fleet(io.StringIO(text))
        assert exc_info.value.driver_id == 7

    def test_empty_file_gives_empty_scenario(self):
        scenario = load_fleet(io.StringIO(""))
        assert scenario.drivers == ()

    def test_header_only_gives_empty_scenario(self):
        assert load_fleet(io.StringIO(HEADER)).drivers == ()

    def test_custom_delimiter(self):
        text = TWO_DRIVERS.replace(",", ";")
        scenario = load_fleet(io.StringIO(text), ScheduleFormat(delimiter=";"))
        assert len(scenario.drivers) == 2

    def test_rows_may_be_interleaved_across_drivers(self):
        lines = TWO_DRIVERS.splitlines(keepends=True)
        text = lines[0] + lines[6] + "".join(lines[1:6])
        scenario = load_fleet(io.StringIO(text))
        assert [s.driver_id for s in scenario.drivers] == [1, 2]

    def test_unknown_region_with_metadata(self):
        regions = load_regions(io.StringIO("region_id,name,urbanization\nR1,City,urban\n"))
        with pytest.raises(UnknownRegionError) as exc_info:
            load_fleet(io.StringIO(TWO_DRIVERS), regions=regions)
        assert exc_info.value.region_id == "R2"


class TestScheduleFormatErrors:
    """Malformed rows raise ScheduleFormatError with the line number."""

    @pytest.mark.parametrize("row,fragment", [
        ("1,X,0,10080,H,,R1\n", "event_kind"),
        ("1,P,0,ten,H,,R1\n", "start_min"),
        ("1,P,0,10080,Z,,R1\n", "purpose"),
        ("1,P,0,10080,H,5.0,R1\n", "energy_kwh"),
        ("1,P,0,10080,H,,\n", "region_id"),
        ("-1,P,0,10080,H,,R1\n", "driver_id"),
    ])
    def test_bad_row(self, row, fragment):
        with pytest.raises(ScheduleFormatError) as exc_info:
            load_fleet(io.StringIO(HEADER + row))
        assert exc_info.value.line == 2
        assert fragment in str(exc_info.value)

    def test_trip_without_energy(self):
        text = HEADER + "1,P,0,10,H,,R1\n1,T,10,20,,,R1\n"
        with pytest.raises(ScheduleFormatError) as exc_info:
            load_fleet(io.StringIO(text))
        assert exc_info.value.line == 3

    def test_missing_column(self):
        with pytest.raises(ScheduleFormatError) as exc_info:
            load_fleet(io.StringIO("driver_id,event_kind,start_min\n1,P,0\n"))
        assert exc_info.value.line == 1


class TestRegions:
    """Region metadata parsing."""

    def test_defaults_for_weights(self):
        regions = load_regions(io.StringIO(REGIONS))
        assert [r.region_id for r in regions] == ["R1", "R2", "R3"]
        assert regions[2].urbanization is Urbanization.RURAL
        assert regions[0].population_weight == 1.0

    def test_unknown_urbanization(self):
        with pytest.raises(ScheduleFormatError):
            load_regions(io.StringIO("region_id,name,urbanization\nR1,City,metropolitan\n"))

    def test_duplicate_region_id(self):
        text = "region_id,name,urbanization\nR1,City,urban\nR1,Town,rural\n"
        with pytest.raises(ScheduleFormatError) as exc_info:
            load_regions(io.StringIO(text))
        assert exc_info.value.line == 3


class TestScenarioDirectory:
    """write_scenario/load_scenario keep schedules, regions and metadata."""

    def test_scenario_files_load_back(self, golden_scenario, tmp_path):
        paths = write_scenario(golden_scenario, tmp_path)

        assert sorted(p.name for p in paths) == sorted([SCHEDULES_FILE, REGIONS_FILE, SCENARIO_FILE])
        loaded = load_scenario(tmp_path)
        assert loaded.drivers == golden_scenario.drivers
        assert loaded.regions == golden_scenario.regions
        assert loaded.season_label is Season.SUMMER
        assert loaded.global_seed == 7
        assert loaded.scenario_id == "golden"
