"""
Schedule and region file ingestion.

Schedule rows: driver_id, event_kind (P|T), start_min, end_min,
purpose (H|W|L|S|O, empty for trips), energy_kwh (empty for parking), region_id.
Region rows: region_id, name, urbanization [, population_weight, employment_weight].
"""
import csv
from collections import OrderedDict
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO

import yaml
from pydantic import BaseModel, ConfigDict, Field

from evflex.core.logs import logger
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
from evflex.services.validation import ensure_valid
from evflex.utils.exceptions import ScheduleFormatError, UnknownRegionError

SCHEDULES_FILE = "schedules.csv"
REGIONS_FILE = "regions.csv"
SCENARIO_FILE = "scenario.yaml"

SCHEDULE_COLUMNS = ["driver_id", "event_kind", "start_min", "end_min", "purpose", "energy_kwh", "region_id"]
REGION_COLUMNS = ["region_id", "name", "urbanization", "population_weight", "employment_weight"]


class ScheduleFormat(BaseModel):
    """Format descriptor for delimited schedule files."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    delimiter: str = Field(default=",", min_length=1, max_length=1)


class ScenarioMeta(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario_id: str = "scenario"
    season_label: Season = Season.WINTER
    global_seed: int = 0


def _parse_int(value: str, line: int, column: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ScheduleFormatError(line, f"column '{column}' is not an integer: {value!r}")


def _parse_float(value: str, line: int, column: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ScheduleFormatError(line, f"column '{column}' is not a number: {value!r}")


def _check_header(header: list[str], required: Sequence[str], line: int = 1) -> dict[str, int]:
    columns = [h.strip() for h in header]
    missing = [c for c in required if c not in columns]
    if missing:
        raise ScheduleFormatError(line, f"missing column(s) {', '.join(missing)}")
    return {name: columns.index(name) for name in columns}


def _parse_event(row: list[str], idx: dict[str, int], line: int):
    def cell(name: str) -> str:
        pos = idx[name]
        if pos >= len(row):
            raise ScheduleFormatError(line, f"missing field '{name}'")
        return row[pos].strip()

    driver_id = _parse_int(cell("driver_id"), line, "driver_id")
    if driver_id < 0:
        raise ScheduleFormatError(line, "driver_id must be non-negative")
    kind = cell("event_kind")
    start = _parse_int(cell("start_min"), line, "start_min")
    end = _parse_int(cell("end_min"), line, "end_min")
    purpose = cell("purpose")
    energy = cell("energy_kwh")
    region = cell("region_id")
    if not region:
        raise ScheduleFormatError(line, "missing field 'region_id'")

    if kind == "P":
        if energy:
            raise ScheduleFormatError(line, "parking rows must leave energy_kwh empty")
        try:
            location = LocationPurpose(purpose)
        except ValueError:
            raise ScheduleFormatError(line, f"unknown purpose {purpose!r}")
        return driver_id, ParkingEvent(start, end, location, region)
    if kind == "T":
        if purpose:
            raise ScheduleFormatError(line, "trip rows must leave purpose empty")
        if not energy:
            raise ScheduleFormatError(line, "missing field 'energy_kwh'")
        return driver_id, TripEvent(start, end, _parse_float(energy, line, "energy_kwh"), region)
    raise ScheduleFormatError(line, f"unknown event_kind {kind!r}")


def load_fleet(
        input_stream: TextIO,
        format_descriptor: Optional[ScheduleFormat] = None,
        regions: Optional[Sequence[Region]] = None,
        season_label: Season = Season.WINTER,
        global_seed: int = 0,
        scenario_id: str = "scenario",
) -> FleetScenario:
    """
    Parse a schedule file into a validated FleetScenario.

    Raises:
        ScheduleFormatError: malformed row or missing field
        ChronologyError: a driver schedule breaks its ordering invariants
        UnknownRegionError: an event references a region missing from `regions`
    """
    fmt = format_descriptor or ScheduleFormat()
    reader = csv.reader(input_stream, delimiter=fmt.delimiter)

    header = next(reader, None)
    grouped: "OrderedDict[int, list]" = OrderedDict()
    if header is not None and any(h.strip() for h in header):
        idx = _check_header(header, SCHEDULE_COLUMNS)
        for line, row in enumerate(reader, start=2):
            if not row or not any(c.strip() for c in row):
                continue
            driver_id, event = _parse_event(row, idx, line)
            grouped.setdefault(driver_id, []).append(event)

    known = {r.region_id for r in regions} if regions is not None else None
    schedules = []
    for driver_id in sorted(grouped):
        schedule = ensure_valid(DriverSchedule(driver_id, tuple(grouped[driver_id])))
        if known is not None:
            for event in schedule.events:
                region = event.region if event.is_parking else event.destination_region
                if region not in known:
                    logger.error(f"Driver {driver_id} references unknown region {region}")
                    raise UnknownRegionError(region)
        schedules.append(schedule)

    logger.info(f"Loaded {len(schedules)} driver schedule(s)")
    return FleetScenario(
        drivers=tuple(schedules),
        regions=tuple(regions or ()),
        season_label=season_label,
        global_seed=global_seed,
        scenario_id=scenario_id,
    )


def load_regions(input_stream: TextIO) -> list[Region]:
    """
    Raises:
        ScheduleFormatError: malformed row, unknown urbanization level or duplicate id
    """
    reader = csv.reader(input_stream)
    header = next(reader, None)
    if header is None:
        return []
    idx = _check_header(header, REGION_COLUMNS[:3])
    regions: list[Region] = []
    seen: set[str] = set()
    for line, row in enumerate(reader, start=2):
        if not row or not any(c.strip() for c in row):
            continue
        cells = {name: (row[pos].strip() if pos < len(row) else "") for name, pos in idx.items()}
        region_id = cells["region_id"]
        if not region_id:
            raise ScheduleFormatError(line, "missing field 'region_id'")
        if region_id in seen:
            raise ScheduleFormatError(line, f"duplicate region id {region_id!r}")
        try:
            level = Urbanization(cells["urbanization"])
        except ValueError:
            raise ScheduleFormatError(line, f"unknown urbanization {cells['urbanization']!r}")
        population = cells.get("population_weight") or "1.0"
        employment = cells.get("employment_weight") or "1.0"
        regions.append(Region(
            region_id=region_id,
            name=cells["name"],
            urbanization=level,
            population_weight=_parse_float(population, line, "population_weight"),
            employment_weight=_parse_float(employment, line, "employment_weight"),
        ))
        seen.add(region_id)
    return regions


def _event_row(driver_id: int, event) -> list:
    if event.is_parking:
        return [driver_id, "P", event.start_time, event.end_time, event.purpose.value, "", event.region]
    return [driver_id, "T", event.departure_time, event.arrival_time, "",
            repr(float(event.energy_consumed)), event.destination_region]


def write_schedules(schedules: Iterable[DriverSchedule], output_stream: TextIO) -> None:
    writer = csv.writer(output_stream, lineterminator="\n")
    writer.writerow(SCHEDULE_COLUMNS)
    for schedule in schedules:
        for event in schedule.events:
            writer.writerow(_event_row(schedule.driver_id, event))


def write_regions(regions: Iterable[Region], output_stream: TextIO) -> None:
    writer = csv.writer(output_stream, lineterminator="\n")
    writer.writerow(REGION_COLUMNS)
    for r in regions:
        writer.writerow([r.region_id, r.name, r.urbanization.value,
                         repr(float(r.population_weight)), repr(float(r.employment_weight))])


def write_scenario(scenario: FleetScenario, directory: Path) -> list[Path]:
    """Write schedules.csv, regions.csv and scenario.yaml; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    schedules_path = directory / SCHEDULES_FILE
    regions_path = directory / REGIONS_FILE
    meta_path = directory / SCENARIO_FILE

    with open(schedules_path, "w", newline="", encoding="utf-8") as f:
        write_schedules(scenario.drivers, f)
    with open(regions_path, "w", newline="", encoding="utf-8") as f:
        write_regions(scenario.regions, f)
    meta = ScenarioMeta(scenario_id=scenario.scenario_id, season_label=scenario.season_label,
                        global_seed=scenario.global_seed)
    meta_path.write_text(yaml.safe_dump(meta.model_dump(mode="json"), sort_keys=True), encoding="utf-8")
    logger.info(f"Wrote scenario '{scenario.scenario_id}' ({len(scenario.drivers)} drivers) to {directory}")
    return [schedules_path, regions_path, meta_path]


def load_scenario(directory: Path) -> FleetScenario:
    """Load a scenario directory written by write_scenario."""
    directory = Path(directory)
    meta = ScenarioMeta()
    meta_path = directory / SCENARIO_FILE
    if meta_path.exists():
        meta = ScenarioMeta.model_validate(yaml.safe_load(meta_path.read_text(encoding="utf-8")) or {})
    with open(directory / REGIONS_FILE, newline="", encoding="utf-8") as f:
        regions = load_regions(f)
    with open(directory / SCHEDULES_FILE, newline="", encoding="utf-8") as f:
        return load_fleet(f, regions=regions, season_label=meta.season_label,
                          global_seed=meta.global_seed, scenario_id=meta.scenario_id)
