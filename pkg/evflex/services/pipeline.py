"""
Pipeline stages. Each stage reads its inputs from files, writes its outputs
and a manifest into one directory, and returns the manifest. The CLI wraps
them in staged output directories; run_streaming chains the in-memory
equivalent for benchmark-scale fleets.
"""
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional
import pickle
import tempfile
import time

from tqdm import tqdm

from evflex.core.config import RunConfig, settings
from evflex.core.logs import logger
from evflex.schemas.charging import ChargingEvent, ClosureStatus, SimulationDiagnostics
from evflex.schemas.fleet import DriverSchedule, FleetScenario, ParkingEvent, Season
from evflex.schemas.flexibility import ExclusionReason
from evflex.schemas.report import FleetSummary, RegionalProfile, RunManifest
from evflex.services import reporting
from evflex.services.aggregation import ProfileAccumulator, check_profile, summarize
from evflex.services.battery import assign_batteries, assign_from_energies, max_daily_energy
from evflex.services.charging import simulate_driver, split_phases
from evflex.services.flexibility import quantify_events
from evflex.services.ingestion import (
    REGIONS_FILE,
    SCENARIO_FILE,
    SCHEDULES_FILE,
    load_regions,
    load_scenario,
    write_scenario,
)
from evflex.services.manifest import build_manifest, write_manifest
from evflex.services.simulation import simulate_fleet
from evflex.services.synthetic import config_regions, generate_driver, generate_synthetic_fleet
from evflex.utils.exceptions import InvariantViolationError


def scenario_inputs(scenario_dir: Path) -> list[Path]:
    scenario_dir = Path(scenario_dir)
    return [p for p in (scenario_dir / SCHEDULES_FILE, scenario_dir / REGIONS_FILE, scenario_dir / SCENARIO_FILE)
            if p.exists()]


def _config_inputs(config_path: Optional[Path]) -> list[Path]:
    return [Path(config_path)] if config_path is not None else []


def generate_stage(config: RunConfig, seed: int, out_dir: Path, season: Season,
                   config_path: Optional[Path] = None) -> RunManifest:
    started = time.perf_counter()
    scenario = generate_synthetic_fleet(config.synthetic, seed, season)
    paths = write_scenario(scenario, out_dir)
    manifest = build_manifest(
        "generate", config.config_hash(), seed, paths, _config_inputs(config_path),
        scenario_id=scenario.scenario_id, season_label=season.value,
        driver_count=len(scenario.drivers), wall_clock_s=time.perf_counter() - started,
    )
    write_manifest(manifest, out_dir)
    return manifest


def _closure_counts(results) -> dict[str, int]:
    counts = Counter(r.closure.status.value for r in results)
    return {s.value: counts.get(s.value, 0) for s in ClosureStatus}


def simulate_stage(scenario_dir: Path, config: RunConfig, out_dir: Path, seed: Optional[int] = None,
                   threads: int = 1, season: Optional[Season] = None,
                   config_path: Optional[Path] = None) -> RunManifest:
    """Charging events of feasible drivers plus diagnostics; infeasible drivers are listed, not written."""
    started = time.perf_counter()
    scenario = load_scenario(scenario_dir)
    season = season or scenario.season_label
    global_seed = scenario.global_seed if seed is None else seed
    run_config = config.for_season(season)
    assignment = assign_batteries(scenario, run_config.battery, run_config.simulation.energy_factor)
    run = simulate_fleet(scenario, assignment.capacities, global_seed, run_config.simulation, threads)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    events = [e for r in run.feasible() for e in r.events]
    events_path = reporting.write_events(events, out_dir / reporting.EVENTS_FILE)
    diagnostics = run.diagnostics.as_dict()
    diagnostics["closure"] = _closure_counts(run.results)
    diagnostics["battery"] = {
        "block_sizes": list(assignment.block_sizes),
        "promoted": len(assignment.promoted),
        "capped": len(assignment.capped),
    }
    diagnostics["season"] = season.value
    diagnostics["energy_factor"] = run_config.simulation.energy_factor
    diag_path = reporting.write_yaml(diagnostics, out_dir / reporting.DIAGNOSTICS_FILE)

    manifest = build_manifest(
        "simulate", run_config.config_hash(), global_seed, [events_path, diag_path],
        scenario_inputs(scenario_dir) + _config_inputs(config_path),
        scenario_id=scenario.scenario_id, season_label=season.value, driver_count=len(scenario.drivers),
        counts={"charging_events": len(events), "infeasible_drivers": len(run.diagnostics.infeasible_drivers)},
        wall_clock_s=time.perf_counter() - started,
    )
    write_manifest(manifest, out_dir)
    return manifest


def parking_lookup(scenario: FleetScenario) -> dict[tuple[int, int], ParkingEvent]:
    """Week parking events keyed by (driver_id, schedule index), as the simulator indexes them."""
    lookup: dict[tuple[int, int], ParkingEvent] = {}
    for schedule in scenario.drivers:
        _, week = split_phases(schedule)
        for index, event in week:
            if event.is_parking:
                lookup[(schedule.driver_id, index)] = event
    return lookup


def check_event_references(events: Iterable[ChargingEvent],
                           parkings: dict[tuple[int, int], ParkingEvent]) -> None:
    """
    Raises:
        InvariantViolationError: an event does not match a week parking event of the scenario
    """
    for ev in events:
        parking = parkings.get((ev.driver_id, ev.parking_index))
        if parking is None:
            raise InvariantViolationError(
                "event_reference", f"driver {ev.driver_id} has no parking event {ev.parking_index}")
        if (parking.start_time, parking.end_time, parking.region) != (ev.charge_start, ev.parking_end, ev.region):
            raise InvariantViolationError(
                "event_reference", f"driver {ev.driver_id} parking {ev.parking_index} does not match the scenario")


def flex_stage(events_path: Path, scenario_dir: Path, config: RunConfig, out_dir: Path,
               config_path: Optional[Path] = None) -> RunManifest:
    started = time.perf_counter()
    scenario = load_scenario(scenario_dir)
    events = reporting.read_events(events_path)
    parkings = parking_lookup(scenario)
    check_event_references(events, parkings)
    envelopes, excluded = quantify_events(events, parkings, config.flexibility)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    env_path = reporting.write_envelopes(envelopes, out_dir / reporting.ENVELOPES_FILE)
    exclusions = {
        "events": len(events),
        "envelopes": len(envelopes),
        "excluded": {r.value: excluded.get(r.value, 0) for r in ExclusionReason},
    }
    excl_path = reporting.write_yaml(exclusions, out_dir / reporting.EXCLUSIONS_FILE)
    manifest = build_manifest(
        "flex", config.config_hash(), scenario.global_seed, [env_path, excl_path],
        [Path(events_path)] + scenario_inputs(scenario_dir) + _config_inputs(config_path),
        scenario_id=scenario.scenario_id, season_label=scenario.season_label.value,
        driver_count=len(scenario.drivers),
        counts={"envelopes": len(envelopes), "excluded": sum(excluded.values())},
        wall_clock_s=time.perf_counter() - started,
    )
    write_manifest(manifest, out_dir)
    return manifest


def report_stage(events_path: Path, envelopes_path: Path, regions_path: Path, config: RunConfig,
                 out_dir: Path, season_label: str = "", global_seed: int = 0,
                 config_path: Optional[Path] = None) -> tuple[RunManifest, FleetSummary]:
    started = time.perf_counter()
    with open(regions_path, newline="", encoding="utf-8") as f:
        regions = load_regions(f)
    events = reporting.read_events(events_path)
    envelopes = reporting.read_envelopes(envelopes_path)

    acc = ProfileAccumulator(regions)
    acc.add(events, envelopes)
    profiles = acc.profiles()
    national = RegionalProfile.combine(profiles.values())
    max_rate = config.simulation.rates.max_rate
    for profile in list(profiles.values()) + [national]:
        check_profile(profile, max_rate, tolerance=1e-6 * max(len(events), 1))
    summary = summarize(profiles, regions, config.report, season_label)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = [
        reporting.write_profiles(profiles, out_dir / reporting.PROFILES_FILE),
        reporting.write_national_profile(national, out_dir / reporting.NATIONAL_PROFILE_FILE),
        reporting.write_daily(profiles, out_dir / reporting.DAILY_FILE),
        reporting.write_boxplot(summary, out_dir / reporting.BOXPLOT_FILE),
        reporting.write_summary(summary, out_dir / reporting.SUMMARY_FILE),
    ]
    manifest = build_manifest(
        "report", config.config_hash(), global_seed, outputs,
        [Path(events_path), Path(envelopes_path), Path(regions_path)] + _config_inputs(config_path),
        season_label=season_label,
        counts={"events": len(events), "envelopes": len(envelopes), "regions": len(regions)},
        wall_clock_s=time.perf_counter() - started,
    )
    write_manifest(manifest, out_dir)
    return manifest, summary


@dataclass
class StreamingResult:
    accumulator: ProfileAccumulator
    diagnostics: SimulationDiagnostics
    exclusions: Counter = field(default_factory=Counter)
    envelopes: int = 0
    drivers: int = 0


def _driver_ids(count: int, size: int) -> Iterator[range]:
    for start in range(1, count + 1, size):
        yield range(start, min(start + size, count + 1))


def _spill_path(spill_dir: str, ids: range) -> Path:
    return Path(spill_dir) / f"drivers-{ids.start}.pkl"


def _energies_chunk(payload: tuple) -> dict[int, float]:
    """Generate a chunk once: spill its schedules and return their max daily energies."""
    config, seed, ids, spill_dir = payload
    regions = config_regions(config.synthetic)
    schedules = [generate_driver(config.synthetic, seed, i, regions) for i in ids]
    with open(_spill_path(spill_dir, ids), "wb") as f:
        pickle.dump(schedules, f, protocol=pickle.HIGHEST_PROTOCOL)
    factor = config.simulation.energy_factor
    return {s.driver_id: max_daily_energy(s, factor) for s in schedules}


def _stream_chunk(payload: tuple) -> tuple[ProfileAccumulator, SimulationDiagnostics, Counter, int]:
    config, seed, ids, capacities, spill_dir = payload
    path = _spill_path(spill_dir, ids)
    with open(path, "rb") as f:
        schedules: list[DriverSchedule] = pickle.load(f)
    path.unlink()

    acc = ProfileAccumulator(config_regions(config.synthetic))
    diagnostics = SimulationDiagnostics()
    excluded: Counter = Counter()
    events: list[ChargingEvent] = []
    envelopes = []
    for schedule in schedules:
        driver_id = schedule.driver_id
        result = simulate_driver(schedule, capacities[driver_id], seed, config.simulation, trajectory=False)
        diagnostics.add(result)
        if result.infeasible:
            continue
        parkings = {(driver_id, i): e for i, e in split_phases(schedule)[1] if e.is_parking}
        driver_envelopes, skipped = quantify_events(result.events, parkings, config.flexibility)
        excluded.update(skipped)
        events.extend(result.events)
        envelopes.extend(driver_envelopes)
    acc.add(events, envelopes)
    return acc, diagnostics, excluded, len(envelopes)


def run_streaming(config: RunConfig, seed: int, season: Season = Season.WINTER, threads: Optional[int] = None,
                  chunk_size: Optional[int] = None, progress: bool = False) -> StreamingResult:
    """
    Generate, simulate, quantify and aggregate a synthetic fleet chunk by chunk.

    Batteries need the whole fleet's energy ranking before anyone is simulated.
    The first pass generates each chunk, keeps its max daily energies and
    spills its schedules to a temporary directory; the second pass reads the
    spill back, so every driver is generated exactly once. Chunks are fixed by
    chunk_size, so results do not depend on threads.
    """
    run_config = config.for_season(season)
    threads = threads or settings.THREADS
    size = chunk_size or settings.CHUNK_SIZE
    count = run_config.synthetic.driver_count
    chunks = list(_driver_ids(count, size))

    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None

    def mapped(fn, payloads):
        return map(fn, payloads) if pool is None else pool.map(fn, payloads)

    try:
        with tempfile.TemporaryDirectory(prefix="evflex-spill-") as spill_dir:
            energies: dict[int, float] = {}
            for part in mapped(_energies_chunk, ((run_config, seed, ids, spill_dir) for ids in chunks)):
                energies.update(part)
            assignment = assign_from_energies(energies, run_config.battery)

            total = ProfileAccumulator(config_regions(run_config.synthetic))
            diagnostics = SimulationDiagnostics()
            excluded: Counter = Counter()
            n_envelopes = 0
            payloads = ((run_config, seed, ids, {i: assignment[i] for i in ids}, spill_dir) for ids in chunks)
            for acc, diag, skipped, n in tqdm(mapped(_stream_chunk, payloads), total=len(chunks),
                                              disable=not progress, desc="chunks"):
                total.merge(acc)
                diagnostics.merge(diag)
                excluded.update(skipped)
                n_envelopes += n
    finally:
        if pool is not None:
            pool.shutdown()

    logger.info(f"Streamed {count} drivers in {len(chunks)} chunk(s): {n_envelopes} envelopes")
    return StreamingResult(accumulator=total, diagnostics=diagnostics, exclusions=excluded,
                           envelopes=n_envelopes, drivers=count)
