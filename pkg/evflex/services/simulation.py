"""
Fleet simulation over a process pool.

Drivers are sorted by id and cut into fixed-size chunks, so the work units,
and therefore the output, do not depend on the worker count. Chunks come back
in submission order.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

from evflex.core.config import SimulationConfig, settings
from evflex.core.logs import logger
from evflex.schemas.charging import DriverResult, SimulationDiagnostics
from evflex.schemas.fleet import DriverSchedule, FleetScenario
from evflex.services.charging import simulate_driver


@dataclass
class FleetRun:
    results: list[DriverResult]
    diagnostics: SimulationDiagnostics

    def feasible(self) -> list[DriverResult]:
        return [r for r in self.results if not r.infeasible]


def _simulate_chunk(payload: tuple) -> list[DriverResult]:
    schedules, capacities, global_seed, config = payload
    return [
        simulate_driver(s, capacities[s.driver_id], global_seed, config, trajectory=config.keep_trajectory)
        for s in schedules
    ]


def _chunks(schedules: list[DriverSchedule], size: int) -> Iterator[list[DriverSchedule]]:
    for start in range(0, len(schedules), size):
        yield schedules[start:start + size]


def simulate_chunks(
        schedules: Iterable[DriverSchedule],
        capacities: Mapping[int, float],
        global_seed: int,
        config: SimulationConfig,
        threads: int = 1,
        chunk_size: Optional[int] = None,
) -> Iterator[list[DriverResult]]:
    """Yield per-chunk results in driver_id order."""
    ordered = sorted(schedules, key=lambda s: s.driver_id)
    size = chunk_size or settings.CHUNK_SIZE
    payloads = (
        (chunk, {s.driver_id: capacities[s.driver_id] for s in chunk}, global_seed, config)
        for chunk in _chunks(ordered, size)
    )
    if threads <= 1:
        for payload in payloads:
            yield _simulate_chunk(payload)
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(_simulate_chunk, payloads)


def simulate_fleet(
        scenario: FleetScenario,
        capacities: Mapping[int, float],
        global_seed: int,
        config: SimulationConfig,
        threads: int = 1,
        chunk_size: Optional[int] = None,
) -> FleetRun:
    diagnostics = SimulationDiagnostics()
    results: list[DriverResult] = []
    logger.info(f"Simulating {len(scenario.drivers)} drivers with {threads} worker(s)")
    for chunk in simulate_chunks(scenario.drivers, capacities, global_seed, config, threads, chunk_size):
        for result in chunk:
            diagnostics.add(result)
        results.extend(chunk)
    if diagnostics.infeasible_drivers:
        logger.warning(f"{len(diagnostics.infeasible_drivers)} infeasible driver(s) excluded from aggregates")
    logger.info(f"Simulation done: {diagnostics.charging_events} charging events, "
                f"{diagnostics.closure_shortfalls} closure shortfalls")
    return FleetRun(results=results, diagnostics=diagnostics)
