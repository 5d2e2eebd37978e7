"""
Charging decision and charging process for one driver.

The week is preceded by a two-day initialization run that starts from a full
battery; its final SOC becomes the SOC the week must also end with. At every
parking event longer than the minimum parking time the driver draws a plug-in
threshold and decides to charge if any forcing rule fires or the arrival SOC
is below the threshold. Charging starts at arrival, runs at the location rate
and stops at the target SOC or at departure. A positive decision that
would not raise the SOC (target already reached, or the final parking
already at the week-start SOC) is counted as a null charge.
"""
from collections import Counter
from dataclasses import dataclass, replace
import math
from typing import Optional, Sequence, Union

import numpy as np

from evflex.core.config import SimulationConfig
from evflex.core.logs import logger
from evflex.models.decision import (
    TARGET_HIGH,
    TARGET_LOW,
    sample_plugin_threshold,
    sample_target_soc,
    targets_from_uniform,
)
from evflex.models.rates import rate_for_purpose
from evflex.models.rng import STREAM_CHARGING, driver_rng
from evflex.schemas.charging import (
    NEGATIVE,
    ChargingEvent,
    ClosureReport,
    ClosureStatus,
    Decision,
    DecisionOutcome,
    DecisionReason,
    DriverResult,
    VehicleState,
)
from evflex.schemas.fleet import PREFIX_MINUTES, DriverSchedule, Event, ParkingEvent, TripEvent

EPS = 1e-9

RngOrPinned = Union[np.random.Generator, float]


@dataclass(frozen=True)
class DriverDraws:
    """Pre-drawn randomness: one threshold and one target per eligible parking event."""
    thresholds: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.thresholds)


def draw_decisions(rng: np.random.Generator, n: int, config: SimulationConfig) -> DriverDraws:
    thresholds = np.atleast_1d(sample_plugin_threshold(rng, config, size=n))
    targets = np.atleast_1d(sample_target_soc(rng, config, size=n))
    return DriverDraws(thresholds=thresholds, targets=targets)


def pinned_draws(thresholds: Sequence[float], target_uniforms: Sequence[float],
                 config: SimulationConfig) -> DriverDraws:
    """Draws from fixed uniforms for targets (u < p80 -> 0.80) and fixed threshold values."""
    return DriverDraws(
        thresholds=np.asarray(thresholds, dtype=float),
        targets=np.atleast_1d(targets_from_uniform(np.asarray(target_uniforms, dtype=float), config.p80)),
    )


def split_phases(schedule: DriverSchedule) -> tuple[list[tuple[int, Event]], list[tuple[int, Event]]]:
    """
    Split a schedule into (initialization prefix, week) event lists of (schedule index, event).

    With negative-time events the prefix is the schedule's own; otherwise the
    first two simulated days are replicated, cut back to the last trip
    departure when minute 2880 falls inside a trip.
    """
    events = schedule.events
    if schedule.has_prefix:
        prefix = [(i, replace(e, end_time=0) if e.end_time > 0 else e)
                  for i, e in enumerate(events) if e.start_time < 0]
        week = [(i, replace(e, start_time=0) if e.start_time < 0 else e)
                for i, e in enumerate(events) if e.end_time > 0]
        return prefix, week

    cut = PREFIX_MINUTES
    for e in events:
        if not e.is_parking and e.departure_time < cut < e.arrival_time:
            cut = e.departure_time
            break
    prefix = []
    for i, e in enumerate(events):
        if e.start_time >= cut:
            break
        if e.is_parking:
            prefix.append((i, ParkingEvent(e.start_time - PREFIX_MINUTES, min(e.end_time, cut) - PREFIX_MINUTES,
                                           e.purpose, e.region)))
        else:
            prefix.append((i, TripEvent(e.departure_time - PREFIX_MINUTES, e.arrival_time - PREFIX_MINUTES,
                                        e.energy_consumed, e.destination_region)))
    week = list(enumerate(events))
    return prefix, week


def evaluate_decision(
        soc: float,
        capacity: float,
        week_start_soc: float,
        threshold: float,
        next_two_kwh: float,
        future_trip_kwh: float,
        recharge_kwh: float,
        config: SimulationConfig,
        closure_enabled: bool = True,
) -> DecisionOutcome:
    """Apply the decision rules in order floor, reserve, closure, sampled; first match is the reason."""
    if config.enable_forcing_rules:
        floor_kwh = config.soc_floor * capacity
        if soc < config.soc_floor:
            return DecisionOutcome(Decision.POSITIVE, DecisionReason.FLOOR_BREACH, threshold)
        if soc * capacity - next_two_kwh < floor_kwh:
            return DecisionOutcome(Decision.POSITIVE, DecisionReason.TWO_TRIP_RESERVE, threshold)
        if closure_enabled:
            deficit = week_start_soc * capacity - (soc * capacity - future_trip_kwh)
            if deficit > recharge_kwh + EPS:
                return DecisionOutcome(Decision.POSITIVE, DecisionReason.WEEK_CLOSURE_RISK, threshold)
    if soc < threshold:
        return DecisionOutcome(Decision.POSITIVE, DecisionReason.SAMPLED_THRESHOLD, threshold)
    return DecisionOutcome(Decision.NEGATIVE, DecisionReason.NONE, threshold)


def _max_recharge(parking: ParkingEvent, capacity: float, config: SimulationConfig) -> float:
    rate = rate_for_purpose(parking.purpose, config.rates)
    return min(rate * parking.duration / 60.0, capacity)


def decide_charge(
        state: VehicleState,
        parking: ParkingEvent,
        lookahead: Sequence[Event],
        rng: RngOrPinned,
        config: SimulationConfig,
        closure_enabled: bool = True,
) -> DecisionOutcome:
    """
    Plug-in decision at arrival.

    Parking events not longer than the minimum parking time are Negative and
    consume no randomness. `rng` may be a generator or a pinned threshold.
    """
    if parking.duration <= config.min_parking_minutes:
        return NEGATIVE
    threshold = float(rng) if isinstance(rng, (int, float)) else float(sample_plugin_threshold(rng, config))

    trips = [e.energy_consumed * config.energy_factor for e in lookahead if not e.is_parking]
    recharge = sum(_max_recharge(e, state.capacity, config) for e in lookahead
                   if e.is_parking and e.duration > config.min_parking_minutes)
    return evaluate_decision(
        soc=state.soc,
        capacity=state.capacity,
        week_start_soc=state.week_start_soc,
        threshold=threshold,
        next_two_kwh=sum(trips[:2]),
        future_trip_kwh=sum(trips),
        recharge_kwh=recharge,
        config=config,
        closure_enabled=closure_enabled,
    )


def adjust_target(sampled: float, soc: float, capacity: float, reason: DecisionReason,
                  next_two_kwh: float, config: SimulationConfig) -> float:
    """Raise the sampled target to the smallest of {0.80, 1.00} above arrival SOC and forced needs."""
    if reason is DecisionReason.WEEK_CLOSURE_RISK:
        return TARGET_HIGH
    need = next_two_kwh / capacity + config.soc_floor if reason is DecisionReason.TWO_TRIP_RESERVE else 0.0
    for candidate in (TARGET_LOW, TARGET_HIGH):
        if candidate >= sampled and candidate > soc and candidate >= need:
            return candidate
    return TARGET_HIGH


def _charge_to(state: VehicleState, parking: ParkingEvent, target: float, rate: float,
               reason: DecisionReason, driver_id: int, parking_index: int) -> ChargingEvent:
    soc = state.soc
    capacity = state.capacity
    needed = (target - soc) * capacity
    minutes = max(1, math.ceil(needed * 60.0 / rate - EPS))
    if minutes <= parking.duration:
        energy = needed
        end_soc = target
    else:
        minutes = parking.duration
        energy = rate * minutes / 60.0
        end_soc = min(soc + energy / capacity, target)
    state.soc = end_soc
    return ChargingEvent(
        driver_id=driver_id,
        parking_index=parking_index,
        charge_start=parking.start_time,
        charge_end=parking.start_time + minutes,
        parking_end=parking.end_time,
        rate=rate,
        energy=energy,
        target_soc=target,
        start_soc=soc,
        end_soc=end_soc,
        reason=reason,
        region=parking.region,
        purpose=parking.purpose,
    )


def execute_charging(
        state: VehicleState,
        parking: ParkingEvent,
        decision: DecisionOutcome,
        rng: RngOrPinned,
        config: SimulationConfig,
        next_two_kwh: float = 0.0,
        driver_id: int = 0,
        parking_index: int = 0,
) -> Optional[ChargingEvent]:
    """
    Run the charging process after a positive decision and update state.soc.

    `rng` may be a generator or a pinned target SOC. Returns None (a null
    charge) when the adjusted target does not exceed the arrival SOC.
    """
    if not decision.positive:
        raise ValueError("execute_charging requires a positive decision")
    sampled = float(rng) if isinstance(rng, (int, float)) else float(sample_target_soc(rng, config))
    target = adjust_target(sampled, state.soc, state.capacity, decision.reason, next_two_kwh, config)
    if target <= state.soc + EPS:
        return None
    rate = rate_for_purpose(parking.purpose, config.rates)
    return _charge_to(state, parking, target, rate, decision.reason, driver_id, parking_index)


class _PhaseLookahead:
    """Suffix sums over a phase: next-two-trip energy, remaining trip energy, remaining recharge."""

    def __init__(self, events: list[Event], tail: list[Event], capacity: float, config: SimulationConfig):
        factor = config.energy_factor
        seq = events + tail
        self.next_two = [0.0] * len(events)
        a = b = 0.0
        for i in range(len(seq) - 1, -1, -1):
            if i < len(events):
                self.next_two[i] = a + b
            e = seq[i]
            if not e.is_parking:
                a, b = e.energy_consumed * factor, a

        self.future_trips = [0.0] * len(events)
        self.future_recharge = [0.0] * len(events)
        trips = recharge = 0.0
        for i in range(len(events) - 1, -1, -1):
            self.future_trips[i] = trips
            self.future_recharge[i] = recharge
            e = events[i]
            if e.is_parking:
                if e.duration > config.min_parking_minutes:
                    recharge += _max_recharge(e, capacity, config)
            else:
                trips += e.energy_consumed * factor


class _DriverRun:
    def __init__(self, driver_id: int, capacity: float, config: SimulationConfig,
                 draws: DriverDraws, trajectory: bool):
        self.driver_id = driver_id
        self.config = config
        self.state = VehicleState(capacity=capacity)
        self.draws = draws
        self.next_draw = 0
        self.keep_trajectory = trajectory
        self.trajectory: list[tuple[int, float]] = []
        self.events: list[ChargingEvent] = []
        self.infeasible = False
        self.null_charges = 0
        self.floor_violations = 0
        self.min_soc = 1.0
        self.trip_energy = 0.0
        self.decisions: Counter = Counter()

    def _record(self, minute: int) -> None:
        soc = self.state.soc
        if soc < self.min_soc:
            self.min_soc = soc
        if self.keep_trajectory:
            self.trajectory.append((minute, soc))

    def run_phase(self, indexed: list[tuple[int, Event]], tail: list[Event], week: bool) -> None:
        config = self.config
        state = self.state
        capacity = state.capacity
        events = [e for _, e in indexed]
        look = _PhaseLookahead(events, tail, capacity, config)
        last = len(events) - 1

        for pos, (index, event) in enumerate(indexed):
            if not event.is_parking:
                if week and state.soc < config.soc_floor - EPS:
                    self.floor_violations += 1
                energy = event.energy_consumed * config.energy_factor
                if energy > capacity + EPS:
                    self.infeasible = True
                soc = state.soc - energy / capacity
                if soc < 0.0:
                    self.infeasible = True
                    soc = 0.0
                state.soc = soc
                if week:
                    self.trip_energy += energy
                self._record(event.arrival_time)
                continue

            outcome = NEGATIVE
            target_draw = TARGET_HIGH
            if event.duration > config.min_parking_minutes:
                k = self.next_draw
                self.next_draw += 1
                target_draw = float(self.draws.targets[k])
                outcome = evaluate_decision(
                    soc=state.soc,
                    capacity=capacity,
                    week_start_soc=state.week_start_soc,
                    threshold=float(self.draws.thresholds[k]),
                    next_two_kwh=look.next_two[pos],
                    future_trip_kwh=look.future_trips[pos],
                    recharge_kwh=look.future_recharge[pos],
                    config=config,
                    closure_enabled=week,
                )
                self.decisions[outcome.reason.value] += 1

            if week and pos == last:
                self._close_week(event, index, outcome)
                continue
            if not outcome.positive:
                continue

            target = adjust_target(target_draw, state.soc, capacity, outcome.reason,
                                   look.next_two[pos], config)
            if target <= state.soc + EPS:
                self.null_charges += 1
                continue
            rate = rate_for_purpose(event.purpose, config.rates)
            charge = _charge_to(state, event, target, rate, outcome.reason, self.driver_id, index)
            self._record(charge.charge_end)
            if week:
                self.events.append(charge)

    def _close_week(self, parking: ParkingEvent, index: int, outcome: DecisionOutcome) -> None:
        state = self.state
        if state.soc >= state.week_start_soc - EPS:
            if outcome.positive:
                self.null_charges += 1
            return
        reason = outcome.reason if outcome.positive else DecisionReason.WEEK_CLOSURE
        if not outcome.positive:
            self.decisions[DecisionReason.WEEK_CLOSURE.value] += 1
        rate = rate_for_purpose(parking.purpose, self.config.rates)
        charge = _charge_to(state, parking, state.week_start_soc, rate, reason, self.driver_id, index)
        self._record(charge.charge_end)
        self.events.append(charge)

    def closure_report(self) -> ClosureReport:
        state = self.state
        residual = (state.soc - state.week_start_soc) * state.capacity
        if self.infeasible:
            status, detail = ClosureStatus.INFEASIBLE, "a trip exceeded the available battery energy"
        elif abs(residual) <= self.config.closure_tolerance_kwh:
            status, detail = ClosureStatus.EXACT, ""
        elif residual < 0:
            status, detail = ClosureStatus.SHORTFALL, "final parking event too short to restore the week-start SOC"
        else:
            status, detail = ClosureStatus.SURPLUS, "arrived at the final parking above the week-start SOC"
        return ClosureReport(status=status, week_start_soc=state.week_start_soc,
                             week_end_soc=state.soc, residual_kwh=residual, detail=detail)


def count_eligible(indexed: list[tuple[int, Event]], config: SimulationConfig) -> int:
    return sum(1 for _, e in indexed if e.is_parking and e.duration > config.min_parking_minutes)


def simulate_driver(
        schedule: DriverSchedule,
        capacity: float,
        global_seed: int,
        config: SimulationConfig,
        draws: Optional[DriverDraws] = None,
        trajectory: bool = True,
) -> DriverResult:
    """
    Simulate the initialization prefix and the week for one driver.

    The driver's stream is keyed by (global_seed, driver_id); `draws` pins the
    randomness instead (one threshold and one target per eligible parking
    event, prefix first).
    """
    prefix, week = split_phases(schedule)
    n_eligible = count_eligible(prefix, config) + count_eligible(week, config)
    if draws is None:
        draws = draw_decisions(driver_rng(global_seed, schedule.driver_id, STREAM_CHARGING), n_eligible, config)
    elif len(draws) < n_eligible:
        raise ValueError(f"need {n_eligible} pinned draws, got {len(draws)}")

    run = _DriverRun(schedule.driver_id, capacity, config, draws, trajectory)
    start = prefix[0][1].start_time if prefix else 0
    run._record(start)
    run.run_phase(prefix, [e for _, e in week], week=False)
    run.state.week_start_soc = run.state.soc
    run._record(0)
    run.run_phase(week, [], week=True)

    closure = run.closure_report()
    if run.infeasible:
        logger.warning(f"Driver {schedule.driver_id} flagged infeasible with a {capacity} kWh battery")
    elif closure.status is ClosureStatus.SHORTFALL:
        logger.debug(f"Driver {schedule.driver_id} closure shortfall {closure.residual_kwh:.3f} kWh")

    return DriverResult(
        driver_id=schedule.driver_id,
        capacity=capacity,
        events=tuple(run.events),
        closure=closure,
        trajectory=tuple(run.trajectory),
        infeasible=run.infeasible,
        null_charges=run.null_charges,
        floor_violations=run.floor_violations,
        min_soc=run.min_soc,
        trip_energy_kwh=run.trip_energy,
        decisions=run.decisions,
    )
