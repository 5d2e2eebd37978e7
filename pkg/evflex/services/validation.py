import math

from evflex.core.logs import logger
from evflex.schemas.fleet import (
    PREFIX_MINUTES,
    WEEK_MINUTES,
    DriverSchedule,
    ScheduleViolation,
    ValidationResult,
)
from evflex.utils.exceptions import ChronologyError


def validate_schedule(schedule: DriverSchedule) -> ValidationResult:
    """Check the ordering invariants of one driver's schedule.

    Violations are returned as data and carry the offending event index.
    """
    events = schedule.events
    violations: list[ScheduleViolation] = []

    if not events:
        return ValidationResult((ScheduleViolation(0, "empty", "schedule has no events"),))

    if not events[0].is_parking:
        violations.append(ScheduleViolation(0, "boundary", "first event is not a parking event"))
    if not events[-1].is_parking:
        violations.append(ScheduleViolation(len(events) - 1, "boundary", "last event is not a parking event"))

    for k, event in enumerate(events):
        if event.start_time >= event.end_time:
            violations.append(ScheduleViolation(
                k, "duration", f"event at index {k} has start {event.start_time} >= end {event.end_time}"))
        if not event.is_parking:
            energy = event.energy_consumed
            if not math.isfinite(energy) or energy < 0:
                violations.append(ScheduleViolation(k, "energy", f"trip at index {k} has invalid energy {energy!r}"))
        if k == 0:
            continue
        previous = events[k - 1]
        if event.is_parking == previous.is_parking:
            violations.append(ScheduleViolation(k, "alternation", f"alternation broken at index {k}"))
        if event.start_time != previous.end_time:
            violations.append(ScheduleViolation(
                k, "contiguity",
                f"non-contiguous at index {k}: previous ends {previous.end_time}, next starts {event.start_time}"))

    first_start = events[0].start_time
    if first_start not in (0, -PREFIX_MINUTES):
        violations.append(ScheduleViolation(
            0, "span", f"schedule starts at {first_start}, expected 0 or {-PREFIX_MINUTES}"))
    if events[-1].end_time != WEEK_MINUTES:
        violations.append(ScheduleViolation(
            len(events) - 1, "span", f"schedule ends at {events[-1].end_time}, expected {WEEK_MINUTES}"))
    if first_start < 0:
        for k, event in enumerate(events):
            if not event.is_parking and event.start_time < 0 < event.end_time:
                violations.append(ScheduleViolation(k, "span", f"week start falls inside trip at index {k}"))

    if violations:
        logger.debug(f"Driver {schedule.driver_id}: {len(violations)} schedule violation(s)")
    return ValidationResult(tuple(violations))


def ensure_valid(schedule: DriverSchedule) -> DriverSchedule:
    """
    Raises:
        ChronologyError: if validate_schedule reports any violation
    """
    result = validate_schedule(schedule)
    if not result.ok:
        logger.error(f"Driver {schedule.driver_id} failed validation: {result.violations[0]}")
        raise ChronologyError(schedule.driver_id, list(result.violations))
    return schedule
