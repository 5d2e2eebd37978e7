"""
Flexibility quantification per charging event.

Only events where charging does not fill the parking event and the parking
lasts between one and fifteen hours are flexible. If parking lasts at least
twice the charging time the whole charge can be moved (Full case); otherwise
only the tail that fits after the original charge end (Partial case).
Shifting between parking events is not modelled.
"""
from collections import Counter
from typing import Callable, Iterable, Mapping, Optional, Union

from evflex.core.config import FlexibilityConfig
from evflex.core.logs import logger
from evflex.schemas.charging import ChargingEvent
from evflex.schemas.fleet import DAY_MINUTES, DAYS_PER_WEEK, ParkingEvent
from evflex.schemas.flexibility import ExclusionReason, FlexCase, FlexibilityEnvelope
from evflex.utils.exceptions import FlexibilityPreconditionError

EPS = 1e-9

ParkingLookup = Union[Mapping[tuple[int, int], ParkingEvent], Callable[[int, int], ParkingEvent]]


def exclusion_reason(charging: ChargingEvent, parking: ParkingEvent,
                     config: Optional[FlexibilityConfig] = None) -> Optional[ExclusionReason]:
    config = config or FlexibilityConfig()
    t_p = parking.duration
    t_c = charging.duration
    if t_p < config.min_parking_minutes:
        return ExclusionReason.TOO_SHORT
    if t_p > config.max_parking_minutes:
        return ExclusionReason.TOO_LONG
    if t_p < config.min_ratio * t_c - EPS:
        return ExclusionReason.CHARGING_FILLS_PARKING
    return None


def is_flexible_event(charging: ChargingEvent, parking: ParkingEvent,
                      config: Optional[FlexibilityConfig] = None) -> bool:
    """t_p >= 1.05 * t_c and 60 <= t_p <= 900 minutes."""
    return exclusion_reason(charging, parking, config) is None


def days_touched(start: int, end: int) -> tuple[int, ...]:
    """Calendar days (modulo the week) a window [start, end) touches."""
    first = (start // DAY_MINUTES) % DAYS_PER_WEEK
    last = ((end - 1) // DAY_MINUTES) % DAYS_PER_WEEK
    return (first,) if first == last else (first, last)


def quantify_event(charging: ChargingEvent, parking: ParkingEvent,
                   config: Optional[FlexibilityConfig] = None) -> FlexibilityEnvelope:
    """
    Raises:
        FlexibilityPreconditionError: event fails the flexibility filter or does not belong to the parking
    """
    config = config or FlexibilityConfig()
    if charging.charge_start != parking.start_time or charging.parking_end != parking.end_time:
        raise FlexibilityPreconditionError(charging.driver_id, charging.parking_index,
                                           "charging event does not belong to the parking event")
    reason = exclusion_reason(charging, parking, config)
    if reason is not None:
        raise FlexibilityPreconditionError(charging.driver_id, charging.parking_index,
                                           f"event is not flexible ({reason.value})")

    t_p = parking.duration
    t_c = charging.duration
    if t_p >= config.full_ratio * t_c - EPS:
        case = FlexCase.FULL
        deadline = charging.charge_end
        flexible = charging.energy
    else:
        case = FlexCase.PARTIAL
        deadline = parking.end_time - t_c
        flexible = charging.rate * (parking.end_time - charging.charge_end) / 60.0

    return FlexibilityEnvelope(
        driver_id=charging.driver_id,
        parking_index=charging.parking_index,
        case=case,
        parking_start=parking.start_time,
        parking_end=parking.end_time,
        charge_end=charging.charge_end,
        flex_deadline=deadline,
        rate=charging.rate,
        flexible_energy=flexible,
        charged_energy=charging.energy,
        region=charging.region,
        days_credited=days_touched(parking.start_time, parking.end_time),
    )


def split_daily_energy(envelope: FlexibilityEnvelope,
                       charging: Optional[ChargingEvent] = None) -> dict[int, float]:
    """Credit the full flexible energy to every calendar day the parking event touches."""
    days = envelope.days_credited or days_touched(envelope.parking_start, envelope.parking_end)
    return {day: envelope.flexible_energy for day in days}


def quantify_events(
        events: Iterable[ChargingEvent],
        parkings: ParkingLookup,
        config: Optional[FlexibilityConfig] = None,
) -> tuple[list[FlexibilityEnvelope], Counter]:
    """Envelopes for every flexible event plus exclusion counts by reason."""
    config = config or FlexibilityConfig()
    lookup = parkings if callable(parkings) else (lambda d, i: parkings[(d, i)])
    envelopes: list[FlexibilityEnvelope] = []
    excluded: Counter = Counter()
    for charging in events:
        parking = lookup(charging.driver_id, charging.parking_index)
        reason = exclusion_reason(charging, parking, config)
        if reason is not None:
            excluded[reason.value] += 1
            continue
        envelopes.append(quantify_event(charging, parking, config))
    logger.debug(f"Quantified {len(envelopes)} envelope(s); excluded {sum(excluded.values())} event(s)")
    return envelopes, excluded
