"""
Battery capacity assignment by quantile matching.

Drivers sorted by their worst-day energy need are split into contiguous blocks
sized by the menu shares (largest-remainder rounding); block k gets the k-th
capacity. Drivers whose worst day would take them below the SOC floor are
promoted to the smallest capacity that covers it, capped at the largest one.
"""
from dataclasses import dataclass, field
import math
from typing import Iterable

import numpy as np

from evflex.core.config import BatteryMenu
from evflex.core.logs import logger
from evflex.schemas.fleet import DAY_MINUTES, DAYS_PER_WEEK, DriverSchedule, FleetScenario
from evflex.utils.exceptions import BatteryAssignmentError


@dataclass
class BatteryAssignment:
    capacities: dict[int, float]
    block_sizes: list[int]
    promoted: list[int] = field(default_factory=list)
    capped: list[int] = field(default_factory=list)

    def __getitem__(self, driver_id: int) -> float:
        return self.capacities[driver_id]


def max_daily_energy(schedule: DriverSchedule, energy_factor: float = 1.0) -> float:
    """Maximum over the 7 simulated days of the trip energy departing that day (kWh), seasonally scaled."""
    daily = [0.0] * DAYS_PER_WEEK
    for event in schedule.events:
        if event.is_parking or event.departure_time < 0:
            continue
        day = event.departure_time // DAY_MINUTES
        if day < DAYS_PER_WEEK:
            daily[day] += event.energy_consumed
    return max(daily) * energy_factor


def largest_remainder_blocks(n: int, shares: list[float]) -> list[int]:
    """Split n items into blocks proportional to shares; ties go to the lower index."""
    quotas = [n * s for s in shares]
    sizes = [math.floor(q) for q in quotas]
    remaining = n - sum(sizes)
    order = sorted(range(len(shares)), key=lambda k: (-(quotas[k] - sizes[k]), k))
    for k in order[:remaining]:
        sizes[k] += 1
    return sizes


def assign_from_energies(energies: dict[int, float], menu: BatteryMenu) -> BatteryAssignment:
    """Assign capacities given each driver's max daily energy."""
    if not energies:
        logger.error("Cannot assign batteries to an empty fleet")
        raise BatteryAssignmentError("fleet is empty")

    ordered = sorted(energies.items(), key=lambda item: (item[1], item[0]))
    capacities = menu.capacities
    sizes = largest_remainder_blocks(len(ordered), menu.shares)
    block_of = np.repeat(np.arange(len(capacities)), sizes)

    assignment: dict[int, float] = {}
    promoted: list[int] = []
    capped: list[int] = []
    factor = menu.promotion_factor
    for (driver_id, energy), block in zip(ordered, block_of):
        capacity = capacities[int(block)]
        if energy > factor * capacity:
            fitting = [c for c in capacities if energy <= factor * c]
            if fitting:
                capacity = fitting[0]
            else:
                capacity = capacities[-1]
                capped.append(driver_id)
            promoted.append(driver_id)
        assignment[driver_id] = capacity

    if promoted:
        logger.warning(f"Promoted {len(promoted)} driver(s) to a larger battery, {len(capped)} capped at "
                       f"{capacities[-1]} kWh")
    return BatteryAssignment(capacities=assignment, block_sizes=sizes,
                             promoted=sorted(promoted), capped=sorted(capped))


def assign_batteries(fleet: FleetScenario | Iterable[DriverSchedule], menu: BatteryMenu,
                     energy_factor: float = 1.0) -> BatteryAssignment:
    """
    Size batteries on the trip energies the simulator will see, so pass the
    season's energy_factor.

    Raises:
        BatteryAssignmentError: if the fleet is empty
    """
    schedules = fleet.drivers if isinstance(fleet, FleetScenario) else fleet
    return assign_from_energies({s.driver_id: max_daily_energy(s, energy_factor) for s in schedules}, menu)
