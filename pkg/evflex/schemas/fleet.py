"""
Mobility data model: parking/trip events, driver schedules, regions and scenarios.

Times are integer minutes from the start of the simulated week. Negative times
index the two-day initialization prefix.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

DAY_MINUTES = 1440
WEEK_MINUTES = 7 * DAY_MINUTES
PREFIX_MINUTES = 2 * DAY_MINUTES
HOURS_PER_WEEK = WEEK_MINUTES // 60
DAYS_PER_WEEK = 7


class LocationPurpose(str, Enum):
    HOME = "H"
    WORK = "W"
    LEISURE = "L"
    SHOP = "S"
    OTHER = "O"


class Urbanization(str, Enum):
    URBAN = "urban"
    PERIURBAN = "periurban"
    RURAL = "rural"


class Season(str, Enum):
    WINTER = "winter"
    SPRING = "spring"
    SUMMER = "summer"
    AUTUMN = "autumn"


@dataclass(frozen=True, slots=True)
class TripEvent:
    departure_time: int
    arrival_time: int
    energy_consumed: float
    destination_region: str

    @property
    def start_time(self) -> int:
        return self.departure_time

    @property
    def end_time(self) -> int:
        return self.arrival_time

    @property
    def is_parking(self) -> bool:
        return False


@dataclass(frozen=True, slots=True)
class ParkingEvent:
    start_time: int
    end_time: int
    purpose: LocationPurpose
    region: str

    @property
    def duration(self) -> int:
        """t_p in minutes."""
        return self.end_time - self.start_time

    @property
    def is_parking(self) -> bool:
        return True


Event = Union[ParkingEvent, TripEvent]


@dataclass(frozen=True, slots=True)
class DriverSchedule:
    driver_id: int
    events: tuple[Event, ...]

    @property
    def has_prefix(self) -> bool:
        return bool(self.events) and self.events[0].start_time < 0

    def trips(self) -> list[TripEvent]:
        return [e for e in self.events if not e.is_parking]


@dataclass(frozen=True, slots=True)
class Region:
    region_id: str
    name: str
    urbanization: Urbanization
    population_weight: float = 1.0
    employment_weight: float = 1.0


@dataclass(frozen=True, slots=True)
class ScheduleViolation:
    index: int
    kind: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.message}"


@dataclass(frozen=True, slots=True)
class ValidationResult:
    violations: tuple[ScheduleViolation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class FleetScenario:
    drivers: tuple[DriverSchedule, ...]
    regions: tuple[Region, ...]
    season_label: Season = Season.WINTER
    global_seed: int = 0
    scenario_id: str = "scenario"
    _region_index: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._region_index.update({r.region_id: r for r in self.regions})

    def region(self, region_id: str) -> Region:
        return self._region_index[region_id]

    def has_region(self, region_id: str) -> bool:
        return region_id in self._region_index

    def driver(self, driver_id: int) -> DriverSchedule:
        for schedule in self.drivers:
            if schedule.driver_id == driver_id:
                return schedule
        raise KeyError(driver_id)
