# Charging decision and charging event records
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from evflex.schemas.fleet import LocationPurpose


class Decision(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"


class DecisionReason(str, Enum):
    FLOOR_BREACH = "FloorBreach"
    TWO_TRIP_RESERVE = "TwoTripReserve"
    WEEK_CLOSURE_RISK = "WeekClosureRisk"
    SAMPLED_THRESHOLD = "SampledThreshold"
    WEEK_CLOSURE = "WeekClosure"
    NONE = "None"


class ClosureStatus(str, Enum):
    EXACT = "exact"
    SHORTFALL = "shortfall"
    SURPLUS = "surplus"
    INFEASIBLE = "infeasible"


@dataclass(slots=True)
class VehicleState:
    capacity: float
    soc: float = 1.0
    week_start_soc: float = 1.0


@dataclass(frozen=True, slots=True)
class DecisionOutcome:
    decision: Decision
    reason: DecisionReason = DecisionReason.NONE
    sampled_threshold: Optional[float] = None

    def __post_init__(self):
        if (self.decision is Decision.POSITIVE) == (self.reason is DecisionReason.NONE):
            raise ValueError("Positive decisions need a reason; negative decisions must have none")

    @property
    def positive(self) -> bool:
        return self.decision is Decision.POSITIVE


NEGATIVE = DecisionOutcome(Decision.NEGATIVE)


@dataclass(frozen=True, slots=True)
class ChargingEvent:
    driver_id: int
    parking_index: int
    charge_start: int
    charge_end: int
    parking_end: int
    rate: float
    energy: float
    target_soc: float
    start_soc: float
    end_soc: float
    reason: DecisionReason
    region: str
    purpose: LocationPurpose

    @property
    def duration(self) -> int:
        """t_c in minutes."""
        return self.charge_end - self.charge_start

    @property
    def parking_duration(self) -> int:
        return self.parking_end - self.charge_start

    @property
    def final_minute_deficit(self) -> float:
        """kWh the last charging minute falls short of the full rate."""
        return max(self.rate * self.duration / 60.0 - self.energy, 0.0)


@dataclass(frozen=True, slots=True)
class ClosureReport:
    status: ClosureStatus
    week_start_soc: float
    week_end_soc: float
    residual_kwh: float
    detail: str = ""


@dataclass(frozen=True)
class DriverResult:
    driver_id: int
    capacity: float
    events: tuple[ChargingEvent, ...]
    closure: ClosureReport
    trajectory: tuple[tuple[int, float], ...] = ()
    infeasible: bool = False
    null_charges: int = 0
    floor_violations: int = 0
    min_soc: float = 1.0
    trip_energy_kwh: float = 0.0
    decisions: Counter = field(default_factory=Counter)

    @property
    def charged_energy_kwh(self) -> float:
        return sum(e.energy for e in self.events)


@dataclass
class SimulationDiagnostics:
    drivers: int = 0
    infeasible_drivers: list[int] = field(default_factory=list)
    null_charges: int = 0
    closure_shortfalls: int = 0
    closure_surpluses: int = 0
    floor_violations: int = 0
    charging_events: int = 0
    decisions: Counter = field(default_factory=Counter)

    def add(self, result: DriverResult) -> None:
        self.drivers += 1
        if result.infeasible:
            self.infeasible_drivers.append(result.driver_id)
        self.null_charges += result.null_charges
        self.floor_violations += result.floor_violations
        self.charging_events += len(result.events)
        self.decisions.update(result.decisions)
        if result.closure.status is ClosureStatus.SHORTFALL:
            self.closure_shortfalls += 1
        elif result.closure.status is ClosureStatus.SURPLUS:
            self.closure_surpluses += 1

    def merge(self, other: "SimulationDiagnostics") -> "SimulationDiagnostics":
        self.drivers += other.drivers
        self.infeasible_drivers.extend(other.infeasible_drivers)
        self.null_charges += other.null_charges
        self.closure_shortfalls += other.closure_shortfalls
        self.closure_surpluses += other.closure_surpluses
        self.floor_violations += other.floor_violations
        self.charging_events += other.charging_events
        self.decisions.update(other.decisions)
        return self

    def as_dict(self) -> dict:
        return {
            "drivers": self.drivers,
            "infeasible_drivers": len(self.infeasible_drivers),
            "infeasible_driver_ids": sorted(self.infeasible_drivers),
            "null_charges": self.null_charges,
            "closure_shortfalls": self.closure_shortfalls,
            "closure_surpluses": self.closure_surpluses,
            "floor_violations": self.floor_violations,
            "charging_events": self.charging_events,
            "decisions": {k: self.decisions[k] for k in sorted(self.decisions)},
        }
