# Flexibility envelope of one charging event
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class FlexCase(str, Enum):
    FULL = "F"
    PARTIAL = "P"


class ExclusionReason(str, Enum):
    TOO_SHORT = "too_short"
    TOO_LONG = "too_long"
    CHARGING_FILLS_PARKING = "charging_fills_parking"


@dataclass(frozen=True, slots=True)
class FlexibilityEnvelope:
    """
    Signed power deviations from the baseline within one parking event.

    down window: baseline charging can be curtailed (P_down = -baseline)
    dead window: Partial case only, no deviation possible
    up window:   idle plugged-in time, +rate available (P_up)
    """
    driver_id: int
    parking_index: int
    case: FlexCase
    parking_start: int
    parking_end: int
    charge_end: int
    flex_deadline: int
    rate: float
    flexible_energy: float
    charged_energy: float
    region: str
    days_credited: tuple[int, ...] = ()

    @property
    def event_ref(self) -> tuple[int, int]:
        return self.driver_id, self.parking_index

    @property
    def down_window(self) -> tuple[int, int]:
        return self.parking_start, self.flex_deadline

    @property
    def dead_window(self) -> Optional[tuple[int, int]]:
        if self.case is FlexCase.FULL:
            return None
        return self.flex_deadline, self.charge_end

    @property
    def up_window(self) -> tuple[int, int]:
        return self.charge_end, self.parking_end

    @property
    def final_minute_deficit(self) -> float:
        return max(self.rate * (self.charge_end - self.parking_start) / 60.0 - self.charged_energy, 0.0)

    @property
    def down_energy(self) -> float:
        """Integral of |P_down| in kWh."""
        if self.case is FlexCase.FULL:
            return self.charged_energy
        return self.rate * (self.flex_deadline - self.parking_start) / 60.0

    @property
    def up_energy(self) -> float:
        """Integral of P_up in kWh."""
        return self.rate * (self.parking_end - self.charge_end) / 60.0
