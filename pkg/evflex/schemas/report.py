# Aggregated profiles, fleet summary and run manifest
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from evflex.schemas.fleet import DAYS_PER_WEEK, HOURS_PER_WEEK

NATIONAL = "national"
VOLATILE_MANIFEST_FIELDS = {"wall_clock_s", "created_at"}


@dataclass
class RegionalProfile:
    """
    Hourly average power (kW) over the simulated week plus daily energies.

    flexible_kwh credits an overnight envelope to both days it touches;
    attributed_flexible_kwh splits each envelope's energy over days in
    proportion to the event's charged energy and never exceeds charged_kwh.
    """
    region_id: str
    baseline_kw: np.ndarray = field(default_factory=lambda: np.zeros(HOURS_PER_WEEK))
    lower_kw: np.ndarray = field(default_factory=lambda: np.zeros(HOURS_PER_WEEK))
    upper_kw: np.ndarray = field(default_factory=lambda: np.zeros(HOURS_PER_WEEK))
    plugged_in_count: np.ndarray = field(default_factory=lambda: np.zeros(HOURS_PER_WEEK, dtype=np.int64))
    flexible_kwh: np.ndarray = field(default_factory=lambda: np.zeros(DAYS_PER_WEEK))
    attributed_flexible_kwh: np.ndarray = field(default_factory=lambda: np.zeros(DAYS_PER_WEEK))
    event_energy_kwh: float = 0.0
    events: int = 0
    envelopes: int = 0

    @property
    def charged_kwh(self) -> np.ndarray:
        """Daily charged energy; average kW over one hour is kWh."""
        return self.baseline_kw.reshape(DAYS_PER_WEEK, 24).sum(axis=1)

    @property
    def upward_kw(self) -> np.ndarray:
        return self.upper_kw - self.baseline_kw

    @property
    def downward_kw(self) -> np.ndarray:
        return self.baseline_kw - self.lower_kw

    @classmethod
    def combine(cls, profiles: Iterable["RegionalProfile"], region_id: str = NATIONAL) -> "RegionalProfile":
        """Element-wise sum."""
        total = cls(region_id=region_id)
        for p in profiles:
            total.baseline_kw = total.baseline_kw + p.baseline_kw
            total.lower_kw = total.lower_kw + p.lower_kw
            total.upper_kw = total.upper_kw + p.upper_kw
            total.plugged_in_count = total.plugged_in_count + p.plugged_in_count
            total.flexible_kwh = total.flexible_kwh + p.flexible_kwh
            total.attributed_flexible_kwh = total.attributed_flexible_kwh + p.attributed_flexible_kwh
            total.event_energy_kwh += p.event_energy_kwh
            total.events += p.events
            total.envelopes += p.envelopes
        return total


class LevelStats(BaseModel):
    """Five-number summary of weekly flexible share over the regions of one urbanization level."""
    model_config = ConfigDict(frozen=True)

    level: str
    regions: int = Field(..., ge=1)
    min: float = Field(..., ge=0, le=1)
    q1: float = Field(..., ge=0, le=1)
    median: float = Field(..., ge=0, le=1)
    q3: float = Field(..., ge=0, le=1)
    max: float = Field(..., ge=0, le=1)
    weekday_peak_kw: float = 0.0
    weekend_peak_kw: float = 0.0

    @property
    def peak_ratio(self) -> Optional[float]:
        """Weekday over weekend peak; None without weekend charging."""
        if self.weekend_peak_kw <= 0:
            return None
        return self.weekday_peak_kw / self.weekend_peak_kw


class FleetSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    season_label: str = ""
    levels: dict[str, LevelStats] = Field(default_factory=dict)
    region_share: dict[str, float] = Field(default_factory=dict)
    national_weekday_peak_kw: float = Field(0.0, ge=0)
    national_weekend_peak_kw: float = Field(0.0, ge=0)
    national_weekday_share: float = Field(0.0, ge=0, le=1)
    national_weekend_share: float = Field(0.0, ge=0, le=1)
    national_week_share: float = Field(0.0, ge=0, le=1)
    # flexible_kwh over charged energy; overnight envelopes count twice
    national_weekday_credited_share: float = Field(0.0, ge=0)
    national_weekend_credited_share: float = Field(0.0, ge=0)
    national_week_credited_share: float = Field(0.0, ge=0)
    national_weekday_peak_hour: int = Field(0, ge=0, le=23)
    national_weekday_daytime_share: float = Field(0.0, ge=0, le=1)
    national_weekday_daytime_upper_kw: float = 0.0
    mean_upward_kw: float = 0.0
    max_upward_kw: float = 0.0
    mean_downward_kw: float = 0.0
    max_downward_kw: float = 0.0
    charged_kwh: float = 0.0
    quantile_method: str = "linear"
    notices: list[str] = Field(default_factory=list)


class SeasonComparison(BaseModel):
    model_config = ConfigDict(frozen=True)

    season: str
    weekday_peak_kw: float
    weekend_peak_kw: float
    charged_kwh: float
    peak_increase: float = Field(..., description="Relative weekday peak increase over the lowest-peak season")


class RunManifest(BaseModel):
    """One per output directory. fingerprint() leaves out the volatile fields."""
    command: str
    version: str
    config_hash: str
    global_seed: int
    scenario_id: str = ""
    season_label: str = ""
    module_versions: dict[str, str] = Field(default_factory=dict)
    inputs: dict[str, str] = Field(default_factory=dict, description="file name -> sha256")
    outputs: dict[str, str] = Field(default_factory=dict, description="file name -> sha256")
    driver_count: int = Field(0, ge=0)
    counts: dict[str, int] = Field(default_factory=dict)
    wall_clock_s: float = 0.0
    created_at: str = ""

    def fingerprint(self) -> dict:
        return self.model_dump(mode="json", exclude=VOLATILE_MANIFEST_FIELDS)
