# env, settings and run configuration
from importlib import resources
from pathlib import Path
from typing import Annotated, Any, Optional
import hashlib
import json

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)
from pydantic_settings import BaseSettings, SettingsConfigDict

from evflex.core.logs import logger
from evflex.schemas.fleet import LocationPurpose, Season, Urbanization
from evflex.utils.exceptions import ConfigError


class Settings(BaseSettings):
    # Reads EVFLEX_* variables, optionally from .env
    ENV: str = Field(default="development", description="development or production")
    THREADS: int = Field(default=1, ge=1, description="Default worker count for simulate")
    CHUNK_SIZE: int = Field(default=2000, ge=1, description="Drivers per work unit; fixed so results do not depend on THREADS")

    model_config = SettingsConfigDict(env_file=".env", env_prefix="EVFLEX_", extra="ignore")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ChargingRates(_Section):
    home: float = Field(default=7.0, gt=0, description="kW at Home")
    work: float = Field(default=11.0, gt=0, description="kW at Work")
    public: float = Field(default=22.0, gt=0, description="kW at Leisure/Shop/Other")

    def for_purpose(self, purpose: LocationPurpose) -> float:
        if purpose is LocationPurpose.HOME:
            return self.home
        if purpose is LocationPurpose.WORK:
            return self.work
        return self.public

    @property
    def max_rate(self) -> float:
        return max(self.home, self.work, self.public)


class DwellDistribution(_Section):
    """Normal dwell time in minutes, clipped to [min_minutes, max_minutes]."""
    mean_minutes: float = Field(..., gt=0)
    sd_minutes: float = Field(default=0.0, ge=0)
    min_minutes: int = Field(default=10, ge=1)
    max_minutes: int = Field(default=24 * 60, ge=1)

    @model_validator(mode="after")
    def check_bounds(self):
        if self.min_minutes > self.max_minutes:
            raise ValueError("min_minutes must not exceed max_minutes")
        return self


class RegionConfig(_Section):
    region_id: str
    name: str
    urbanization: Urbanization
    population_weight: float = Field(default=1.0, ge=0)
    employment_weight: float = Field(default=1.0, ge=0)


def _default_regions() -> list[RegionConfig]:
    return [
        RegionConfig(region_id="R1", name="City", urbanization=Urbanization.URBAN,
                     population_weight=2.0, employment_weight=4.0),
        RegionConfig(region_id="R2", name="Agglomeration", urbanization=Urbanization.PERIURBAN,
                     population_weight=1.5, employment_weight=1.0),
        RegionConfig(region_id="R3", name="Countryside", urbanization=Urbanization.RURAL,
                     population_weight=1.0, employment_weight=0.5),
    ]


DEFAULT_LOW_MOBILITY_SHARE = 0.1
PRESETS_PACKAGE = "evflex.presets"


class SyntheticConfig(_Section):
    """
    Synthetic fleet parameters. Drivers are commuters, low-mobility drivers
    or errand-runners (the remainder). Leaving low_mobility_share out gives
    min(0.1, 1 - commuter_share).
    """
    driver_count: int = Field(default=1000, ge=0)
    commuter_share: float = Field(default=0.5, ge=0, le=1)
    low_mobility_share: Optional[Annotated[float, Field(ge=0, le=1)]] = Field(default=None, validate_default=True)
    mean_trip_energy_kwh: float = Field(default=5.0, ge=0)
    mean_trip_minutes: float = Field(default=25.0, gt=0)
    sd_trip_minutes: float = Field(default=10.0, ge=0)
    commute_departure: DwellDistribution = DwellDistribution(
        mean_minutes=450, sd_minutes=45, min_minutes=300, max_minutes=600)
    work_dwell: DwellDistribution = DwellDistribution(
        mean_minutes=510, sd_minutes=60, min_minutes=180, max_minutes=660)
    public_dwell: DwellDistribution = DwellDistribution(
        mean_minutes=75, sd_minutes=45, min_minutes=15, max_minutes=300)
    home_dwell: DwellDistribution = DwellDistribution(
        mean_minutes=240, sd_minutes=90, min_minutes=30, max_minutes=600)
    errand_departure: DwellDistribution = DwellDistribution(
        mean_minutes=600, sd_minutes=90, min_minutes=420, max_minutes=840)
    errand_stops_max: int = Field(default=2, ge=1)
    second_tour_probability: float = Field(default=0.5, ge=0, le=1,
                                           description="Errand-runner weekday with a second tour")
    evening_errand_probability: float = Field(default=0.25, ge=0, le=1,
                                              description="Commuter errand tour after returning home")
    weekend_trip_factor: float = Field(default=0.5, ge=0, le=1)
    regions: list[RegionConfig] = Field(default_factory=_default_regions, min_length=1)

    @field_validator("low_mobility_share")
    @classmethod
    def fill_low_mobility_share(cls, v: Optional[float], info: ValidationInfo) -> Optional[float]:
        commuter = info.data.get("commuter_share")
        if commuter is None:
            return v
        if v is None:
            return min(DEFAULT_LOW_MOBILITY_SHARE, 1.0 - commuter)
        if commuter + v > 1.0 + 1e-12:
            raise ValueError(f"commuter_share + low_mobility_share must not exceed 1, got {commuter + v!r}")
        return v

    @field_validator("regions")
    @classmethod
    def check_regions(cls, v: list[RegionConfig]) -> list[RegionConfig]:
        ids = [r.region_id for r in v]
        if len(set(ids)) != len(ids):
            raise ValueError("region ids must be unique")
        if not any(r.population_weight > 0 for r in v):
            raise ValueError("at least one region needs a positive population_weight")
        return v


def _uniform_menu() -> list[tuple[float, float]]:
    capacities = [70.0, 80.0, 90.0, 100.0, 110.0, 120.0]
    return [(c, 1.0 / len(capacities)) for c in capacities]


class BatteryMenu(_Section):
    """Discrete capacity menu as (capacity_kwh, share) pairs."""
    options: list[tuple[float, float]] = Field(default_factory=_uniform_menu, min_length=1)
    promotion_factor: float = Field(default=0.85, gt=0, le=1)

    @field_validator("options")
    @classmethod
    def check_options(cls, v: list[tuple[float, float]]) -> list[tuple[float, float]]:
        capacities = [c for c, _ in v]
        shares = [s for _, s in v]
        if any(c <= 0 for c in capacities):
            raise ValueError("capacities must be positive")
        if any(b <= a for a, b in zip(capacities, capacities[1:])):
            raise ValueError("capacities must be strictly ascending")
        if any(s < 0 or s > 1 for s in shares):
            raise ValueError("shares must lie in [0, 1]")
        if abs(sum(shares) - 1.0) > 1e-9:
            raise ValueError(f"shares must sum to 1, got {sum(shares)!r}")
        return v

    @property
    def capacities(self) -> list[float]:
        return [c for c, _ in self.options]

    @property
    def shares(self) -> list[float]:
        return [s for _, s in self.options]


class SimulationConfig(_Section):
    mu: float = Field(default=0.6, description="Truncated-normal plug-in threshold mean")
    sigma: float = Field(default=0.2, gt=0)
    soc_floor: float = Field(default=0.15, ge=0, lt=1)
    min_parking_minutes: int = Field(default=60, ge=0)
    p80: float = Field(default=0.5, ge=0, le=1, description="P(SOC_final = 0.80)")
    rates: ChargingRates = ChargingRates()
    energy_factor: float = Field(default=1.0, gt=0, description="Seasonal trip-energy multiplier")
    closure_tolerance_kwh: float = Field(default=0.5, ge=0)
    # Test hook: disables floor, two-trip and week-closure forcing
    enable_forcing_rules: bool = True
    keep_trajectory: bool = False


class FlexibilityConfig(_Section):
    min_ratio: float = Field(default=1.05, ge=1.0, description="t_p >= min_ratio * t_c")
    full_ratio: float = Field(default=2.0, ge=1.0, description="t_p >= full_ratio * t_c -> Full case")
    min_parking_minutes: int = Field(default=60, ge=0)
    max_parking_minutes: int = Field(default=900, ge=1)


class ReportConfig(_Section):
    weekday_days: tuple[int, ...] = (0, 1, 2, 3, 4)
    weekend_days: tuple[int, ...] = (5, 6)
    # [start, end) hours of the daytime window in summaries
    daytime_start_hour: int = Field(default=8, ge=0, le=23)
    daytime_end_hour: int = Field(default=17, ge=1, le=24)

    @model_validator(mode="after")
    def check_daytime(self):
        if self.daytime_start_hour >= self.daytime_end_hour:
            raise ValueError("daytime_start_hour must be before daytime_end_hour")
        return self


class SeasonsConfig(_Section):
    winter: float = Field(default=1.16, gt=0)
    spring: float = Field(default=1.03, gt=0)
    summer: float = Field(default=1.00, gt=0)
    autumn: float = Field(default=1.05, gt=0)

    def factor(self, season: Season) -> float:
        return getattr(self, season.value)


class RunConfig(_Section):
    synthetic: SyntheticConfig = SyntheticConfig()
    battery: BatteryMenu = BatteryMenu()
    simulation: SimulationConfig = SimulationConfig()
    flexibility: FlexibilityConfig = FlexibilityConfig()
    report: ReportConfig = ReportConfig()
    seasons: SeasonsConfig = SeasonsConfig()

    def for_season(self, season: Season) -> "RunConfig":
        """Copy with the simulation energy factor taken from the seasons table."""
        simulation = self.simulation.model_copy(update={"energy_factor": self.seasons.factor(season)})
        return self.model_copy(update={"simulation": simulation})

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _key_lines(node: yaml.Node, prefix: tuple = ()) -> dict[tuple, int]:
    """Map dotted key paths of a composed YAML tree to 1-based source lines."""
    lines: dict[tuple, int] = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (key_node.value,)
            lines[path] = key_node.start_mark.line + 1
            lines.update(_key_lines(value_node, path))
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            path = prefix + (str(i),)
            lines[path] = item.start_mark.line + 1
            lines.update(_key_lines(item, path))
    return lines


def parse_run_config(text: str) -> RunConfig:
    """
    Parse and validate a YAML run configuration.

    Raises:
        ConfigError: on YAML syntax errors, unknown keys or invalid values
    """
    try:
        raw: Any = yaml.safe_load(text) or {}
        tree = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        logger.error(f"Failed to parse config YAML: {e}")
        raise ConfigError("<document>", "invalid YAML", line) from e

    if not isinstance(raw, dict):
        raise ConfigError("<document>", "top level must be a mapping", 1)

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        err = e.errors()[0]
        loc = tuple(str(p) for p in err["loc"])
        lines = _key_lines(tree) if tree is not None else {}
        line: Optional[int] = None
        for depth in range(len(loc), 0, -1):
            if loc[:depth] in lines:
                line = lines[loc[:depth]]
                break
        key = ".".join(loc) or "<document>"
        logger.error(f"Invalid config key {key}: {err['msg']}")
        raise ConfigError(key, err["msg"], line) from e


def preset_names() -> list[str]:
    """Run configurations shipped in evflex/presets."""
    return sorted(p.name.removesuffix(".yaml") for p in resources.files(PRESETS_PACKAGE).iterdir()
                  if p.name.endswith(".yaml"))


def load_preset(name: str) -> RunConfig:
    """
    Raises:
        ConfigError: if no preset has this name
    """
    resource = resources.files(PRESETS_PACKAGE) / f"{name}.yaml"
    if not resource.is_file():
        raise ConfigError("<preset>", f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    logger.info(f"Loading run configuration preset {name}")
    return parse_run_config(resource.read_text(encoding="utf-8"))


def load_run_config(path: Optional[Path], preset: Optional[str] = None) -> RunConfig:
    """Load a run configuration file or a named preset; neither gives the defaults."""
    if path is not None and preset is not None:
        raise ConfigError("<preset>", "--preset cannot be combined with --config")
    if preset is not None:
        return load_preset(preset)
    if path is None:
        return RunConfig()
    logger.info(f"Loading run configuration from {path}")
    return parse_run_config(Path(path).read_text(encoding="utf-8"))


# Usage
settings = Settings()
