"""
Synthetic fleet generator.

Stands in for activity-based transport simulation output at desk scale. Each
driver is a commuter, an errand-runner or a low-mobility driver; weekday and
weekend days follow archetype patterns with configurable dwell-time and trip
distributions. Every driver is generated from its own random stream, so a
driver's week depends only on (config, seed, driver_id).
"""
from bisect import bisect_right
from typing import Optional, Union

import numpy as np
from pydantic import ValidationError

from evflex.core.config import DwellDistribution, SyntheticConfig
from evflex.core.logs import logger
from evflex.models.rng import STREAM_SYNTHETIC, driver_rng
from evflex.schemas.fleet import (
    DAY_MINUTES,
    WEEK_MINUTES,
    DriverSchedule,
    FleetScenario,
    LocationPurpose,
    ParkingEvent,
    Region,
    Season,
    TripEvent,
)
from evflex.utils.exceptions import ConfigError

MIN_STAY_MINUTES = 5
MIN_TRIP_MINUTES = 5
MAX_TRIP_MINUTES = 240
LOW_MOBILITY_TOUR_PROBABILITY = 0.4
LOCAL_ERRAND_PROBABILITY = 0.7
TRIP_ENERGY_NOISE = 0.2
COMMUTE_SCALE_SIGMA = 0.5

ARCHETYPE_COMMUTER = "commuter"
ARCHETYPE_ERRAND = "errand"
ARCHETYPE_LOW_MOBILITY = "low_mobility"

_PUBLIC_PURPOSES = (LocationPurpose.LEISURE, LocationPurpose.SHOP, LocationPurpose.OTHER)


def _lognormal_unit_mean(rng: np.random.Generator, sigma: float) -> float:
    return float(rng.lognormal(mean=-0.5 * sigma * sigma, sigma=sigma))


def _cdf(weights: np.ndarray) -> list[float]:
    """Cumulative weights as Generator.choice builds them, for bisect lookups."""
    cdf = (weights / weights.sum()).cumsum()
    cdf /= cdf[-1]
    return cdf.tolist()


def _sample_minutes(dist: DwellDistribution, rng: np.random.Generator) -> int:
    value = int(round(rng.normal(dist.mean_minutes, dist.sd_minutes))) if dist.sd_minutes > 0 \
        else int(round(dist.mean_minutes))
    return min(max(value, dist.min_minutes), dist.max_minutes)


class _Timeline:
    """Builds a contiguous parking/trip sequence covering [0, WEEK_MINUTES)."""

    def __init__(self, purpose: LocationPurpose, region: str):
        self.events: list = []
        self.park_start = 0
        self.purpose = purpose
        self.region = region

    @property
    def now(self) -> int:
        return self.park_start

    def travel(self, depart: int, minutes: int, energy: float,
               purpose: LocationPurpose, region: str) -> bool:
        depart = max(depart, self.park_start + MIN_STAY_MINUTES)
        arrive = depart + minutes
        if arrive > WEEK_MINUTES - MIN_STAY_MINUTES:
            return False
        self.events.append(ParkingEvent(self.park_start, depart, self.purpose, self.region))
        self.events.append(TripEvent(depart, arrive, energy, region))
        self.park_start = arrive
        self.purpose = purpose
        self.region = region
        return True

    def finish(self) -> tuple:
        self.events.append(ParkingEvent(self.park_start, WEEK_MINUTES, self.purpose, self.region))
        return tuple(self.events)


class _DriverGenerator:
    def __init__(self, config: SyntheticConfig, regions: list[Region], rng: np.random.Generator):
        self.config = config
        self.regions = regions
        self.rng = rng
        population = np.array([r.population_weight for r in regions], dtype=float)
        employment = np.array([r.employment_weight for r in regions], dtype=float)
        self._population_cdf = _cdf(population)
        self._employment_cdf = _cdf(employment) if employment.sum() > 0 else self._population_cdf
        self._kwh_per_minute = config.mean_trip_energy_kwh / config.mean_trip_minutes

    def _pick_region(self, cdf: list[float]) -> str:
        # same draw as rng.choice(n, p=weights)
        return self.regions[bisect_right(cdf, self.rng.random())].region_id

    def _trip(self, scale: float = 1.0) -> tuple[int, float]:
        cfg = self.config
        minutes = int(round(self.rng.normal(cfg.mean_trip_minutes * scale, cfg.sd_trip_minutes)))
        minutes = min(max(minutes, MIN_TRIP_MINUTES), MAX_TRIP_MINUTES)
        energy = self._kwh_per_minute * minutes * _lognormal_unit_mean(self.rng, TRIP_ENERGY_NOISE)
        return minutes, round(max(energy, 0.0), 4)

    def _errand_tour(self, timeline: _Timeline, depart: int, home_region: str) -> None:
        stops = int(self.rng.integers(1, self.config.errand_stops_max + 1))
        t = depart
        for _ in range(stops):
            purpose = _PUBLIC_PURPOSES[int(self.rng.integers(len(_PUBLIC_PURPOSES)))]
            region = home_region if self.rng.random() < LOCAL_ERRAND_PROBABILITY \
                else self._pick_region(self._population_cdf)
            minutes, energy = self._trip()
            if not timeline.travel(t, minutes, energy, purpose, region):
                return
            t = timeline.now + _sample_minutes(self.config.public_dwell, self.rng)
        minutes, energy = self._trip()
        timeline.travel(t, minutes, energy, LocationPurpose.HOME, home_region)

    def build(self, driver_id: int) -> DriverSchedule:
        cfg = self.config
        rng = self.rng
        u = rng.random()
        if u < cfg.commuter_share:
            archetype = ARCHETYPE_COMMUTER
        elif u < cfg.commuter_share + cfg.low_mobility_share:
            archetype = ARCHETYPE_LOW_MOBILITY
        else:
            archetype = ARCHETYPE_ERRAND

        home_region = self._pick_region(self._population_cdf)
        timeline = _Timeline(LocationPurpose.HOME, home_region)

        work_region = self._pick_region(self._employment_cdf)
        commute_scale = _lognormal_unit_mean(rng, COMMUTE_SCALE_SIGMA)
        commute_minutes = min(max(int(round(cfg.mean_trip_minutes * commute_scale)), MIN_TRIP_MINUTES),
                              MAX_TRIP_MINUTES)
        commute_energy = self._kwh_per_minute * commute_minutes

        for day in range(7):
            base = day * DAY_MINUTES
            weekend = day >= 5
            if archetype == ARCHETYPE_COMMUTER and not weekend:
                depart = base + _sample_minutes(cfg.commute_departure, rng)
                energy = round(commute_energy * _lognormal_unit_mean(rng, 0.1), 4)
                if not timeline.travel(depart, commute_minutes, energy, LocationPurpose.WORK, work_region):
                    break
                depart = timeline.now + _sample_minutes(cfg.work_dwell, rng)
                energy = round(commute_energy * _lognormal_unit_mean(rng, 0.1), 4)
                if not timeline.travel(depart, commute_minutes, energy, LocationPurpose.HOME, home_region):
                    break
                if timeline.now < base + 19 * 60 and rng.random() < cfg.evening_errand_probability:
                    self._errand_tour(timeline, timeline.now + min(_sample_minutes(cfg.home_dwell, rng), 90),
                                      home_region)
            elif archetype == ARCHETYPE_LOW_MOBILITY:
                p = LOW_MOBILITY_TOUR_PROBABILITY * (cfg.weekend_trip_factor if weekend else 1.0)
                if rng.random() < p:
                    self._errand_tour(timeline, base + _sample_minutes(cfg.errand_departure, rng), home_region)
            else:
                # errand-runners, and commuters on weekends
                tours = 1 + int(rng.random() < cfg.second_tour_probability) if archetype == ARCHETYPE_ERRAND else 1
                depart = base + _sample_minutes(cfg.errand_departure, rng)
                for _ in range(tours):
                    if weekend and rng.random() >= cfg.weekend_trip_factor:
                        continue
                    self._errand_tour(timeline, depart, home_region)
                    depart = timeline.now + _sample_minutes(cfg.home_dwell, rng)

        return DriverSchedule(driver_id, timeline.finish())


def config_regions(config: SyntheticConfig) -> list[Region]:
    return [
        Region(region_id=r.region_id, name=r.name, urbanization=r.urbanization,
               population_weight=r.population_weight, employment_weight=r.employment_weight)
        for r in config.regions
    ]


def generate_driver(config: SyntheticConfig, seed: int, driver_id: int,
                    regions: Optional[list[Region]] = None) -> DriverSchedule:
    """One driver's week; a pure function of (config, seed, driver_id)."""
    regions = regions or config_regions(config)
    return _DriverGenerator(config, regions, driver_rng(seed, driver_id, STREAM_SYNTHETIC)).build(driver_id)


def generate_synthetic_fleet(
        config: Union[SyntheticConfig, dict],
        seed: int,
        season_label: Season = Season.WINTER,
        first_driver_id: int = 1,
) -> FleetScenario:
    """
    Generate a deterministic synthetic fleet.

    Raises:
        ConfigError: if a config mapping fails validation
    """
    if not isinstance(config, SyntheticConfig):
        try:
            config = SyntheticConfig.model_validate(config)
        except ValidationError as e:
            err = e.errors()[0]
            key = ".".join(("synthetic",) + tuple(str(p) for p in err["loc"]))
            logger.error(f"Invalid synthetic config {key}: {err['msg']}")
            raise ConfigError(key, err["msg"]) from e

    regions = config_regions(config)
    drivers = tuple(
        generate_driver(config, seed, driver_id, regions)
        for driver_id in range(first_driver_id, first_driver_id + config.driver_count)
    )
    logger.info(f"Generated {len(drivers)} synthetic drivers (seed={seed}, season={season_label.value})")
    return FleetScenario(
        drivers=drivers,
        regions=tuple(regions),
        season_label=season_label,
        global_seed=seed,
        scenario_id=f"synthetic-{seed}-{season_label.value}",
    )
