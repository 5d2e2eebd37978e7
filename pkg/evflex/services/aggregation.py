"""
Hourly regional and national profiles from charging events and envelopes.

Windows are binned straight into 168 hourly bins: a window contributes its
partial first and last hours directly and its whole hours through a
difference array, so every bin holds exact average power. The last charging
minute of an event carries only the remaining energy; that deficit is binned
as a one-minute negative window.

lower = baseline + P_down is accumulated from non-negative per-event terms:
the whole baseline for non-flexible events, nothing for Full envelopes, and
the baseline after the flex deadline for Partial envelopes.
"""
from collections import defaultdict
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from evflex.core.config import ReportConfig
from evflex.core.logs import logger
from evflex.schemas.charging import ChargingEvent
from evflex.schemas.fleet import (
    DAY_MINUTES,
    DAYS_PER_WEEK,
    HOURS_PER_WEEK,
    WEEK_MINUTES,
    Region,
    Urbanization,
)
from evflex.schemas.flexibility import FlexCase, FlexibilityEnvelope
from evflex.schemas.report import FleetSummary, LevelStats, RegionalProfile, SeasonComparison
from evflex.services.flexibility import split_daily_energy
from evflex.utils.exceptions import InvariantViolationError, UnknownRegionError

QUANTILE_METHOD = "linear"
SEASON_ORDER = ("winter", "spring", "summer", "autumn")


def _wrapped(start: int, end: int) -> list[tuple[int, int]]:
    """Split [start, end) into pieces inside [0, WEEK_MINUTES) modulo the week."""
    pieces = []
    while start < end:
        offset = (start // WEEK_MINUTES) * WEEK_MINUTES
        stop = min(end, offset + WEEK_MINUTES)
        pieces.append((start - offset, stop - offset))
        start = stop
    return pieces


def bin_power(start: int, end: int, power: float) -> dict[int, float]:
    """
    Average-kW contribution of a constant-power window to each hour it overlaps.

    Raises:
        ValueError: if start >= end
    """
    if start >= end:
        raise ValueError(f"empty window [{start}, {end})")
    out: dict[int, float] = defaultdict(float)
    for s, e in _wrapped(start, end):
        for hour in range(s // 60, (e - 1) // 60 + 1):
            overlap = min(e, 60 * (hour + 1)) - max(s, 60 * hour)
            out[hour] += power * overlap / 60.0
    return dict(out)


def event_daily_energy(charging: ChargingEvent) -> dict[int, float]:
    """Charged energy of one event per calendar day (modulo the week)."""
    out: dict[int, float] = defaultdict(float)
    for s, e in _wrapped(charging.charge_start, charging.charge_end):
        for day in range(s // DAY_MINUTES, (e - 1) // DAY_MINUTES + 1):
            overlap = min(e, DAY_MINUTES * (day + 1)) - max(s, DAY_MINUTES * day)
            out[day % DAYS_PER_WEEK] += charging.rate * overlap / 60.0
    last = ((charging.charge_end - 1) % WEEK_MINUTES) // DAY_MINUTES
    out[last] -= charging.final_minute_deficit
    return dict(out)


class _Windows:
    """Column buffers of (region, start, end, power) windows, binned in one vectorized pass."""

    def __init__(self):
        self.region: list[int] = []
        self.start: list[int] = []
        self.end: list[int] = []
        self.power: list[float] = []

    def add(self, region: int, start: int, end: int, power: float) -> None:
        if start >= end or power == 0.0:
            return
        for s, e in _wrapped(start, end):
            self.region.append(region)
            self.start.append(s)
            self.end.append(e)
            self.power.append(power)

    def add_charging(self, region: int, charging: ChargingEvent, start: Optional[int] = None) -> None:
        """Baseline power of `charging` from `start` (default: charge start) to charge end."""
        begin = charging.charge_start if start is None else start
        self.add(region, begin, charging.charge_end, charging.rate)
        deficit = charging.final_minute_deficit
        if deficit > 0.0:
            self.add(region, charging.charge_end - 1, charging.charge_end, -deficit * 60.0)

    def bin_into(self, partial: np.ndarray, diff: np.ndarray) -> None:
        if not self.region:
            return
        r = np.asarray(self.region, dtype=np.int64)
        s = np.asarray(self.start, dtype=np.int64)
        e = np.asarray(self.end, dtype=np.int64)
        p = np.asarray(self.power, dtype=float)
        hs = s // 60
        he = (e - 1) // 60
        same = hs == he
        np.add.at(partial, (r[same], hs[same]), p[same] * (e[same] - s[same]) / 60.0)

        span = ~same
        r, s, e, p, hs, he = r[span], s[span], e[span], p[span], hs[span], he[span]
        np.add.at(partial, (r, hs), p * (60 * (hs + 1) - s) / 60.0)
        np.add.at(partial, (r, he), p * (e - 60 * he) / 60.0)
        np.add.at(diff, (r, hs + 1), p)
        np.add.at(diff, (r, he), -p)


class ProfileAccumulator:
    """
    Streaming, mergeable profile builder.

    Drivers must not be split across add() calls: plugged-in counts are
    per vehicle and hour.
    """

    def __init__(self, regions: Iterable[Union[Region, str]]):
        ids = sorted({r.region_id if isinstance(r, Region) else r for r in regions})
        self.region_ids: list[str] = ids
        self._index = {rid: i for i, rid in enumerate(ids)}
        n = len(ids)
        self._base = (np.zeros((n, HOURS_PER_WEEK)), np.zeros((n, HOURS_PER_WEEK + 1)))
        self._lower = (np.zeros((n, HOURS_PER_WEEK)), np.zeros((n, HOURS_PER_WEEK + 1)))
        self._up = (np.zeros((n, HOURS_PER_WEEK)), np.zeros((n, HOURS_PER_WEEK + 1)))
        self._plugged = np.zeros((n, HOURS_PER_WEEK), dtype=np.int64)
        self._flexible = np.zeros((n, DAYS_PER_WEEK))
        self._attributed = np.zeros((n, DAYS_PER_WEEK))
        self._energy = np.zeros(n)
        self._events = np.zeros(n, dtype=np.int64)
        self._envelopes = np.zeros(n, dtype=np.int64)

    def _region(self, region_id: str) -> int:
        try:
            return self._index[region_id]
        except KeyError:
            logger.error(f"Unknown region id {region_id!r} in aggregation input")
            raise UnknownRegionError(region_id) from None

    def add(self, events: Iterable[ChargingEvent], envelopes: Iterable[FlexibilityEnvelope] = ()) -> None:
        """
        Raises:
            UnknownRegionError: an event or envelope names a region outside the accumulator
            InvariantViolationError: an envelope has no matching charging event
        """
        events = list(events)
        by_ref: dict[tuple[int, int], FlexibilityEnvelope] = {}
        for env in envelopes:
            self._region(env.region)
            by_ref[env.event_ref] = env

        base, lower, up = _Windows(), _Windows(), _Windows()
        hours: dict[tuple[int, int], set[int]] = defaultdict(set)
        matched = 0
        for ev in events:
            r = self._region(ev.region)
            base.add_charging(r, ev)
            self._energy[r] += ev.energy
            self._events[r] += 1

            env = by_ref.get((ev.driver_id, ev.parking_index))
            if env is None:
                lower.add_charging(r, ev)
            else:
                if env.region != ev.region:
                    raise InvariantViolationError(
                        "envelope_region", f"driver {ev.driver_id} parking {ev.parking_index}: "
                                           f"{env.region!r} != {ev.region!r}")
                matched += 1
                if env.case is FlexCase.PARTIAL:
                    lower.add_charging(r, ev, start=env.flex_deadline)
                up.add(r, env.charge_end, env.parking_end, env.rate)
                for day, kwh in split_daily_energy(env, ev).items():
                    self._flexible[r, day] += kwh
                if ev.energy > 0.0:
                    for day, kwh in event_daily_energy(ev).items():
                        self._attributed[r, day] += env.flexible_energy * kwh / ev.energy
                self._envelopes[r] += 1

            slot = hours[(ev.driver_id, r)]
            for s, e in _wrapped(ev.charge_start, ev.parking_end):
                slot.update(range(s // 60, (e - 1) // 60 + 1))

        if matched != len(by_ref):
            raise InvariantViolationError(
                "envelope_reference", f"{len(by_ref) - matched} envelope(s) without a charging event")

        base.bin_into(*self._base)
        lower.bin_into(*self._lower)
        up.bin_into(*self._up)
        for (_, r), slot in hours.items():
            self._plugged[r, list(slot)] += 1

    def merge(self, other: "ProfileAccumulator") -> "ProfileAccumulator":
        if other.region_ids != self.region_ids:
            raise ValueError("cannot merge accumulators over different regions")
        for mine, theirs in ((self._base, other._base), (self._lower, other._lower), (self._up, other._up)):
            mine[0][...] += theirs[0]
            mine[1][...] += theirs[1]
        self._plugged += other._plugged
        self._flexible += other._flexible
        self._attributed += other._attributed
        self._energy += other._energy
        self._events += other._events
        self._envelopes += other._envelopes
        return self

    @staticmethod
    def _hourly(parts: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
        partial, diff = parts
        return partial + np.cumsum(diff, axis=1)[:, :HOURS_PER_WEEK]

    def profiles(self) -> dict[str, RegionalProfile]:
        base = self._hourly(self._base)
        lower = self._hourly(self._lower)
        upper = base + self._hourly(self._up)
        return {
            rid: RegionalProfile(
                region_id=rid,
                baseline_kw=base[i],
                lower_kw=lower[i],
                upper_kw=upper[i],
                plugged_in_count=self._plugged[i].copy(),
                flexible_kwh=self._flexible[i].copy(),
                attributed_flexible_kwh=self._attributed[i].copy(),
                event_energy_kwh=float(self._energy[i]),
                events=int(self._events[i]),
                envelopes=int(self._envelopes[i]),
            )
            for i, rid in enumerate(self.region_ids)
        }

    def national(self) -> RegionalProfile:
        return RegionalProfile.combine(self.profiles().values())


def aggregate(
        events: Iterable[ChargingEvent],
        envelopes: Iterable[FlexibilityEnvelope],
        regions: Iterable[Union[Region, str]],
) -> tuple[dict[str, RegionalProfile], RegionalProfile]:
    """Regional profiles keyed by region_id (sorted) and their national sum."""
    acc = ProfileAccumulator(regions)
    acc.add(events, envelopes)
    profiles = acc.profiles()
    return profiles, RegionalProfile.combine(profiles.values())


def check_profile(profile: RegionalProfile, max_rate: float, tolerance: float = 1e-6) -> None:
    """
    Raises:
        InvariantViolationError: bounds out of order, upper bound above plugged-in capacity,
            or hourly baseline energy differing from the summed event energy
    """
    rid = profile.region_id
    if np.any(profile.lower_kw < -tolerance):
        raise InvariantViolationError("lower_nonnegative", f"region {rid}: lower bound below zero")
    if np.any(profile.lower_kw > profile.baseline_kw + tolerance):
        raise InvariantViolationError("lower_le_baseline", f"region {rid}: lower bound above baseline")
    if np.any(profile.baseline_kw > profile.upper_kw + tolerance):
        raise InvariantViolationError("baseline_le_upper", f"region {rid}: baseline above upper bound")
    if np.any(profile.upper_kw > profile.plugged_in_count * max_rate + tolerance):
        raise InvariantViolationError("upper_le_plugged", f"region {rid}: upper bound above plugged-in capacity")
    gap = abs(float(profile.baseline_kw.sum()) - profile.event_energy_kwh)
    if gap > tolerance:
        raise InvariantViolationError("energy_consistency", f"region {rid}: baseline energy off by {gap:.3e} kWh")


def _period_days(period: str, report: ReportConfig) -> tuple[int, ...]:
    if period == "weekday":
        return report.weekday_days
    if period == "weekend":
        return report.weekend_days
    if period == "week":
        return tuple(range(DAYS_PER_WEEK))
    raise ValueError(f"unknown period {period!r}; expected weekday, weekend or week")


def _period_hours(period: str, report: ReportConfig) -> np.ndarray:
    return np.concatenate([np.arange(d * 24, d * 24 + 24) for d in _period_days(period, report)])


def flexible_share(
        profile: RegionalProfile,
        period: str = "week",
        report: Optional[ReportConfig] = None,
        credited: bool = False,
) -> float:
    """
    Flexible energy over charged energy for the period's days; 0 without charging.

    The default uses attributed_flexible_kwh and is clamped to [0, 1].
    credited=True uses flexible_kwh, where an overnight envelope counts on
    both days it touches, so the ratio is left unclamped and may exceed 1.
    """
    report = report or ReportConfig()
    days = list(_period_days(period, report))
    charged = float(profile.charged_kwh[days].sum())
    if charged <= 1e-12:
        return 0.0
    if credited:
        return max(float(profile.flexible_kwh[days].sum()) / charged, 0.0)
    share = float(profile.attributed_flexible_kwh[days].sum()) / charged
    return min(max(share, 0.0), 1.0)


def peak_kw(profile: RegionalProfile, period: str, report: Optional[ReportConfig] = None) -> float:
    report = report or ReportConfig()
    return max(float(profile.baseline_kw[_period_hours(period, report)].max()), 0.0)


def mean_daily_profile(series: np.ndarray, period: str, report: Optional[ReportConfig] = None) -> np.ndarray:
    """24 hourly values averaged over the period's days."""
    report = report or ReportConfig()
    days = list(_period_days(period, report))
    return series.reshape(DAYS_PER_WEEK, 24)[days].mean(axis=0)


def peak_hour(profile: RegionalProfile, period: str, report: Optional[ReportConfig] = None) -> int:
    """Hour of day at which the period's average daily baseline peaks."""
    return int(np.argmax(mean_daily_profile(profile.baseline_kw, period, report)))


def daytime_energy_share(profile: RegionalProfile, period: str, report: Optional[ReportConfig] = None) -> float:
    """Share of the period's charged energy falling in the daytime hours; 0 without charging."""
    report = report or ReportConfig()
    daily = mean_daily_profile(profile.baseline_kw, period, report)
    total = float(daily.sum())
    if total <= 1e-12:
        return 0.0
    day = float(daily[report.daytime_start_hour:report.daytime_end_hour].sum())
    return min(max(day / total, 0.0), 1.0)


def daytime_upper_kw(profile: RegionalProfile, period: str, report: Optional[ReportConfig] = None) -> float:
    """Mean upper bound over the daytime hours of the period's days."""
    report = report or ReportConfig()
    daily = mean_daily_profile(profile.upper_kw, period, report)
    return float(daily[report.daytime_start_hour:report.daytime_end_hour].mean())


def summarize(
        profiles: Mapping[str, RegionalProfile],
        regions: Iterable[Region],
        report: Optional[ReportConfig] = None,
        season_label: str = "",
) -> FleetSummary:
    report = report or ReportConfig()
    regions = sorted(regions, key=lambda r: r.region_id)
    for region in regions:
        if region.region_id not in profiles:
            raise UnknownRegionError(region.region_id)

    shares = {r.region_id: flexible_share(profiles[r.region_id], "week", report) for r in regions}
    levels: dict[str, LevelStats] = {}
    notices: list[str] = []
    for level in Urbanization:
        members = [r.region_id for r in regions if r.urbanization is level]
        if not members:
            notices.append(f"urbanization level '{level.value}' omitted: no regions")
            continue
        q = np.quantile(np.array([shares[m] for m in members]), [0.0, 0.25, 0.5, 0.75, 1.0],
                        method=QUANTILE_METHOD)
        level_profile = RegionalProfile.combine((profiles[m] for m in members), region_id=level.value)
        levels[level.value] = LevelStats(
            level=level.value,
            regions=len(members),
            min=float(q[0]), q1=float(q[1]), median=float(q[2]), q3=float(q[3]), max=float(q[4]),
            weekday_peak_kw=peak_kw(level_profile, "weekday", report),
            weekend_peak_kw=peak_kw(level_profile, "weekend", report),
        )

    national = RegionalProfile.combine(profiles[r.region_id] for r in regions)
    upward = national.upward_kw
    downward = national.downward_kw
    summary = FleetSummary(
        season_label=season_label,
        levels=levels,
        region_share=shares,
        national_weekday_peak_kw=peak_kw(national, "weekday", report),
        national_weekend_peak_kw=peak_kw(national, "weekend", report),
        national_weekday_share=flexible_share(national, "weekday", report),
        national_weekend_share=flexible_share(national, "weekend", report),
        national_week_share=flexible_share(national, "week", report),
        national_weekday_credited_share=flexible_share(national, "weekday", report, credited=True),
        national_weekend_credited_share=flexible_share(national, "weekend", report, credited=True),
        national_week_credited_share=flexible_share(national, "week", report, credited=True),
        national_weekday_peak_hour=peak_hour(national, "weekday", report),
        national_weekday_daytime_share=daytime_energy_share(national, "weekday", report),
        national_weekday_daytime_upper_kw=daytime_upper_kw(national, "weekday", report),
        mean_upward_kw=float(upward.mean()),
        max_upward_kw=float(upward.max()),
        mean_downward_kw=float(downward.mean()),
        max_downward_kw=float(downward.max()),
        charged_kwh=float(national.charged_kwh.sum()),
        quantile_method=QUANTILE_METHOD,
        notices=notices,
    )
    for notice in notices:
        logger.info(notice)
    return summary


def compare_seasons(summaries: Mapping[str, FleetSummary]) -> list[SeasonComparison]:
    """Per-season national peaks and the weekday peak increase over the lowest-peak season."""
    if not summaries:
        return []
    order = [s for s in SEASON_ORDER if s in summaries] + sorted(set(summaries) - set(SEASON_ORDER))
    lowest = min(s.national_weekday_peak_kw for s in summaries.values())
    rows = []
    for season in order:
        s = summaries[season]
        increase = s.national_weekday_peak_kw / lowest - 1.0 if lowest > 0 else 0.0
        rows.append(SeasonComparison(
            season=season,
            weekday_peak_kw=s.national_weekday_peak_kw,
            weekend_peak_kw=s.national_weekend_peak_kw,
            charged_kwh=s.charged_kwh,
            peak_increase=increase,
        ))
    return rows
