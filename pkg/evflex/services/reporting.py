"""
CSV and YAML readers/writers for the pipeline's result files.

Floats are written with six decimals so files are byte-stable across runs and
platforms; rows are ordered canonically (driver_id, parking_index) or
(region_id, hour/day).
"""
import csv
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from evflex.core.logs import logger
from evflex.schemas.charging import ChargingEvent, DecisionReason
from evflex.schemas.fleet import DAYS_PER_WEEK, HOURS_PER_WEEK, LocationPurpose
from evflex.schemas.flexibility import FlexCase, FlexibilityEnvelope
from evflex.schemas.report import FleetSummary, RegionalProfile, SeasonComparison
from evflex.utils.exceptions import ScheduleFormatError

EVENTS_FILE = "events.csv"
ENVELOPES_FILE = "envelopes.csv"
PROFILES_FILE = "profiles.csv"
NATIONAL_PROFILE_FILE = "national_profile.csv"
DAILY_FILE = "daily.csv"
BOXPLOT_FILE = "flex_share_boxplot.csv"
SUMMARY_FILE = "summary.yaml"
DIAGNOSTICS_FILE = "diagnostics.yaml"
EXCLUSIONS_FILE = "exclusions.yaml"
SEASON_COMPARISON_FILE = "season_comparison.csv"

EVENT_COLUMNS = [
    "driver_id", "parking_index", "charge_start_min", "charge_end_min", "parking_end_min",
    "rate_kw", "energy_kwh", "target_soc", "start_soc", "end_soc", "reason", "region_id", "purpose",
]
ENVELOPE_COLUMNS = [
    "driver_id", "parking_index", "case", "down_start", "down_end", "dead_start", "dead_end",
    "up_start", "up_end", "rate_kw", "flexible_energy_kwh", "days_credited",
    "region_id", "charged_energy_kwh",
]
PROFILE_COLUMNS = ["region_id", "hour_index", "baseline_kw", "lower_kw", "upper_kw", "plugged_in_count"]
DAILY_COLUMNS = ["region_id", "day_index", "charged_kwh", "flexible_kwh", "attributed_flexible_kwh"]
BOXPLOT_COLUMNS = ["level", "regions", "min", "q1", "median", "q3", "max", "weekday_peak_kw", "weekend_peak_kw"]
SEASON_COLUMNS = ["season", "weekday_peak_kw", "weekend_peak_kw", "charged_kwh", "peak_increase"]


def fmt(value: float) -> str:
    return f"{value:.6f}"


def _write_rows(path: Path, columns: list[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    logger.debug(f"Wrote {path.name}")
    return path


def _read_rows(path: Path, columns: list[str]) -> Iterable[tuple[int, dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if reader.fieldnames is not None and missing:
            raise ScheduleFormatError(1, f"{Path(path).name}: missing column(s) {', '.join(missing)}")
        for line, row in enumerate(reader, start=2):
            if any((v or "").strip() for v in row.values()):
                yield line, row


def _number(row: dict[str, str], column: str, line: int, kind=float):
    try:
        return kind(row[column])
    except (TypeError, ValueError):
        raise ScheduleFormatError(line, f"column '{column}' is not a valid {kind.__name__}: {row[column]!r}")


def write_events(events: Iterable[ChargingEvent], path: Path) -> Path:
    ordered = sorted(events, key=lambda e: (e.driver_id, e.parking_index))
    return _write_rows(path, EVENT_COLUMNS, (
        [e.driver_id, e.parking_index, e.charge_start, e.charge_end, e.parking_end,
         fmt(e.rate), fmt(e.energy), fmt(e.target_soc), fmt(e.start_soc), fmt(e.end_soc),
         e.reason.value, e.region, e.purpose.value]
        for e in ordered
    ))


def read_events(path: Path) -> list[ChargingEvent]:
    """
    Raises:
        ScheduleFormatError: malformed row, unknown enum value or duplicate event reference
    """
    events: list[ChargingEvent] = []
    seen: set[tuple[int, int]] = set()
    for line, row in _read_rows(path, EVENT_COLUMNS):
        try:
            reason = DecisionReason(row["reason"])
            purpose = LocationPurpose(row["purpose"])
        except ValueError as e:
            raise ScheduleFormatError(line, str(e))
        event = ChargingEvent(
            driver_id=_number(row, "driver_id", line, int),
            parking_index=_number(row, "parking_index", line, int),
            charge_start=_number(row, "charge_start_min", line, int),
            charge_end=_number(row, "charge_end_min", line, int),
            parking_end=_number(row, "parking_end_min", line, int),
            rate=_number(row, "rate_kw", line),
            energy=_number(row, "energy_kwh", line),
            target_soc=_number(row, "target_soc", line),
            start_soc=_number(row, "start_soc", line),
            end_soc=_number(row, "end_soc", line),
            reason=reason,
            region=row["region_id"],
            purpose=purpose,
        )
        if not event.charge_start < event.charge_end <= event.parking_end:
            raise ScheduleFormatError(line, "expected charge_start < charge_end <= parking_end")
        ref = (event.driver_id, event.parking_index)
        if ref in seen:
            raise ScheduleFormatError(line, f"duplicate event for driver {ref[0]} parking {ref[1]}")
        seen.add(ref)
        events.append(event)
    return events


def _envelope_row(env: FlexibilityEnvelope) -> list:
    dead = env.dead_window
    return [
        env.driver_id, env.parking_index, env.case.value,
        env.down_window[0], env.down_window[1],
        "" if dead is None else dead[0], "" if dead is None else dead[1],
        env.up_window[0], env.up_window[1],
        fmt(env.rate), fmt(env.flexible_energy),
        ";".join(str(d) for d in env.days_credited),
        env.region, fmt(env.charged_energy),
    ]


def write_envelopes(envelopes: Iterable[FlexibilityEnvelope], path: Path) -> Path:
    ordered = sorted(envelopes, key=lambda e: e.event_ref)
    return _write_rows(path, ENVELOPE_COLUMNS, (_envelope_row(e) for e in ordered))


def read_envelopes(path: Path) -> list[FlexibilityEnvelope]:
    envelopes: list[FlexibilityEnvelope] = []
    for line, row in _read_rows(path, ENVELOPE_COLUMNS):
        try:
            case = FlexCase(row["case"])
        except ValueError as e:
            raise ScheduleFormatError(line, str(e))
        days = row["days_credited"].strip()
        try:
            credited = tuple(int(d) for d in days.split(";")) if days else ()
        except ValueError:
            raise ScheduleFormatError(line, f"column 'days_credited' is malformed: {days!r}")
        envelopes.append(FlexibilityEnvelope(
            driver_id=_number(row, "driver_id", line, int),
            parking_index=_number(row, "parking_index", line, int),
            case=case,
            parking_start=_number(row, "down_start", line, int),
            parking_end=_number(row, "up_end", line, int),
            charge_end=_number(row, "up_start", line, int),
            flex_deadline=_number(row, "down_end", line, int),
            rate=_number(row, "rate_kw", line),
            flexible_energy=_number(row, "flexible_energy_kwh", line),
            charged_energy=_number(row, "charged_energy_kwh", line),
            region=row["region_id"],
            days_credited=credited,
        ))
    return envelopes


def _profile_rows(profile: RegionalProfile) -> Iterable[list]:
    for h in range(HOURS_PER_WEEK):
        yield [profile.region_id, h, fmt(profile.baseline_kw[h]), fmt(profile.lower_kw[h]),
               fmt(profile.upper_kw[h]), int(profile.plugged_in_count[h])]


def write_profiles(profiles: Mapping[str, RegionalProfile], path: Path) -> Path:
    rows = (row for rid in sorted(profiles) for row in _profile_rows(profiles[rid]))
    return _write_rows(path, PROFILE_COLUMNS, rows)


def write_national_profile(national: RegionalProfile, path: Path) -> Path:
    return _write_rows(path, PROFILE_COLUMNS, _profile_rows(national))


def write_daily(profiles: Mapping[str, RegionalProfile], path: Path) -> Path:
    def rows():
        for rid in sorted(profiles):
            p = profiles[rid]
            charged = p.charged_kwh
            for d in range(DAYS_PER_WEEK):
                yield [rid, d, fmt(charged[d]), fmt(p.flexible_kwh[d]), fmt(p.attributed_flexible_kwh[d])]
    return _write_rows(path, DAILY_COLUMNS, rows())


def write_boxplot(summary: FleetSummary, path: Path) -> Path:
    return _write_rows(path, BOXPLOT_COLUMNS, (
        [s.level, s.regions, fmt(s.min), fmt(s.q1), fmt(s.median), fmt(s.q3), fmt(s.max),
         fmt(s.weekday_peak_kw), fmt(s.weekend_peak_kw)]
        for s in summary.levels.values()
    ))


def write_season_comparison(rows: Iterable[SeasonComparison], path: Path) -> Path:
    return _write_rows(path, SEASON_COLUMNS, (
        [r.season, fmt(r.weekday_peak_kw), fmt(r.weekend_peak_kw), fmt(r.charged_kwh), fmt(r.peak_increase)]
        for r in rows
    ))


def write_yaml(data: dict, path: Path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(data, sort_keys=True, default_flow_style=False), encoding="utf-8")
    return path


def write_summary(summary: FleetSummary, path: Path) -> Path:
    data = summary.model_dump(mode="json")
    for name, stats in summary.levels.items():
        data["levels"][name]["peak_ratio"] = stats.peak_ratio
    return write_yaml(data, path)


def read_summary(path: Path) -> FleetSummary:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    for stats in (data.get("levels") or {}).values():
        stats.pop("peak_ratio", None)
    return FleetSummary.model_validate(data)
