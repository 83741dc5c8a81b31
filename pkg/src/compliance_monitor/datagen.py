"""Seeded synthetic cohort generator with a ground-truth manifest.

The plan is a pure function of (seed, knobs): it fixes, per participant
and day, exactly which half-hour windows carry samples, which weekday
surveys are completed, and when beacons are sighted. The manifest is
derived from the plan by direct counting, never by running the engine,
so it can serve as an independent oracle for the full pipeline.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field, fields
from datetime import date, datetime, time, timedelta, timezone
from fractions import Fraction
from pathlib import Path

from .core import (
    FundingGroup,
    RosterEntry,
    StudyConfig,
    StudyStatus,
    day_windows,
    format_utc_timestamp,
    load_zone,
    local_day_span,
    render_pct,
)
from .ingest import BEACON_HEADER, HR_HEADER, ROSTER_HEADER, SURVEY_HEADER

MANIFEST_NAME = "manifest.json"

_NIGHT_WINDOWS = 16
_FALSE_ROW_PROB = 0.25
_BEACON_GAP_MAX_DAYS = 3
_HR_BASE_RANGE = (55, 89)
_DEFAULT_TZ_NAMES = (
    "America/New_York",
    "America/Chicago",
    "America/Denver",
    "America/Los_Angeles",
)


@dataclass(frozen=True)
class ScenarioKnobs:
    """Probabilities for the failure modes the cohort should exhibit."""

    night_nonwear_prob: float = 0.0
    window_dropout_prob: float = 0.0
    survey_completion_prob: float = 1.0
    sync_delay_prob: float = 0.0
    dead_device_prob: float = 0.0
    never_sighted_prob: float = 0.0
    beacon_dead_prob: float = 0.0

    def __post_init__(self) -> None:
        for spec in fields(self):
            value = getattr(self, spec.name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{spec.name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class DayPlan:
    """Final truth for one participant-day, after all failure modes."""

    date: date
    windows_total: int
    covered_windows: tuple[int, ...]
    survey_completed: bool | None
    survey_false_row: bool


@dataclass(frozen=True)
class ParticipantPlan:
    participant_id: str
    team_id: str
    funding_group: FundingGroup
    start_date: date
    end_date: date
    timezone: str
    days: tuple[DayPlan, ...]
    beacon_id: str
    sightings: tuple[datetime, ...]


@dataclass(frozen=True)
class CohortPlan:
    seed: int
    as_of: date
    config: StudyConfig
    knobs: ScenarioKnobs
    hr_cadence_seconds: int
    participants: tuple[ParticipantPlan, ...]


def build_plan(
    seed: int,
    num_teams: int = 15,
    as_of: date = date(2023, 3, 20),
    knobs: ScenarioKnobs | None = None,
    config: StudyConfig | None = None,
    hr_cadence_seconds: int = 15,
    stagger_days: int = 21,
    elapsed_days: int | None = None,
    tz_names: tuple[str, ...] = _DEFAULT_TZ_NAMES,
) -> CohortPlan:
    """Deterministically expand (seed, knobs) into a fully realized cohort.

    By default every participant has the whole study behind them, with
    team start dates staggered. elapsed_days pins a shorter, uniform
    history instead (stagger is then ignored).
    """
    knobs = knobs or ScenarioKnobs()
    config = config or StudyConfig()
    if num_teams < 1:
        raise ValueError("num_teams must be >= 1")
    if hr_cadence_seconds < 1:
        raise ValueError("hr_cadence_seconds must be >= 1")
    if elapsed_days is not None and not 1 <= elapsed_days <= config.study_length_days:
        raise ValueError("elapsed_days must be in [1, study_length_days]")

    rng = random.Random(seed)
    group_cycle = [FundingGroup.GROUP_A if i % 2 == 0 else FundingGroup.GROUP_B for i in range(num_teams)]
    rng.shuffle(group_cycle)

    participants: list[ParticipantPlan] = []
    for team_index in range(num_teams):
        team_id = f"T{team_index + 1:02d}"
        group = group_cycle[team_index]
        tz_name = rng.choice(tz_names)
        zone = load_zone(tz_name)
        if elapsed_days is None:
            start = as_of - timedelta(days=config.study_length_days - 1 + rng.randint(0, stagger_days))
        else:
            start = as_of - timedelta(days=elapsed_days - 1)
        end = start + timedelta(days=config.study_length_days - 1)
        team_size = rng.randint(3, 5)

        for member_index in range(team_size):
            pid = f"{team_id}-P{member_index + 1}"
            night_nonwear = rng.random() < knobs.night_nonwear_prob
            dead_from: date | None = None
            if rng.random() < knobs.dead_device_prob:
                dead_from = start + timedelta(days=rng.randint(7, config.study_length_days - 1))
            withheld_days = 0
            if rng.random() < knobs.sync_delay_prob:
                withheld_days = rng.randint(1, config.sync_lag_days)

            days: list[DayPlan] = []
            cursor = start
            last_elapsed = min(as_of, end)
            while cursor <= last_elapsed:
                total = day_windows(cursor, tz_name).count
                covered = []
                for index in range(total):
                    if night_nonwear and index < _NIGHT_WINDOWS:
                        continue
                    if rng.random() < knobs.window_dropout_prob:
                        continue
                    covered.append(index)
                if dead_from is not None and cursor >= dead_from:
                    covered = []
                if withheld_days and (as_of - cursor).days < withheld_days:
                    covered = []
                survey_completed: bool | None = None
                survey_false_row = False
                if cursor.weekday() < 5:
                    survey_completed = rng.random() < knobs.survey_completion_prob
                    if not survey_completed:
                        survey_false_row = rng.random() < _FALSE_ROW_PROB
                days.append(
                    DayPlan(cursor, total, tuple(covered), survey_completed, survey_false_row)
                )
                cursor += timedelta(days=1)

            sightings: list[datetime] = []
            if rng.random() >= knobs.never_sighted_prob:
                beacon_dead_from: date | None = None
                if rng.random() < knobs.beacon_dead_prob:
                    beacon_dead_from = start + timedelta(days=rng.randint(7, config.study_length_days - 1))
                day = start
                while day <= last_elapsed:
                    if beacon_dead_from is not None and day >= beacon_dead_from:
                        break
                    seconds = rng.randint(8 * 3600, 20 * 3600)
                    local = datetime.combine(day, time(0), tzinfo=zone) + timedelta(seconds=seconds)
                    sightings.append(local.astimezone(timezone.utc))
                    day += timedelta(days=rng.randint(1, _BEACON_GAP_MAX_DAYS))

            participants.append(
                ParticipantPlan(
                    participant_id=pid,
                    team_id=team_id,
                    funding_group=group,
                    start_date=start,
                    end_date=end,
                    timezone=tz_name,
                    days=tuple(days),
                    beacon_id=f"{pid}-BCN",
                    sightings=tuple(sightings),
                )
            )

    return CohortPlan(
        seed=seed,
        as_of=as_of,
        config=config,
        knobs=knobs,
        hr_cadence_seconds=hr_cadence_seconds,
        participants=tuple(participants),
    )


def _mean_block(percentages: list[Fraction], threshold: Fraction) -> dict:
    if not percentages:
        return {"days": 0, "pct": None, "exact": None, "below_threshold": None}
    mean = sum(percentages, Fraction(0)) / len(percentages)
    return {
        "days": len(percentages),
        "pct": render_pct(mean),
        "exact": f"{mean.numerator}/{mean.denominator}",
        "below_threshold": mean < threshold,
    }


def _participant_truth(plan: CohortPlan, participant: ParticipantPlan) -> dict:
    config = plan.config
    wearable_daily = []
    wearable_pcts = []
    survey_daily = []
    survey_pcts = []
    for day in participant.days:
        present = len(day.covered_windows)
        pct = Fraction(present * 100, day.windows_total)
        wearable_pcts.append(pct)
        wearable_daily.append(
            {
                "date": day.date.isoformat(),
                "windows_present": present,
                "windows_total": day.windows_total,
                "pct": render_pct(pct),
            }
        )
        if day.survey_completed is not None:
            pct = Fraction(100) if day.survey_completed else Fraction(0)
            survey_pcts.append(pct)
            survey_daily.append(
                {
                    "date": day.date.isoformat(),
                    "completed": day.survey_completed,
                    "pct": render_pct(pct),
                }
            )

    if participant.sightings:
        last = max(participant.sightings)
        local_date = last.astimezone(load_zone(participant.timezone)).date()
        days_since = max(0, (plan.as_of - local_date).days)
        beacon = {
            "last_sighted_date": local_date.isoformat(),
            "days_since": days_since,
            "never_sighted": False,
            "stale": days_since > config.beacon_stale_days,
        }
    else:
        beacon = {
            "last_sighted_date": None,
            "days_since": None,
            "never_sighted": True,
            "stale": True,
        }

    return {
        "team_id": participant.team_id,
        "funding_group": participant.funding_group.value,
        "status": StudyStatus.STARTED.value,
        "start_date": participant.start_date.isoformat(),
        "end_date": participant.end_date.isoformat(),
        "timezone": participant.timezone,
        "wearable_daily": wearable_daily,
        "wearable_mean": _mean_block(wearable_pcts, config.threshold),
        "survey_daily": survey_daily,
        "survey_mean": _mean_block(survey_pcts, config.threshold),
        "beacon": beacon,
    }


def build_manifest(plan: CohortPlan, row_counts: dict[str, int]) -> dict:
    config = plan.config
    return {
        "seed": plan.seed,
        "as_of": plan.as_of.isoformat(),
        "hr_cadence_seconds": plan.hr_cadence_seconds,
        "config": {
            "study_length_days": config.study_length_days,
            "windows_per_day": config.windows_per_day_nominal,
            "compliance_threshold_pct": str(config.compliance_threshold_pct),
            "sync_lag_days": config.sync_lag_days,
            "beacon_stale_days": config.beacon_stale_days,
        },
        "counts": {
            "teams": len({p.team_id for p in plan.participants}),
            "participants": len(plan.participants),
            "started": len(plan.participants),
            **row_counts,
        },
        "participants": {
            p.participant_id: _participant_truth(plan, p) for p in plan.participants
        },
    }


@dataclass(frozen=True)
class GeneratedCohort:
    out_dir: Path
    roster_path: Path
    hr_path: Path
    surveys_path: Path
    beacons_path: Path
    manifest_path: Path
    manifest: dict = field(repr=False)


def _write_lines(path: Path, header: list[str], lines: list[str]) -> int:
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(",".join(header) + "\n")
        handle.writelines(lines)
    return len(lines)


def generate(plan: CohortPlan, out_dir: str | os.PathLike[str]) -> GeneratedCohort:
    """Write roster, heart-rate, survey, and beacon CSVs plus the manifest.

    Identical plans produce byte-identical outputs. Heart-rate samples are
    emitted at the plan cadence strictly inside covered windows, ordered
    by participant then timestamp.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(plan.seed ^ 0x5EED)
    cadence = plan.hr_cadence_seconds
    offsets = [timedelta(seconds=s) for s in range(0, 1800, cadence)]

    roster_lines = []
    hr_lines: list[str] = []
    survey_lines = []
    beacon_lines = []
    for participant in plan.participants:
        roster_lines.append(
            ",".join(
                [
                    participant.team_id,
                    participant.participant_id,
                    participant.funding_group.value,
                    StudyStatus.STARTED.value,
                    participant.start_date.isoformat(),
                    participant.end_date.isoformat(),
                    participant.timezone,
                ]
            )
            + "\n"
        )
        pid = participant.participant_id
        zone = load_zone(participant.timezone)
        for day in participant.days:
            day_start, _ = local_day_span(day.date, zone)
            for index in day.covered_windows:
                window_start = day_start + timedelta(seconds=index * 1800)
                base_hr = rng.randint(*_HR_BASE_RANGE)
                for k, offset in enumerate(offsets):
                    ts = format_utc_timestamp(window_start + offset)
                    hr_lines.append(f"{pid},{ts},{base_hr + k % 7}\n")
            if day.survey_completed:
                survey_lines.append(f"{pid},{day.date.isoformat()},true\n")
            elif day.survey_false_row:
                survey_lines.append(f"{pid},{day.date.isoformat()},false\n")
        for sighting in participant.sightings:
            beacon_lines.append(
                f"{pid},{participant.beacon_id},{format_utc_timestamp(sighting)}\n"
            )

    roster_path = out / "roster.csv"
    hr_path = out / "hr.csv"
    surveys_path = out / "surveys.csv"
    beacons_path = out / "beacons.csv"
    row_counts = {
        "roster_rows": _write_lines(roster_path, ROSTER_HEADER, roster_lines),
        "hr_rows": _write_lines(hr_path, HR_HEADER, hr_lines),
        "survey_rows": _write_lines(surveys_path, SURVEY_HEADER, survey_lines),
        "beacon_rows": _write_lines(beacons_path, BEACON_HEADER, beacon_lines),
    }

    manifest = build_manifest(plan, row_counts)
    manifest_path = out / MANIFEST_NAME
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return GeneratedCohort(
        out_dir=out,
        roster_path=roster_path,
        hr_path=hr_path,
        surveys_path=surveys_path,
        beacons_path=beacons_path,
        manifest_path=manifest_path,
        manifest=manifest,
    )


def roster_entries(plan: CohortPlan) -> list[RosterEntry]:
    """The plan's roster as domain records, for tests that skip the CSV layer."""
    return [
        RosterEntry(
            team_id=p.team_id,
            participant_id=p.participant_id,
            funding_group=p.funding_group,
            status=StudyStatus.STARTED,
            start_date=p.start_date,
            end_date=p.end_date,
            timezone=p.timezone,
        )
        for p in plan.participants
    ]
