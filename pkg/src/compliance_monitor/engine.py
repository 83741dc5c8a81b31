"""Compliance computation: window scoring, daily and overall percentages,
survey completion, beacon staleness, and provisionality.

All percentages are held as exact rationals; rounding happens only at the
rendering edge. compute_all is a pure function of the store snapshot and
the compute context, so identical inputs always produce identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date, datetime
from fractions import Fraction
from typing import Iterable
from zoneinfo import ZoneInfo

from .core import (
    ACTIVE_STATUSES,
    BeaconSighting,
    BeaconStatus,
    ComplianceSummary,
    DailyComplianceRecord,
    HeartRateSample,
    RosterEntry,
    StudyConfig,
    SurveyComplianceRecord,
    SurveySubmission,
    elapsed_study_dates,
    load_zone,
    local_day_span,
)
from .ingest import FileKind, Store

_WINDOW_SECONDS = 1800
_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


@dataclass(frozen=True)
class ComputeContext:
    """Pins the report date and configuration for one deterministic run."""

    as_of: date
    config: StudyConfig = field(default_factory=StudyConfig)


@dataclass(frozen=True, slots=True)
class WindowScoreVector:
    """Binary presence scores for one participant-day, one per half-hour window."""

    participant_id: str
    date: date
    scores: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(s not in (0, 1) for s in self.scores):
            raise ValueError("window scores must be 0 or 1")


def score_windows(
    participant_id: str,
    samples: Iterable[HeartRateSample],
    day: date,
    tz_name: str,
) -> WindowScoreVector:
    """Score each half-hour window of a local day: 1 if any sample falls in it.

    Windows are half-open, so a sample at exactly a boundary belongs to the
    later window. Samples outside the day are ignored.
    """
    zone = load_zone(tz_name)
    start_utc, end_utc = local_day_span(day, zone)
    count = int((end_utc - start_utc).total_seconds()) // _WINDOW_SECONDS
    scores = [0] * count
    for sample in samples:
        ts = sample.timestamp
        if start_utc <= ts < end_utc:
            offset = int((ts - start_utc).total_seconds()) // _WINDOW_SECONDS
            scores[offset] = 1
    return WindowScoreVector(participant_id=participant_id, date=day, scores=tuple(scores))


def daily_wearable_compliance(vector: WindowScoreVector) -> DailyComplianceRecord:
    """Collapse a score vector to the day's percentage: present/total*100, exact."""
    present = sum(vector.scores)
    total = len(vector.scores)
    return DailyComplianceRecord(
        participant_id=vector.participant_id,
        date=vector.date,
        windows_present=present,
        windows_total=total,
        compliance_pct=Fraction(present * 100, total),
    )


def mark_provisional(
    record: DailyComplianceRecord | SurveyComplianceRecord,
    ctx: ComputeContext,
) -> DailyComplianceRecord | SurveyComplianceRecord:
    """Flag records young enough that missing data may just be sync delay."""
    provisional = (ctx.as_of - record.date).days < ctx.config.sync_lag_days
    return replace(record, provisional=provisional)


def _summarize(
    participant_id: str,
    percentages: list[Fraction],
    ctx: ComputeContext,
) -> ComplianceSummary:
    if not percentages:
        return ComplianceSummary(participant_id, 0, None, False)
    mean = sum(percentages, Fraction(0)) / len(percentages)
    return ComplianceSummary(
        participant_id=participant_id,
        days_elapsed=len(percentages),
        mean_daily_pct=mean,
        below_threshold=mean < ctx.config.threshold,
    )


def overall_wearable_compliance(
    records: list[DailyComplianceRecord],
    entry: RosterEntry,
    ctx: ComputeContext,
) -> ComplianceSummary:
    """Mean of daily percentages over elapsed in-study dates.

    Callers must materialize missing days as 0% records first; exactly the
    threshold (at least 80%) counts as compliant.
    """
    return _summarize(entry.participant_id, [r.compliance_pct for r in records], ctx)


def daily_survey_compliance(
    submissions: Iterable[SurveySubmission],
    entry: RosterEntry,
    ctx: ComputeContext,
) -> list[SurveyComplianceRecord]:
    """One record per elapsed in-study weekday: 100% iff a completion exists."""
    completed = {s.survey_date for s in submissions if s.completed}
    records = []
    for day in elapsed_study_dates(entry, ctx.as_of, ctx.config):
        if day.weekday() >= 5:
            continue
        pct = Fraction(100) if day in completed else Fraction(0)
        record = SurveyComplianceRecord(entry.participant_id, day, pct)
        records.append(mark_provisional(record, ctx))
    return records


def overall_survey_compliance(
    records: list[SurveyComplianceRecord],
    entry: RosterEntry,
    ctx: ComputeContext,
) -> ComplianceSummary:
    """Mean over elapsed in-study weekdays only."""
    return _summarize(entry.participant_id, [r.compliance_pct for r in records], ctx)


def beacon_status(
    sightings: Iterable[BeaconSighting],
    entry: RosterEntry,
    ctx: ComputeContext,
) -> BeaconStatus:
    """Last sighting converted to the participant's local date, plus staleness age."""
    last: datetime | None = None
    for sighting in sightings:
        if last is None or sighting.timestamp > last:
            last = sighting.timestamp
    if last is None:
        return BeaconStatus(entry.participant_id, None, None, never_sighted=True)
    zone = load_zone(entry.timezone)
    local_date = last.astimezone(zone).date()
    days_since = max(0, (ctx.as_of - local_date).days)
    return BeaconStatus(entry.participant_id, local_date, days_since, never_sighted=False)


def is_stale(status: BeaconStatus, config: StudyConfig) -> bool:
    """A beacon is stale strictly beyond the configured age, or if never sighted."""
    if status.never_sighted:
        return True
    assert status.days_since is not None
    return status.days_since > config.beacon_stale_days


@dataclass
class ComplianceDataset:
    """Everything the exporter and API need, computed in one deterministic pass."""

    as_of: date
    config: StudyConfig
    roster: list[RosterEntry]
    window_vectors: dict[str, dict[date, WindowScoreVector]]
    daily_wearable: dict[str, list[DailyComplianceRecord]]
    wearable_summaries: dict[str, ComplianceSummary]
    daily_survey: dict[str, list[SurveyComplianceRecord]]
    survey_summaries: dict[str, ComplianceSummary]
    beacon_statuses: dict[str, BeaconStatus]
    orphan_counts: dict[str, int]

    @property
    def active_roster(self) -> list[RosterEntry]:
        return [e for e in self.roster if e.status in ACTIVE_STATUSES]


def _epoch_of(ts: str, ordinal_cache: dict[str, int]) -> int:
    """Seconds since epoch for a canonical Zulu timestamp string."""
    day = ts[:10]
    ordinal = ordinal_cache.get(day)
    if ordinal is None:
        ordinal = date.fromisoformat(day).toordinal() - _EPOCH_ORDINAL
        ordinal_cache[day] = ordinal
    return ordinal * 86400 + int(ts[11:13]) * 3600 + int(ts[14:16]) * 60 + int(ts[17:19])


def _score_elapsed_days(
    epochs: list[int],
    days: list[date],
    zone: ZoneInfo,
) -> list[tuple[date, list[int]]]:
    """Walk sorted sample epochs across consecutive local days, marking windows."""
    out = []
    i, n = 0, len(epochs)
    for day in days:
        start_utc, end_utc = local_day_span(day, zone)
        e0 = int(start_utc.timestamp())
        e1 = int(end_utc.timestamp())
        scores = [0] * ((e1 - e0) // _WINDOW_SECONDS)
        while i < n and epochs[i] < e0:
            i += 1
        while i < n and epochs[i] < e1:
            scores[(epochs[i] - e0) // _WINDOW_SECONDS] = 1
            i += 1
        out.append((day, scores))
    return out


def compute_all(store: Store, ctx: ComputeContext) -> ComplianceDataset:
    """Compute the full compliance dataset for every active participant.

    Records whose participant is absent from the roster are counted as
    orphans and excluded. Half-hourly vectors are computed for every
    participant-day even though the tables render only daily and overall
    granularities.
    """
    roster = sorted(
        store.read_roster(ctx.config),
        key=lambda e: (e.team_id, e.participant_id),
    )
    known = {e.participant_id for e in roster}
    orphans = {kind.value: 0 for kind in (FileKind.HEART_RATE, FileKind.SURVEY, FileKind.BEACON)}

    hr_epochs: dict[str, list[int]] = {}
    ordinal_cache: dict[str, int] = {}
    for row in store.iter_rows(FileKind.HEART_RATE):
        pid = row[0]
        if pid not in known:
            orphans[FileKind.HEART_RATE.value] += 1
            continue
        hr_epochs.setdefault(pid, []).append(_epoch_of(row[1], ordinal_cache))

    surveys: dict[str, list[SurveySubmission]] = {}
    for submission in store.read_surveys():
        if submission.participant_id not in known:
            orphans[FileKind.SURVEY.value] += 1
            continue
        surveys.setdefault(submission.participant_id, []).append(submission)

    last_sightings: dict[str, BeaconSighting] = {}
    for sighting in store.read_beacons():
        if sighting.participant_id not in known:
            orphans[FileKind.BEACON.value] += 1
            continue
        current = last_sightings.get(sighting.participant_id)
        if current is None or sighting.timestamp > current.timestamp:
            last_sightings[sighting.participant_id] = sighting

    dataset = ComplianceDataset(
        as_of=ctx.as_of,
        config=ctx.config,
        roster=roster,
        window_vectors={},
        daily_wearable={},
        wearable_summaries={},
        daily_survey={},
        survey_summaries={},
        beacon_statuses={},
        orphan_counts=orphans,
    )

    for entry in roster:
        if entry.status not in ACTIVE_STATUSES:
            continue
        pid = entry.participant_id
        zone = load_zone(entry.timezone)
        days = elapsed_study_dates(entry, ctx.as_of, ctx.config)

        vectors: dict[date, WindowScoreVector] = {}
        daily: list[DailyComplianceRecord] = []
        for day, scores in _score_elapsed_days(hr_epochs.get(pid, []), days, zone):
            vector = WindowScoreVector(pid, day, tuple(scores))
            vectors[day] = vector
            daily.append(mark_provisional(daily_wearable_compliance(vector), ctx))
        dataset.window_vectors[pid] = vectors
        dataset.daily_wearable[pid] = daily
        dataset.wearable_summaries[pid] = overall_wearable_compliance(daily, entry, ctx)

        survey_records = daily_survey_compliance(surveys.get(pid, []), entry, ctx)
        dataset.daily_survey[pid] = survey_records
        dataset.survey_summaries[pid] = overall_survey_compliance(survey_records, entry, ctx)

        sighting = last_sightings.get(pid)
        dataset.beacon_statuses[pid] = beacon_status(
            [sighting] if sighting else [], entry, ctx
        )

    return dataset
