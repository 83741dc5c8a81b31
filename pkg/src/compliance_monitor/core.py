"""Domain types, identifier rules, and calendar/window arithmetic.

Everything here is an immutable value or a pure function; the rest of the
package depends on this module and on nothing else inside the package.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from enum import Enum
from fractions import Fraction
from zoneinfo import ZoneInfo

WINDOW_MINUTES = 30
_WINDOW = timedelta(minutes=WINDOW_MINUTES)
_UTC = timezone.utc

# Opaque identifier tokens: uppercase alphanumerics and hyphens, 3-32 chars,
# starting and ending with an alphanumeric. Assigned codes only, never PII.
_ID_RE = re.compile(r"^[A-Z0-9][A-Z0-9-]{1,30}[A-Z0-9]$")


class ConfigError(ValueError):
    """Raised for invalid configuration values, including bad timezone names."""


def validate_participant_id(value: str) -> str:
    """Validate a participant identifier token and return it unchanged."""
    if not isinstance(value, str) or not _ID_RE.fullmatch(value):
        raise ValueError(f"invalid participant id: {value!r}")
    return value


def validate_team_id(value: str) -> str:
    """Validate a team identifier token and return it unchanged."""
    if not isinstance(value, str) or not _ID_RE.fullmatch(value):
        raise ValueError(f"invalid team id: {value!r}")
    return value


class FundingGroup(str, Enum):
    GROUP_A = "A"
    GROUP_B = "B"

    @property
    def label(self) -> str:
        return f"Group {self.value}"


class StudyStatus(str, Enum):
    YET_TO_CONSENT = "yet_to_consent"
    YET_TO_START = "yet_to_start"
    STARTED = "started"
    COMPLETED = "completed"
    WITHDRAWN = "withdrawn"


#: Statuses whose participants appear in compliance tables.
ACTIVE_STATUSES = frozenset({StudyStatus.STARTED, StudyStatus.COMPLETED})


@dataclass(frozen=True)
class StudyConfig:
    """Knobs that pin the study's arithmetic; all values strictly positive."""

    study_length_days: int = 70
    windows_per_day_nominal: int = 48
    compliance_threshold_pct: float = 80.0
    beacon_stale_days: int = 3
    sync_lag_days: int = 3
    hr_min_bpm: int = 20
    hr_max_bpm: int = 250

    def __post_init__(self) -> None:
        for name in (
            "study_length_days",
            "windows_per_day_nominal",
            "beacon_stale_days",
            "sync_lag_days",
            "hr_min_bpm",
            "hr_max_bpm",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        if not 0 < self.compliance_threshold_pct <= 100:
            raise ConfigError("compliance_threshold_pct must be in (0, 100]")
        if self.hr_min_bpm > self.hr_max_bpm:
            raise ConfigError("hr_min_bpm must not exceed hr_max_bpm")

    @property
    def threshold(self) -> Fraction:
        """Exact rational form of the compliance threshold."""
        return Fraction(str(self.compliance_threshold_pct))


@dataclass(frozen=True)
class RosterEntry:
    """One participant's enrollment row: identity, team, dates, status, zone."""

    participant_id: str
    team_id: str
    funding_group: FundingGroup
    status: StudyStatus
    start_date: date | None
    end_date: date | None
    timezone: str

    def __post_init__(self) -> None:
        validate_participant_id(self.participant_id)
        validate_team_id(self.team_id)
        load_zone(self.timezone)
        if self.start_date and self.end_date and self.start_date > self.end_date:
            raise ValueError(
                f"{self.participant_id}: start_date {self.start_date} after "
                f"end_date {self.end_date}"
            )
        if self.status in ACTIVE_STATUSES and self.start_date is None:
            raise ValueError(
                f"{self.participant_id}: status {self.status.value} requires a start date"
            )


@dataclass(frozen=True, slots=True)
class HeartRateSample:
    """One timestamped heart-rate reading from a participant's wearable."""

    participant_id: str
    timestamp: datetime  # aware, UTC
    hr_bpm: int


@dataclass(frozen=True, slots=True)
class SurveySubmission:
    """A participant's completion record for one weekday's survey."""

    participant_id: str
    survey_date: date
    completed: bool

    def __post_init__(self) -> None:
        if self.survey_date.weekday() >= 5:
            raise ValueError(f"survey_date {self.survey_date} falls on a weekend")


@dataclass(frozen=True, slots=True)
class BeaconSighting:
    """One sighting of a participant's workspace beacon by their phone."""

    participant_id: str
    beacon_id: str
    timestamp: datetime  # aware, UTC

    def __post_init__(self) -> None:
        if not self.beacon_id:
            raise ValueError("beacon_id must be non-empty")


@dataclass(frozen=True)
class DayWindows:
    """The ordered half-hour partition of one local calendar day.

    Window boundaries are aware datetimes in the participant's zone; each
    interval is half-open. Ordinary days hold 48 windows, DST-transition
    days the actual wall-clock count (46 or 50 in one-hour-shift zones).
    """

    date: date
    windows: tuple[tuple[datetime, datetime], ...]

    @property
    def count(self) -> int:
        return len(self.windows)


@dataclass(frozen=True, slots=True)
class DailyComplianceRecord:
    """One participant-day's wearable compliance result."""

    participant_id: str
    date: date
    windows_present: int
    windows_total: int
    compliance_pct: Fraction
    provisional: bool = False

    def __post_init__(self) -> None:
        if self.windows_total <= 0:
            raise ValueError("windows_total must be positive")
        if not 0 <= self.windows_present <= self.windows_total:
            raise ValueError(
                f"windows_present {self.windows_present} outside "
                f"[0, {self.windows_total}]"
            )
        expected = Fraction(self.windows_present, self.windows_total) * 100
        if self.compliance_pct != expected:
            raise ValueError("compliance_pct must equal windows_present/windows_total*100")


@dataclass(frozen=True, slots=True)
class SurveyComplianceRecord:
    """One participant-weekday's survey compliance: exactly 0% or 100%."""

    participant_id: str
    date: date
    compliance_pct: Fraction
    provisional: bool = False

    def __post_init__(self) -> None:
        if self.compliance_pct not in (Fraction(0), Fraction(100)):
            raise ValueError("survey compliance_pct must be 0 or 100")


@dataclass(frozen=True, slots=True)
class ComplianceSummary:
    """Per-participant overall compliance: mean of daily percentages."""

    participant_id: str
    days_elapsed: int
    mean_daily_pct: Fraction | None
    below_threshold: bool

    def __post_init__(self) -> None:
        if (self.mean_daily_pct is None) != (self.days_elapsed == 0):
            raise ValueError("mean_daily_pct must be absent exactly when no days elapsed")


@dataclass(frozen=True, slots=True)
class BeaconStatus:
    """Last-sighting state of a participant's beacon at the report date."""

    participant_id: str
    last_sighted_date: date | None
    days_since: int | None
    never_sighted: bool

    def __post_init__(self) -> None:
        absent = self.last_sighted_date is None
        if self.never_sighted != absent or (self.days_since is None) != absent:
            raise ValueError("never_sighted must match absence of sighting fields")
        if self.days_since is not None and self.days_since < 0:
            raise ValueError("days_since must be non-negative")


def load_zone(name: str) -> ZoneInfo:
    """Resolve an IANA timezone name, raising ConfigError on bad input."""
    try:
        return ZoneInfo(name)
    except Exception as exc:
        raise ConfigError(f"invalid timezone name: {name!r}") from exc


def local_day_span(day: date, zone: ZoneInfo) -> tuple[datetime, datetime]:
    """UTC instants bounding the local calendar day [midnight, next midnight)."""
    start = datetime.combine(day, time(0), tzinfo=zone).astimezone(_UTC)
    end = datetime.combine(day + timedelta(days=1), time(0), tzinfo=zone).astimezone(_UTC)
    return start, end


def day_windows(day: date, tz_name: str) -> DayWindows:
    """Partition one local day into ordered half-open half-hour windows.

    The count is the actual wall-clock window count: 48 ordinarily, fewer on
    spring-forward days and more on fall-back days, so scores always have a
    denominator matching real elapsed time.
    """
    zone = load_zone(tz_name)
    start_utc, end_utc = local_day_span(day, zone)
    span = end_utc - start_utc
    if span % _WINDOW:
        raise ConfigError(f"day {day} in {tz_name} is not divisible into half-hours")
    count = span // _WINDOW
    windows = tuple(
        (
            (start_utc + i * _WINDOW).astimezone(zone),
            (start_utc + (i + 1) * _WINDOW).astimezone(zone),
        )
        for i in range(count)
    )
    return DayWindows(date=day, windows=windows)


def days_completed(entry: RosterEntry, as_of: date, config: StudyConfig) -> int:
    """Days of the study completed by as_of, counting the start date as day 1.

    Clamped to [0, study_length_days]; a date before the start yields 0.
    """
    if entry.status not in ACTIVE_STATUSES:
        raise ValueError(f"{entry.participant_id}: days_completed requires an active status")
    assert entry.start_date is not None
    raw = (as_of - entry.start_date).days + 1
    return max(0, min(raw, config.study_length_days))


def study_end_date(entry: RosterEntry, config: StudyConfig) -> date | None:
    """The entry's end date, derived from the start when not stored."""
    if entry.end_date is not None:
        return entry.end_date
    if entry.start_date is not None:
        return entry.start_date + timedelta(days=config.study_length_days - 1)
    return None


def elapsed_study_dates(entry: RosterEntry, as_of: date, config: StudyConfig) -> list[date]:
    """In-study dates [start_date .. min(as_of, end_date)], inclusive."""
    if entry.status not in ACTIVE_STATUSES:
        raise ValueError(f"{entry.participant_id}: elapsed dates require an active status")
    start = entry.start_date
    assert start is not None
    end = study_end_date(entry, config)
    assert end is not None
    last = min(as_of, end)
    if last < start:
        return []
    return [start + timedelta(days=i) for i in range((last - start).days + 1)]


def render_pct(value: Fraction) -> str:
    """Render a percentage with exactly one decimal, half away from zero."""
    sign = "-" if value < 0 else ""
    scaled = abs(value) * 10
    whole, rem = divmod(scaled.numerator, scaled.denominator)
    if 2 * rem >= scaled.denominator:
        whole += 1
    return f"{sign}{whole // 10}.{whole % 10}"


def parse_iso_date(text: str) -> date:
    """Parse a strict ISO-8601 calendar date."""
    return date.fromisoformat(text)


def parse_utc_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 instant into an aware UTC datetime.

    A trailing 'Z' is accepted; a naive timestamp is taken to be UTC already.
    A bare date does not parse; an instant needs a time component.
    """
    if len(text) <= 10:
        raise ValueError(f"timestamp missing time component: {text!r}")
    parsed = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if parsed.tzinfo is None:
        return parsed.replace(tzinfo=_UTC)
    return parsed.astimezone(_UTC)


def format_utc_timestamp(value: datetime) -> str:
    """Render an aware datetime as a second-resolution Zulu ISO string."""
    return value.astimezone(_UTC).isoformat()[:19] + "Z"
