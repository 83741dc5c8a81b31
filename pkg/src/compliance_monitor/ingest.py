"""Parsers for the four raw input CSVs and the append-only record store.

Parsing is pure: each parser turns a byte stream into validated domain
records plus a line-accounted report. The store applies record-level
deduplication and per-file digest short-circuiting so that re-ingesting
the same bytes is a no-op.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Iterator

from filelock import FileLock

from .core import (
    BeaconSighting,
    FundingGroup,
    HeartRateSample,
    RosterEntry,
    StudyConfig,
    StudyStatus,
    SurveySubmission,
    format_utc_timestamp,
    parse_iso_date,
    parse_utc_timestamp,
    validate_participant_id,
    validate_team_id,
)

ROSTER_HEADER = ["team_id", "participant_id", "funding_group", "status", "start_date", "end_date", "timezone"]
HR_HEADER = ["participant_id", "timestamp_utc", "hr_bpm"]
SURVEY_HEADER = ["participant_id", "survey_date", "completed"]
BEACON_HEADER = ["participant_id", "beacon_id", "timestamp_utc"]

_TRUE_TOKENS = {"true", "1"}
_FALSE_TOKENS = {"false", "0"}


class ParseError(ValueError):
    """Hard, whole-file parse failure (bad encoding or unknown header)."""


class FileKind(str, Enum):
    ROSTER = "roster"
    HEART_RATE = "hr"
    SURVEY = "surveys"
    BEACON = "beacons"


@dataclass
class IngestReport:
    """Line accounting for one parsed or ingested file.

    accepted + rejected + duplicates always equals the number of data lines.
    """

    file_kind: FileKind
    records_accepted: int = 0
    records_rejected: int = 0
    duplicates_skipped: int = 0
    warnings: list[tuple[int, str]] = field(default_factory=list)

    def warn(self, line: int, message: str) -> None:
        self.warnings.append((line, message))


def _rows(data: bytes, expected_header: list[str]) -> csv.reader:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from exc
    if text.startswith("﻿"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"empty input, expected header {','.join(expected_header)}") from None
    if header != expected_header:
        raise ParseError(
            f"unexpected header {','.join(header)!r}, expected {','.join(expected_header)!r}"
        )
    return reader


def parse_roster(data: bytes, config: StudyConfig | None = None) -> tuple[list[RosterEntry], IngestReport]:
    """Parse the enrollment roster; duplicate participant ids are last-write-wins."""
    config = config or StudyConfig()
    report = IngestReport(FileKind.ROSTER)
    entries: dict[str, RosterEntry] = {}
    for lineno, row in enumerate(_rows(data, ROSTER_HEADER), start=2):
        if not row:
            continue
        if len(row) != len(ROSTER_HEADER):
            report.records_rejected += 1
            report.warn(lineno, f"expected {len(ROSTER_HEADER)} fields, got {len(row)}")
            continue
        team_s, pid_s, group_s, status_s, start_s, end_s, tz_s = row
        try:
            entry = _roster_entry(team_s, pid_s, group_s, status_s, start_s, end_s, tz_s, config)
        except ValueError as exc:
            report.records_rejected += 1
            report.warn(lineno, str(exc))
            continue
        if entry.participant_id in entries:
            report.duplicates_skipped += 1
            report.warn(lineno, f"duplicate participant_id {entry.participant_id}; last write wins")
        else:
            report.records_accepted += 1
        entries[entry.participant_id] = entry
    return list(entries.values()), report


def _roster_entry(
    team_s: str,
    pid_s: str,
    group_s: str,
    status_s: str,
    start_s: str,
    end_s: str,
    tz_s: str,
    config: StudyConfig,
) -> RosterEntry:
    try:
        group = FundingGroup(group_s.strip().upper())
    except ValueError:
        raise ValueError(f"unknown funding group {group_s!r}") from None
    try:
        status = StudyStatus(status_s.strip().lower())
    except ValueError:
        raise ValueError(f"unknown status {status_s!r}") from None
    start = parse_iso_date(start_s) if start_s else None
    end = parse_iso_date(end_s) if end_s else None
    if start and end:
        if end < start:
            raise ValueError(f"date order: end_date {end} before start_date {start}")
        expected_span = config.study_length_days - 1
        if (end - start).days != expected_span:
            raise ValueError(
                f"study span {start}..{end} is not {config.study_length_days} days"
            )
    return RosterEntry(
        participant_id=validate_participant_id(pid_s),
        team_id=validate_team_id(team_s),
        funding_group=group,
        status=status,
        start_date=start,
        end_date=end,
        timezone=tz_s,
    )


def _canonical_timestamp(text: str, date_ok: dict[str, bool]) -> str:
    """Normalize a UTC timestamp to its canonical Zulu string.

    Inputs already in canonical form are validated in place without
    constructing datetime objects; heart-rate files are large enough that
    this is the difference between seconds and minutes per ingest.
    """
    if (
        len(text) == 20
        and text.endswith("Z")
        and text[10] == "T"
        and text[11:13].isdigit()
        and text[14:16].isdigit()
        and text[17:19].isdigit()
        and text[13] == ":"
        and text[16] == ":"
    ):
        prefix = text[:10]
        valid = date_ok.get(prefix)
        if valid is None:
            try:
                date.fromisoformat(prefix)
                valid = True
            except ValueError:
                valid = False
            date_ok[prefix] = valid
        if valid and int(text[11:13]) < 24 and int(text[14:16]) < 60 and int(text[17:19]) < 60:
            return text
        raise ValueError(f"not a valid UTC timestamp: {text!r}")
    return format_utc_timestamp(parse_utc_timestamp(text))


def _parse_heart_rate_rows(
    data: bytes, config: StudyConfig
) -> tuple[list[list[str]], IngestReport]:
    """Validate heart-rate lines into canonical string rows (pid, ts, hr)."""
    lo, hi = config.hr_min_bpm, config.hr_max_bpm
    report = IngestReport(FileKind.HEART_RATE)
    rows: list[list[str]] = []
    seen: set[tuple[str, str]] = set()
    pid_ok: dict[str, bool] = {}
    date_ok: dict[str, bool] = {}
    for lineno, row in enumerate(_rows(data, HR_HEADER), start=2):
        if not row:
            continue
        if len(row) != 3:
            report.records_rejected += 1
            report.warn(lineno, f"expected 3 fields, got {len(row)}")
            continue
        pid, ts_s, hr_s = row
        try:
            valid_pid = pid_ok.get(pid)
            if valid_pid is None:
                try:
                    validate_participant_id(pid)
                    valid_pid = True
                except ValueError:
                    valid_pid = False
                pid_ok[pid] = valid_pid
            if not valid_pid:
                raise ValueError(f"not a valid participant_id: {pid!r}")
            ts = _canonical_timestamp(ts_s, date_ok)
            hr = int(hr_s)
        except ValueError as exc:
            report.records_rejected += 1
            report.warn(lineno, str(exc))
            continue
        if not lo <= hr <= hi:
            report.records_rejected += 1
            report.warn(lineno, f"hr_bpm {hr} outside [{lo}, {hi}]")
            continue
        key = (pid, ts)
        if key in seen:
            report.duplicates_skipped += 1
            continue
        seen.add(key)
        rows.append([pid, ts, str(hr)])
        report.records_accepted += 1
    return rows, report


def parse_heart_rate_log(
    data: bytes, config: StudyConfig | None = None
) -> tuple[list[HeartRateSample], IngestReport]:
    """Parse heart-rate samples, rejecting out-of-range readings and bad timestamps."""
    rows, report = _parse_heart_rate_rows(data, config or StudyConfig())
    samples = [
        HeartRateSample(participant_id=pid, timestamp=parse_utc_timestamp(ts), hr_bpm=int(hr))
        for pid, ts, hr in rows
    ]
    return samples, report


def parse_survey_log(data: bytes) -> tuple[list[SurveySubmission], IngestReport]:
    """Parse survey completions; weekend rows are rejected, duplicates OR-merge."""
    report = IngestReport(FileKind.SURVEY)
    merged: dict[tuple[str, str], SurveySubmission] = {}
    for lineno, row in enumerate(_rows(data, SURVEY_HEADER), start=2):
        if not row:
            continue
        if len(row) != 3:
            report.records_rejected += 1
            report.warn(lineno, f"expected 3 fields, got {len(row)}")
            continue
        pid, date_s, completed_s = row
        token = completed_s.strip().lower()
        try:
            validate_participant_id(pid)
            day = parse_iso_date(date_s)
            if token in _TRUE_TOKENS:
                completed = True
            elif token in _FALSE_TOKENS:
                completed = False
            else:
                raise ValueError(f"completed must be true/false/1/0, got {completed_s!r}")
        except ValueError as exc:
            report.records_rejected += 1
            report.warn(lineno, str(exc))
            continue
        if day.weekday() >= 5:
            report.records_rejected += 1
            report.warn(lineno, f"survey_date {day} falls on a weekend; surveys are weekday-only")
            continue
        key = (pid, date_s)
        if key in merged:
            report.duplicates_skipped += 1
            if completed and not merged[key].completed:
                merged[key] = SurveySubmission(pid, day, True)
        else:
            merged[key] = SurveySubmission(pid, day, completed)
            report.records_accepted += 1
    return list(merged.values()), report


def parse_beacon_log(data: bytes) -> tuple[list[BeaconSighting], IngestReport]:
    """Parse beacon sightings, deduplicating exact repeats."""
    report = IngestReport(FileKind.BEACON)
    sightings: list[BeaconSighting] = []
    seen: set[tuple[str, str, datetime]] = set()
    for lineno, row in enumerate(_rows(data, BEACON_HEADER), start=2):
        if not row:
            continue
        if len(row) != 3:
            report.records_rejected += 1
            report.warn(lineno, f"expected 3 fields, got {len(row)}")
            continue
        pid, beacon_id, ts_s = row
        try:
            validate_participant_id(pid)
            if not beacon_id:
                raise ValueError("beacon_id must be non-empty")
            ts = parse_utc_timestamp(ts_s)
        except ValueError as exc:
            report.records_rejected += 1
            report.warn(lineno, str(exc))
            continue
        key = (pid, beacon_id, ts)
        if key in seen:
            report.duplicates_skipped += 1
            continue
        seen.add(key)
        sightings.append(BeaconSighting(participant_id=pid, beacon_id=beacon_id, timestamp=ts))
        report.records_accepted += 1
    return sightings, report


_STORE_FILES = {
    FileKind.ROSTER: "roster.csv",
    FileKind.HEART_RATE: "hr.csv",
    FileKind.SURVEY: "surveys.csv",
    FileKind.BEACON: "beacons.csv",
}

_STORE_HEADERS = {
    FileKind.ROSTER: ROSTER_HEADER,
    FileKind.HEART_RATE: HR_HEADER,
    FileKind.SURVEY: SURVEY_HEADER,
    FileKind.BEACON: BEACON_HEADER,
}

MANIFEST_NAME = "manifest.txt"
LOCK_NAME = ".lock"


class Store:
    """Directory of canonical, sorted record CSVs plus an ingest manifest.

    At most one writer mutates a store at a time (advisory lock file);
    readers are safe between ingests.
    """

    def __init__(self, root: str | os.PathLike[str], create: bool = True):
        self.root = Path(root)
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
        elif not self.root.is_dir():
            raise FileNotFoundError(f"store directory {self.root} does not exist")

    # -- paths ------------------------------------------------------------

    def path_for(self, kind: FileKind) -> Path:
        return self.root / _STORE_FILES[kind]

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def lock(self) -> FileLock:
        return FileLock(str(self.root / LOCK_NAME))

    # -- reading ----------------------------------------------------------

    def iter_rows(self, kind: FileKind) -> Iterator[list[str]]:
        """Stream canonical rows without the header, for bulk consumers."""
        path = self.path_for(kind)
        if not path.exists():
            return
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            next(reader, None)
            for row in reader:
                if row:
                    yield row

    def _read_rows(self, kind: FileKind) -> list[list[str]]:
        return list(self.iter_rows(kind))

    def read_roster(self, config: StudyConfig | None = None) -> list[RosterEntry]:
        config = config or StudyConfig()
        entries = []
        for row in self._read_rows(FileKind.ROSTER):
            entries.append(_roster_entry(*row, config=config))
        return entries

    def read_heart_rate(self) -> list[HeartRateSample]:
        return [
            HeartRateSample(pid, parse_utc_timestamp(ts), int(hr))
            for pid, ts, hr in self._read_rows(FileKind.HEART_RATE)
        ]

    def read_surveys(self) -> list[SurveySubmission]:
        return [
            SurveySubmission(pid, parse_iso_date(day), completed == "true")
            for pid, day, completed in self._read_rows(FileKind.SURVEY)
        ]

    def read_beacons(self) -> list[BeaconSighting]:
        return [
            BeaconSighting(pid, beacon, parse_utc_timestamp(ts))
            for pid, beacon, ts in self._read_rows(FileKind.BEACON)
        ]

    def ingested_digests(self) -> set[str]:
        if not self.manifest_path.exists():
            return set()
        digests = set()
        for line in self.manifest_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                digests.add(line.split(maxsplit=1)[0])
        return digests

    # -- writing ----------------------------------------------------------

    def _write_rows(self, kind: FileKind, rows: list[list[str]]) -> None:
        path = self.path_for(kind)
        tmp = path.with_name(path.name + ".tmp")
        try:
            with tmp.open("w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(_STORE_HEADERS[kind])
                writer.writerows(rows)
            os.replace(tmp, path)
        finally:
            tmp.unlink(missing_ok=True)


def _canonical_roster_rows(entries: dict[str, RosterEntry]) -> list[list[str]]:
    ordered = sorted(entries.values(), key=lambda e: (e.team_id, e.participant_id))
    return [
        [
            e.team_id,
            e.participant_id,
            e.funding_group.value,
            e.status.value,
            e.start_date.isoformat() if e.start_date else "",
            e.end_date.isoformat() if e.end_date else "",
            e.timezone,
        ]
        for e in ordered
    ]


def ingest(store: Store, file_kind: FileKind, data: bytes, source_name: str = "-") -> IngestReport:
    """Land one raw file in the store: parse, dedup, and merge atomically.

    Hard parse errors leave the store byte-identical. Re-ingesting a file
    whose digest is already recorded reports every record as a duplicate.
    """
    config = StudyConfig()
    if file_kind == FileKind.ROSTER:
        records, report = parse_roster(data, config)
        merge = _merge_roster
    elif file_kind == FileKind.SURVEY:
        records, report = parse_survey_log(data)
        merge = _merge_surveys
    elif file_kind == FileKind.HEART_RATE:
        records, report = _parse_heart_rate_rows(data, config)
        merge = _merge_hr_rows
    else:
        records, report = parse_beacon_log(data)
        merge = _merge_beacons
    digest = hashlib.sha256(data).hexdigest()

    with store.lock():
        if digest in store.ingested_digests():
            # Byte-identical file seen before: the merge would be a no-op.
            report.duplicates_skipped += report.records_accepted
            report.records_accepted = 0
            return report
        merge(store, records, report)
        with store.manifest_path.open("a", encoding="utf-8") as handle:
            handle.write(f"{digest}  {source_name}\n")
    return report


def _merge_roster(store: Store, records: list[RosterEntry], report: IngestReport) -> bool:
    existing = {e.participant_id: e for e in store.read_roster()}
    changed = False
    for entry in records:
        current = existing.get(entry.participant_id)
        if current == entry:
            report.records_accepted -= 1
            report.duplicates_skipped += 1
            continue
        if current is not None:
            report.warn(0, f"roster entry {entry.participant_id} superseded stored values")
        existing[entry.participant_id] = entry
        changed = True
    if changed:
        store._write_rows(FileKind.ROSTER, _canonical_roster_rows(existing))
    return changed


def _merge_surveys(store: Store, records: list[SurveySubmission], report: IngestReport) -> bool:
    existing: dict[tuple[str, str], bool] = {
        (pid, day): completed == "true"
        for pid, day, completed in store._read_rows(FileKind.SURVEY)
    }
    changed = False
    for sub in records:
        key = (sub.participant_id, sub.survey_date.isoformat())
        if key in existing:
            report.records_accepted -= 1
            if sub.completed and not existing[key]:
                # OR-merge: a completion anywhere wins and counts as an update.
                existing[key] = True
                report.records_accepted += 1
                changed = True
            else:
                report.duplicates_skipped += 1
            continue
        existing[key] = sub.completed
        changed = True
    if changed:
        rows = [
            [pid, day, "true" if completed else "false"]
            for (pid, day), completed in sorted(existing.items())
        ]
        store._write_rows(FileKind.SURVEY, rows)
    return changed


def _merge_hr_rows(store: Store, rows: list[list[str]], report: IngestReport) -> bool:
    existing_rows = store._read_rows(FileKind.HEART_RATE)
    if existing_rows:
        keys = {(row[0], row[1]) for row in existing_rows}
        new_rows = []
        for row in rows:
            if (row[0], row[1]) in keys:
                report.records_accepted -= 1
                report.duplicates_skipped += 1
            else:
                new_rows.append(row)
    else:
        new_rows = rows
    if not new_rows:
        return False
    merged = existing_rows + new_rows
    merged.sort()
    store._write_rows(FileKind.HEART_RATE, merged)
    return True


def _merge_beacons(store: Store, records: list[BeaconSighting], report: IngestReport) -> bool:
    existing_rows = store._read_rows(FileKind.BEACON)
    keys = {(row[0], row[1], row[2]) for row in existing_rows}
    new_rows = []
    for sighting in records:
        row = [sighting.participant_id, sighting.beacon_id, format_utc_timestamp(sighting.timestamp)]
        if tuple(row) in keys:
            report.records_accepted -= 1
            report.duplicates_skipped += 1
        else:
            keys.add(tuple(row))
            new_rows.append(row)
    if not new_rows:
        return False
    merged = existing_rows + new_rows
    merged.sort()
    store._write_rows(FileKind.BEACON, merged)
    return True
