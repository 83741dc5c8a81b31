"""Deterministic CSV bundle writer and reader.

Seven compliance tables plus two context files and a stamp. All cell
values are serialized strings; numeric ordering is recovered by typed
readers. Bundles are byte-deterministic for a given (dataset, as_of) so
re-exports can be compared by digest.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from fractions import Fraction
from pathlib import Path

from filelock import FileLock

from .core import (
    ACTIVE_STATUSES,
    ComplianceSummary,
    RosterEntry,
    days_completed,
    render_pct,
    study_end_date,
)
from .engine import ComplianceDataset, ComputeContext

STAMP_NAME = "generated_at.txt"
TIMELINE_NAME = "timeline.csv"
OVERVIEW_NAME = "enrollment_overview.csv"

_RECENT_WEEK_DAYS = 7


class TableKind(str, Enum):
    WEARABLE_SUMMARY = "wearable_summary"
    WEARABLE_RECENT_WEEK = "wearable_recent_week"
    WEARABLE_ALL_PREVIOUS = "wearable_all_previous"
    SURVEY_SUMMARY = "survey_summary"
    SURVEY_RECENT_WEEK = "survey_recent_week"
    SURVEY_ALL_PREVIOUS = "survey_all_previous"
    BEACON_LAST_SIGHTED = "beacon_last_sighted"

    @property
    def file_name(self) -> str:
        return f"{self.value}.csv"


@dataclass(frozen=True)
class Table:
    """A rectangular table: header plus string-valued rows."""

    kind: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row width {len(row)} != {len(self.columns)} columns")


@dataclass(frozen=True)
class ExportBundle:
    directory: Path
    generated_at: date
    files: tuple[str, ...]


class BundleError(Exception):
    """A bundle directory is missing, incomplete, or unreadable."""


def _bool_cell(value: bool) -> str:
    return "true" if value else "false"


def _mean_cells(summary: ComplianceSummary) -> tuple[str, str]:
    """Mean and below-threshold cells; both empty before any day has elapsed."""
    if summary.mean_daily_pct is None:
        return "", ""
    return render_pct(summary.mean_daily_pct), _bool_cell(summary.below_threshold)


def recent_week_dates(as_of: date) -> list[date]:
    """The seven calendar dates ending at as_of, ascending."""
    return [as_of - timedelta(days=offset) for offset in range(_RECENT_WEEK_DAYS - 1, -1, -1)]


def _active_sorted(dataset: ComplianceDataset) -> list[RosterEntry]:
    return sorted(dataset.active_roster, key=lambda e: (e.team_id, e.participant_id))


def _summary_table(dataset: ComplianceDataset, kind: TableKind) -> Table:
    summaries = (
        dataset.wearable_summaries
        if kind is TableKind.WEARABLE_SUMMARY
        else dataset.survey_summaries
    )
    rows = []
    for entry in _active_sorted(dataset):
        summary = summaries[entry.participant_id]
        mean_cell, below_cell = _mean_cells(summary)
        rows.append(
            (
                entry.participant_id,
                entry.team_id,
                entry.funding_group.value,
                str(summary.days_elapsed),
                mean_cell,
                below_cell,
            )
        )
    columns = ("participant_id", "team_id", "funding_group", "days_elapsed", "mean_daily_pct", "below_threshold")
    return Table(kind.value, columns, tuple(rows))


def _recent_week_table(dataset: ComplianceDataset, kind: TableKind) -> Table:
    daily = (
        dataset.daily_wearable
        if kind is TableKind.WEARABLE_RECENT_WEEK
        else dataset.daily_survey
    )
    dates = recent_week_dates(dataset.as_of)
    rows = []
    for entry in _active_sorted(dataset):
        by_date = {record.date: record for record in daily[entry.participant_id]}
        cells = []
        provisional_from = ""
        for day in dates:
            record = by_date.get(day)
            if record is None:
                cells.append("")
                continue
            cells.append(render_pct(record.compliance_pct))
            if record.provisional and not provisional_from:
                provisional_from = day.isoformat()
        rows.append((entry.participant_id, entry.team_id, *cells, provisional_from))
    columns = ("participant_id", "team_id", *(d.isoformat() for d in dates), "provisional_from")
    return Table(kind.value, columns, tuple(rows))


def _wearable_all_previous_table(dataset: ComplianceDataset) -> Table:
    cutoff = dataset.as_of - timedelta(days=_RECENT_WEEK_DAYS - 1)
    rows = []
    for entry in _active_sorted(dataset):
        for record in dataset.daily_wearable[entry.participant_id]:
            if record.date >= cutoff:
                continue
            rows.append(
                (
                    record.participant_id,
                    record.date.isoformat(),
                    str(record.windows_present),
                    str(record.windows_total),
                    render_pct(record.compliance_pct),
                )
            )
    columns = ("participant_id", "date", "windows_present", "windows_total", "compliance_pct")
    return Table(TableKind.WEARABLE_ALL_PREVIOUS.value, columns, tuple(rows))


def _survey_all_previous_table(dataset: ComplianceDataset) -> Table:
    cutoff = dataset.as_of - timedelta(days=_RECENT_WEEK_DAYS - 1)
    rows = []
    for entry in _active_sorted(dataset):
        for record in dataset.daily_survey[entry.participant_id]:
            if record.date >= cutoff:
                continue
            rows.append(
                (
                    record.participant_id,
                    record.date.isoformat(),
                    render_pct(record.compliance_pct),
                )
            )
    columns = ("participant_id", "date", "compliance_pct")
    return Table(TableKind.SURVEY_ALL_PREVIOUS.value, columns, tuple(rows))


def _beacon_table(dataset: ComplianceDataset) -> Table:
    rows = []
    for entry in _active_sorted(dataset):
        status = dataset.beacon_statuses[entry.participant_id]
        if status.never_sighted:
            last_cell, since_cell = "", ""
        else:
            assert status.last_sighted_date is not None and status.days_since is not None
            last_cell = status.last_sighted_date.isoformat()
            since_cell = str(status.days_since)
        rows.append(
            (
                entry.participant_id,
                entry.team_id,
                last_cell,
                since_cell,
                _bool_cell(status.never_sighted),
            )
        )
    columns = ("participant_id", "team_id", "last_sighted_date", "days_since", "never_sighted")
    return Table(TableKind.BEACON_LAST_SIGHTED.value, columns, tuple(rows))


def build_table(
    dataset: ComplianceDataset,
    kind: TableKind,
    ctx: ComputeContext | None = None,
) -> Table:
    """Assemble one of the seven compliance tables from the dataset."""
    if ctx is not None and ctx.as_of != dataset.as_of:
        raise ValueError("context as_of differs from dataset as_of")
    if kind in (TableKind.WEARABLE_SUMMARY, TableKind.SURVEY_SUMMARY):
        return _summary_table(dataset, kind)
    if kind in (TableKind.WEARABLE_RECENT_WEEK, TableKind.SURVEY_RECENT_WEEK):
        return _recent_week_table(dataset, kind)
    if kind is TableKind.WEARABLE_ALL_PREVIOUS:
        return _wearable_all_previous_table(dataset)
    if kind is TableKind.SURVEY_ALL_PREVIOUS:
        return _survey_all_previous_table(dataset)
    if kind is TableKind.BEACON_LAST_SIGHTED:
        return _beacon_table(dataset)
    raise ValueError(f"unknown table kind: {kind!r}")


def build_timeline(
    roster: list[RosterEntry],
    ctx: ComputeContext,
) -> Table:
    """Per-participant study timelines with day-1-based progress.

    Participants who are not actively collecting data show zero progress;
    their elapsed participation is not derivable from the roster alone.
    """
    config = ctx.config
    rows = []
    for entry in sorted(roster, key=lambda e: (e.team_id, e.participant_id)):
        if entry.status in ACTIVE_STATUSES and entry.start_date is not None:
            completed = days_completed(entry, ctx.as_of, config)
            start_cell = entry.start_date.isoformat()
            end_cell = study_end_date(entry, config).isoformat()
        else:
            completed = 0
            start_cell = entry.start_date.isoformat() if entry.start_date else ""
            end_cell = entry.end_date.isoformat() if entry.end_date else ""
        progress = Fraction(completed * 100, config.study_length_days)
        rows.append(
            (
                entry.participant_id,
                entry.team_id,
                entry.funding_group.value,
                start_cell,
                end_cell,
                str(completed),
                render_pct(progress),
            )
        )
    columns = (
        "participant_id",
        "team_id",
        "funding_group",
        "start_date",
        "end_date",
        "days_completed",
        "pct_progress",
    )
    return Table("timeline", columns, tuple(rows))


def build_enrollment_overview(roster: list[RosterEntry]) -> Table:
    """Roster projection for the dot-array view: one row per participant."""
    rows = [
        (
            entry.funding_group.value,
            entry.team_id,
            entry.participant_id,
            entry.status.value,
        )
        for entry in sorted(
            roster, key=lambda e: (e.funding_group.value, e.team_id, e.participant_id)
        )
    ]
    columns = ("funding_group", "team_id", "participant_id", "status")
    return Table("enrollment_overview", columns, tuple(rows))


def _write_csv(path: Path, table: Table) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(table.columns)
        writer.writerows(table.rows)


def export(dataset: ComplianceDataset, ctx: ComputeContext, out_dir: str | os.PathLike[str]) -> ExportBundle:
    """Write the full bundle atomically: temp files first, renames second,
    stamp last. A bundle without a stamp is treated as absent by readers,
    so a failure mid-write never exposes a partial bundle as current.
    """
    if ctx.as_of != dataset.as_of:
        raise ValueError("context as_of differs from dataset as_of")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    tables = [build_table(dataset, kind) for kind in TableKind]
    tables.append(build_timeline(dataset.roster, ctx))
    tables.append(build_enrollment_overview(dataset.roster))

    lock = FileLock(str(out) + ".lock")
    with lock:
        staged: list[tuple[Path, Path]] = []
        try:
            for table in tables:
                final = out / f"{table.kind}.csv"
                tmp = final.with_name(final.name + ".tmp")
                _write_csv(tmp, table)
                staged.append((tmp, final))
            stamp_final = out / STAMP_NAME
            stamp_tmp = stamp_final.with_name(stamp_final.name + ".tmp")
            stamp_tmp.write_text(dataset.as_of.isoformat() + "\n", encoding="utf-8")
            staged.append((stamp_tmp, stamp_final))
        except BaseException:
            for tmp, _ in staged:
                tmp.unlink(missing_ok=True)
            raise
        for tmp, final in staged:
            os.replace(tmp, final)

    return ExportBundle(
        directory=out,
        generated_at=dataset.as_of,
        files=tuple(final.name for _, final in staged),
    )


def load_table(bundle_dir: str | os.PathLike[str], file_name: str) -> Table:
    path = Path(bundle_dir) / file_name
    if not path.exists():
        raise BundleError(f"bundle file missing: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise BundleError(f"bundle file empty: {path}")
        rows = tuple(tuple(row) for row in reader if row)
    return Table(path.stem, tuple(header), rows)


def load_stamp(bundle_dir: str | os.PathLike[str]) -> date:
    path = Path(bundle_dir) / STAMP_NAME
    if not path.exists():
        raise BundleError(f"bundle stamp missing: {path}")
    text = path.read_text(encoding="utf-8").strip()
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise BundleError(f"bad bundle stamp {text!r}") from exc


@dataclass(frozen=True)
class LoadedBundle:
    """An in-memory snapshot of one exported bundle."""

    generated_at: date
    tables: dict[str, Table]
    timeline: Table
    overview: Table


def load_bundle(bundle_dir: str | os.PathLike[str]) -> LoadedBundle:
    """Read a complete bundle; raises BundleError if any piece is missing."""
    generated_at = load_stamp(bundle_dir)
    tables = {kind.value: load_table(bundle_dir, kind.file_name) for kind in TableKind}
    timeline = load_table(bundle_dir, TIMELINE_NAME)
    overview = load_table(bundle_dir, OVERVIEW_NAME)
    return LoadedBundle(generated_at, tables, timeline, overview)
