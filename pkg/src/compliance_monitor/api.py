"""HTTP service over an exported bundle.

Read-only JSON endpoints plus static dashboard hosting. The bundle is
reloaded between requests whenever its stamp file changes, so a fresh
export becomes visible without a restart. Every /api/* route except
/api/health requires a bearer token.
"""

from __future__ import annotations

import hmac
import os
import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from .core import ConfigError
from .export import (
    BundleError,
    LoadedBundle,
    STAMP_NAME,
    Table,
    TableKind,
    load_bundle,
)

TOKEN_ENV_VAR = "COMPLIANCE_API_TOKEN"

COMPLIANCE_BIN_EDGES = (50.0, 65.0, 80.0, 90.0)
STALENESS_BIN_EDGES = (1, 3, 6)
NEVER_SIGHTED_BIN = 4

_PLACEHOLDER_PAGE = """<!doctype html>
<meta charset="utf-8">
<title>Compliance Monitor</title>
<p>API is running. Dashboard assets are not installed; use the JSON
endpoints under <code>/api/</code>.</p>
"""


@dataclass(frozen=True)
class ServiceConfig:
    """Runtime settings for one service instance."""

    bundle_dir: Path
    auth_token: str
    host: str = "127.0.0.1"
    port: int = 8000
    static_dir: Path | None = None
    compliance_bin_edges: tuple[float, ...] = COMPLIANCE_BIN_EDGES
    staleness_bin_edges: tuple[int, ...] = STALENESS_BIN_EDGES

    def __post_init__(self) -> None:
        if not self.auth_token:
            raise ConfigError("auth token must be non-empty")
        if list(self.compliance_bin_edges) != sorted(self.compliance_bin_edges):
            raise ConfigError("compliance bin edges must be ascending")
        if list(self.staleness_bin_edges) != sorted(self.staleness_bin_edges):
            raise ConfigError("staleness bin edges must be ascending")


def config_from_env(bundle_dir: str | os.PathLike[str], **overrides) -> ServiceConfig:
    token = os.environ.get(TOKEN_ENV_VAR, "")
    if not token:
        raise ConfigError(f"set {TOKEN_ENV_VAR} to a non-empty token")
    return ServiceConfig(bundle_dir=Path(bundle_dir), auth_token=token, **overrides)


def compliance_bin(value: float, edges: tuple[float, ...] = COMPLIANCE_BIN_EDGES) -> int:
    """Monotone bin index over [0, 100]; 0 is the worst band."""
    return bisect_right(edges, value)


def staleness_bin(days_since: int, edges: tuple[int, ...] = STALENESS_BIN_EDGES) -> int:
    """Monotone bin index over days since last sighting; edges are band maxima."""
    return bisect_left(edges, days_since)


# Column types drive both server-side sorting and the client comparator.
_NUMERIC_COLUMNS = {
    "days_elapsed",
    "mean_daily_pct",
    "windows_present",
    "windows_total",
    "compliance_pct",
    "days_since",
    "days_completed",
    "pct_progress",
}


def column_type(table_kind: str, name: str) -> str:
    if name in _NUMERIC_COLUMNS:
        return "number"
    if table_kind.endswith("recent_week") and len(name) == 10 and name[4] == "-":
        return "number"
    return "text"


class BundleCache:
    """Per-request bundle snapshot keyed on the stamp file.

    The stamp is written last during export, so a changed stamp signature
    means a complete new bundle. After loading, the signature is checked
    again; if it moved mid-read the load is retried so a half-swapped
    bundle is never served.
    """

    _ATTEMPTS = 5

    def __init__(self, bundle_dir: Path):
        self._dir = bundle_dir
        self._lock = threading.Lock()
        self._bundle: LoadedBundle | None = None
        self._signature: tuple[int, int, str] | None = None

    def _stamp_signature(self) -> tuple[int, int, str] | None:
        path = self._dir / STAMP_NAME
        try:
            stat = path.stat()
            text = path.read_text(encoding="utf-8")
        except OSError:
            return None
        return (stat.st_mtime_ns, stat.st_size, text)

    def current(self) -> LoadedBundle | None:
        with self._lock:
            for _ in range(self._ATTEMPTS):
                signature = self._stamp_signature()
                if signature is None:
                    return None
                if signature == self._signature and self._bundle is not None:
                    return self._bundle
                try:
                    bundle = load_bundle(self._dir)
                except BundleError:
                    return None
                if self._stamp_signature() == signature:
                    self._bundle = bundle
                    self._signature = signature
                    return bundle
            return self._bundle


def _pid_maps(overview: Table) -> tuple[dict[str, str], dict[str, str]]:
    """participant_id -> funding_group and -> team_id, from the overview file."""
    groups: dict[str, str] = {}
    teams: dict[str, str] = {}
    for row in overview.rows:
        group, team, pid, _status = row
        groups[pid] = group
        teams[pid] = team
    return groups, teams


def filter_rows(
    table: Table,
    overview: Table,
    group: str | None,
    team: str | None,
    q: str | None,
) -> list[tuple[str, ...]]:
    """Filter by funding group, team, and ID substring.

    Group and team membership come from the enrollment overview, so the
    filters work uniformly even on tables without those columns. The
    search term matches substrings of participant_id or team_id.
    """
    pid_groups, pid_teams = _pid_maps(overview)
    pid_index = table.columns.index("participant_id")
    rows = list(table.rows)
    if group:
        rows = [r for r in rows if pid_groups.get(r[pid_index]) == group]
    if team:
        rows = [r for r in rows if pid_teams.get(r[pid_index]) == team]
    if q:
        rows = [
            r
            for r in rows
            if q in r[pid_index] or q in pid_teams.get(r[pid_index], "")
        ]
    return rows


def sort_rows(
    table_kind: str,
    columns: tuple[str, ...],
    rows: list[tuple[str, ...]],
    sort: str | None,
    direction: str,
) -> list[tuple[str, ...]]:
    """Sort with participant_id-ascending tie-break; empty cells always last.

    Rows are pre-sorted by participant_id so the stable main sort leaves
    ties in that order for either direction.
    """
    pid_index = columns.index("participant_id")
    rows = sorted(rows, key=lambda r: r[pid_index])
    if sort is None:
        return rows
    index = columns.index(sort)
    filled = [r for r in rows if r[index] != ""]
    empty = [r for r in rows if r[index] == ""]
    if column_type(table_kind, sort) == "number":
        filled.sort(key=lambda r: float(r[index]), reverse=direction == "desc")
    else:
        filled.sort(key=lambda r: r[index], reverse=direction == "desc")
    return filled + empty


def _row_bins(
    kind: str,
    columns: tuple[str, ...],
    row: tuple[str, ...],
    config: ServiceConfig,
) -> list[int | None]:
    """Color-bin index per cell, computed from the serialized cell values."""
    bins: list[int | None] = [None] * len(columns)
    for i, name in enumerate(columns):
        cell = row[i]
        if kind == TableKind.BEACON_LAST_SIGHTED.value:
            if name == "days_since":
                never = row[columns.index("never_sighted")] == "true"
                if never:
                    bins[i] = NEVER_SIGHTED_BIN
                elif cell != "":
                    bins[i] = staleness_bin(int(cell), config.staleness_bin_edges)
            continue
        if cell == "":
            continue
        is_pct = name in ("mean_daily_pct", "compliance_pct") or (
            kind.endswith("recent_week") and column_type(kind, name) == "number"
        )
        if is_pct:
            bins[i] = compliance_bin(float(cell), config.compliance_bin_edges)
    return bins


def _grouped_timeline(timeline: Table) -> list[dict]:
    sections = {"A": [], "B": []}
    for row in timeline.rows:
        pid, team, group, start, end, completed, progress = row
        sections.setdefault(group, []).append(
            {
                "participant_id": pid,
                "team_id": team,
                "start_date": start,
                "end_date": end,
                "days_completed": int(completed),
                "pct_progress": progress,
            }
        )
    return [
        {"funding_group": group, "participants": participants}
        for group, participants in sections.items()
    ]


def _grouped_overview(overview: Table) -> list[dict]:
    sections: dict[str, dict[str, list[dict]]] = {"A": {}, "B": {}}
    for row in overview.rows:
        group, team, pid, status = row
        sections.setdefault(group, {}).setdefault(team, []).append(
            {"participant_id": pid, "status": status}
        )
    return [
        {
            "funding_group": group,
            "teams": [
                {"team_id": team, "participants": members}
                for team, members in sorted(teams.items())
            ],
        }
        for group, teams in sections.items()
    ]


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="compliance-monitor", docs_url=None, redoc_url=None)
    cache = BundleCache(config.bundle_dir)
    expected = f"Bearer {config.auth_token}".encode()

    def require_token(authorization: str | None = Header(default=None)) -> None:
        supplied = (authorization or "").encode()
        if not hmac.compare_digest(supplied, expected):
            raise HTTPException(
                status_code=401,
                detail="missing or invalid bearer token",
                headers={"WWW-Authenticate": "Bearer"},
            )

    def current_bundle() -> LoadedBundle:
        bundle = cache.current()
        if bundle is None:
            raise HTTPException(
                status_code=503,
                detail=f"no data: bundle at {config.bundle_dir} is missing or incomplete",
            )
        return bundle

    @app.get("/api/health")
    def health() -> dict:
        bundle = cache.current()
        return {
            "status": "ok",
            "generated_at": bundle.generated_at.isoformat() if bundle else None,
        }

    @app.get("/api/tables/{kind}", dependencies=[Depends(require_token)])
    def get_table(
        kind: str,
        group: str | None = None,
        team: str | None = None,
        q: str | None = None,
        sort: str | None = None,
        dir: str = "asc",
    ) -> dict:
        valid_kinds = [k.value for k in TableKind]
        if kind not in valid_kinds:
            raise HTTPException(
                status_code=404,
                detail=f"unknown table kind {kind!r}; valid kinds: {', '.join(valid_kinds)}",
            )
        if dir not in ("asc", "desc"):
            raise HTTPException(status_code=400, detail="dir must be 'asc' or 'desc'")
        bundle = current_bundle()
        table = bundle.tables[kind]
        if sort is not None and sort not in table.columns:
            raise HTTPException(
                status_code=400,
                detail=f"unknown sort column {sort!r}; valid columns: {', '.join(table.columns)}",
            )
        rows = filter_rows(table, bundle.overview, group, team, q)
        rows = sort_rows(kind, table.columns, rows, sort, dir)
        return {
            "kind": kind,
            "generated_at": bundle.generated_at.isoformat(),
            "columns": [
                {"name": name, "type": column_type(kind, name)}
                for name in table.columns
            ],
            "rows": [
                {"cells": list(row), "bins": _row_bins(kind, table.columns, row, config)}
                for row in rows
            ],
            "row_count": len(rows),
        }

    @app.get("/api/timeline", dependencies=[Depends(require_token)])
    def timeline() -> dict:
        bundle = current_bundle()
        return {
            "generated_at": bundle.generated_at.isoformat(),
            "groups": _grouped_timeline(bundle.timeline),
        }

    @app.get("/api/enrollment-overview", dependencies=[Depends(require_token)])
    def enrollment_overview() -> dict:
        bundle = current_bundle()
        return {
            "generated_at": bundle.generated_at.isoformat(),
            "groups": _grouped_overview(bundle.overview),
        }

    if config.static_dir is not None and config.static_dir.is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="static")
    else:

        @app.get("/", response_class=HTMLResponse)
        def placeholder() -> str:
            return _PLACEHOLDER_PAGE

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
