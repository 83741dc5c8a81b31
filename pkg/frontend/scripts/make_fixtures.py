"""Regenerate the frozen API payloads used by the dashboard tests.

Builds a small fixed cohort with the edge cases the UI contract cares
about (numeric and text sorts, tied values, empty cells, a never-sighted
beacon, a future starter), serves it through the real API in-process,
and freezes the JSON responses. Run from the repository root with the
Python package installed:

    python3 frontend/scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import tempfile
from datetime import date, datetime, time, timedelta
from pathlib import Path
from zoneinfo import ZoneInfo

from fastapi.testclient import TestClient

from compliance_monitor.api import ServiceConfig, create_app
from compliance_monitor.engine import ComputeContext, compute_all
from compliance_monitor.export import export
from compliance_monitor.ingest import FileKind, Store, ingest

AS_OF = date(2023, 3, 20)
TOKEN = "fixture-token"
OUT_PATH = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "payloads.json"

ROSTER = """\
team_id,participant_id,funding_group,status,start_date,end_date,timezone
T01,T01-P1,A,started,2023-03-06,2023-05-14,America/New_York
T01,T01-P2,A,started,2023-03-06,2023-05-14,America/New_York
T01,T01-P3,A,started,2023-03-06,2023-05-14,America/New_York
T02,T02-P1,B,started,2023-03-13,2023-05-21,America/Chicago
T02,T02-P2,B,started,2023-04-03,2023-06-11,America/Chicago
T02,T02-P3,B,yet_to_consent,,,America/Chicago
"""

# Windows covered per participant-day; P2 and P3 tie on purpose so the
# participant_id tie-break shows up in the sorted fixtures.
COVERAGE = {
    "T01-P1": lambda day_index: 48 if day_index % 2 == 0 else 36,
    "T01-P2": lambda day_index: 24,
    "T01-P3": lambda day_index: 24,
    "T02-P1": lambda day_index: 40,
}

STARTS = {
    "T01-P1": date(2023, 3, 6),
    "T01-P2": date(2023, 3, 6),
    "T01-P3": date(2023, 3, 6),
    "T02-P1": date(2023, 3, 13),
}

ZONES = {
    "T01-P1": "America/New_York",
    "T01-P2": "America/New_York",
    "T01-P3": "America/New_York",
    "T02-P1": "America/Chicago",
}

SURVEYS = """\
participant_id,survey_date,completed
T01-P1,2023-03-06,true
T01-P1,2023-03-07,true
T01-P1,2023-03-08,true
T01-P1,2023-03-09,false
T01-P1,2023-03-10,true
T01-P2,2023-03-06,true
T01-P2,2023-03-08,true
T02-P1,2023-03-13,true
T02-P1,2023-03-14,true
T02-P1,2023-03-15,false
"""

BEACONS = """\
participant_id,beacon_id,timestamp_utc
T01-P1,BCN-01,2023-03-19T14:05:00Z
T01-P1,BCN-01,2023-03-16T09:00:00Z
T01-P2,BCN-02,2023-03-14T11:30:00Z
T02-P1,BCN-04,2023-03-18T16:45:00Z
"""

TABLE_QUERIES = [
    ("wearable_summary", {}),
    ("wearable_summary", {"sort": "mean_daily_pct", "dir": "asc"}),
    ("wearable_summary", {"sort": "mean_daily_pct", "dir": "desc"}),
    ("wearable_summary", {"sort": "team_id", "dir": "asc"}),
    ("wearable_summary", {"sort": "below_threshold", "dir": "desc"}),
    ("wearable_summary", {"sort": "days_elapsed", "dir": "asc"}),
    ("wearable_summary", {"group": "B"}),
    ("wearable_summary", {"q": "T01"}),
    ("beacon_last_sighted", {}),
    ("beacon_last_sighted", {"sort": "days_since", "dir": "asc"}),
    ("beacon_last_sighted", {"sort": "days_since", "dir": "desc"}),
    ("beacon_last_sighted", {"sort": "last_sighted_date", "dir": "desc"}),
    ("wearable_recent_week", {}),
    ("wearable_recent_week", {"sort": "2023-03-17", "dir": "asc"}),
    ("wearable_recent_week", {"sort": "2023-03-17", "dir": "desc"}),
    ("survey_summary", {}),
]


def hr_rows() -> str:
    lines = ["participant_id,timestamp_utc,hr_bpm"]
    for pid, coverage in COVERAGE.items():
        zone = ZoneInfo(ZONES[pid])
        day = STARTS[pid]
        index = 0
        while day < AS_OF:
            midnight = datetime.combine(day, time(0), tzinfo=zone)
            day_end = datetime.combine(day + timedelta(days=1), time(0), tzinfo=zone)
            covered = coverage(index)
            for window in range(covered):
                instant = midnight + timedelta(minutes=30 * window, seconds=60)
                if instant >= day_end:
                    break
                stamp = instant.astimezone(ZoneInfo("UTC"))
                lines.append(f"{pid},{stamp.strftime('%Y-%m-%dT%H:%M:%SZ')},72")
            day += timedelta(days=1)
            index += 1
    return "\n".join(lines) + "\n"


def main() -> None:
    with tempfile.TemporaryDirectory() as scratch:
        root = Path(scratch)
        store = Store(root / "store", create=True)
        for kind, text in (
            (FileKind.ROSTER, ROSTER),
            (FileKind.HEART_RATE, hr_rows()),
            (FileKind.SURVEY, SURVEYS),
            (FileKind.BEACON, BEACONS),
        ):
            report = ingest(store, kind, text.encode(), f"{kind.value}.csv")
            if report.records_rejected:
                raise SystemExit(f"fixture input rejected: {report.warnings}")

        ctx = ComputeContext(as_of=AS_OF)
        dataset = compute_all(store, ctx)
        export(dataset, ctx, root / "bundle")

        config = ServiceConfig(auth_token=TOKEN, bundle_dir=root / "bundle")
        client = TestClient(create_app(config))
        headers = {"Authorization": f"Bearer {TOKEN}"}

        tables = []
        for kind, query in TABLE_QUERIES:
            response = client.get(f"/api/tables/{kind}", params=query, headers=headers)
            response.raise_for_status()
            tables.append({"kind": kind, "query": query, "payload": response.json()})

        timeline = client.get("/api/timeline", headers=headers)
        timeline.raise_for_status()
        overview = client.get("/api/enrollment-overview", headers=headers)
        overview.raise_for_status()

    fixtures = {
        "as_of": AS_OF.isoformat(),
        "tables": tables,
        "timeline": timeline.json(),
        "overview": overview.json(),
    }
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(json.dumps(fixtures, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT_PATH}")


if __name__ == "__main__":
    main()
