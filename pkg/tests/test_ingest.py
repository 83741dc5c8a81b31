"""Parser rejection rules, record-level dedup, and store idempotence."""

from __future__ import annotations

from datetime import date, datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compliance_monitor.core import StudyStatus
from compliance_monitor.ingest import (
    FileKind,
    ParseError,
    Store,
    ingest,
    parse_beacon_log,
    parse_heart_rate_log,
    parse_roster,
    parse_survey_log,
)

ROSTER_HEADER = "team_id,participant_id,funding_group,status,start_date,end_date,timezone\n"
HR_HEADER = "participant_id,timestamp_utc,hr_bpm\n"
SURVEY_HEADER = "participant_id,survey_date,completed\n"
BEACON_HEADER = "participant_id,beacon_id,timestamp_utc\n"


def body(header: str, *lines: str) -> bytes:
    return (header + "".join(line + "\n" for line in lines)).encode()


def store_bytes(store: Store) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(store.root.iterdir()) if p.is_file()}


class TestHardFailures:
    def test_wrong_header_raises(self):
        with pytest.raises(ParseError, match="unexpected header"):
            parse_roster(b"nope,nope\n")

    def test_empty_input_raises(self):
        with pytest.raises(ParseError, match="expected header"):
            parse_heart_rate_log(b"")

    def test_non_utf8_raises(self):
        with pytest.raises(ParseError, match="not valid UTF-8"):
            parse_survey_log(b"\xff\xfe\x00")

    def test_bom_is_tolerated(self):
        data = "﻿".encode() + body(HR_HEADER, "P001,2023-01-02T10:00:00Z,70")
        samples, report = parse_heart_rate_log(data)
        assert report.records_accepted == 1
        assert samples[0].hr_bpm == 70


class TestRosterParsing:
    def test_valid_row_round_trips(self):
        data = body(ROSTER_HEADER, "T01,P001,a,Started,2023-01-02,2023-03-12,America/New_York")
        entries, report = parse_roster(data)
        assert report.records_accepted == 1
        entry = entries[0]
        assert entry.funding_group.value == "A"
        assert entry.status is StudyStatus.STARTED
        assert entry.end_date == date(2023, 3, 12)

    @pytest.mark.parametrize(
        "row,fragment",
        [
            ("T01,P001,C,started,2023-01-02,,UTC", "unknown funding group"),
            ("T01,P001,A,enrolled,2023-01-02,,UTC", "unknown status"),
            ("T01,p001,A,started,2023-01-02,,UTC", "participant id"),
            ("T01,P001,A,started,2023-01-02,2023-01-01,UTC", "end_date"),
            ("T01,P001,A,started,2023-01-02,2023-03-13,UTC", "not 70 days"),
            ("T01,P001,A,started,,,UTC,extra", "expected 7 fields"),
            ("T01,P001,A,started,not-a-date,,UTC", "not-a-date"),
            ("T01,P001,A,started,,,UTC", "requires a start date"),
        ],
    )
    def test_rejections_carry_line_numbers(self, row, fragment):
        entries, report = parse_roster(body(ROSTER_HEADER, row))
        assert entries == []
        assert report.records_rejected == 1
        (lineno, message) = report.warnings[0]
        assert lineno == 2
        assert fragment in message

    def test_duplicate_pid_last_write_wins(self):
        data = body(
            ROSTER_HEADER,
            "T01,P001,A,started,2023-01-02,,UTC",
            "T02,P001,B,withdrawn,2023-01-09,,UTC",
        )
        entries, report = parse_roster(data)
        assert len(entries) == 1
        assert entries[0].team_id == "T02"
        assert entries[0].status is StudyStatus.WITHDRAWN
        assert report.records_accepted == 1
        assert report.duplicates_skipped == 1
        assert report.warnings[0][0] == 3
        assert "last write wins" in report.warnings[0][1]


class TestHeartRateParsing:
    def test_bounds_are_inclusive(self):
        data = body(
            HR_HEADER,
            "P001,2023-01-02T10:00:00Z,20",
            "P001,2023-01-02T10:00:30Z,250",
            "P001,2023-01-02T10:01:00Z,19",
            "P001,2023-01-02T10:01:30Z,251",
        )
        samples, report = parse_heart_rate_log(data)
        assert [s.hr_bpm for s in samples] == [20, 250]
        assert report.records_rejected == 2
        assert "outside [20, 250]" in report.warnings[0][1]

    def test_same_instant_different_spelling_is_duplicate(self):
        data = body(
            HR_HEADER,
            "P001,2023-01-02T10:00:00Z,70",
            "P001,2023-01-02T10:00:00+00:00,75",
            "P001,2023-01-02T05:00:00-05:00,80",
        )
        samples, report = parse_heart_rate_log(data)
        assert len(samples) == 1
        assert samples[0].timestamp == datetime(2023, 1, 2, 10, 0, tzinfo=timezone.utc)
        assert report.duplicates_skipped == 2

    @pytest.mark.parametrize(
        "ts",
        [
            "2023-02-29T10:00:00Z",
            "2023-13-01T10:00:00Z",
            "2023-01-02T24:00:00Z",
            "2023-01-02T10:60:00Z",
            "2023-01-02T10:00:60Z",
            "2023-01-02",
            "garbage",
        ],
    )
    def test_bad_timestamps_rejected(self, ts):
        samples, report = parse_heart_rate_log(body(HR_HEADER, f"P001,{ts},70"))
        assert samples == []
        assert report.records_rejected == 1

    def test_non_integer_hr_rejected(self):
        samples, report = parse_heart_rate_log(body(HR_HEADER, "P001,2023-01-02T10:00:00Z,7o"))
        assert report.records_rejected == 1

    def test_bad_pid_rejected(self):
        samples, report = parse_heart_rate_log(body(HR_HEADER, "p-1,2023-01-02T10:00:00Z,70"))
        assert report.records_rejected == 1
        assert "participant_id" in report.warnings[0][1]


class TestSurveyParsing:
    def test_token_forms(self):
        data = body(
            SURVEY_HEADER,
            "P001,2023-01-02,true",
            "P001,2023-01-03,1",
            "P001,2023-01-04,FALSE",
            "P001,2023-01-05,0",
        )
        subs, report = parse_survey_log(data)
        assert [s.completed for s in sorted(subs, key=lambda s: s.survey_date)] == [
            True,
            True,
            False,
            False,
        ]
        assert report.records_accepted == 4

    def test_weekend_rows_rejected(self):
        data = body(SURVEY_HEADER, "P001,2023-01-07,true", "P001,2023-01-08,false")
        subs, report = parse_survey_log(data)
        assert subs == []
        assert report.records_rejected == 2
        assert all("weekend" in msg for _, msg in report.warnings)

    def test_duplicate_or_merge_true_wins(self):
        data = body(
            SURVEY_HEADER,
            "P001,2023-01-02,false",
            "P001,2023-01-02,true",
            "P001,2023-01-02,false",
        )
        subs, report = parse_survey_log(data)
        assert len(subs) == 1
        assert subs[0].completed is True
        assert report.records_accepted == 1
        assert report.duplicates_skipped == 2

    def test_unknown_token_rejected(self):
        subs, report = parse_survey_log(body(SURVEY_HEADER, "P001,2023-01-02,yes"))
        assert report.records_rejected == 1
        assert "true/false/1/0" in report.warnings[0][1]


class TestBeaconParsing:
    def test_exact_repeats_deduplicated(self):
        data = body(
            BEACON_HEADER,
            "P001,B1,2023-01-02T10:00:00Z",
            "P001,B1,2023-01-02T10:00:00Z",
            "P001,B2,2023-01-02T10:00:00Z",
        )
        sightings, report = parse_beacon_log(data)
        assert len(sightings) == 2
        assert report.duplicates_skipped == 1

    def test_empty_beacon_id_rejected(self):
        sightings, report = parse_beacon_log(body(BEACON_HEADER, "P001,,2023-01-02T10:00:00Z"))
        assert report.records_rejected == 1
        assert "beacon_id" in report.warnings[0][1]


hr_line = st.tuples(
    st.sampled_from(["P001", "P002", "bad id", ""]),
    st.sampled_from(
        [
            "2023-01-02T10:00:00Z",
            "2023-01-02T10:00:30Z",
            "2023-02-29T10:00:00Z",
            "not-a-time",
        ]
    ),
    st.sampled_from(["70", "20", "250", "19", "251", "x"]),
).map(lambda t: ",".join(t))


class TestConservation:
    @given(st.lists(hr_line, max_size=30))
    @settings(max_examples=25, deadline=None)
    def test_every_line_is_accounted_for(self, lines):
        _, report = parse_heart_rate_log(body(HR_HEADER, *lines))
        total = report.records_accepted + report.records_rejected + report.duplicates_skipped
        assert total == len(lines)


ROSTER_DATA = body(
    ROSTER_HEADER,
    "T01,P001,A,started,2023-01-02,,America/New_York",
    "T01,P002,B,yet_to_start,,,America/Chicago",
)
HR_DATA = body(
    HR_HEADER,
    "P001,2023-01-02T10:00:00Z,70",
    "P001,2023-01-02T10:15:00Z,72",
)
SURVEY_DATA = body(SURVEY_HEADER, "P001,2023-01-02,false")
BEACON_DATA = body(BEACON_HEADER, "P001,B1,2023-01-02T10:00:00Z")


class TestStore:
    def test_missing_store_dir_raises_without_create(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            Store(tmp_path / "absent", create=False)

    def test_round_trip_all_kinds(self, tmp_path):
        store = Store(tmp_path / "store")
        ingest(store, FileKind.ROSTER, ROSTER_DATA)
        ingest(store, FileKind.HEART_RATE, HR_DATA)
        ingest(store, FileKind.SURVEY, SURVEY_DATA)
        ingest(store, FileKind.BEACON, BEACON_DATA)
        assert [e.participant_id for e in store.read_roster()] == ["P001", "P002"]
        samples = store.read_heart_rate()
        assert [s.hr_bpm for s in samples] == [70, 72]
        assert store.read_surveys()[0].completed is False
        assert store.read_beacons()[0].beacon_id == "B1"

    def test_reingest_same_bytes_is_pure_duplicate(self, tmp_path):
        store = Store(tmp_path / "store")
        first = ingest(store, FileKind.HEART_RATE, HR_DATA)
        before = store_bytes(store)
        second = ingest(store, FileKind.HEART_RATE, HR_DATA)
        assert first.records_accepted == 2
        assert second.records_accepted == 0
        assert second.duplicates_skipped == 2
        assert store_bytes(store) == before

    def test_overlapping_file_dedups_at_record_level(self, tmp_path):
        store = Store(tmp_path / "store")
        ingest(store, FileKind.HEART_RATE, HR_DATA)
        extended = body(
            HR_HEADER,
            "P001,2023-01-02T10:00:00Z,70",
            "P001,2023-01-02T10:30:00Z,74",
        )
        report = ingest(store, FileKind.HEART_RATE, extended)
        assert report.records_accepted == 1
        assert report.duplicates_skipped == 1
        assert len(store.read_heart_rate()) == 3

    def test_store_rows_are_sorted_canonically(self, tmp_path):
        store = Store(tmp_path / "store")
        shuffled = body(
            HR_HEADER,
            "P002,2023-01-02T10:00:00Z,70",
            "P001,2023-01-02T11:00:00Z,70",
            "P001,2023-01-02T10:00:00Z,70",
        )
        ingest(store, FileKind.HEART_RATE, shuffled)
        rows = list(store.iter_rows(FileKind.HEART_RATE))
        assert rows == sorted(rows)

    def test_ingest_order_does_not_change_store(self, tmp_path):
        chunk_a = body(HR_HEADER, "P001,2023-01-02T10:00:00Z,70")
        chunk_b = body(HR_HEADER, "P001,2023-01-02T11:00:00Z,71")
        store_ab = Store(tmp_path / "ab")
        ingest(store_ab, FileKind.HEART_RATE, chunk_a)
        ingest(store_ab, FileKind.HEART_RATE, chunk_b)
        store_ba = Store(tmp_path / "ba")
        ingest(store_ba, FileKind.HEART_RATE, chunk_b)
        ingest(store_ba, FileKind.HEART_RATE, chunk_a)
        assert (
            store_ab.path_for(FileKind.HEART_RATE).read_bytes()
            == store_ba.path_for(FileKind.HEART_RATE).read_bytes()
        )

    def test_hard_error_leaves_store_untouched(self, tmp_path):
        store = Store(tmp_path / "store")
        ingest(store, FileKind.HEART_RATE, HR_DATA)
        before = store_bytes(store)
        with pytest.raises(ParseError):
            ingest(store, FileKind.HEART_RATE, b"wrong,header\nP001,x,70\n")
        assert store_bytes(store) == before

    def test_manifest_records_each_new_digest_once(self, tmp_path):
        store = Store(tmp_path / "store")
        ingest(store, FileKind.HEART_RATE, HR_DATA, source_name="day1.csv")
        ingest(store, FileKind.HEART_RATE, HR_DATA, source_name="day1-copy.csv")
        lines = store.manifest_path.read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].endswith("day1.csv")
        assert len(store.ingested_digests()) == 1

    def test_roster_update_warns_and_rewrites(self, tmp_path):
        store = Store(tmp_path / "store")
        ingest(store, FileKind.ROSTER, ROSTER_DATA)
        moved = body(ROSTER_HEADER, "T02,P001,A,started,2023-01-02,,America/New_York")
        report = ingest(store, FileKind.ROSTER, moved)
        assert report.records_accepted == 1
        assert any("superseded stored values" in msg for _, msg in report.warnings)
        assert {e.participant_id: e.team_id for e in store.read_roster()}["P001"] == "T02"

    def test_roster_identical_entry_is_duplicate(self, tmp_path):
        store = Store(tmp_path / "store")
        ingest(store, FileKind.ROSTER, ROSTER_DATA)
        one_again = body(ROSTER_HEADER, "T01,P001,A,started,2023-01-02,,America/New_York")
        report = ingest(store, FileKind.ROSTER, one_again)
        assert report.records_accepted == 0
        assert report.duplicates_skipped == 1

    def test_survey_upgrade_false_to_true_counts_as_update(self, tmp_path):
        store = Store(tmp_path / "store")
        ingest(store, FileKind.SURVEY, SURVEY_DATA)
        upgrade = body(SURVEY_HEADER, "P001,2023-01-02,true")
        report = ingest(store, FileKind.SURVEY, upgrade)
        assert report.records_accepted == 1
        assert store.read_surveys()[0].completed is True
        downgrade = body(SURVEY_HEADER, "P001,2023-01-02,false", "P002,2023-01-02,false")
        report = ingest(store, FileKind.SURVEY, downgrade)
        assert report.records_accepted == 1
        assert report.duplicates_skipped == 1
        assert {s.participant_id: s.completed for s in store.read_surveys()} == {
            "P001": True,
            "P002": False,
        }

    def test_beacon_merge_dedups_across_files(self, tmp_path):
        store = Store(tmp_path / "store")
        ingest(store, FileKind.BEACON, BEACON_DATA)
        mixed = body(
            BEACON_HEADER,
            "P001,B1,2023-01-02T10:00:00Z",
            "P001,B1,2023-01-02T10:00:00+00:00",
            "P001,B1,2023-01-02T12:00:00Z",
        )
        report = ingest(store, FileKind.BEACON, mixed)
        assert report.records_accepted == 1
        assert report.duplicates_skipped == 2
        assert len(store.read_beacons()) == 2
