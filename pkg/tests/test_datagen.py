"""Generator determinism and manifest ground-truth fidelity."""

from __future__ import annotations

from datetime import date, timedelta
from zoneinfo import ZoneInfo

import pytest

from compliance_monitor.core import local_day_span, parse_utc_timestamp
from compliance_monitor.datagen import (
    ScenarioKnobs,
    build_plan,
    generate,
    roster_entries,
)
from compliance_monitor.engine import ComputeContext, compute_all
from compliance_monitor.ingest import Store

from conftest import AS_OF, ingest_cohort, make_cohort


def file_bytes(cohort) -> dict[str, bytes]:
    return {
        p.name: p.read_bytes()
        for p in (
            cohort.roster_path,
            cohort.hr_path,
            cohort.surveys_path,
            cohort.beacons_path,
            cohort.manifest_path,
        )
    }


class TestKnobValidation:
    def test_probabilities_must_be_in_unit_interval(self):
        with pytest.raises(ValueError, match="night_nonwear_prob"):
            ScenarioKnobs(night_nonwear_prob=1.5)
        with pytest.raises(ValueError, match="survey_completion_prob"):
            ScenarioKnobs(survey_completion_prob=-0.1)

    def test_plan_argument_validation(self):
        with pytest.raises(ValueError, match="num_teams"):
            build_plan(seed=1, num_teams=0)
        with pytest.raises(ValueError, match="hr_cadence_seconds"):
            build_plan(seed=1, hr_cadence_seconds=0)
        with pytest.raises(ValueError, match="elapsed_days"):
            build_plan(seed=1, elapsed_days=71)


class TestDeterminism:
    def test_same_seed_same_plan(self):
        knobs = ScenarioKnobs(night_nonwear_prob=0.5, sync_delay_prob=0.3)
        a = build_plan(seed=42, num_teams=3, knobs=knobs, elapsed_days=9)
        b = build_plan(seed=42, num_teams=3, knobs=knobs, elapsed_days=9)
        assert a == b

    def test_same_seed_byte_identical_output(self, tmp_path):
        plan = build_plan(seed=42, num_teams=2, elapsed_days=6, hr_cadence_seconds=900)
        first = generate(plan, tmp_path / "a")
        second = generate(plan, tmp_path / "b")
        assert file_bytes(first) == file_bytes(second)

    def test_different_seed_differs(self):
        a = build_plan(seed=1, num_teams=3, elapsed_days=9)
        b = build_plan(seed=2, num_teams=3, elapsed_days=9)
        assert a != b


class TestPlanContent:
    def test_default_knobs_cover_every_window(self):
        plan = build_plan(seed=7, num_teams=2, elapsed_days=8)
        for participant in plan.participants:
            for day in participant.days:
                assert day.covered_windows == tuple(range(day.windows_total))
                if day.date.weekday() < 5:
                    assert day.survey_completed is True
                else:
                    assert day.survey_completed is None

    def test_elapsed_days_pins_history_length(self):
        plan = build_plan(seed=7, num_teams=2, elapsed_days=8, as_of=AS_OF)
        for participant in plan.participants:
            assert len(participant.days) == 8
            assert participant.days[0].date == AS_OF - timedelta(days=7)
            assert participant.days[-1].date == AS_OF
            assert participant.end_date == participant.start_date + timedelta(days=69)

    def test_full_night_nonwear_leaves_32_of_48(self):
        plan = build_plan(
            seed=7,
            num_teams=2,
            elapsed_days=5,
            as_of=AS_OF,
            knobs=ScenarioKnobs(night_nonwear_prob=1.0),
        )
        for participant in plan.participants:
            for day in participant.days:
                assert day.windows_total == 48
                assert len(day.covered_windows) == 32
                assert min(day.covered_windows) == 16

    def test_beacon_sightings_fall_in_local_daytime(self):
        plan = build_plan(seed=9, num_teams=2, elapsed_days=10)
        for participant in plan.participants:
            zone = ZoneInfo(participant.timezone)
            for sighting in participant.sightings:
                local = sighting.astimezone(zone)
                assert 8 <= local.hour <= 20

    def test_roster_entries_match_plan(self):
        plan = build_plan(seed=9, num_teams=2, elapsed_days=4)
        entries = roster_entries(plan)
        assert len(entries) == len(plan.participants)
        for entry, participant in zip(entries, plan.participants):
            assert entry.participant_id == participant.participant_id
            assert entry.status.value == "started"
            assert entry.start_date == participant.start_date


class TestGeneratedFiles:
    def test_manifest_counts_match_file_lines(self, tmp_path):
        plan, cohort = make_cohort(tmp_path, seed=13)
        counts = cohort.manifest["counts"]
        for key, path in [
            ("roster_rows", cohort.roster_path),
            ("hr_rows", cohort.hr_path),
            ("survey_rows", cohort.surveys_path),
            ("beacon_rows", cohort.beacons_path),
        ]:
            lines = path.read_text().splitlines()
            assert counts[key] == len(lines) - 1
        assert counts["participants"] == len(plan.participants)
        assert counts["started"] == counts["participants"]
        assert counts["teams"] == len({p.team_id for p in plan.participants})

    def test_default_cadence_gives_120_samples_per_window(self, tmp_path):
        plan = build_plan(seed=3, num_teams=1, elapsed_days=2, as_of=AS_OF)
        assert plan.hr_cadence_seconds == 15
        cohort = generate(plan, tmp_path / "cohort")
        covered = sum(len(d.covered_windows) for p in plan.participants for d in p.days)
        assert cohort.manifest["counts"]["hr_rows"] == covered * 120

    def test_samples_land_only_in_covered_windows(self, tmp_path):
        knobs = ScenarioKnobs(night_nonwear_prob=1.0, window_dropout_prob=0.2)
        plan = build_plan(
            seed=3, num_teams=1, elapsed_days=3, as_of=AS_OF, knobs=knobs, hr_cadence_seconds=600
        )
        cohort = generate(plan, tmp_path / "cohort")
        by_pid = {p.participant_id: p for p in plan.participants}
        lines = cohort.hr_path.read_text().splitlines()[1:]
        assert lines
        for line in lines:
            pid, ts_s, hr_s = line.split(",")
            participant = by_pid[pid]
            ts = parse_utc_timestamp(ts_s)
            zone = ZoneInfo(participant.timezone)
            local_date = ts.astimezone(zone).date()
            day = next(d for d in participant.days if d.date == local_date)
            day_start, _ = local_day_span(day.date, zone)
            index = int((ts - day_start).total_seconds()) // 1800
            assert index in day.covered_windows
            assert 20 <= int(hr_s) <= 250

    def test_survey_rows_cover_true_and_planned_false(self, tmp_path):
        knobs = ScenarioKnobs(survey_completion_prob=0.5)
        plan = build_plan(seed=21, num_teams=2, elapsed_days=10, as_of=AS_OF, knobs=knobs)
        cohort = generate(plan, tmp_path / "cohort")
        rows = {
            (pid, day): value
            for pid, day, value in (
                line.split(",") for line in cohort.surveys_path.read_text().splitlines()[1:]
            )
        }
        for participant in plan.participants:
            for day in participant.days:
                key = (participant.participant_id, day.date.isoformat())
                if day.survey_completed:
                    assert rows.get(key) == "true"
                elif day.survey_false_row:
                    assert rows.get(key) == "false"
                else:
                    assert key not in rows

    def test_generated_files_ingest_without_rejections(self, tmp_path):
        _, cohort = make_cohort(tmp_path, seed=17)
        store = Store(tmp_path / "store")
        reports = ingest_cohort(store, cohort)
        counts = cohort.manifest["counts"]
        assert reports["roster"].records_accepted == counts["roster_rows"]
        assert reports["hr"].records_accepted == counts["hr_rows"]
        assert reports["surveys"].records_accepted == counts["survey_rows"]
        assert reports["beacons"].records_accepted == counts["beacon_rows"]
        for report in reports.values():
            assert report.records_rejected == 0
            assert report.duplicates_skipped == 0


class TestManifestTruth:
    def test_engine_agrees_with_manifest_on_mixed_cohort(self, tmp_path):
        plan, cohort = make_cohort(tmp_path, seed=29, teams=2, elapsed_days=10)
        store = Store(tmp_path / "store")
        ingest_cohort(store, cohort)
        ctx = ComputeContext(as_of=plan.as_of)
        dataset = compute_all(store, ctx)
        for pid, truth in cohort.manifest["participants"].items():
            records = dataset.daily_wearable[pid]
            assert len(records) == len(truth["wearable_daily"])
            for record, expected in zip(records, truth["wearable_daily"]):
                assert record.date.isoformat() == expected["date"]
                assert record.windows_present == expected["windows_present"]
                assert record.windows_total == expected["windows_total"]
            summary = dataset.wearable_summaries[pid]
            mean = truth["wearable_mean"]
            assert summary.days_elapsed == mean["days"]
            num, den = map(int, mean["exact"].split("/"))
            assert summary.mean_daily_pct * den == num
            assert summary.below_threshold == mean["below_threshold"]
            survey = dataset.survey_summaries[pid]
            assert survey.days_elapsed == truth["survey_mean"]["days"]
            beacon = dataset.beacon_statuses[pid]
            assert beacon.never_sighted == truth["beacon"]["never_sighted"]
            if not beacon.never_sighted:
                assert beacon.last_sighted_date.isoformat() == truth["beacon"]["last_sighted_date"]
                assert beacon.days_since == truth["beacon"]["days_since"]

    def test_default_cohort_is_fully_compliant(self, tmp_path):
        plan = build_plan(seed=31, num_teams=2, elapsed_days=6, as_of=AS_OF, hr_cadence_seconds=1800)
        cohort = generate(plan, tmp_path / "cohort")
        for truth in cohort.manifest["participants"].values():
            assert truth["wearable_mean"]["pct"] == "100.0"
            assert truth["wearable_mean"]["below_threshold"] is False
            assert truth["survey_mean"]["pct"] == "100.0"
            assert all(day["pct"] == "100.0" for day in truth["wearable_daily"])
