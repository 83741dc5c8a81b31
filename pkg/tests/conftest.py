"""Shared fixtures: tiny deterministic cohorts and ready-made stores.

Functional tests use a 30-minute sample cadence (one sample per covered
window) so files stay small; presence, not density, is what the
compliance arithmetic sees.
"""

from __future__ import annotations

from datetime import date

import pytest

from compliance_monitor.datagen import ScenarioKnobs, build_plan, generate
from compliance_monitor.engine import ComputeContext, compute_all
from compliance_monitor.export import export
from compliance_monitor.ingest import FileKind, Store, ingest

AS_OF = date(2023, 3, 20)

MIXED_KNOBS = ScenarioKnobs(
    night_nonwear_prob=0.3,
    window_dropout_prob=0.1,
    survey_completion_prob=0.8,
    sync_delay_prob=0.25,
    dead_device_prob=0.15,
    never_sighted_prob=0.1,
    beacon_dead_prob=0.15,
)


def make_cohort(tmp_path, seed=11, teams=3, knobs=MIXED_KNOBS, elapsed_days=12, **kwargs):
    plan = build_plan(
        seed=seed,
        num_teams=teams,
        as_of=AS_OF,
        knobs=knobs,
        hr_cadence_seconds=kwargs.pop("hr_cadence_seconds", 1800),
        elapsed_days=elapsed_days,
        **kwargs,
    )
    return plan, generate(plan, tmp_path / "raw")


def ingest_cohort(store, cohort):
    reports = {}
    for kind, path in (
        (FileKind.ROSTER, cohort.roster_path),
        (FileKind.HEART_RATE, cohort.hr_path),
        (FileKind.SURVEY, cohort.surveys_path),
        (FileKind.BEACON, cohort.beacons_path),
    ):
        report = ingest(store, kind, path.read_bytes(), path.name)
        assert report.records_rejected == 0, report.warnings[:5]
        reports[kind.value] = report
    return reports


@pytest.fixture
def small_pipeline(tmp_path):
    """Cohort generated, ingested, computed, and exported under tmp_path."""
    plan, cohort = make_cohort(tmp_path)
    store = Store(tmp_path / "store")
    ingest_cohort(store, cohort)
    ctx = ComputeContext(as_of=AS_OF)
    dataset = compute_all(store, ctx)
    bundle = export(dataset, ctx, tmp_path / "bundle")
    return plan, cohort, store, ctx, dataset, bundle
