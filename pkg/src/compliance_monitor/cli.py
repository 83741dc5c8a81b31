"""Operator command line for the weekly compliance workflow.

Exit codes: 0 success, 1 data error, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from datetime import date, datetime
from pathlib import Path

from . import __version__
from .api import config_from_env, serve
from .core import ConfigError, StudyConfig, load_zone
from .datagen import ScenarioKnobs, build_plan, generate
from .engine import ComputeContext, compute_all
from .export import BundleError, TableKind, export, load_bundle
from .ingest import FileKind, IngestReport, ParseError, Store, ingest

_MAX_WARNINGS_SHOWN = 20


def _iso_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a YYYY-MM-DD date: {text!r}") from exc


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1]: {text}")
    return value


def _print_report(source: str, report: IngestReport) -> None:
    print(
        f"{source} [{report.file_kind.value}]: "
        f"accepted={report.records_accepted} "
        f"rejected={report.records_rejected} "
        f"duplicates={report.duplicates_skipped}"
    )
    for line, message in report.warnings[:_MAX_WARNINGS_SHOWN]:
        print(f"  line {line}: {message}")
    hidden = len(report.warnings) - _MAX_WARNINGS_SHOWN
    if hidden > 0:
        print(f"  ... and {hidden} more warnings")


def _cmd_ingest(args: argparse.Namespace) -> int:
    store = Store(args.store)
    batches: list[tuple[FileKind, Path]] = [(FileKind.ROSTER, args.roster)]
    batches += [(FileKind.SURVEY, path) for path in args.surveys or []]
    batches += [(FileKind.BEACON, path) for path in args.beacons or []]
    batches += [(FileKind.HEART_RATE, path) for path in args.hr or []]
    for kind, path in batches:
        report = ingest(store, kind, path.read_bytes(), source_name=path.name)
        _print_report(str(path), report)
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    zone = load_zone(args.tz)
    as_of = args.as_of or datetime.now(tz=zone).date()
    store = Store(args.store, create=False)
    ctx = ComputeContext(as_of=as_of, config=StudyConfig())
    dataset = compute_all(store, ctx)
    bundle = export(dataset, ctx, args.out)
    orphans = {k: v for k, v in dataset.orphan_counts.items() if v}
    print(f"bundle written to {bundle.directory} (as of {bundle.generated_at.isoformat()})")
    print(f"participants: {len(dataset.roster)} total, {len(dataset.active_roster)} active")
    if orphans:
        print(f"orphan records excluded: {orphans}")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.bundle)
    print(f"bundle generated at {bundle.generated_at.isoformat()}")
    shortlist: list[str] = []
    for kind, label in (
        (TableKind.WEARABLE_SUMMARY, "wearable"),
        (TableKind.SURVEY_SUMMARY, "survey"),
    ):
        table = bundle.tables[kind.value]
        below = table.columns.index("below_threshold")
        mean = table.columns.index("mean_daily_pct")
        pid = table.columns.index("participant_id")
        team = table.columns.index("team_id")
        for row in table.rows:
            if row[below] == "true":
                shortlist.append(
                    f"{row[pid]} ({row[team]}): {label} mean {row[mean]}% below threshold"
                )
    beacons = bundle.tables[TableKind.BEACON_LAST_SIGHTED.value]
    pid = beacons.columns.index("participant_id")
    team = beacons.columns.index("team_id")
    since = beacons.columns.index("days_since")
    never = beacons.columns.index("never_sighted")
    for row in beacons.rows:
        if row[never] == "true":
            shortlist.append(f"{row[pid]} ({row[team]}): beacon never sighted")
        elif int(row[since]) > args.stale_days:
            shortlist.append(
                f"{row[pid]} ({row[team]}): beacon stale, last sighted {row[since]} days ago"
            )
    if shortlist:
        print(f"{len(shortlist)} item(s) need attention:")
        for item in shortlist:
            print(f"  {item}")
    else:
        print("all participants compliant, no stale beacons")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    config = config_from_env(
        args.bundle,
        host=args.host,
        port=args.port,
        static_dir=args.static,
    )
    serve(config)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    knobs = ScenarioKnobs(
        night_nonwear_prob=args.night_nonwear,
        window_dropout_prob=args.window_dropout,
        survey_completion_prob=args.survey_completion,
        sync_delay_prob=args.sync_delay,
        dead_device_prob=args.dead_device,
        never_sighted_prob=args.never_sighted,
        beacon_dead_prob=args.beacon_dead,
    )
    plan = build_plan(
        seed=args.seed,
        num_teams=args.teams,
        as_of=args.as_of,
        knobs=knobs,
        hr_cadence_seconds=args.cadence,
        stagger_days=args.stagger,
        elapsed_days=args.elapsed_days,
    )
    cohort = generate(plan, args.out)
    counts = cohort.manifest["counts"]
    print(f"cohort written to {cohort.out_dir}")
    print(
        f"teams={counts['teams']} participants={counts['participants']} "
        f"hr_rows={counts['hr_rows']} survey_rows={counts['survey_rows']} "
        f"beacon_rows={counts['beacon_rows']}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compliance-monitor",
        description="Ingest study data, compute compliance, and serve the dashboard.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p_ingest = subs.add_parser("ingest", help="parse raw CSVs into the record store")
    p_ingest.add_argument("--store", required=True, type=Path, help="record store directory")
    p_ingest.add_argument("--roster", required=True, type=Path, help="roster CSV")
    p_ingest.add_argument("--hr", action="append", type=Path, metavar="FILE", help="heart-rate CSV (repeatable)")
    p_ingest.add_argument("--surveys", action="append", type=Path, metavar="FILE", help="survey CSV (repeatable)")
    p_ingest.add_argument("--beacons", action="append", type=Path, metavar="FILE", help="beacon CSV (repeatable)")
    p_ingest.set_defaults(func=_cmd_ingest)

    p_export = subs.add_parser("export", help="compute compliance and write the table bundle")
    p_export.add_argument("--store", required=True, type=Path)
    p_export.add_argument("--out", required=True, type=Path, help="bundle output directory")
    p_export.add_argument("--as-of", type=_iso_date, default=None, help="report date (default: today)")
    p_export.add_argument("--tz", default="UTC", help="zone for the default report date")
    p_export.set_defaults(func=_cmd_export)

    p_check = subs.add_parser("check", help="print the nudge shortlist from a bundle")
    p_check.add_argument("--bundle", required=True, type=Path)
    p_check.add_argument("--stale-days", type=int, default=StudyConfig().beacon_stale_days)
    p_check.set_defaults(func=_cmd_check)

    p_serve = subs.add_parser("serve", help="serve the API and dashboard")
    p_serve.add_argument("--bundle", required=True, type=Path)
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--static", type=Path, default=None, help="dashboard asset directory")
    p_serve.set_defaults(func=_cmd_serve)

    p_sim = subs.add_parser("simulate", help="generate a synthetic cohort with ground truth")
    p_sim.add_argument("--seed", required=True, type=int)
    p_sim.add_argument("--teams", type=int, default=15)
    p_sim.add_argument("--out", required=True, type=Path)
    p_sim.add_argument("--as-of", type=_iso_date, default=date(2023, 3, 20))
    p_sim.add_argument("--cadence", type=int, default=15, help="seconds between HR samples")
    p_sim.add_argument("--stagger", type=int, default=21, help="max days of start staggering")
    p_sim.add_argument("--elapsed-days", type=int, default=None, help="pin a uniform elapsed history")
    p_sim.add_argument("--night-nonwear", type=_probability, default=0.0)
    p_sim.add_argument("--window-dropout", type=_probability, default=0.0)
    p_sim.add_argument("--survey-completion", type=_probability, default=1.0)
    p_sim.add_argument("--sync-delay", type=_probability, default=0.0)
    p_sim.add_argument("--dead-device", type=_probability, default=0.0)
    p_sim.add_argument("--never-sighted", type=_probability, default=0.0)
    p_sim.add_argument("--beacon-dead", type=_probability, default=0.0)
    p_sim.set_defaults(func=_cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, BundleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
