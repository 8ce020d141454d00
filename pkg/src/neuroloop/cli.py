"""Command-line entry points.

Subcommands:

    validate <scenario.json>                  design-checklist report
    run      <scenario.json> --out DIR        execute one run (--seed overrides file)
    compare  <scenario.json> --out DIR        automated vs fixed-output twin
    sweep    <scenario.json> --seeds N --out DIR   N independent seeds + aggregate
    replay   <rundir>                         re-verify stored outputs

Exit codes: 0 ok, 2 validation failure, 3 runtime fault (or replay mismatch).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import compare_modes, run_scenario, sweep
from .metrics import scan_delivered_series
from .outputs import (
    aggregate_summaries,
    fault_count,
    replay_run,
    scan_pulse_width_us,
    write_run,
)
from .scenario import (
    ScenarioParseError,
    scenario_from_dict,
    load_scenario_file,
    validate_scenario,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_FAULT = 3


def _load_and_validate(path: str):
    """Parse + checklist-validate; returns (raw, report)."""
    raw = load_scenario_file(path)
    return raw, validate_scenario(raw)


def _print_report(report) -> None:
    if report.ok:
        print("ok: scenario passes the design checklist")
        return
    print(f"FAIL: {len(report.findings)} finding(s)")
    for f in report.findings:
        print(f"  [{f.checklist_item}] {f.message}")


def cmd_validate(args) -> int:
    try:
        _, report = _load_and_validate(args.scenario)
    except ScenarioParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    _print_report(report)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _build_checked(args):
    raw, report = _load_and_validate(args.scenario)
    if not report.ok:
        _print_report(report)
        return None
    scenario = scenario_from_dict(raw)
    if getattr(args, "seed", None) is not None:
        scenario = scenario.with_seed(args.seed)
    return scenario


def cmd_run(args) -> int:
    try:
        scenario = _build_checked(args)
    except ScenarioParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if scenario is None:
        return EXIT_VALIDATION
    result = run_scenario(scenario)
    outdir = write_run(result, args.out)
    print(f"wrote {outdir}/timeseries.csv events.jsonl summary.json")
    if fault_count(result) > 0 or result.aborted:
        print(f"run recorded {fault_count(result)} fault event(s)", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        scenario = _build_checked(args)
    except ScenarioParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if scenario is None:
        return EXIT_VALIDATION
    comparison = compare_modes(scenario)
    out = Path(args.out)
    write_run(comparison.automated, out / "automated")
    write_run(comparison.fixed, out / "fixed")
    (out / "comparison.json").write_text(
        json.dumps(comparison.to_dict(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {out}/comparison.json")
    if fault_count(comparison.automated) or fault_count(comparison.fixed):
        return EXIT_FAULT
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        scenario = _build_checked(args)
    except ScenarioParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if scenario is None:
        return EXIT_VALIDATION
    results = sweep(scenario, args.seeds)
    out = Path(args.out)
    violations = 0
    for r in results:
        write_run(r, out / f"seed_{r.scenario.seed}")
        scan = scan_delivered_series(
            r.delivered_mA,
            r.scenario.limits,
            scan_pulse_width_us(r.scenario),
            initial_mA=r.initial_delivered_mA,
        )
        violations += len(scan.violations)
    agg = aggregate_summaries(results)
    agg["safety_violations_total"] = violations
    (out / "aggregate.json").write_text(
        json.dumps(agg, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {out}/aggregate.json ({len(results)} runs)")
    if violations or any(fault_count(r) for r in results):
        return EXIT_FAULT
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        report = replay_run(args.rundir)
    except (OSError, ScenarioParseError, json.JSONDecodeError) as e:
        print(f"replay error: {e}", file=sys.stderr)
        return EXIT_FAULT
    print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    return EXIT_OK if report.ok else EXIT_FAULT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="neuroloop",
        description="Deterministic simulator for closed-loop neurostimulation controllers",
    )
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a scenario against the design checklist")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="execute a scenario")
    r.add_argument("scenario")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None, help="override the file's seed")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="automated policy vs fixed-output baseline")
    c.add_argument("scenario")
    c.add_argument("--out", required=True)
    c.add_argument("--seed", type=int, default=None)
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", help="run N independent seeds and aggregate")
    s.add_argument("scenario")
    s.add_argument("--seeds", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("replay", help="re-verify a stored run directory")
    rp.add_argument("rundir")
    rp.set_defaults(func=cmd_replay)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
