"""Run output files and replay verification.

A run directory contains:

    scenario.json    — the resolved scenario (seed included), for replay
    timeseries.csv   — one row per tick, fixed column order
    events.jsonl     — one JSON object per event record
    summary.json     — run metadata plus the metrics block

All serialization here is deterministic: the same RunResult always produces
byte-identical text, which is what makes ``replay_run`` able to re-execute
a stored scenario and compare files byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .engine import RunResult, run_scenario
from .metrics import SafetyScanResult, scan_timeseries_csv
from .scenario import Scenario, scenario_from_dict

CSV_COLUMNS = (
    "tick",
    "time_s",
    "biomarker_value",
    "biomarker_quality",
    "setpoint_or_threshold",
    "commanded_mA",
    "delivered_mA",
    "supervisor_mode",
    "distance_mm_or_blank",
    "seizing_flag_or_blank",
    "teed_cum",
)


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest round-trip decimal form.
    return repr(float(x))


def _fmt_or_blank(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return _fmt(x)


def timeseries_csv_text(result: RunResult) -> str:
    """Render the per-tick table; header row mandatory, '.' decimal point."""
    dt = result.scenario.timebase.dt_s
    lines = [",".join(CSV_COLUMNS)]
    dist = result.distance_mm
    seiz = result.seizing
    for t in range(result.n_ticks):
        lines.append(
            ",".join(
                (
                    str(t),
                    _fmt(t * dt),
                    _fmt_or_blank(result.biomarker[t]),
                    result.quality[t],
                    _fmt_or_blank(result.setpoint[t]),
                    _fmt(result.commanded_mA[t]),
                    _fmt(result.delivered_mA[t]),
                    result.mode[t],
                    _fmt_or_blank(dist[t]) if dist is not None else "",
                    ("1" if seiz[t] else "0") if seiz is not None else "",
                    _fmt(result.teed_cum[t]),
                )
            )
        )
    return "\n".join(lines) + "\n"


def events_jsonl_text(result: RunResult) -> str:
    out = []
    for rec in result.events:
        out.append(json.dumps(rec.to_dict(), sort_keys=True, separators=(",", ":")))
    return "\n".join(out) + ("\n" if out else "")


def fault_count(result: RunResult) -> int:
    return sum(1 for r in result.events if r.severity == "Fault")


def summary_json_text(result: RunResult) -> str:
    doc = {
        "name": result.scenario.name,
        "seed": result.scenario.seed,
        "n_ticks": result.n_ticks,
        "dt_s": result.scenario.timebase.dt_s,
        "aborted": result.aborted,
        "event_count": len(result.events),
        "fault_count": fault_count(result),
        "metrics": result.metrics.to_dict(),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def scenario_json_text(scenario: Scenario) -> str:
    return json.dumps(scenario.raw, sort_keys=True, indent=2) + "\n"


def scan_pulse_width_us(scenario: Scenario) -> float:
    """Widest pulse any configured dose can deliver (for the charge scan)."""
    widths = [scenario.baseline_dose.pulse_width_us]
    for holder in (scenario.policy, scenario.fallback):
        dose = getattr(holder, "dose", None) or getattr(holder, "burst_dose", None)
        if dose is not None:
            widths.append(dose.pulse_width_us)
    return max(widths)


def write_run(result: RunResult, outdir) -> Path:
    """Write a run's outputs into ``outdir`` (created if needed)."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    flags = result.scenario.outputs
    (out / "scenario.json").write_text(
        scenario_json_text(result.scenario), encoding="utf-8"
    )
    if flags.timeseries:
        (out / "timeseries.csv").write_text(timeseries_csv_text(result), encoding="utf-8")
    if flags.events:
        (out / "events.jsonl").write_text(events_jsonl_text(result), encoding="utf-8")
    if flags.summary:
        (out / "summary.json").write_text(summary_json_text(result), encoding="utf-8")
    return out


@dataclass(frozen=True)
class ReplayReport:
    """Result of re-running a stored scenario against its stored outputs."""

    ok: bool
    files_matched: dict
    safety_scan: Optional[SafetyScanResult]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "files_matched": dict(self.files_matched),
            "safety_scan_ok": None if self.safety_scan is None else self.safety_scan.ok,
            "violations": (
                [] if self.safety_scan is None else list(self.safety_scan.violations)
            ),
        }


def replay_run(rundir) -> ReplayReport:
    """Re-execute the stored scenario and verify determinism plus safety.

    Re-runs the scenario found in ``rundir/scenario.json``, compares every
    stored output byte for byte against the fresh serialization, and runs
    the independent limit scan over the stored timeseries.csv.
    """
    rundir = Path(rundir)
    scenario = scenario_from_dict(
        json.loads((rundir / "scenario.json").read_text(encoding="utf-8"))
    )
    fresh = run_scenario(scenario)

    expectations = {
        "timeseries.csv": timeseries_csv_text,
        "events.jsonl": events_jsonl_text,
        "summary.json": summary_json_text,
    }
    matched = {}
    for fname, render in expectations.items():
        path = rundir / fname
        if not path.exists():
            continue
        matched[fname] = path.read_text(encoding="utf-8") == render(fresh)

    scan = None
    ts = rundir / "timeseries.csv"
    if ts.exists():
        scan = scan_timeseries_csv(ts, scenario.limits, scan_pulse_width_us(scenario))

    ok = all(matched.values()) and bool(matched) and (scan is None or scan.ok)
    return ReplayReport(ok=ok, files_matched=matched, safety_scan=scan)


def aggregate_summaries(results: list) -> dict:
    """Mean/min/max of the scalar metrics over a seed sweep."""
    fields = (
        "teed_total",
        "time_in_range_frac",
        "seizure_count",
        "seizure_ticks_total",
        "early_termination_count",
        "fallback_frac",
        "limit_clamp_count",
    )
    agg: dict = {"n_runs": len(results), "seeds": [r.scenario.seed for r in results]}
    for f in fields:
        vals = [getattr(r.metrics, f) for r in results]
        if any(v is None for v in vals):
            agg[f] = None
            continue
        arr = np.asarray(vals, dtype=float)
        agg[f] = {
            "mean": float(arr.mean()),
            "min": float(arr.min()),
            "max": float(arr.max()),
        }
    agg["fault_count_total"] = int(sum(fault_count(r) for r in results))
    return agg
