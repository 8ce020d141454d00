"""Adaptive versus continuous deep brain stimulation on the beta-band plant.

Runs the shipped adbs_parkinsons scenario both ways with the same seed:
once with its dual-threshold controller, once with a fixed-output arm at
the same baseline dose (the continuous-stimulation twin). The plant's
slow sleep-wake modulation means a fixed dose over-suppresses half the
time; the adaptive arm backs off instead, spending less energy while
keeping the biomarker inside its band more of the time.

Run:  python demos/04_adaptive_dbs.py
"""

from pathlib import Path

import numpy as np

from neuroloop import compare_modes, load_scenario

scenario = load_scenario(
    Path(__file__).resolve().parent.parent / "scenarios" / "adbs_parkinsons.json"
)
cmp = compare_modes(scenario)
auto, fixed = cmp.automated, cmp.fixed
dt = scenario.timebase.dt_s

print(f"scenario: {scenario.name}  ({auto.n_ticks * dt / 60:.0f} min simulated, "
      f"identical seed and plant realization in both arms)")
band = scenario.metrics_cfg.biomarker_range
print(f"regulation band: beta power in [{band[0]}, {band[1]}] uV^2\n")

rows = [
    ("energy proxy (TEED total)", auto.metrics.teed_total, fixed.metrics.teed_total),
    ("time in range", auto.metrics.time_in_range_frac, fixed.metrics.time_in_range_frac),
    ("mean delivered mA", float(auto.delivered_mA.mean()), float(fixed.delivered_mA.mean())),
    ("mean beta power", float(np.nanmean(auto.biomarker)), float(np.nanmean(fixed.biomarker))),
]
print(f"{'':28s}  {'adaptive':>12s}  {'continuous':>12s}")
for name, a, f in rows:
    print(f"{name:28s}  {a:12.3f}  {f:12.3f}")

saving = 1.0 - auto.metrics.teed_total / fixed.metrics.teed_total
print(f"\nadaptive energy saving: {saving:.0%} of the continuous arm's delivery")

# Show the adaptation over the sleep-wake cycle: amplitude every minute.
print("\n  time   adaptive_mA  continuous_mA  beta_adaptive")
for t in range(0, auto.n_ticks, 240):
    print(f"{t * dt / 60:5.0f} min {auto.delivered_mA[t]:10.2f}"
          f"  {fixed.delivered_mA[t]:13.2f}  {auto.biomarker[t]:12.3f}")

print(
    "\nThe adaptive arm rides the modulation down to ~2 mA in the troughs"
    "\nand only climbs when beta power pushes on the upper bound; the fixed"
    "\narm pays full price around the clock and still drifts below the band"
    "\nwhenever the cycle bottoms out."
)
