"""Evoked-response regulated spinal cord stimulation: setpoint + disturbances.

Runs the shipped ecap_scs scenario. The plant activates fibres above a
distance-dependent threshold (0.8 mA per mm of electrode-cord separation);
the controller nudges the next pulse's amplitude by gain x error to hold
the evoked response at 1.0 uV. Two disturbances hit mid-run: a cough
transient at t = 5 s and a lasting posture shift at t = 15 s.

The closed-form fixed point is A* = I_th(d) + target / k: 5.0 mA at the
reference distance, 5.8 mA after the +1 mm posture step. The run should
land on both and recover from the step in well under 2 s.

Run:  python demos/05_ecap_regulated_scs.py
"""

from pathlib import Path

from neuroloop import compare_modes, load_scenario, run_scenario

scenario = load_scenario(
    Path(__file__).resolve().parent.parent / "scenarios" / "ecap_scs.json"
)
r = run_scenario(scenario)
dt = scenario.timebase.dt_s

print(f"scenario: {scenario.name}  ({r.n_ticks} pulses at {1 / dt:.0f} Hz)")
print(f"target evoked amplitude: 1.0 uV, analytic operating points: 5.0 / 5.8 mA\n")

print("  time   distance_mm  delivered_mA  evoked_uV")
for t in list(range(0, 300, 60)) + list(range(240, 290, 10)) + list(range(740, 800, 10)) + [1000, 1499]:
    print(f"{t * dt:6.2f}s  {r.distance_mm[t]:11.2f}  {r.delivered_mA[t]:12.2f}"
          f"  {r.biomarker[t]:9.3f}")

pre = float(r.delivered_mA[400:740].mean())
post = float(r.delivered_mA[1100:].mean())
print(f"\nsettled amplitude before the step: {pre:.3f} mA (analytic 5.0)")
print(f"settled amplitude after the step:  {post:.3f} mA (analytic 5.8)")

sr = r.metrics.step_response
print(f"step response at t = 15 s: response {sr.response_time_s:.2f} s, "
      f"settling {sr.settling_time_s:.2f} s, overshoot {sr.overshoot_frac:.1%}, "
      f"steady-state deviation {sr.steady_state_dev:.4f} uV")

print("\n--- fixed-output twin, same seed and disturbances ---")
cmp = compare_modes(scenario)
print(f"variance about target, automated:  {cmp.automated_variance_about_target:.5f}")
print(f"variance about target, fixed 4 mA: {cmp.fixed_variance_about_target:.5f}")
print(
    "\nWith a fixed output the posture shift permanently changes how many"
    "\nfibres each pulse recruits, so the evoked response wanders; the"
    "\nautomated loop spends a handful of pulses re-converging and then"
    "\nholds the response at target through both disturbances."
)
