"""The deterministic run loop and the mode-comparison driver.

Each tick advances the loop in a fixed order:

    plant -> features -> trust checks -> supervisor -> policy
          -> clamp/slew -> actuator -> device

so a run's outputs are a pure function of (scenario, seed). The plant draws
its randomness from child streams spawned from the scenario seed — one for
the physiological process, one for signal synthesis, one for sensor noise —
so plant realizations do not shift when the controller behaves differently.

Quality gating: incremental policies (thresholds, setpoint regulation) hold
their previous command on any tick whose measurement quality is not OK; the
supervisor separately decides whether enough has gone wrong to leave
Automated mode altogether.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    Dose,
    EventRecord,
    QUALITY_OK,
    SEVERITY_ALERT,
    SEVERITY_FAULT,
    Window,
    charge_per_tick,
    teed_rate,
)
from .control import (
    BangBangResponsive,
    DualThreshold,
    EcapSetpoint,
    ManualFixed,
    PolicyState,
    Proportional,
    SingleThreshold,
    bang_bang_responsive_step,
    dual_threshold_step,
    ecap_setpoint_step,
    manual_fixed_step,
    proportional_step,
    single_threshold_step,
)
from .features import (
    SignalQualityLimits,
    area_under_curve,
    band_power,
    detect,
    ecap_range_check,
    half_wave_count,
    line_length,
    signal_quality,
)
from .metrics import CLAMP_CODES, Metrics, step_response_metrics
from .plant import (
    actuator_apply,
    beta_lfp_frame,
    device_step,
    distance_profile,
    ecap_true,
    ieeg_frame,
    seizure_step,
)
from .safety import (
    EVENT_RUN_FAULT,
    EVENT_TRUST_FAIL,
    EventLog,
    MODE_AUTOMATED,
    MODE_FALLBACK,
    SupervisorState,
    TrustInputs,
    clamp_and_slew,
    fallback_dose,
    supervisor_step,
    therapy_and_episode_budget_step,
    trust_check_step,
)
from .scenario import BetaPlantSpec, EcapPlantSpec, IeegPlantSpec, Scenario


@dataclass
class RunResult:
    """Everything one run produces: time series, event log, metrics."""

    scenario: Scenario
    biomarker: np.ndarray          # NaN where no measurement was taken
    quality: list
    setpoint: np.ndarray           # NaN where the policy has no setpoint yet
    commanded_mA: np.ndarray
    delivered_mA: np.ndarray
    mode: list
    distance_mm: Optional[np.ndarray]
    seizing: Optional[np.ndarray]
    teed_cum: np.ndarray
    events: EventLog
    metrics: Metrics
    initial_delivered_mA: float
    aborted: bool = False

    @property
    def n_ticks(self) -> int:
        return self.delivered_mA.size


def _policy_setpoint(policy) -> Optional[float]:
    if isinstance(policy, EcapSetpoint):
        return policy.target_uV
    if isinstance(policy, SingleThreshold):
        return policy.threshold
    if isinstance(policy, DualThreshold):
        return policy.upper
    if isinstance(policy, Proportional):
        return policy.reference
    return None


def comparison_target(policy) -> Optional[float]:
    """The value biomarker deviations are measured against in comparisons."""
    if isinstance(policy, EcapSetpoint):
        return policy.target_uV
    if isinstance(policy, SingleThreshold):
        return policy.threshold
    if isinstance(policy, DualThreshold):
        return 0.5 * (policy.lower + policy.upper)
    if isinstance(policy, Proportional):
        return policy.reference
    return None


class _DetectorTool:
    """One detection feature plus its threshold state.

    Streaming twin of ``features.AdaptiveThresholdState``: the baseline
    median comes from a bisect-maintained sorted list instead of re-sorting
    the window every tick, and produces bit-identical thresholds (checked
    against ``adaptive_threshold`` in the test suite).
    """

    def __init__(self, spec) -> None:
        self.spec = spec
        self.fixed = spec.threshold_mode == "fixed"
        self._long: deque = deque()
        self._long_sorted: list = []
        self._short: deque = deque(maxlen=spec.short_window_ticks)

    def feature_value(self, frame: np.ndarray) -> float:
        if self.spec.feature == "line_length":
            return line_length(frame)
        if self.spec.feature == "area":
            return area_under_curve(frame)
        return float(half_wave_count(frame, self.spec.half_wave))

    def _baseline_median(self) -> float:
        s = self._long_sorted
        mid = len(s) // 2
        if len(s) % 2:
            return s[mid]
        return (s[mid - 1] + s[mid]) / 2.0

    def step(self, frame: np.ndarray) -> tuple[float, Optional[float], bool]:
        """Returns (smoothed value, threshold or None, flag)."""
        value = self.feature_value(frame)
        # Threshold from the baseline as it stood BEFORE this tick's value,
        # so a fresh event cannot inflate its own detection threshold.
        if self.fixed:
            threshold: Optional[float] = self.spec.fixed_value
        elif self._long_sorted:
            threshold = self.spec.multiplier * self._baseline_median()
        else:
            threshold = None

        if len(self._long) == self.spec.long_window_ticks:
            oldest = self._long.popleft()
            del self._long_sorted[bisect_left(self._long_sorted, oldest)]
        self._long.append(value)
        insort(self._long_sorted, value)
        self._short.append(value)

        smoothed = sum(self._short) / len(self._short)
        flag = threshold is not None and smoothed > threshold
        return smoothed, threshold, flag


def run_scenario(scenario: Scenario) -> RunResult:
    """Execute a validated scenario; outputs are determined by (scenario, seed)."""
    tb = scenario.timebase
    n = tb.n_ticks
    dt = tb.dt_s
    limits = scenario.limits
    trust_cfg = scenario.trust
    fb_cfg = scenario.fallback
    policy = scenario.policy
    plant = scenario.plant
    device = scenario.device
    baseline = scenario.baseline_dose

    streams = np.random.SeedSequence(scenario.seed).spawn(3)
    plant_rng = np.random.default_rng(streams[0])    # physiological process
    signal_rng = np.random.default_rng(streams[1])   # frame synthesis
    sensor_rng = np.random.default_rng(streams[2])   # measurement noise

    # Precomputed plant trajectories that are pure functions of the tick.
    distance: Optional[np.ndarray] = None
    if isinstance(plant, EcapPlantSpec):
        distance = distance_profile(plant.track, plant.base_distance_mm, n)
        plant.params.validate_over_range(float(distance.min()), float(distance.max()))

    magnet = np.zeros(n, dtype=bool)
    for start, end in scenario.magnet_intervals:
        magnet[start:min(end, n)] = True

    # Per-kind feature state.
    tools: list[_DetectorTool] = []
    combinator = "OR"
    if isinstance(plant, IeegPlantSpec):
        tools = [_DetectorTool(t) for t in scenario.features.tools]
        combinator = scenario.features.combinator
        seiz_state = plant.seizures
    smooth_win: Optional[Window] = None
    if isinstance(plant, BetaPlantSpec):
        smooth_ticks = max(1, round(scenario.features.smooth_s / dt))
        smooth_win = Window(smooth_ticks)
    sq_limits = SignalQualityLimits(saturation_uV=device.amplifier_saturation_uV)

    sup = SupervisorState()
    pol_state = PolicyState()
    budgets = scenario.budgets
    log = EventLog()

    prev_delivered = actuator_apply(baseline, device)
    initial_delivered = prev_delivered.amplitude_mA
    last_good: Optional[Dose] = None

    biomarker = np.full(n, np.nan)
    setpoint_col = np.full(n, np.nan)
    commanded = np.zeros(n)
    delivered_arr = np.zeros(n)
    teed_cum = np.zeros(n)
    quality_col: list = [""] * n
    mode_col: list = [""] * n
    seizing_arr = np.zeros(n, dtype=bool) if isinstance(plant, IeegPlantSpec) else None

    teed = 0.0
    fallback_ticks = 0
    aborted = False

    ok_only = frozenset({QUALITY_OK})

    try:
        for t in range(n):
            in_reset = sup.in_reset

            # ---- plant + features -------------------------------------
            measured: Optional[float] = None
            qual = ok_only
            detection = False
            threshold_now: Optional[float] = _policy_setpoint(policy)

            if isinstance(plant, EcapPlantSpec):
                if not in_reset:
                    est = ecap_true(
                        prev_delivered.amplitude_mA, float(distance[t]), plant.params
                    )
                    if plant.sensor_noise_sd_uV > 0:
                        est += sensor_rng.normal(0.0, plant.sensor_noise_sd_uV)
                    measured, qual = ecap_range_check(
                        est, device.amplifier_saturation_uV
                    )
            elif isinstance(plant, BetaPlantSpec):
                if not in_reset:
                    frame = beta_lfp_frame(prev_delivered, t, plant.cfg, signal_rng)
                    qual = signal_quality(frame, sq_limits)
                    raw_power = band_power(
                        frame,
                        scenario.features.band_lo_hz,
                        scenario.features.band_hi_hz,
                        plant.cfg.fs_hz,
                    )
                    smooth_win = smooth_win.push(raw_power)
                    measured = float(np.mean(smooth_win.samples))
            else:  # ieeg
                seiz_state, seizing_now = seizure_step(
                    seiz_state, not prev_delivered.is_off, t, dt, plant_rng
                )
                seizing_arr[t] = seizing_now
                if not in_reset:
                    frame = ieeg_frame(seizing_now, plant.cfg, signal_rng, t)
                    qual = signal_quality(frame, sq_limits)
                    flags = []
                    primary_value = None
                    primary_threshold = None
                    for i, tool in enumerate(tools):
                        value, thr, flag = tool.step(frame)
                        flags.append(flag)
                        if i == 0:
                            primary_value, primary_threshold = value, thr
                    detection = detect(flags, combinator)
                    measured = primary_value
                    threshold_now = primary_threshold

            # ---- trust checks -----------------------------------------
            verdict_pass = False
            if not in_reset:
                inputs = TrustInputs(
                    quality=qual,
                    ecap_est_uV=measured if isinstance(plant, EcapPlantSpec) else None,
                    battery_v=device.battery_v,
                    eos_threshold_v=device.eos_threshold_v,
                    impedance_ohm=device.impedance_of(baseline.contact_set),
                    dc_leak=device.dc_leak_flag,
                    biomarker=measured,
                )
                sup, verdict_pass, failed = trust_check_step(inputs, trust_cfg, sup)
                if not verdict_pass and sup.fail_streak == 1:
                    log.append(
                        EventRecord(
                            t, SEVERITY_ALERT, EVENT_TRUST_FAIL, {"checks": list(failed)}
                        )
                    )

            # ---- supervisor -------------------------------------------
            sup, sup_events = supervisor_step(
                sup,
                verdict_pass,
                bool(magnet[t]),
                device,
                trust_cfg,
                fb_cfg,
                t,
                last_good_candidate=last_good,
            )
            log.extend(sup_events)
            mode = sup.mode

            # ---- policy -----------------------------------------------
            # Incremental policies hold their previous command on any tick
            # whose measurement quality is not OK.
            gated = measured if (measured is not None and qual == ok_only) else None
            therapy_started = False
            if mode == MODE_AUTOMATED:
                if isinstance(policy, ManualFixed):
                    cmd = manual_fixed_step(policy)
                elif isinstance(policy, BangBangResponsive):
                    pol_state, cmd, therapy_started = bang_bang_responsive_step(
                        detection, pol_state, policy
                    )
                elif gated is None:
                    cmd = prev_delivered
                elif isinstance(policy, SingleThreshold):
                    cmd = single_threshold_step(gated, prev_delivered, policy)
                elif isinstance(policy, DualThreshold):
                    cmd = dual_threshold_step(gated, prev_delivered, policy)
                elif isinstance(policy, Proportional):
                    cmd = proportional_step(gated, prev_delivered, policy)
                elif isinstance(policy, EcapSetpoint):
                    cmd = ecap_setpoint_step(gated, prev_delivered, policy)
                else:
                    raise TypeError(f"unknown policy {type(policy).__name__}")
            elif mode == MODE_FALLBACK:
                cmd = fallback_dose(fb_cfg, sup, baseline)
                fallback_ticks += 1
            else:
                # Magnet suspension or a latched reset: stimulation off.
                cmd = prev_delivered.with_amplitude(0.0)

            # ---- budgets ----------------------------------------------
            budgets, allowed, budget_events = therapy_and_episode_budget_step(
                budgets, detection, therapy_started, t
            )
            log.extend(budget_events)
            if therapy_started and not allowed:
                cmd = cmd.off()
                pol_state = replace(pol_state, plan_remaining=())

            # ---- safety clamps + actuator -----------------------------
            legal, clamp_events = clamp_and_slew(cmd, limits, prev_delivered, t)
            log.extend(clamp_events)
            delivered = actuator_apply(legal, device)

            # A "known good" dose is one the automated loop chose while trust
            # passed; forced-off doses (suspend/reset) never qualify.
            if mode == MODE_AUTOMATED and verdict_pass:
                last_good = delivered

            # ---- device -----------------------------------------------
            device = device_step(device, charge_per_tick(delivered, dt))
            teed += teed_rate(delivered) * dt

            # ---- record -----------------------------------------------
            if measured is not None:
                biomarker[t] = measured
            if threshold_now is not None:
                setpoint_col[t] = threshold_now
            quality_col[t] = "+".join(sorted(qual)) if measured is not None else ""
            commanded[t] = cmd.amplitude_mA
            delivered_arr[t] = delivered.amplitude_mA
            mode_col[t] = mode
            teed_cum[t] = teed
            prev_delivered = delivered
    except Exception as e:  # invariant breach: abort loudly, never corrupt
        log.append(
            EventRecord(
                t,
                SEVERITY_FAULT,
                EVENT_RUN_FAULT,
                {"error": f"{type(e).__name__}: {e}"},
            )
        )
        aborted = True
        n = t
        biomarker = biomarker[:n]
        setpoint_col = setpoint_col[:n]
        commanded = commanded[:n]
        delivered_arr = delivered_arr[:n]
        teed_cum = teed_cum[:n]
        quality_col = quality_col[:n]
        mode_col = mode_col[:n]
        if distance is not None:
            distance = distance[:n]
        if seizing_arr is not None:
            seizing_arr = seizing_arr[:n]

    # ---- metrics ---------------------------------------------------------
    mcfg = scenario.metrics_cfg
    time_in_range: Optional[float] = None
    if mcfg.biomarker_range is not None and n > 0:
        lo, hi = mcfg.biomarker_range
        in_range = (biomarker >= lo) & (biomarker <= hi)
        time_in_range = float(np.count_nonzero(in_range)) / n

    sr = None
    if mcfg.step_response is not None and n > mcfg.step_response.step_tick:
        target = comparison_target(policy)
        if target is not None and target != 0:
            sr = step_response_metrics(
                biomarker, target, mcfg.step_response.step_tick,
                mcfg.step_response.tol_frac, dt,
            )

    if isinstance(plant, IeegPlantSpec):
        seizure_count = seiz_state.onset_count
        early = seiz_state.early_termination_count
        seizure_ticks = int(np.count_nonzero(seizing_arr))
    else:
        seizure_count = early = seizure_ticks = 0

    run_metrics = Metrics(
        teed_total=teed,
        time_in_range_frac=time_in_range,
        seizure_count=seizure_count,
        seizure_ticks_total=seizure_ticks,
        early_termination_count=early,
        fallback_frac=fallback_ticks / n if n else 0.0,
        limit_clamp_count=sum(log.count(c) for c in CLAMP_CODES),
        step_response=sr,
    )

    return RunResult(
        scenario=scenario,
        biomarker=biomarker,
        quality=quality_col,
        setpoint=setpoint_col,
        commanded_mA=commanded,
        delivered_mA=delivered_arr,
        mode=mode_col,
        distance_mm=distance,
        seizing=seizing_arr,
        teed_cum=teed_cum,
        events=log,
        metrics=run_metrics,
        initial_delivered_mA=initial_delivered,
        aborted=aborted,
    )


def fixed_arm_scenario(scenario: Scenario) -> Scenario:
    """The manual-loop twin: same plant and seed, policy pinned to the baseline dose."""
    b = scenario.baseline_dose
    new_raw = dict(scenario.raw)
    new_raw["policy"] = {
        "kind": "ManualFixed",
        "dose": {
            "amplitude_mA": b.amplitude_mA,
            "pulse_width_us": b.pulse_width_us,
            "frequency_hz": b.frequency_hz,
            "contact_set": b.contact_set,
        },
    }
    return replace(
        scenario,
        policy=ManualFixed(dose=b),
        name=scenario.name + "_fixed",
        raw=new_raw,
    )


@dataclass
class ModeComparison:
    """Paired metrics: configured automated policy versus fixed-output baseline."""

    automated: RunResult
    fixed: RunResult
    target: Optional[float]
    automated_variance_about_target: Optional[float]
    fixed_variance_about_target: Optional[float]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "automated": {
                "metrics": self.automated.metrics.to_dict(),
                "variance_about_target": self.automated_variance_about_target,
            },
            "fixed": {
                "metrics": self.fixed.metrics.to_dict(),
                "variance_about_target": self.fixed_variance_about_target,
            },
        }


def _variance_about(series: np.ndarray, target: float) -> float:
    dev = series - target
    return float(np.nanmean(dev * dev))


def compare_modes(scenario: Scenario) -> ModeComparison:
    """Run the scenario as configured and as a fixed-output manual loop.

    Both arms use the identical seed, so plant disturbance realizations
    match tick for tick; the only difference is who sets the dose.
    """
    if isinstance(scenario.policy, ManualFixed):
        raise ValueError("compare_modes needs an automated policy to compare against")
    auto = run_scenario(scenario)
    fixed = run_scenario(fixed_arm_scenario(scenario))
    target = comparison_target(scenario.policy)
    va = _variance_about(auto.biomarker, target) if target is not None else None
    vf = _variance_about(fixed.biomarker, target) if target is not None else None
    return ModeComparison(
        automated=auto,
        fixed=fixed,
        target=target,
        automated_variance_about_target=va,
        fixed_variance_about_target=vf,
    )


def sweep(scenario: Scenario, n_seeds: int) -> list[RunResult]:
    """Run ``n_seeds`` independent replicates seeded base, base+1, ..."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    return [run_scenario(scenario.with_seed(scenario.seed + i)) for i in range(n_seeds)]
