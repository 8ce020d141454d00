"""Control policies: pure step functions from biomarker inputs to dose commands.

Six policy families are provided:

  * ManualFixed         — constant dose, ignores every input.
  * BangBangResponsive  — burst delivery triggered by a detection flag,
                          capped at a maximum number of therapies per event,
                          re-armed only after the flag clears.
  * SingleThreshold     — step the amplitude up or down around one threshold.
  * DualThreshold       — hold inside a band, step only outside it.
  * Proportional        — amplitude proportional to the excess over a reference.
  * EcapSetpoint        — incremental regulation of an evoked response toward
                          a target, one update per pulse/tick.

Policies emit raw commands. Clamping, slew limiting, and charge limiting all
happen downstream in the safety module so that limit enforcement is testable
in one place. Tie-breaking at thresholds is strict: equality takes the
default/hold action, never the "above" action.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from .core import ConfigurationError, Dose


@dataclass(frozen=True)
class ManualFixed:
    """Fixed-output manual loop: the configured dose, every tick."""

    dose: Dose


@dataclass(frozen=True)
class BangBangResponsive:
    """Two-state responsive output: burst sequence on detection, else off.

    A therapy is ``bursts_per_therapy`` bursts delivered back to back, each
    ``burst_duration_ticks`` of the burst dose (``inter_burst_gap_ticks`` of
    off-dose between bursts, zero by default). At most
    ``max_therapies_per_event`` therapies are delivered while the detection
    flag stays active; afterwards stimulation stays off until the flag
    clears and a new detection occurs.
    """

    burst_dose: Dose
    bursts_per_therapy: int = 1
    max_therapies_per_event: int = 5
    burst_duration_ticks: int = 1
    inter_burst_gap_ticks: int = 0

    def __post_init__(self) -> None:
        if self.bursts_per_therapy not in (1, 2):
            raise ConfigurationError("bursts_per_therapy must be 1 or 2")
        if self.max_therapies_per_event < 1:
            raise ConfigurationError("max_therapies_per_event must be >= 1")
        if self.burst_duration_ticks < 1:
            raise ConfigurationError("burst_duration_ticks must be >= 1")
        if self.inter_burst_gap_ticks < 0:
            raise ConfigurationError("inter_burst_gap_ticks must be >= 0")

    def therapy_plan(self) -> tuple:
        """Per-tick on/off schedule of one therapy, first tick first."""
        burst = (True,) * self.burst_duration_ticks
        gap = (False,) * self.inter_burst_gap_ticks
        plan: tuple = burst
        for _ in range(self.bursts_per_therapy - 1):
            plan = plan + gap + burst
        return plan


@dataclass(frozen=True)
class SingleThreshold:
    """Step the dose by ``step_mA`` against one threshold every tick.

    With ``on_above`` (the usual orientation for a biomarker elevated in the
    symptomatic state), a biomarker strictly above the threshold raises the
    amplitude and anything else lowers it.
    """

    threshold: float
    step_mA: float
    on_above: bool = True

    def __post_init__(self) -> None:
        if self.step_mA <= 0:
            raise ConfigurationError("step_mA must be positive")


@dataclass(frozen=True)
class DualThreshold:
    """Homeostatic band regulation: hold inside [lower, upper], step outside."""

    lower: float
    upper: float
    step_up_mA: float
    step_down_mA: float

    def __post_init__(self) -> None:
        if not (self.lower < self.upper):
            raise ConfigurationError("need lower < upper")
        if self.step_up_mA <= 0 or self.step_down_mA <= 0:
            raise ConfigurationError("steps must be positive")


@dataclass(frozen=True)
class Proportional:
    """Amplitude scaled to the biomarker's excess over a reference level."""

    reference: float
    gain_mA_per_unit: float

    def __post_init__(self) -> None:
        if self.gain_mA_per_unit <= 0:
            raise ConfigurationError("gain must be positive")


@dataclass(frozen=True)
class EcapSetpoint:
    """Incremental regulation of the evoked response to a target.

    Each tick (one stimulus pulse) the amplitude moves by
    ``gain_mA_per_uV * (target - estimate)`` unless the error is inside the
    deadband. Stable against a linear plant of slope k whenever
    0 < gain * k < 2.
    """

    target_uV: float
    gain_mA_per_uV: float
    deadband_uV: float = 0.0

    def __post_init__(self) -> None:
        if self.gain_mA_per_uV <= 0:
            raise ConfigurationError("gain must be positive")
        if self.deadband_uV < 0:
            raise ConfigurationError("deadband must be nonnegative")


PolicyConfig = Union[
    ManualFixed,
    BangBangResponsive,
    SingleThreshold,
    DualThreshold,
    Proportional,
    EcapSetpoint,
]


@dataclass(frozen=True)
class PolicyState:
    """Counters for the responsive policy (other policies are stateless).

    ``plan_remaining`` is the unplayed tail of the current therapy's on/off
    schedule; ``therapies_delivered_this_event`` resets only after the
    detection flag has cleared.
    """

    therapies_delivered_this_event: int = 0
    plan_remaining: tuple = ()


def manual_fixed_step(cfg: ManualFixed) -> Dose:
    """The configured dose, independent of any input."""
    return cfg.dose


def bang_bang_responsive_step(
    detected: bool, st: PolicyState, cfg: BangBangResponsive
) -> tuple[PolicyState, Dose, bool]:
    """One tick of responsive burst delivery.

    Returns (state, command, therapy_started). A therapy in flight plays to
    completion; a new therapy starts only while the flag is active and the
    per-event budget has room. When the flag is down and nothing is in
    flight, the event is over and the therapy counter re-arms.
    """
    off = cfg.burst_dose.off()

    if st.plan_remaining:
        on_now = st.plan_remaining[0]
        return (
            replace(st, plan_remaining=st.plan_remaining[1:]),
            cfg.burst_dose if on_now else off,
            False,
        )

    if detected:
        if st.therapies_delivered_this_event < cfg.max_therapies_per_event:
            plan = cfg.therapy_plan()
            return (
                PolicyState(
                    therapies_delivered_this_event=st.therapies_delivered_this_event + 1,
                    plan_remaining=plan[1:],
                ),
                cfg.burst_dose if plan[0] else off,
                True,
            )
        return st, off, False

    # Flag down, nothing in flight: event over, re-arm.
    return PolicyState(), off, False


def single_threshold_step(biomarker: float, current: Dose, cfg: SingleThreshold) -> Dose:
    """Step the amplitude against a single threshold (strictly-above triggers)."""
    above = biomarker > cfg.threshold
    increase = above if cfg.on_above else not above
    delta = cfg.step_mA if increase else -cfg.step_mA
    return current.with_amplitude(current.amplitude_mA + delta)


def dual_threshold_step(biomarker: float, current: Dose, cfg: DualThreshold) -> Dose:
    """Hold inside the band; step up above it, step down below it."""
    if biomarker > cfg.upper:
        return current.with_amplitude(current.amplitude_mA + cfg.step_up_mA)
    if biomarker < cfg.lower:
        return current.with_amplitude(current.amplitude_mA - cfg.step_down_mA)
    return current


def proportional_step(biomarker: float, template: Dose, cfg: Proportional) -> Dose:
    """Amplitude = gain * max(0, biomarker - reference); other fields from template."""
    return template.with_amplitude(
        cfg.gain_mA_per_unit * max(0.0, biomarker - cfg.reference)
    )


def ecap_setpoint_step(ecap_est: float, current: Dose, cfg: EcapSetpoint) -> Dose:
    """Move the amplitude one increment toward the evoked-response target."""
    error = cfg.target_uV - ecap_est
    if abs(error) <= cfg.deadband_uV:
        return current
    return current.with_amplitude(current.amplitude_mA + cfg.gain_mA_per_uV * error)
