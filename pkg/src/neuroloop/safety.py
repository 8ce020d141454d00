"""Risk-mitigation machinery: limits, trust checks, supervisor, budgets, log.

The safety layer sits between the control policy and the actuator. Every
command — whatever mode the loop is in — passes through ``clamp_and_slew``,
so amplitude bounds, slew limits, and charge limits hold unconditionally.
Trust checks watch the sensing and device assumptions; enough consecutive
failures drive the supervisor from Automated into a fallback mode, and only
enough consecutive passes let it back in. Magnet application suspends
therapy and restores the previous mode on removal. End-of-service and
DC-leak conditions latch the device into reset states that only an explicit
clinician reset can leave.

All transitions and limit interventions are recorded in an append-only
event log whose codes are stable strings (see EVENT_* constants); replaying
the MODE_* records reconstructs the mode trajectory exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from .core import (
    ConfigurationError,
    Dose,
    DoseLimits,
    EventRecord,
    QUALITY_OK,
    SEVERITY_ALERT,
    SEVERITY_FAULT,
    SEVERITY_INFO,
    charge_per_pulse,
)
from .plant import DeviceState

# Supervisor modes (stable strings, used in the timeseries output).
MODE_AUTOMATED = "Automated"
MODE_FALLBACK = "Fallback"
MODE_SUSPENDED_MAGNET = "SuspendedMagnet"
MODE_EOS_RESET = "EosReset"
MODE_DC_LEAK_RESET = "DcLeakReset"

RESET_MODES = (MODE_EOS_RESET, MODE_DC_LEAK_RESET)

# Event codes (stable strings, emitted as JSON-lines records).
EVENT_MODE_AUTOMATED = "MODE_AUTOMATED"
EVENT_MODE_FALLBACK = "MODE_FALLBACK"
EVENT_MODE_SUSPEND_MAGNET = "MODE_SUSPEND_MAGNET"
EVENT_MODE_EOS_RESET = "MODE_EOS_RESET"
EVENT_MODE_DC_LEAK_RESET = "MODE_DC_LEAK_RESET"
EVENT_LIMIT_CLAMP = "LIMIT_CLAMP"
EVENT_SLEW_CLAMP = "SLEW_CLAMP"
EVENT_CHARGE_CLAMP = "CHARGE_CLAMP"
EVENT_TRUST_FAIL = "TRUST_FAIL"
EVENT_TRUST_REENTER = "TRUST_REENTER"
EVENT_BUDGET_DENY = "BUDGET_DENY"
EVENT_DAY_ROLLOVER = "DAY_ROLLOVER"
EVENT_RUN_FAULT = "RUN_FAULT"

MODE_EVENT_CODES = {
    MODE_AUTOMATED: EVENT_MODE_AUTOMATED,
    MODE_FALLBACK: EVENT_MODE_FALLBACK,
    MODE_SUSPENDED_MAGNET: EVENT_MODE_SUSPEND_MAGNET,
    MODE_EOS_RESET: EVENT_MODE_EOS_RESET,
    MODE_DC_LEAK_RESET: EVENT_MODE_DC_LEAK_RESET,
}

# Trust check names.
CHECK_QUALITY_OK = "QualityOK"
CHECK_ECAP_NONNEGATIVE = "EcapNonNegative"
CHECK_BATTERY_ABOVE_EOS = "BatteryAboveEos"
CHECK_IMPEDANCE_IN_RANGE = "ImpedanceInRange"
CHECK_NO_DC_LEAK = "NoDcLeak"
CHECK_BIOMARKER_IN_PHYS_RANGE = "BiomarkerInPhysRange"

ALL_CHECKS = (
    CHECK_QUALITY_OK,
    CHECK_ECAP_NONNEGATIVE,
    CHECK_BATTERY_ABOVE_EOS,
    CHECK_IMPEDANCE_IN_RANGE,
    CHECK_NO_DC_LEAK,
    CHECK_BIOMARKER_IN_PHYS_RANGE,
)


class EventLog:
    """Append-only run log, single writer, emission order preserved.

    An optional capacity turns the log into a ring for Info/Alert records;
    Fault records are never evicted regardless of size.
    """

    def __init__(self, capacity: Optional[int] = None) -> None:
        if capacity is not None and capacity < 1:
            raise ConfigurationError("capacity must be positive or None")
        self._capacity = capacity
        self._records: list[EventRecord] = []

    def append(self, rec: EventRecord) -> None:
        self._records.append(rec)
        if self._capacity is not None and len(self._records) > self._capacity:
            for i, r in enumerate(self._records):
                if r.severity != SEVERITY_FAULT:
                    del self._records[i]
                    break
            # All-Fault logs are allowed to exceed capacity.

    def extend(self, recs) -> None:
        for r in recs:
            self.append(r)

    @property
    def records(self) -> tuple:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def count(self, code: str) -> int:
        return sum(1 for r in self._records if r.code == code)


def log_event(log: EventLog, rec: EventRecord) -> EventLog:
    """Append ``rec`` to ``log``; returns the same log for chaining."""
    log.append(rec)
    return log


# ---------------------------------------------------------------------------
# Dose limiting
# ---------------------------------------------------------------------------

def clamp_and_slew(
    command: Dose,
    limits: DoseLimits,
    prev_delivered: Dose,
    tick: int = 0,
) -> tuple[Dose, list[EventRecord]]:
    """Legalize a dose command; never raises, always yields a compliant dose.

    Order is fixed: slew-limit the amplitude relative to the previously
    delivered dose, then clamp into [amp_min, amp_max] (clamping last so the
    result is always in range even when the slew alone would not reach it),
    then reduce the amplitude if the per-pulse charge limit is exceeded.
    Each intervention emits an Alert event.
    """
    events: list[EventRecord] = []
    amp = command.amplitude_mA

    lo = prev_delivered.amplitude_mA - limits.max_slew_mA_per_tick
    hi = prev_delivered.amplitude_mA + limits.max_slew_mA_per_tick
    slewed = min(max(amp, lo), hi)
    if slewed != amp:
        events.append(
            EventRecord(
                tick,
                SEVERITY_ALERT,
                EVENT_SLEW_CLAMP,
                {"requested_mA": amp, "slewed_mA": slewed},
            )
        )

    clamped = min(max(slewed, limits.amp_min_mA), limits.amp_max_mA)
    if clamped != slewed:
        events.append(
            EventRecord(
                tick,
                SEVERITY_ALERT,
                EVENT_LIMIT_CLAMP,
                {"requested_mA": slewed, "clamped_mA": clamped},
            )
        )

    result = command.with_amplitude(clamped)
    q = charge_per_pulse(result)
    if q > limits.max_charge_per_pulse_uC and result.pulse_width_us > 0:
        safe_amp = limits.max_charge_per_pulse_uC / (result.pulse_width_us * 1e-3)
        events.append(
            EventRecord(
                tick,
                SEVERITY_ALERT,
                EVENT_CHARGE_CLAMP,
                {"charge_uC": q, "reduced_to_mA": safe_amp},
            )
        )
        result = result.with_amplitude(safe_amp)
    return result, events


# ---------------------------------------------------------------------------
# Trust checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrustConfig:
    """Which loop assumptions to verify each tick, and the dwell criteria.

    ``exit_after_consecutive_fails`` (K_exit) failures in a row push the
    supervisor out of Automated; ``reenter_after_consecutive_passes``
    (K_enter) passes in a row let it back in.
    """

    checks: tuple = ()
    exit_after_consecutive_fails: int = 1
    reenter_after_consecutive_passes: int = 1
    impedance_min_ohm: float = 50.0
    impedance_max_ohm: float = 10_000.0
    biomarker_min: float = float("-inf")
    biomarker_max: float = float("inf")

    def __post_init__(self) -> None:
        if self.exit_after_consecutive_fails < 1:
            raise ConfigurationError("K_exit must be >= 1")
        if self.reenter_after_consecutive_passes < 1:
            raise ConfigurationError("K_enter must be >= 1")
        for c in self.checks:
            if c not in ALL_CHECKS:
                raise ConfigurationError(f"unknown trust check {c!r}")


@dataclass(frozen=True)
class TrustInputs:
    """Snapshot of everything the enabled checks may look at this tick."""

    quality: frozenset = frozenset({QUALITY_OK})
    ecap_est_uV: Optional[float] = None
    battery_v: float = float("inf")
    eos_threshold_v: float = 0.0
    impedance_ohm: float = 1000.0
    dc_leak: bool = False
    biomarker: Optional[float] = None


def _check_fails(name: str, inputs: TrustInputs, cfg: TrustConfig) -> bool:
    if name == CHECK_QUALITY_OK:
        return inputs.quality != frozenset({QUALITY_OK})
    if name == CHECK_ECAP_NONNEGATIVE:
        return inputs.ecap_est_uV is not None and inputs.ecap_est_uV < 0.0
    if name == CHECK_BATTERY_ABOVE_EOS:
        return inputs.battery_v < inputs.eos_threshold_v
    if name == CHECK_IMPEDANCE_IN_RANGE:
        return not (cfg.impedance_min_ohm <= inputs.impedance_ohm <= cfg.impedance_max_ohm)
    if name == CHECK_NO_DC_LEAK:
        return inputs.dc_leak
    if name == CHECK_BIOMARKER_IN_PHYS_RANGE:
        return inputs.biomarker is not None and not (
            cfg.biomarker_min <= inputs.biomarker <= cfg.biomarker_max
        )
    raise ConfigurationError(f"unknown trust check {name!r}")


# ---------------------------------------------------------------------------
# Fallback configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FallbackOff:
    """Stimulation off until re-entry."""


@dataclass(frozen=True)
class FixedSafe:
    """A constant dose inside the safe therapeutic range."""

    dose: Dose


@dataclass(frozen=True)
class LastKnownGood:
    """Hold the most recent dose delivered under a passing trust verdict."""


@dataclass(frozen=True)
class ManualLoop:
    """Revert to fixed-output manual-loop stimulation at the given dose."""

    dose: Dose


FallbackKind = Union[FallbackOff, FixedSafe, LastKnownGood, ManualLoop]


def fallback_dose(kind: FallbackKind, st: "SupervisorState", baseline: Dose) -> Dose:
    """The dose a fallback mode delivers, constant while the mode persists."""
    if isinstance(kind, FallbackOff):
        return baseline.off()
    if isinstance(kind, FixedSafe):
        return kind.dose
    if isinstance(kind, ManualLoop):
        return kind.dose
    if isinstance(kind, LastKnownGood):
        return st.last_known_good if st.last_known_good is not None else baseline
    raise ConfigurationError(f"unknown fallback kind {type(kind).__name__}")


# ---------------------------------------------------------------------------
# Supervisor state machine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupervisorState:
    """Mode plus the dwell counters and capture registers that drive it."""

    mode: str = MODE_AUTOMATED
    fail_streak: int = 0
    pass_streak: int = 0
    last_known_good: Optional[Dose] = None
    resume_mode: str = MODE_AUTOMATED  # mode to restore when the magnet lifts
    magnet_prev: bool = False
    dc_leak_prev: bool = False

    @property
    def in_reset(self) -> bool:
        return self.mode in RESET_MODES

    @property
    def therapy_inhibited(self) -> bool:
        """True in every mode that forces stimulation off."""
        return self.mode in (MODE_SUSPENDED_MAGNET, *RESET_MODES)


def trust_check_step(
    inputs: TrustInputs, cfg: TrustConfig, st: SupervisorState
) -> tuple[SupervisorState, bool, tuple]:
    """Evaluate the enabled checks and update the dwell streaks.

    Returns (state, passed, failed_check_names). A pass resets the fail
    streak and vice versa.
    """
    failed = tuple(c for c in cfg.checks if _check_fails(c, inputs, cfg))
    if failed:
        st = replace(st, fail_streak=st.fail_streak + 1, pass_streak=0)
    else:
        st = replace(st, pass_streak=st.pass_streak + 1, fail_streak=0)
    return st, not failed, failed


def supervisor_step(
    st: SupervisorState,
    verdict_pass: bool,
    magnet_applied: bool,
    device: DeviceState,
    trust: TrustConfig,
    fallback: FallbackKind,
    tick: int = 0,
    last_good_candidate: Optional[Dose] = None,
) -> tuple[SupervisorState, list[EventRecord]]:
    """Advance the mode machine one tick.

    Precedence, highest first: DC leak, end of service, magnet, trust
    dwell rules. Reset modes are absorbing — any transition that would
    otherwise fire is suppressed with an Info record — and only
    ``clinician_reset`` leaves them. Magnet suspension preserves the streak
    counters and restores the pre-suspension mode on removal.
    """
    events: list[EventRecord] = []

    def emit(target_mode: str, severity: str, payload: Optional[dict] = None) -> None:
        events.append(
            EventRecord(tick, severity, MODE_EVENT_CODES[target_mode], payload or {})
        )

    edges = {"magnet_prev": magnet_applied, "dc_leak_prev": device.dc_leak_flag}

    if st.in_reset:
        # Latched. Report (once, on the rising edge) anything that would
        # normally transition, then stay put.
        if device.dc_leak_flag and not st.dc_leak_prev and st.mode != MODE_DC_LEAK_RESET:
            emit(MODE_DC_LEAK_RESET, SEVERITY_INFO, {"suppressed_by": st.mode})
        if magnet_applied and not st.magnet_prev:
            emit(MODE_SUSPENDED_MAGNET, SEVERITY_INFO, {"suppressed_by": st.mode})
        return replace(st, **edges), events

    if device.dc_leak_flag:
        emit(MODE_DC_LEAK_RESET, SEVERITY_FAULT, {"from": st.mode})
        return replace(st, mode=MODE_DC_LEAK_RESET, **edges), events

    if device.battery_v < device.eos_threshold_v:
        emit(
            MODE_EOS_RESET,
            SEVERITY_FAULT,
            {"from": st.mode, "battery_v": device.battery_v},
        )
        return replace(st, mode=MODE_EOS_RESET, **edges), events

    if magnet_applied:
        if st.mode != MODE_SUSPENDED_MAGNET:
            emit(MODE_SUSPENDED_MAGNET, SEVERITY_ALERT, {"from": st.mode})
            return replace(
                st, mode=MODE_SUSPENDED_MAGNET, resume_mode=st.mode, **edges
            ), events
        return replace(st, **edges), events

    if st.mode == MODE_SUSPENDED_MAGNET:
        emit(st.resume_mode, SEVERITY_ALERT, {"from": MODE_SUSPENDED_MAGNET})
        return replace(st, mode=st.resume_mode, **edges), events

    if st.mode == MODE_AUTOMATED:
        if st.fail_streak >= trust.exit_after_consecutive_fails:
            lkg = st.last_known_good
            if last_good_candidate is not None:
                lkg = last_good_candidate
            emit(
                MODE_FALLBACK,
                SEVERITY_ALERT,
                {"kind": type(fallback).__name__, "fail_streak": st.fail_streak},
            )
            return replace(
                st, mode=MODE_FALLBACK, last_known_good=lkg, **edges
            ), events
        return replace(st, **edges), events

    if st.mode == MODE_FALLBACK:
        if st.pass_streak >= trust.reenter_after_consecutive_passes:
            events.append(
                EventRecord(
                    tick,
                    SEVERITY_INFO,
                    EVENT_TRUST_REENTER,
                    {"pass_streak": st.pass_streak},
                )
            )
            emit(MODE_AUTOMATED, SEVERITY_ALERT, {"from": MODE_FALLBACK})
            return replace(st, mode=MODE_AUTOMATED, **edges), events
        return replace(st, **edges), events

    raise ConfigurationError(f"unknown supervisor mode {st.mode!r}")


def clinician_reset(st: SupervisorState, tick: int = 0) -> tuple[SupervisorState, list[EventRecord]]:
    """Explicit clinician intervention: the only exit from a reset state."""
    if not st.in_reset:
        return st, []
    ev = EventRecord(
        tick,
        SEVERITY_ALERT,
        EVENT_MODE_AUTOMATED,
        {"from": st.mode, "clinician_reset": True},
    )
    return (
        SupervisorState(
            mode=MODE_AUTOMATED,
            last_known_good=st.last_known_good,
            magnet_prev=st.magnet_prev,
            dc_leak_prev=st.dc_leak_prev,
        ),
        [ev],
    )


# ---------------------------------------------------------------------------
# Therapy and episode budgets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Budgets:
    """Per-event therapy cap and per-day episode cap.

    An episode starts on the detection flag's rising edge. Episodes beyond
    the daily maximum get no therapies at all. The day boundary is every
    24 h of simulated time from run start.
    """

    max_therapies_per_event: int = 5
    max_episodes_per_day: int = 1_000_000
    ticks_per_day: int = 86_400_000
    therapies_this_event: int = 0
    episodes_today: int = 0
    event_active: bool = False
    current_event_budgeted: bool = True

    def __post_init__(self) -> None:
        if self.max_therapies_per_event < 0:
            raise ConfigurationError("max_therapies_per_event must be >= 0")
        if self.max_episodes_per_day < 0:
            raise ConfigurationError("max_episodes_per_day must be >= 0")
        if self.ticks_per_day < 1:
            raise ConfigurationError("ticks_per_day must be >= 1")
        if self.episodes_today > self.max_episodes_per_day:
            raise ConfigurationError("episodes_today exceeds max_episodes_per_day")


def therapy_and_episode_budget_step(
    b: Budgets, event_active: bool, therapy_requested: bool, tick: int
) -> tuple[Budgets, bool, list[EventRecord]]:
    """Advance budget bookkeeping one tick; returns (budgets, allow, events)."""
    events: list[EventRecord] = []

    if tick > 0 and tick % b.ticks_per_day == 0:
        events.append(
            EventRecord(
                tick, SEVERITY_INFO, EVENT_DAY_ROLLOVER, {"episodes": b.episodes_today}
            )
        )
        b = replace(b, episodes_today=0)

    if event_active and not b.event_active:
        if b.episodes_today < b.max_episodes_per_day:
            b = replace(
                b,
                event_active=True,
                current_event_budgeted=True,
                episodes_today=b.episodes_today + 1,
                therapies_this_event=0,
            )
        else:
            b = replace(
                b,
                event_active=True,
                current_event_budgeted=False,
                therapies_this_event=0,
            )
    elif not event_active and b.event_active:
        b = replace(b, event_active=False, therapies_this_event=0)

    allow = False
    if therapy_requested:
        allow = (
            b.current_event_budgeted
            and b.therapies_this_event < b.max_therapies_per_event
        )
        if allow:
            b = replace(b, therapies_this_event=b.therapies_this_event + 1)
        else:
            events.append(
                EventRecord(
                    tick,
                    SEVERITY_INFO,
                    EVENT_BUDGET_DENY,
                    {
                        "therapies_this_event": b.therapies_this_event,
                        "episode_budgeted": b.current_event_budgeted,
                    },
                )
            )
    return b, allow, events
