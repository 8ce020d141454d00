"""Synthetic patient and device models.

This module is the "plant" side of the loop: dose-response curves with the
standard defect families (offset, gain error, noise, non-monotonicity,
saturating suppression), an evoked-potential generator driven by
electrode-to-cord distance, a beta-band field-potential synthesizer with
circadian modulation and artifact injection, a seizure generator with
therapy-dependent early termination, and the stimulator hardware model
(output quantization, voltage compliance, battery, impedance).

Randomness: every stochastic operation takes a ``numpy.random.Generator``.
The engine derives one independent child stream per plant component from
the scenario seed, so runs are reproducible and plant noise realizations do
not depend on what the controller happens to do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .core import ConfigurationError, DomainError, Dose, InvalidPlantError


# ---------------------------------------------------------------------------
# Dose-response curve library
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdealLinear:
    """Noiseless monotone response through the origin."""

    gain: float  # biomarker units per mA


@dataclass(frozen=True)
class OffsetGain:
    """Linear response with an activation offset: zero below ``offset_mA``."""

    gain: float
    offset_mA: float


@dataclass(frozen=True)
class NoisyNonMonotonic:
    """Offset-linear response that peaks at ``peak_mA`` and then declines.

    With ``noise_sd == 0`` and amplitude at or below the peak this is exactly
    the underlying OffsetGain curve. Above the peak the response falls at
    ``decline_gain`` per mA (defaults to the rising gain).
    """

    gain: float
    offset_mA: float
    peak_mA: float
    noise_sd: float = 0.0
    decline_gain: Optional[float] = None

    def __post_init__(self) -> None:
        if self.peak_mA <= self.offset_mA:
            raise ConfigurationError("peak_mA must lie above offset_mA")
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be nonnegative")


@dataclass(frozen=True)
class BetaSuppression:
    """Saturating suppression of an oscillatory biomarker by stimulation.

    value(A) = baseline * (1 - max_suppression_fraction * sigma((A - knee_mA) / softness_mA))

    with sigma the logistic function, so the curve is nonincreasing in
    amplitude and its slope magnitude peaks at the knee and strictly
    diminishes above it. Output units are whatever ``baseline`` is in
    (the beta plant uses it as an envelope amplitude in µV).
    """

    baseline: float
    max_suppression_fraction: float
    knee_mA: float
    softness_mA: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.max_suppression_fraction <= 1.0):
            raise ConfigurationError("max_suppression_fraction must be in [0, 1]")
        if self.softness_mA <= 0:
            raise ConfigurationError("softness_mA must be positive")
        if self.baseline < 0:
            raise ConfigurationError("baseline must be nonnegative")


DoseResponseCurve = Union[IdealLinear, OffsetGain, NoisyNonMonotonic, BetaSuppression]


def _logistic(x: float) -> float:
    # Clamped to avoid overflow in exp for extreme arguments.
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-min(x, 700.0)))
    z = math.exp(max(x, -700.0))
    return z / (1.0 + z)


def dose_response_eval(
    curve: DoseResponseCurve,
    amplitude_mA: float,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Biomarker value produced by ``amplitude_mA`` under the given curve.

    ``rng`` is only consulted by NoisyNonMonotonic with ``noise_sd > 0``.

    Raises:
        DomainError: negative amplitude, or noise requested without an rng.
    """
    if amplitude_mA < 0:
        raise DomainError(f"amplitude must be nonnegative, got {amplitude_mA}")
    if isinstance(curve, IdealLinear):
        return curve.gain * amplitude_mA
    if isinstance(curve, OffsetGain):
        return curve.gain * max(0.0, amplitude_mA - curve.offset_mA)
    if isinstance(curve, NoisyNonMonotonic):
        rising = curve.gain * max(0.0, amplitude_mA - curve.offset_mA)
        if amplitude_mA <= curve.peak_mA:
            value = rising
        else:
            at_peak = curve.gain * (curve.peak_mA - curve.offset_mA)
            down = curve.decline_gain if curve.decline_gain is not None else curve.gain
            value = at_peak - down * (amplitude_mA - curve.peak_mA)
        if curve.noise_sd > 0:
            if rng is None:
                raise DomainError("NoisyNonMonotonic with noise_sd > 0 needs an rng")
            value += rng.normal(0.0, curve.noise_sd)
        return value
    if isinstance(curve, BetaSuppression):
        s = _logistic((amplitude_mA - curve.knee_mA) / curve.softness_mA)
        return curve.baseline * (1.0 - curve.max_suppression_fraction * s)
    raise ConfigurationError(f"unknown dose-response curve {type(curve).__name__}")


# ---------------------------------------------------------------------------
# Evoked-potential plant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EcapPlantParams:
    """Growth law of the evoked response versus amplitude and distance.

    Above an activation threshold the response grows linearly:

        E(A, d) = k(d) * max(0, A - I_th(d))

    where both the threshold and the recruitment slope shift with the
    electrode-to-cord distance ``d``:

        I_th(d) = threshold_mA_at_ref + threshold_distance_coeff * (d - distance_ref_mm)
        k(d)    = slope_uV_per_mA_at_ref * (1 + slope_distance_coeff * (d - distance_ref_mm))
    """

    slope_uV_per_mA_at_ref: float
    threshold_mA_at_ref: float
    distance_ref_mm: float
    threshold_distance_coeff: float = 0.0  # mA per mm
    slope_distance_coeff: float = 0.0      # fraction per mm

    def __post_init__(self) -> None:
        if self.slope_uV_per_mA_at_ref <= 0:
            raise InvalidPlantError("reference slope must be positive")
        if self.threshold_mA_at_ref < 0:
            raise InvalidPlantError("reference threshold must be nonnegative")

    def threshold_at(self, distance_mm: float) -> float:
        return self.threshold_mA_at_ref + self.threshold_distance_coeff * (
            distance_mm - self.distance_ref_mm
        )

    def slope_at(self, distance_mm: float) -> float:
        return self.slope_uV_per_mA_at_ref * (
            1.0 + self.slope_distance_coeff * (distance_mm - self.distance_ref_mm)
        )

    def validate_over_range(self, d_min_mm: float, d_max_mm: float) -> None:
        """Reject parameterizations that go unphysical anywhere in range."""
        for d in (d_min_mm, d_max_mm):
            if self.slope_at(d) <= 0:
                raise InvalidPlantError(
                    f"recruitment slope is nonpositive at distance {d} mm"
                )
            if self.threshold_at(d) < 0:
                raise InvalidPlantError(
                    f"activation threshold is negative at distance {d} mm"
                )


def ecap_true(amplitude_mA: float, distance_mm: float, p: EcapPlantParams) -> float:
    """Noise-free evoked-response amplitude in µV for the given drive."""
    k = p.slope_at(distance_mm)
    if k <= 0:
        raise InvalidPlantError(
            f"recruitment slope is nonpositive at distance {distance_mm} mm"
        )
    return k * max(0.0, amplitude_mA - p.threshold_at(distance_mm))


# ---------------------------------------------------------------------------
# Disturbance track
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PostureStep:
    """Persistent distance offset from ``start_tick`` onward."""

    start_tick: int
    delta_mm: float


@dataclass(frozen=True)
class CoughTransient:
    """Triangular distance excursion: up over ``rise_ticks``, back over ``fall_ticks``.

    The contribution is zero at onset, peaks at ``delta_mm`` after
    ``rise_ticks``, and returns exactly to zero after ``rise_ticks +
    fall_ticks``.
    """

    start_tick: int
    delta_mm: float
    rise_ticks: int
    fall_ticks: int

    def __post_init__(self) -> None:
        if self.rise_ticks <= 0 or self.fall_ticks <= 0:
            raise ConfigurationError("rise_ticks and fall_ticks must be positive")


@dataclass(frozen=True)
class CircadianSine:
    """Slow sinusoidal modulation, applied multiplicatively to the beta envelope."""

    start_tick: int
    period_ticks: int
    amplitude: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.period_ticks <= 0:
            raise ConfigurationError("period_ticks must be positive")


@dataclass(frozen=True)
class CardiacArtifact:
    """Periodic biphasic pulse train contaminating the sensed signal."""

    start_tick: int
    rate_hz: float
    amplitude_uV: float
    pulse_width_s: float = 0.05

    def __post_init__(self) -> None:
        if self.rate_hz <= 0:
            raise ConfigurationError("rate_hz must be positive")


DisturbanceSegment = Union[PostureStep, CoughTransient, CircadianSine, CardiacArtifact]


@dataclass(frozen=True)
class DisturbanceTrack:
    """Scheduled disturbances, sorted by start tick."""

    segments: tuple = ()

    def __post_init__(self) -> None:
        starts = [s.start_tick for s in self.segments]
        if starts != sorted(starts):
            raise ConfigurationError("disturbance segments must be sorted by start_tick")

    def distance_segments(self) -> tuple:
        return tuple(
            s for s in self.segments if isinstance(s, (PostureStep, CoughTransient))
        )

    def circadian_segments(self) -> tuple:
        return tuple(s for s in self.segments if isinstance(s, CircadianSine))

    def cardiac_segments(self) -> tuple:
        return tuple(s for s in self.segments if isinstance(s, CardiacArtifact))


def _cough_contribution(seg: CoughTransient, tick: int) -> float:
    t = tick - seg.start_tick
    if t < 0 or t >= seg.rise_ticks + seg.fall_ticks:
        return 0.0
    if t <= seg.rise_ticks:
        return seg.delta_mm * t / seg.rise_ticks
    return seg.delta_mm * (1.0 - (t - seg.rise_ticks) / seg.fall_ticks)


def distance_at(track: DisturbanceTrack, base_mm: float, tick: int) -> float:
    """Electrode-to-cord distance at ``tick``: base plus active contributions."""
    d = base_mm
    for seg in track.distance_segments():
        if isinstance(seg, PostureStep):
            if tick >= seg.start_tick:
                d += seg.delta_mm
        else:
            d += _cough_contribution(seg, tick)
    return d


def distance_profile(track: DisturbanceTrack, base_mm: float, n_ticks: int) -> np.ndarray:
    """Vectorized ``distance_at`` over a whole run."""
    ticks = np.arange(n_ticks)
    d = np.full(n_ticks, base_mm, dtype=float)
    for seg in track.distance_segments():
        if isinstance(seg, PostureStep):
            d[ticks >= seg.start_tick] += seg.delta_mm
        else:
            t = ticks - seg.start_tick
            rising = (t >= 0) & (t <= seg.rise_ticks)
            falling = (t > seg.rise_ticks) & (t < seg.rise_ticks + seg.fall_ticks)
            d[rising] += seg.delta_mm * t[rising] / seg.rise_ticks
            d[falling] += seg.delta_mm * (
                1.0 - (t[falling] - seg.rise_ticks) / seg.fall_ticks
            )
    return d


def circadian_factor(track: DisturbanceTrack, tick: int) -> float:
    """Multiplicative envelope modulation at ``tick`` (1.0 with no segments)."""
    f = 1.0
    for seg in track.circadian_segments():
        if tick >= seg.start_tick:
            f += seg.amplitude * math.sin(
                2.0 * math.pi * (tick - seg.start_tick) / seg.period_ticks + seg.phase
            )
    return f


# ---------------------------------------------------------------------------
# Seizure generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActiveSeizure:
    onset_tick: int
    end_tick: int
    suppression_decided: bool = False
    terminated_early: bool = False


@dataclass(frozen=True)
class SeizureGenState:
    """Hazard-driven seizure process with therapy-dependent early termination.

    Onsets are drawn per tick from ``rate_per_hour``; an untreated event
    lasts ``base_duration_ticks``. The first therapy delivered within
    ``response_window_ticks`` of onset terminates the event early with
    probability ``suppression_prob``, decided by a single draw at that
    moment; later therapies in the same event have no further effect.
    At most one seizure is active at a time.
    """

    rate_per_hour: float
    base_duration_ticks: int
    suppression_prob: float = 0.0
    response_window_ticks: int = 1
    current: Optional[ActiveSeizure] = None
    onset_count: int = 0
    early_termination_count: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.suppression_prob <= 1.0):
            raise ConfigurationError("suppression_prob must be in [0, 1]")
        if self.base_duration_ticks <= 0:
            raise ConfigurationError("base_duration_ticks must be positive")
        if self.response_window_ticks <= 0:
            raise ConfigurationError("response_window_ticks must be positive")
        if self.rate_per_hour < 0:
            raise ConfigurationError("rate_per_hour must be nonnegative")


def seizure_step(
    s: SeizureGenState,
    therapy_delivered: bool,
    tick: int,
    dt_s: float,
    rng: np.random.Generator,
) -> tuple[SeizureGenState, bool]:
    """Advance the seizure process one tick; returns (state, seizing now)."""
    cur = s.current
    onsets = s.onset_count
    early = s.early_termination_count

    if cur is None:
        hazard = s.rate_per_hour * dt_s / 3600.0
        if hazard > 0 and rng.random() < hazard:
            cur = ActiveSeizure(
                onset_tick=tick, end_tick=tick + s.base_duration_ticks
            )
            onsets += 1
    elif (
        therapy_delivered
        and not cur.suppression_decided
        and (tick - cur.onset_tick) <= s.response_window_ticks
    ):
        suppressed = rng.random() < s.suppression_prob
        cur = replace(
            cur,
            suppression_decided=True,
            terminated_early=suppressed,
            end_tick=tick if suppressed else cur.end_tick,
        )
        if suppressed:
            early += 1

    seizing = cur is not None and tick < cur.end_tick
    if cur is not None and tick >= cur.end_tick:
        cur = None
    return (
        replace(
            s,
            current=cur,
            onset_count=onsets,
            early_termination_count=early,
        ),
        seizing,
    )


# ---------------------------------------------------------------------------
# Signal synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaPlantConfig:
    """Field-potential synthesizer around the beta rhythm.

    Each tick yields ``frame_len`` samples at ``fs_hz``. The beta envelope
    is the suppression curve evaluated at the active amplitude, scaled by
    the circadian factor; broadband sensor noise sits at ``noise_rms_uV``
    RMS. When gamma entrainment is enabled and stimulation is on, a
    component at half the stimulation frequency is added. Cardiac artifact
    segments contribute a biphasic pulse train that overlaps the beta band.
    """

    fs_hz: float
    frame_len: int
    beta_hz: float
    curve: BetaSuppression
    noise_rms_uV: float = 1.0
    gamma_entrainment_uV: float = 0.0
    disturbances: DisturbanceTrack = field(default_factory=DisturbanceTrack)

    def __post_init__(self) -> None:
        if self.frame_len < 2:
            raise ConfigurationError("frame_len must be at least 2")
        if not (0 < self.beta_hz < self.fs_hz / 2):
            raise ConfigurationError("beta_hz must lie below Nyquist")

    @property
    def dt_s(self) -> float:
        return self.frame_len / self.fs_hz


def _cardiac_train(segs: tuple, t: np.ndarray, tick: int) -> np.ndarray:
    out = np.zeros_like(t)
    for seg in segs:
        if tick < seg.start_tick:
            continue
        period = 1.0 / seg.rate_hz
        phase = np.mod(t, period)
        out += np.where(
            phase < seg.pulse_width_s,
            seg.amplitude_uV,
            np.where(phase < 2 * seg.pulse_width_s, -seg.amplitude_uV, 0.0),
        )
    return out


def beta_lfp_frame(
    dose: Dose,
    tick: int,
    cfg: BetaPlantConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """One tick's worth of synthesized field potential, in µV.

    Frames are phase-coherent across ticks (the oscillators run on absolute
    time). Noise consumes exactly ``frame_len`` draws per call regardless of
    configuration, so paired runs with the same seed see identical noise.
    """
    n = cfg.frame_len
    t = (tick * n + np.arange(n)) / cfg.fs_hz

    envelope = dose_response_eval(cfg.curve, dose.amplitude_mA)
    envelope *= circadian_factor(cfg.disturbances, tick)
    frame = envelope * np.sin(2.0 * np.pi * cfg.beta_hz * t)

    frame += rng.standard_normal(n) * cfg.noise_rms_uV

    cardiac = cfg.disturbances.cardiac_segments()
    if cardiac:
        frame += _cardiac_train(cardiac, t, tick)

    if (
        cfg.gamma_entrainment_uV > 0
        and dose.amplitude_mA > 0
        and dose.frequency_hz > 0
    ):
        frame += cfg.gamma_entrainment_uV * np.sin(
            2.0 * np.pi * (dose.frequency_hz / 2.0) * t
        )
    return frame


@dataclass(frozen=True)
class IeegPlantConfig:
    """Intracranial EEG synthesizer: Gaussian background plus ictal rhythm."""

    fs_hz: float
    frame_len: int
    background_sd_uV: float
    ictal_amplitude_uV: float
    ictal_hz: float

    def __post_init__(self) -> None:
        if self.frame_len < 2:
            raise ConfigurationError("frame_len must be at least 2")
        if not (0 < self.ictal_hz < self.fs_hz / 2):
            raise ConfigurationError("ictal_hz must lie below Nyquist")

    @property
    def dt_s(self) -> float:
        return self.frame_len / self.fs_hz


def ieeg_frame(
    seizing: bool,
    cfg: IeegPlantConfig,
    rng: np.random.Generator,
    tick: int = 0,
) -> np.ndarray:
    """One tick of intracranial signal, in µV; rhythmic component when seizing."""
    n = cfg.frame_len
    frame = rng.standard_normal(n) * cfg.background_sd_uV
    if seizing:
        t = (tick * n + np.arange(n)) / cfg.fs_hz
        frame = frame + cfg.ictal_amplitude_uV * np.sin(2.0 * np.pi * cfg.ictal_hz * t)
    return frame


# ---------------------------------------------------------------------------
# Device / actuator model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviceState:
    """Stimulator hardware state: supply, output stage, electrode interface.

    The output stage delivers current in multiples of ``amp_step_mA`` and
    cannot push more current than ``compliance_v`` allows across the active
    contact's impedance (minor-loop compliance limiting). Battery voltage
    never increases; optional deterministic drain and impedance ramp model
    depletion and tissue encapsulation.
    """

    battery_v: float
    eos_threshold_v: float
    impedance_ohm_per_contact: dict
    compliance_v: float
    amp_step_mA: float
    amplifier_saturation_uV: float = float("inf")
    dc_leak_flag: bool = False
    drain_v_per_uC: float = 0.0
    impedance_ramp_ohm_per_tick: float = 0.0

    def __post_init__(self) -> None:
        if self.amp_step_mA <= 0:
            raise ConfigurationError("amp_step_mA must be positive")
        if self.compliance_v <= 0:
            raise ConfigurationError("compliance_v must be positive")
        for contact, z in self.impedance_ohm_per_contact.items():
            if z <= 0:
                raise ConfigurationError(f"impedance of contact {contact!r} must be positive")

    def impedance_of(self, contact_set: str) -> float:
        try:
            return self.impedance_ohm_per_contact[contact_set]
        except KeyError:
            raise ConfigurationError(
                f"unknown contact set {contact_set!r}; device knows "
                f"{sorted(self.impedance_ohm_per_contact)}"
            ) from None


def _floor_to_step(x: float, step: float) -> float:
    # round() guards against 3.1/0.1 -> 30.999... flooring to 30.
    return math.floor(round(x / step, 9)) * step


def actuator_apply(requested: Dose, dev: DeviceState) -> Dose:
    """Dose the output stage can actually deliver.

    Amplitude is quantized down to the output resolution, then capped at the
    compliance-limited current for the active contact (the cap itself is a
    whole number of steps, which makes the operation idempotent). Other dose
    fields pass through.

    Raises:
        ConfigurationError: unknown contact set.
    """
    z = dev.impedance_of(requested.contact_set)
    quantized = _floor_to_step(requested.amplitude_mA, dev.amp_step_mA)
    compliance_cap = _floor_to_step(dev.compliance_v / z * 1000.0, dev.amp_step_mA)
    return requested.with_amplitude(min(quantized, compliance_cap))


def device_step(dev: DeviceState, delivered_charge_uC: float) -> DeviceState:
    """Advance the hardware model one tick after delivering the given charge."""
    new_battery = dev.battery_v - dev.drain_v_per_uC * delivered_charge_uC
    if dev.impedance_ramp_ohm_per_tick != 0.0:
        new_z = {
            c: z + dev.impedance_ramp_ohm_per_tick
            for c, z in dev.impedance_ohm_per_contact.items()
        }
    else:
        new_z = dev.impedance_ohm_per_contact
    return replace(dev, battery_v=new_battery, impedance_ohm_per_contact=new_z)
