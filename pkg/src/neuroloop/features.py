"""Biomarker extraction from signal frames.

The detection features used by the responsive-epilepsy controller
(line length, area, half-wave counting, adaptive thresholds, logical
combination), band power for the adaptive-DBS controller, and the evoked
potential amplitude estimator with its signal-quality checks.

All feature functions accept either a ``core.Window`` or any 1-D
array-like of samples and are stateless; ``AdaptiveThresholdState`` is the
only stateful piece and is value-updated by the caller.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .core import (
    ConfigurationError,
    DomainError,
    InsufficientDataError,
    QUALITY_EXTERNAL_NOISE,
    QUALITY_FLATLINE,
    QUALITY_IMPOSSIBLE,
    QUALITY_OK,
    QUALITY_SATURATED,
    Window,
)

SampleSource = Union[Window, Sequence[float], np.ndarray]


def _as_array(w: SampleSource) -> np.ndarray:
    if isinstance(w, Window):
        return np.asarray(w.samples, dtype=float)
    return np.asarray(w, dtype=float)


def line_length(w: SampleSource) -> float:
    """Sum of absolute first differences, sum(|x[i] - x[i-1]|).

    Summed with math.fsum (exactly rounded), so the result is independent of
    accumulation order and bit-identical to any correctly rounded oracle.

    Raises:
        InsufficientDataError: fewer than 2 samples.
    """
    x = _as_array(w)
    if x.size < 2:
        raise InsufficientDataError("line_length needs at least 2 samples")
    return math.fsum(np.abs(np.diff(x)))


def area_under_curve(w: SampleSource) -> float:
    """Sum of absolute sample values, sum(|x[i]|).

    Exactly rounded, as for ``line_length``.

    Raises:
        InsufficientDataError: empty input.
    """
    x = _as_array(w)
    if x.size < 1:
        raise InsufficientDataError("area_under_curve needs at least 1 sample")
    return math.fsum(np.abs(x))


@dataclass(frozen=True)
class HalfWaveConfig:
    """Criteria for counting qualifying half-waves in a frame.

    A half-wave is the excursion between two consecutive signal extrema.
    ``hysteresis_uV`` sets how far the signal must retrace from a running
    extremum before the direction is considered reversed, which suppresses
    micro-reversals from noise. A segment counts when its peak-to-trough
    amplitude is at least ``min_amplitude_uV`` and its duration lies in
    ``[min_duration_ticks, max_duration_ticks]``.
    """

    min_amplitude_uV: float
    min_duration_ticks: int
    max_duration_ticks: int
    hysteresis_uV: float = 0.0

    def __post_init__(self) -> None:
        if self.min_amplitude_uV <= 0:
            raise ConfigurationError("min_amplitude_uV must be positive")
        if not (0 < self.min_duration_ticks <= self.max_duration_ticks):
            raise ConfigurationError(
                "need 0 < min_duration_ticks <= max_duration_ticks"
            )
        if self.hysteresis_uV < 0:
            raise ConfigurationError("hysteresis_uV must be nonnegative")


def half_wave_count(w: SampleSource, cfg: HalfWaveConfig) -> int:
    """Count amplitude- and duration-qualified half-waves in the frame.

    Segments the signal at local extrema (direction reversals beyond the
    hysteresis) and counts segments meeting the amplitude and duration
    criteria. Invariant under negation of the signal.

    Raises:
        InsufficientDataError: fewer than 3 samples.
    """
    x = _as_array(w)
    if x.size < 3:
        raise InsufficientDataError("half_wave_count needs at least 3 samples")

    count = 0
    # Running extremum of the current segment and the index where the
    # segment started. direction: +1 rising, -1 falling, 0 undecided.
    direction = 0
    seg_start = 0
    extremum = x[0]
    extremum_idx = 0
    anchor = x[0]  # value at the segment's starting extremum

    for i in range(1, x.size):
        v = x[i]
        if direction >= 0 and v > extremum:
            extremum = v
            extremum_idx = i
            direction = +1
        elif direction <= 0 and v < extremum:
            extremum = v
            extremum_idx = i
            direction = -1
        elif direction != 0 and abs(v - extremum) > cfg.hysteresis_uV:
            # Confirmed reversal: the segment from seg_start to extremum_idx
            # is a completed half-wave.
            amplitude = abs(extremum - anchor)
            duration = extremum_idx - seg_start
            if (
                amplitude >= cfg.min_amplitude_uV
                and cfg.min_duration_ticks <= duration <= cfg.max_duration_ticks
            ):
                count += 1
            anchor = extremum
            seg_start = extremum_idx
            extremum = v
            extremum_idx = i
            direction = -direction

    # Close out the final (possibly unconfirmed) segment.
    amplitude = abs(extremum - anchor)
    duration = extremum_idx - seg_start
    if (
        direction != 0
        and amplitude >= cfg.min_amplitude_uV
        and cfg.min_duration_ticks <= duration <= cfg.max_duration_ticks
    ):
        count += 1
    return count


def band_power(w: SampleSource, f_lo: float, f_hi: float, fs: float) -> float:
    """Power of the signal inside [f_lo, f_hi] Hz, in µV².

    Plain rectangular-window periodogram with one-sided bin summation; no
    tapering, so Parseval holds exactly: summing over the full band
    [0, fs/2] returns mean(x²). Band edges are inclusive.

    Raises:
        DomainError: band outside (0, fs/2].
        InsufficientDataError: window shorter than one period of f_lo.
    """
    x = _as_array(w)
    if not (0 < f_lo < f_hi <= fs / 2):
        raise DomainError(
            f"band [{f_lo}, {f_hi}] must satisfy 0 < f_lo < f_hi <= fs/2 = {fs / 2}"
        )
    n = x.size
    if n < fs / f_lo:
        raise InsufficientDataError(
            f"window of {n} samples is shorter than one period of {f_lo} Hz at fs={fs}"
        )
    spec = np.fft.rfft(x)
    psd = (spec.real ** 2 + spec.imag ** 2) / (n * n)
    # One-sided: double everything except DC and (for even n) Nyquist.
    psd[1:] *= 2.0
    if n % 2 == 0:
        psd[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    mask = (freqs >= f_lo) & (freqs <= f_hi)
    return float(psd[mask].sum())


@dataclass(frozen=True)
class AdaptiveThresholdState:
    """Detection threshold, fixed or tracking a long-term baseline.

    In adaptive mode the threshold is ``multiplier * median(long_window)``
    where the long window holds the feature's recent history; the short
    window holds the values being compared against the threshold. The
    median is robust to contamination of the baseline by the events being
    detected, so values are pushed unconditionally.
    """

    long_window: Window
    short_window: Window
    multiplier: float = 2.0
    mode: str = "adaptive"        # "adaptive" | "fixed"
    fixed_value: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("adaptive", "fixed"):
            raise ConfigurationError(f"unknown threshold mode {self.mode!r}")
        if self.multiplier <= 0:
            raise ConfigurationError("multiplier must be positive")
        if self.mode == "adaptive" and not (
            self.long_window.capacity > self.short_window.capacity
        ):
            raise ConfigurationError(
                "adaptive mode needs long_window.capacity > short_window.capacity"
            )

    def observe(self, value: float) -> "AdaptiveThresholdState":
        """Push a new feature value into both windows."""
        return AdaptiveThresholdState(
            long_window=self.long_window.push(value),
            short_window=self.short_window.push(value),
            multiplier=self.multiplier,
            mode=self.mode,
            fixed_value=self.fixed_value,
        )

    def short_term_value(self) -> float:
        """Mean of the short window: the smoothed value compared to the threshold."""
        n = len(self.short_window)
        if n == 0:
            raise InsufficientDataError("short window is empty")
        return sum(self.short_window.samples) / n


def adaptive_threshold(s: AdaptiveThresholdState) -> float:
    """Current detection threshold for the state.

    Fixed mode returns the configured value; adaptive mode returns
    ``multiplier * median(long_window)``.

    Raises:
        InsufficientDataError: adaptive mode with an empty baseline.
    """
    if s.mode == "fixed":
        return s.fixed_value
    if len(s.long_window) == 0:
        raise InsufficientDataError("adaptive threshold needs a nonempty baseline")
    # statistics.median over the tuple beats np.median's overhead at this size
    return s.multiplier * statistics.median(s.long_window.samples)


def detect(flags: Iterable[bool], combinator: str) -> bool:
    """Combine per-tool detection flags with AND or OR.

    Raises:
        ConfigurationError: empty flag list or unknown combinator.
    """
    flag_list = list(flags)
    if not flag_list:
        raise ConfigurationError("detect needs at least one flag")
    if combinator == "OR":
        return any(flag_list)
    if combinator == "AND":
        return all(flag_list)
    raise ConfigurationError(f"unknown combinator {combinator!r}")


def ecap_amplitude(
    trace: SampleSource,
    blank_ticks: int,
    saturation_uV: float = float("inf"),
) -> tuple[float, frozenset]:
    """Evoked-potential amplitude from a recorded trace, with quality flags.

    Ignores the first ``blank_ticks`` samples (stimulation artifact blanking)
    and returns the peak-to-trough amplitude of the remainder; a valid
    response is positive by construction. Estimates at or below zero are
    flagged Impossible; estimates at or beyond ``saturation_uV``, or traces
    with any railed sample, are flagged Saturated.

    Raises:
        InsufficientDataError: blanking swallows the whole trace.
    """
    x = _as_array(trace)
    if blank_ticks < 0:
        raise DomainError("blank_ticks must be nonnegative")
    if x.size <= blank_ticks:
        raise InsufficientDataError(
            f"trace of {x.size} samples has nothing left after blanking {blank_ticks}"
        )
    seg = x[blank_ticks:]
    estimate = float(seg.max() - seg.min())
    flags = set()
    if np.any(np.abs(seg) >= saturation_uV) or estimate >= saturation_uV:
        flags.add(QUALITY_SATURATED)
    if estimate <= 0.0:
        flags.add(QUALITY_IMPOSSIBLE)
    if not flags:
        flags.add(QUALITY_OK)
    return estimate, frozenset(flags)


def ecap_range_check(
    estimate: float, saturation_uV: float = float("inf")
) -> tuple[float, frozenset]:
    """Range checks for an amplitude-level evoked-potential estimate.

    Used when the simulation runs at amplitude level and the estimator is
    the identity: negative or zero estimates are physiologically impossible,
    estimates beyond the amplifier ceiling are saturated.
    """
    flags = set()
    if estimate <= 0.0:
        flags.add(QUALITY_IMPOSSIBLE)
    if estimate >= saturation_uV:
        flags.add(QUALITY_SATURATED)
    if not flags:
        flags.add(QUALITY_OK)
    return estimate, frozenset(flags)


@dataclass(frozen=True)
class SignalQualityLimits:
    """Bounds used by ``signal_quality``."""

    saturation_uV: float
    flatline_eps_uV: float = 1e-9
    max_delta_uV_per_sample: float = float("inf")


def signal_quality(w: SampleSource, limits: SignalQualityLimits) -> frozenset:
    """Classify a window as OK / Saturated / Flatline / ExternalNoise.

    Saturated: any sample at or beyond the amplifier limit. Flatline:
    peak-to-peak below ``flatline_eps_uV``. ExternalNoise: any
    sample-to-sample jump above the configured rate bound. Multiple flags
    may apply; OK is returned only when none do.
    """
    x = _as_array(w)
    if x.size == 0:
        raise InsufficientDataError("signal_quality needs a nonempty window")
    flags = set()
    if np.any(np.abs(x) >= limits.saturation_uV):
        flags.add(QUALITY_SATURATED)
    if float(x.max() - x.min()) < limits.flatline_eps_uV:
        flags.add(QUALITY_FLATLINE)
    if x.size >= 2 and float(np.abs(np.diff(x)).max()) > limits.max_delta_uV_per_sample:
        flags.add(QUALITY_EXTERNAL_NOISE)
    if not flags:
        flags.add(QUALITY_OK)
    return frozenset(flags)
