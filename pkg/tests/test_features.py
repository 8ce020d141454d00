"""Feature extractors against independent brute-force and analytic oracles."""

import math

import numpy as np
import pytest

from neuroloop.core import (
    QUALITY_EXTERNAL_NOISE,
    QUALITY_FLATLINE,
    QUALITY_IMPOSSIBLE,
    QUALITY_OK,
    QUALITY_SATURATED,
    Window,
)
from neuroloop.features import (
    AdaptiveThresholdState,
    ConfigurationError,
    DomainError,
    HalfWaveConfig,
    InsufficientDataError,
    SignalQualityLimits,
    adaptive_threshold,
    area_under_curve,
    band_power,
    detect,
    ecap_amplitude,
    ecap_range_check,
    half_wave_count,
    line_length,
    signal_quality,
)


def brute_force_line_length(xs):
    # Exactly rounded sum of hand-enumerated terms; order-independent, so a
    # correct implementation must match it bit for bit.
    terms = []
    for i in range(1, len(xs)):
        terms.append(abs(xs[i] - xs[i - 1]))
    return math.fsum(terms)


def brute_force_area(xs):
    terms = []
    for x in xs:
        terms.append(abs(x))
    return math.fsum(terms)


def brute_force_median(xs):
    s = sorted(xs)
    n = len(s)
    if n % 2:
        return s[n // 2]
    return (s[n // 2 - 1] + s[n // 2]) / 2.0


class TestLineLength:
    def test_unit_steps(self):
        assert line_length([0, 1, 0, 1]) == 3.0

    def test_constant(self):
        assert line_length([5, 5, 5]) == 0.0

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(101)
        for _ in range(1000):
            xs = rng.normal(scale=50.0, size=64)
            assert line_length(xs) == brute_force_line_length(list(xs))

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            line_length([1.0])


class TestArea:
    def test_mixed_signs(self):
        assert area_under_curve([1, -1, 2]) == 4.0

    def test_zeros(self):
        assert area_under_curve([0, 0, 0]) == 0.0

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(102)
        for _ in range(1000):
            xs = rng.normal(scale=50.0, size=64)
            assert area_under_curve(xs) == brute_force_area(list(xs))

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            area_under_curve([])


class TestHalfWave:
    def test_sine_count_matches_analytic(self):
        # A sinusoid of frequency f has 2f half-waves per second; boundary
        # segments make the count 2f +/- 1.
        fs = 256.0
        for f in (4.0, 8.0, 16.0):
            t = np.arange(int(fs)) / fs
            x = 10.0 * np.sin(2 * np.pi * f * t)
            cfg = HalfWaveConfig(
                min_amplitude_uV=5.0,
                min_duration_ticks=max(1, int(fs / (2 * f)) - 2),
                max_duration_ticks=int(fs / (2 * f)) + 2,
            )
            count = half_wave_count(x, cfg)
            assert abs(count - 2 * f) <= 1, (f, count)

    def test_flat_signal(self):
        cfg = HalfWaveConfig(1.0, 1, 100)
        assert half_wave_count(np.zeros(64), cfg) == 0

    def test_below_amplitude_criterion(self):
        fs = 256.0
        t = np.arange(int(fs)) / fs
        x = 0.4 * 5.0 * np.sin(2 * np.pi * 8.0 * t)
        cfg = HalfWaveConfig(5.0, 1, 100)
        assert half_wave_count(x, cfg) == 0

    def test_invariant_under_negation(self):
        rng = np.random.default_rng(103)
        cfg = HalfWaveConfig(0.5, 1, 40, hysteresis_uV=0.2)
        for _ in range(200):
            x = rng.normal(size=80).cumsum()
            assert half_wave_count(x, cfg) == half_wave_count(-x, cfg)

    def test_hysteresis_ignores_micro_reversals(self):
        # A rising ramp with tiny dips should read as one long half-wave,
        # not many short ones.
        x = np.array([0.0, 1.0, 0.95, 2.0, 1.95, 3.0, 2.95, 4.0, 0.0, 0.1])
        loose = HalfWaveConfig(0.5, 1, 100, hysteresis_uV=0.2)
        strict = HalfWaveConfig(0.5, 1, 100, hysteresis_uV=0.0)
        assert half_wave_count(x, loose) < half_wave_count(x, strict)


class TestBandPower:
    def test_parseval_unit_tone(self):
        fs = 250.0
        t = np.arange(250) / fs
        tone = np.sin(2 * np.pi * 20.0 * t)
        p = band_power(tone, 13.0, 30.0, fs)
        assert p == pytest.approx(0.5, rel=0.05)

    def test_out_of_band_leakage(self):
        fs = 250.0
        t = np.arange(250) / fs
        tone = np.sin(2 * np.pi * 20.0 * t)
        assert band_power(tone, 55.0, 75.0, fs) <= 0.02 * 0.5

    def test_zero_signal(self):
        assert band_power(np.zeros(128), 13.0, 30.0, 256.0) == 0.0

    def test_total_band_equals_mean_square(self):
        # Parseval over the whole one-sided spectrum (demeaned so the DC bin,
        # which no band can include, carries nothing).
        rng = np.random.default_rng(104)
        x = rng.normal(size=200)
        x = x - x.mean()
        fs = 100.0
        p = band_power(x, 0.5, 50.0, fs)
        assert p == pytest.approx(float(np.mean(x * x)), rel=1e-9)

    def test_quadratic_scaling(self):
        rng = np.random.default_rng(105)
        x = rng.normal(size=256)
        p1 = band_power(x, 13.0, 30.0, 256.0)
        p3 = band_power(3.0 * x, 13.0, 30.0, 256.0)
        assert p3 == pytest.approx(9.0 * p1, rel=1e-9)

    def test_band_outside_nyquist(self):
        with pytest.raises(DomainError):
            band_power(np.zeros(64), 13.0, 200.0, 256.0)

    def test_window_shorter_than_lowest_period(self):
        with pytest.raises(InsufficientDataError):
            band_power(np.zeros(10), 13.0, 30.0, 256.0)


class TestAdaptiveThreshold:
    def test_fixed_mode(self):
        st = AdaptiveThresholdState(
            long_window=Window(8),
            short_window=Window(2),
            mode="fixed",
            fixed_value=10.0,
        )
        assert adaptive_threshold(st) == 10.0

    def test_median_times_multiplier(self):
        st = AdaptiveThresholdState(
            long_window=Window(8, (2.0, 4.0, 6.0)),
            short_window=Window(2),
            multiplier=2.0,
        )
        assert adaptive_threshold(st) == 8.0

    def test_tracks_drifting_baseline_against_sort_oracle(self):
        rng = np.random.default_rng(106)
        st = AdaptiveThresholdState(
            long_window=Window(32), short_window=Window(4), multiplier=2.0
        )
        drift = 0.0
        for _ in range(300):
            drift += 0.1
            v = float(rng.normal(loc=drift))
            st = st.observe(v)
            expected = 2.0 * brute_force_median(st.long_window.samples)
            assert adaptive_threshold(st) == expected

    def test_empty_baseline(self):
        st = AdaptiveThresholdState(long_window=Window(8), short_window=Window(2))
        with pytest.raises(InsufficientDataError):
            adaptive_threshold(st)


class TestDetect:
    def test_or(self):
        assert detect([True, False], "OR") is True

    def test_and(self):
        assert detect([True, False], "AND") is False

    def test_and_all_true(self):
        assert detect([True, True, True], "AND") is True

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            detect([], "OR")

    def test_monotone_in_flags(self):
        rng = np.random.default_rng(107)
        for _ in range(200):
            flags = [bool(b) for b in rng.integers(0, 2, size=5)]
            for i in range(5):
                if flags[i]:
                    continue
                raised = list(flags)
                raised[i] = True
                assert detect(flags, "OR") <= detect(raised, "OR")
                assert detect(flags, "AND") <= detect(raised, "AND")


def triphasic_template(n=120, blank=20, p1=0.3, n1=-0.55, p2=0.45):
    """Synthetic evoked trace with known post-blanking extrema."""
    x = np.zeros(n)
    x[:blank] = 5.0  # stimulation artifact, must be blanked away
    for center, amp in ((blank + 20, p1), (blank + 45, n1), (blank + 70, p2)):
        width = 8.0
        idx = np.arange(n)
        x += amp * np.exp(-0.5 * ((idx - center) / width) ** 2)
    return x


class TestEcapAmplitude:
    def test_template_peak_to_trough(self):
        x = triphasic_template()
        seg = x[20:]
        expected = float(seg.max() - seg.min())
        est, flags = ecap_amplitude(x, blank_ticks=20)
        assert est == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(1.0, rel=0.02)
        assert flags == frozenset({QUALITY_OK})

    def test_saturated_trace(self):
        x = np.full(50, 1000.0)
        _, flags = ecap_amplitude(x, blank_ticks=5, saturation_uV=1000.0)
        assert QUALITY_SATURATED in flags

    def test_negative_estimate_flags_impossible(self):
        est, flags = ecap_range_check(-0.2)
        assert est == -0.2
        assert QUALITY_IMPOSSIBLE in flags

    def test_blanking_swallows_trace(self):
        with pytest.raises(InsufficientDataError):
            ecap_amplitude(np.zeros(10), blank_ticks=10)


class TestSignalQuality:
    def test_all_samples_at_limit(self):
        limits = SignalQualityLimits(saturation_uV=100.0)
        assert signal_quality(np.full(16, 100.0), limits) == frozenset(
            {QUALITY_SATURATED, QUALITY_FLATLINE}
        )

    def test_constant_window_is_flatline(self):
        limits = SignalQualityLimits(saturation_uV=100.0)
        assert signal_quality(np.full(16, 3.0), limits) == frozenset({QUALITY_FLATLINE})

    def test_smooth_in_range_is_ok(self):
        limits = SignalQualityLimits(saturation_uV=100.0)
        x = np.sin(np.linspace(0, 3, 50))
        assert signal_quality(x, limits) == frozenset({QUALITY_OK})

    def test_rate_bound(self):
        limits = SignalQualityLimits(saturation_uV=1e6, max_delta_uV_per_sample=1.0)
        x = np.array([0.0, 5.0, 0.0, 5.0])
        assert QUALITY_EXTERNAL_NOISE in signal_quality(x, limits)
