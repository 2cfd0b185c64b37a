import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strainfatigue.errors import ArgumentError, DomainError
from strainfatigue.realtime import (
    DetectorState,
    RealTimeConfig,
    RealTimeDetector,
    batch_amplitude,
    detect_stream,
    prepare_rnorm,
    process_batch,
)
from strainfatigue.signal_core import TimeSeries
from strainfatigue.synth import SynthSpec, generate_strain

RATE = 25.0
N = 50


def curl_batches(amps, rate=RATE, n=N):
    """One raised-cosine curl per batch with the given peak-to-trough amplitude."""
    k = np.arange(n)
    shape = (1 - np.cos(2 * np.pi * k / n)) / 2
    values = np.concatenate([a * shape for a in amps])
    return TimeSeries.uniform(values, rate)


def test_batch_amplitude_of_one_curl():
    amp = batch_amplitude(0.5 * (1 - np.cos(2 * np.pi * np.arange(N) / N)) / 2, 0.1)
    assert amp == pytest.approx(0.5, rel=0.03)


def test_thirteen_batch_hand_simulation():
    series = curl_batches([0.5] * 10 + [2.0] * 3)
    res = detect_stream(series)
    # Batch 11 (index 10) starts at 20 s: ratio 4 there and again on batch 12.
    assert res.fatigued
    assert res.t_r == pytest.approx(20.0)
    assert len(res.reports) == 12
    ratios = [r.ratio for r in res.reports]
    np.testing.assert_allclose(ratios[:10], 1.0, atol=1e-9)
    np.testing.assert_allclose(ratios[10:], 4.0, rtol=1e-9)


def test_constant_amplitude_not_fatigued():
    series = curl_batches([0.5] * 13)
    res = detect_stream(series)
    assert not res.fatigued
    assert res.t_r == series.timestamps[-1]
    assert len(res.reports) == 13


def test_single_spike_batch_breaks_run():
    res = detect_stream(curl_batches([0.5] * 5 + [2.0] + [0.5] * 6))
    assert not res.fatigued
    assert [r.above_threshold for r in res.reports].count(True) == 1


def test_flat_signal_skips_every_batch():
    series = TimeSeries.uniform(np.zeros(260), RATE)
    res = detect_stream(series)
    assert not res.fatigued
    assert all(r.skipped for r in res.reports)
    assert len(res.reports) == 5  # trailing partial batch dropped
    assert res.t_r == series.timestamps[-1]


def test_skipped_batch_does_not_reset_run():
    values = curl_batches([0.5] * 4 + [2.0]).values
    values = np.concatenate([values, np.zeros(N), curl_batches([2.0]).values])
    res = detect_stream(TimeSeries.uniform(values, RATE))
    assert res.fatigued
    assert res.t_r == pytest.approx(8.0)
    assert res.reports[5].skipped


def test_ratio_threshold_is_inclusive():
    cfg = RealTimeConfig(tau=4.0)
    res = detect_stream(curl_batches([0.5] * 3 + [2.0] * 2), cfg)
    assert res.fatigued


def test_too_short_for_one_batch():
    with pytest.raises(DomainError):
        detect_stream(TimeSeries.uniform(np.zeros(49), RATE))


def test_wrong_batch_length():
    with pytest.raises(ArgumentError):
        process_batch(DetectorState(), TimeSeries.uniform(np.zeros(10), RATE), RealTimeConfig())


@pytest.mark.parametrize(
    "kwargs", [{"batch_size": 7}, {"tau": 1.0}, {"consecutive_required": 0}, {"prominence": -1}]
)
def test_config_validation(kwargs):
    with pytest.raises(ArgumentError):
        RealTimeConfig(**kwargs)


def test_frozen_after_fatigue():
    cfg = RealTimeConfig()
    state = DetectorState()
    batches = curl_batches([0.5] * 3 + [2.0] * 2 + [0.1])
    for k in range(5):
        sl = slice(k * N, (k + 1) * N)
        state, _ = process_batch(state, TimeSeries(batches.timestamps[sl], batches.values[sl]), cfg)
    assert state.fatigued
    last = TimeSeries(batches.timestamps[5 * N:], batches.values[5 * N:])
    new_state, report = process_batch(state, last, cfg)
    assert new_state == state
    assert report == state.last_report


def _synthetic(seed, sigma=0.02, **kw):
    rnorm, onset = generate_strain(SynthSpec(seed=seed, noise_sigma=sigma, **kw))
    return rnorm.after(SynthSpec().static_duration), onset


def test_reference_is_running_minimum():
    series, _ = _synthetic(3)
    state = DetectorState()
    amps = []
    for k in range(len(series) // N):
        sl = slice(k * N, (k + 1) * N)
        state, rep = process_batch(state, TimeSeries(series.timestamps[sl], series.values[sl]), RealTimeConfig())
        if state.fatigued:
            break
        if not rep.skipped:
            amps.append(rep.amplitude)
        assert state.reference_amp == min(amps)


def test_step_session_detects_near_onset():
    series, onset = _synthetic(11, sigma=0.02)
    res = detect_stream(series)
    assert res.fatigued
    assert onset - 2 <= res.t_r <= onset + 2


def test_causality_under_truncation():
    series, _ = _synthetic(5)
    full = detect_stream(series).reports
    for k in (1, 4, 17):
        cut = TimeSeries(series.timestamps[: k * N], series.values[: k * N])
        assert detect_stream(cut).reports == full[:k]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 1.0, 10.0, 3.7]))
def test_scale_invariance(seed, c):
    series, _ = _synthetic(seed, sigma=0.05)
    a = detect_stream(series)
    b = detect_stream(series.scaled(c))
    assert (a.fatigued, a.t_r) == (b.fatigued, b.t_r)
    np.testing.assert_allclose(
        [r.ratio or 0 for r in a.reports], [r.ratio or 0 for r in b.reports], rtol=1e-9
    )


def test_callback_sees_every_report():
    series = curl_batches([0.5] * 10 + [2.0] * 3)
    seen = []
    res = detect_stream(series, on_report=seen.append)
    assert seen == res.reports


def test_streaming_detector_matches_batch_run():
    series, _ = _synthetic(21)
    det = RealTimeDetector()
    reports = []
    for t, v in zip(series.timestamps, series.values):
        r = det.push(t, v)
        if r is not None:
            reports.append(r)
        if det.fatigued:
            break
    res = detect_stream(series)
    assert reports == res.reports
    assert det.fatigued == res.fatigued
    assert det.fatigue_time == res.t_r


def test_prepare_rnorm_normalizes_and_drops_static():
    t = np.arange(0, 10, 1 / RATE)
    raw = TimeSeries(t, np.where(t < 3.5, 700.0, 1400.0), "ohms", RATE)
    rnorm = prepare_rnorm(raw, (0.0, 3.0))
    assert rnorm.timestamps[0] > 3.0
    np.testing.assert_allclose(rnorm.values[:12], 0.0)
    np.testing.assert_allclose(rnorm.values[14:], 1.0)


def test_prepare_rnorm_from_volts():
    t = np.arange(0, 5, 1 / RATE)
    volts = TimeSeries(t, np.full(t.size, 2.5), "volts", RATE)
    rnorm = prepare_rnorm(volts, (0.0, 1.0))
    np.testing.assert_allclose(rnorm.values, 0.0)


def test_config_is_immutable():
    with pytest.raises(dataclasses.FrozenInstanceError):
        RealTimeConfig().tau = 2.0
