"""Streaming batch-amplitude fatigue detector.

The normalized strain signal is cut into fixed-size batches. Each batch is
detrended and its cycle amplitude compared with the smallest amplitude seen so
far; a run of ``consecutive_required`` batches whose ratio reaches ``tau``
marks fatigue at the start of the first batch in the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np

from .errors import ArgumentError, DomainError, NoCycle
from .signal_core import (
    DividerConfig,
    TimeSeries,
    cycle_amplitude,
    detrend_linear,
    find_extrema,
    median_filter,
    normalize_static,
    resistance_from_voltage,
)


@dataclass(frozen=True)
class RealTimeConfig:
    """Detector settings.

    ``prominence`` is relative: an extremum must rise by at least this fraction
    of the detrended batch's peak-to-peak range. Keeping it relative makes the
    detector indifferent to the overall gain of the signal; for the typical
    baseline curl amplitude of 0.5 the default equals an absolute 0.05.
    """

    batch_size: int = 50
    tau: float = 3.5
    consecutive_required: int = 2
    prominence: float = 0.1

    def __post_init__(self):
        if self.batch_size < 8:
            raise ArgumentError("batch_size must be at least 8")
        if not self.tau > 1:
            raise ArgumentError("tau must exceed 1")
        if self.consecutive_required < 1:
            raise ArgumentError("consecutive_required must be at least 1")
        if not 0 <= self.prominence < 1:
            raise ArgumentError("prominence is a fraction in [0, 1)")


@dataclass(frozen=True)
class BatchReport:
    start_time: float
    amplitude: Optional[float]
    ratio: Optional[float]
    above_threshold: bool
    skipped: bool


@dataclass(frozen=True)
class DetectorState:
    reference_amp: float = math.inf
    consecutive: int = 0
    candidate_time: Optional[float] = None
    fatigued: bool = False
    batches_seen: int = 0
    last_report: Optional[BatchReport] = None


def batch_amplitude(values, prominence: float) -> float:
    """Cycle amplitude of one detrended batch; raises :class:`NoCycle`.

    A batch spans roughly one curl, so its amplitude is the highest peak minus
    the lowest trough, with the batch ends counted as extrema. Detrending a
    single cycle tilts it by an amount that depends on where the batch cuts
    the cycle; the full range is far less sensitive to that tilt than the
    mean (or even the largest) adjacent peak/trough excursion.
    """
    detrended = detrend_linear(values)
    span = float(np.ptp(detrended))
    if span == 0:
        raise NoCycle("flat batch")
    ext = find_extrema(detrended, prominence * span, include_endpoints=True)
    return cycle_amplitude(ext, how="range")


def process_batch(
    state: DetectorState, batch: TimeSeries, cfg: RealTimeConfig
) -> Tuple[DetectorState, BatchReport]:
    """Advance the detector by one batch of normalized strain."""
    if state.fatigued:
        return state, state.last_report
    if len(batch) != cfg.batch_size:
        raise ArgumentError(
            f"batch holds {len(batch)} samples, expected {cfg.batch_size}"
        )
    start = float(batch.timestamps[0])
    seen = state.batches_seen + 1

    try:
        amp = batch_amplitude(batch.values, cfg.prominence)
    except NoCycle:
        report = BatchReport(start, None, None, False, True)
        return replace(state, batches_seen=seen, last_report=report), report

    reference = min(state.reference_amp, amp)
    ratio = amp / reference
    above = ratio >= cfg.tau
    if above:
        consecutive = state.consecutive + 1
        candidate = start if state.consecutive == 0 else state.candidate_time
    else:
        consecutive, candidate = 0, None
    fatigued = above and consecutive >= cfg.consecutive_required
    report = BatchReport(start, amp, ratio, above, False)
    new_state = DetectorState(
        reference_amp=reference,
        consecutive=consecutive,
        candidate_time=candidate,
        fatigued=fatigued,
        batches_seen=seen,
        last_report=report,
    )
    return new_state, report


def iter_batches(samples: TimeSeries, batch_size: int) -> Iterator[TimeSeries]:
    """Consecutive full batches; a trailing partial batch is dropped."""
    n_full = len(samples) // batch_size
    for k in range(n_full):
        sl = slice(k * batch_size, (k + 1) * batch_size)
        yield TimeSeries(samples.timestamps[sl], samples.values[sl], samples.unit)


@dataclass(frozen=True)
class RealTimeResult:
    t_r: float
    fatigued: bool
    reports: List[BatchReport]
    state: DetectorState


def detect_stream(
    samples: TimeSeries,
    cfg: RealTimeConfig = RealTimeConfig(),
    on_report: Optional[Callable[[BatchReport], None]] = None,
) -> RealTimeResult:
    """Run the detector over a whole normalized recording.

    Without a detection ``t_r`` is the last sample time. ``on_report`` is called
    once per batch as soon as that batch has been processed.
    """
    if len(samples) < cfg.batch_size:
        raise DomainError(
            f"need at least {cfg.batch_size} samples, got {len(samples)}"
        )
    state = DetectorState()
    reports = []
    for batch in iter_batches(samples, cfg.batch_size):
        state, report = process_batch(state, batch, cfg)
        reports.append(report)
        if on_report is not None:
            on_report(report)
        if state.fatigued:
            break
    if state.fatigued:
        return RealTimeResult(state.candidate_time, True, reports, state)
    return RealTimeResult(float(samples.timestamps[-1]), False, reports, state)


class RealTimeDetector:
    """Incremental front end: push samples as they arrive, get batch reports.

    One instance tracks one session and must not be shared between writers.
    """

    def __init__(self, cfg: RealTimeConfig = RealTimeConfig()):
        self.cfg = cfg
        self.state = DetectorState()
        self._t: list = []
        self._v: list = []
        self._last_t: Optional[float] = None

    def push(self, t: float, value: float) -> Optional[BatchReport]:
        """Add one sample; returns a report when it completes a batch."""
        if self._last_t is not None and t <= self._last_t:
            raise DomainError("samples must arrive in strictly increasing time order")
        self._last_t = t
        self._t.append(t)
        self._v.append(value)
        if len(self._v) < self.cfg.batch_size:
            return None
        batch = TimeSeries(self._t, self._v)
        self._t, self._v = [], []
        self.state, report = process_batch(self.state, batch, self.cfg)
        return report

    def feed(self, samples: TimeSeries) -> Iterator[BatchReport]:
        for t, v in zip(samples.timestamps, samples.values):
            report = self.push(float(t), float(v))
            if report is not None:
                yield report

    @property
    def fatigued(self) -> bool:
        return self.state.fatigued

    @property
    def fatigue_time(self) -> Optional[float]:
        return self.state.candidate_time if self.state.fatigued else None


def prepare_rnorm(
    raw: TimeSeries,
    static_interval,
    median_window: int = 3,
    divider=None,
) -> TimeSeries:
    """Raw strain stream to normalized resistance covering the exercise only.

    A stream in volts is first converted through the divider. The result is
    median filtered, normalized against the static interval and cropped to the
    samples after the static phase ends, so rest data never sets the reference
    amplitude.
    """
    if raw.unit == "volts":
        ohms = resistance_from_voltage(raw.values, divider or DividerConfig())
        raw = raw.with_values(ohms, "ohms")
    filtered = median_filter(raw, median_window)
    rnorm = normalize_static(filtered, static_interval)
    return rnorm.after(static_interval[1])
