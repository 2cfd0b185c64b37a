"""Retrospective fatigue detection over a complete recording.

Two estimates are fused: the streaming detector's batch-amplitude time, and the
onset of the densest run of high-variability peaks in a derivative/square/
integrate transform of the normalized strain. The later of the two wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import signal as sps

from .errors import ArgumentError, DomainError
from .realtime import RealTimeConfig, detect_stream, prepare_rnorm
from .signal_core import Extremum, TimeSeries


@dataclass(frozen=True)
class PanTompkinsConfig:
    derivative_half_width: int = 2
    integration_window: float = 2.0
    top_k: int = 10
    min_separation: float = 2.0
    max_separation: float = 8.0
    bandpass: Optional[tuple] = None  # (low, high) Hz; off by default

    def __post_init__(self):
        if not 0 < self.min_separation < self.max_separation:
            raise ArgumentError("need 0 < min_separation < max_separation")
        if self.top_k < 1:
            raise ArgumentError("top_k must be at least 1")
        if self.derivative_half_width < 1:
            raise ArgumentError("derivative_half_width must be at least 1")
        if self.integration_window <= 0:
            raise ArgumentError("integration_window must be positive")


@dataclass(frozen=True)
class PeakCluster:
    representative_time: float
    member_times: tuple
    height: float


@dataclass(frozen=True)
class PostHocResult:
    t1: float
    t2: Optional[float]
    t_p: float
    fatigued: bool


def _stencil(h: int):
    # Triangular weights h, h-1, ..., 1 at offsets 1..h; exact on straight lines.
    offsets = np.arange(1, h + 1)
    weights = (h + 1 - offsets).astype(float)
    return offsets, weights, 2.0 * np.dot(weights, offsets)


def _derivative(x: np.ndarray, rate: float, half_width: int) -> np.ndarray:
    n = x.size
    out = np.empty(n)
    offsets, weights, norm = _stencil(half_width)
    lo, hi = half_width, n - half_width
    acc = np.zeros(max(hi - lo, 0))
    for w, k in zip(weights, offsets):
        acc += w * (x[lo + k : hi + k] - x[lo - k : hi - k])
    out[lo:hi] = acc / norm
    # Shrinking stencils near the ends, one-sided differences at the very ends.
    for i in list(range(min(lo, n))) + list(range(max(hi, lo), n)):
        h = min(half_width, i, n - 1 - i)
        if h == 0:
            out[i] = x[1] - x[0] if i == 0 else x[-1] - x[-2]
            continue
        offs, ws, nm = _stencil(h)
        out[i] = np.dot(ws, x[i + offs] - x[i - offs]) / nm
    return out * rate


def _moving_mean(x: np.ndarray, width: int) -> np.ndarray:
    half = width // 2
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(x.size)
    lo = np.clip(idx - half, 0, x.size)
    hi = np.clip(idx - half + width, 0, x.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


def pan_tompkins_transform(series: TimeSeries, cfg: PanTompkinsConfig = PanTompkinsConfig()) -> TimeSeries:
    """Derivative, pointwise square, centered moving-window mean.

    Output keeps the input timestamps and is never negative. Windows are
    truncated at the ends of the recording.
    """
    h = cfg.derivative_half_width
    if len(series) < 2 * h + 1:
        raise DomainError("series shorter than the derivative stencil")
    x = series.values
    rate = series.rate
    if cfg.bandpass is not None:
        low, high = cfg.bandpass
        if not 0 < low < high < rate / 2:
            raise ArgumentError("band-pass edges invalid for this rate")
        sos = sps.butter(2, [low, high], btype="bandpass", fs=rate, output="sos")
        x = sps.sosfiltfilt(sos, x)
    squared = _derivative(x, rate, h) ** 2
    width = max(1, int(round(cfg.integration_window * rate)))
    return series.with_values(_moving_mean(squared, width), "dimensionless")


def select_top_peaks(transformed: TimeSeries, top_k: int = 10) -> List[Extremum]:
    """The ``top_k`` tallest local maxima, returned in time order.

    Equal heights are broken in favour of the earlier peak.
    """
    idx, _ = sps.find_peaks(transformed.values)
    if idx.size == 0:
        return []
    heights = transformed.values[idx]
    order = np.lexsort((idx, -heights))[:top_k]
    chosen = np.sort(idx[order])
    return [
        Extremum(int(i), float(transformed.timestamps[i]), float(transformed.values[i]), "peak")
        for i in chosen
    ]


def merge_close_peaks(peaks, min_separation: float) -> List[PeakCluster]:
    """Chain peaks closer than ``min_separation`` into single clusters."""
    clusters: list = []
    members: list = []
    height = -np.inf
    for p in peaks:
        if members and p.time - members[-1] >= min_separation:
            clusters.append(PeakCluster(members[0], tuple(members), float(height)))
            members, height = [], -np.inf
        members.append(p.time)
        height = max(height, p.value)
    if members:
        clusters.append(PeakCluster(members[0], tuple(members), float(height)))
    return clusters


def time_filter_peaks(peaks, cfg: PanTompkinsConfig = PanTompkinsConfig()) -> List[PeakCluster]:
    """Merge same-cycle peaks, then keep the longest run of regularly spaced ones.

    Clusters are spaced by their representative (earliest) times. A run is a
    maximal stretch whose successive spacings are at most ``max_separation``;
    the run with most clusters is kept, the earliest on ties.
    """
    clusters = merge_close_peaks(peaks, cfg.min_separation)
    if not clusters:
        return []
    best_lo, best_len = 0, 1
    lo = 0
    for i in range(1, len(clusters) + 1):
        broken = (
            i == len(clusters)
            or clusters[i].representative_time - clusters[i - 1].representative_time
            > cfg.max_separation
        )
        if broken:
            if i - lo > best_len:
                best_lo, best_len = lo, i - lo
            lo = i
    return clusters[best_lo : best_lo + best_len]


@dataclass(frozen=True)
class PostHocTrace:
    """Intermediate products, kept for reporting and figures."""

    rnorm: TimeSeries
    transformed: TimeSeries
    peaks: list
    clusters: list
    result: PostHocResult


def posthoc_trace(
    raw: TimeSeries,
    static_interval,
    rt_cfg: RealTimeConfig = RealTimeConfig(),
    pt_cfg: PanTompkinsConfig = PanTompkinsConfig(),
    median_window: int = 3,
    divider=None,
) -> PostHocTrace:
    rnorm = prepare_rnorm(raw, static_interval, median_window, divider)
    rt = detect_stream(rnorm, rt_cfg)
    transformed = pan_tompkins_transform(rnorm, pt_cfg)
    peaks = select_top_peaks(transformed, pt_cfg.top_k)
    clusters = time_filter_peaks(peaks, pt_cfg)
    t1 = rt.t_r
    t2 = clusters[0].representative_time if clusters else None
    t_p = t1 if t2 is None else max(t1, t2)
    result = PostHocResult(t1=t1, t2=t2, t_p=t_p, fatigued=rt.fatigued)
    return PostHocTrace(rnorm, transformed, peaks, clusters, result)


def posthoc_detect(
    raw: TimeSeries,
    static_interval,
    rt_cfg: RealTimeConfig = RealTimeConfig(),
    pt_cfg: PanTompkinsConfig = PanTompkinsConfig(),
    median_window: int = 3,
    divider=None,
) -> PostHocResult:
    """Fused retrospective estimate ``t_p = max(t1, t2)``.

    ``fatigued`` is the streaming pass's flag. Without a streaming detection
    ``t1`` is the end of the recording, so ``t_p`` is the end as well.
    """
    return posthoc_trace(raw, static_interval, rt_cfg, pt_cfg, median_window, divider).result
