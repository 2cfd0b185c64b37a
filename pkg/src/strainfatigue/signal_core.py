"""Primitive signal operations shared by every detector.

Everything here is a pure function over numpy arrays or :class:`TimeSeries`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import signal as sps

from .errors import ArgumentError, DomainError, NoCycle

UNITS = ("volts", "ohms", "dimensionless", "degrees")


@dataclass(frozen=True)
class TimeSeries:
    """Timestamped scalar samples with a unit tag.

    ``timestamps`` are seconds and must be strictly increasing. ``nominal_rate``
    is an optional hint in Hz; when given it must agree with the median sample
    spacing to within 10%.
    """

    timestamps: np.ndarray
    values: np.ndarray
    unit: str = "dimensionless"
    nominal_rate: Optional[float] = None

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)
        if t.shape != v.shape:
            raise ArgumentError(
                f"timestamps ({t.size}) and values ({v.size}) differ in length"
            )
        if self.unit not in UNITS:
            raise ArgumentError(f"unknown unit {self.unit!r}; expected one of {UNITS}")
        if t.size > 1:
            bad = np.flatnonzero(np.diff(t) <= 0)
            if bad.size:
                raise DomainError(
                    f"timestamps not strictly increasing at index {bad[0] + 1}"
                )
        if self.nominal_rate is not None:
            if self.nominal_rate <= 0:
                raise ArgumentError("nominal_rate must be positive")
            if t.size > 1:
                measured = 1.0 / float(np.median(np.diff(t)))
                if abs(measured - self.nominal_rate) > 0.1 * self.nominal_rate:
                    raise DomainError(
                        f"nominal rate {self.nominal_rate} Hz disagrees with "
                        f"measured {measured:.3f} Hz"
                    )

    def __len__(self):
        return self.values.size

    @property
    def rate(self) -> float:
        """Sampling rate in Hz: the nominal hint, else measured from spacing."""
        if self.nominal_rate is not None:
            return float(self.nominal_rate)
        if self.values.size < 2:
            raise DomainError("cannot infer a rate from fewer than two samples")
        return 1.0 / float(np.median(np.diff(self.timestamps)))

    @property
    def duration(self) -> float:
        if self.values.size == 0:
            return 0.0
        return float(self.timestamps[-1] - self.timestamps[0])

    def with_values(self, values, unit=None) -> "TimeSeries":
        return TimeSeries(
            self.timestamps, values, unit or self.unit, self.nominal_rate
        )

    def between(self, t0: float, t1: float) -> "TimeSeries":
        """Samples with ``t0 <= t <= t1``."""
        mask = (self.timestamps >= t0) & (self.timestamps <= t1)
        return TimeSeries(
            self.timestamps[mask], self.values[mask], self.unit, self.nominal_rate
        )

    def after(self, t0: float) -> "TimeSeries":
        """Samples strictly later than ``t0``."""
        mask = self.timestamps > t0
        return TimeSeries(
            self.timestamps[mask], self.values[mask], self.unit, self.nominal_rate
        )

    def scaled(self, gain: float, offset: float = 0.0) -> "TimeSeries":
        return self.with_values(self.values * gain + offset)

    @classmethod
    def uniform(cls, values, rate, start=0.0, unit="dimensionless"):
        values = np.asarray(values, dtype=float)
        t = start + np.arange(values.size) / float(rate)
        return cls(t, values, unit, float(rate))


@dataclass(frozen=True)
class DividerConfig:
    """Voltage divider: excitation ``v_in`` over reference resistor ``r_ref``."""

    v_in: float = 5.0
    r_ref: float = 1000.0

    def __post_init__(self):
        if self.v_in <= 0:
            raise ArgumentError("v_in must be positive")
        if self.r_ref <= 0:
            raise ArgumentError("r_ref must be positive")


@dataclass(frozen=True)
class Extremum:
    index: int
    time: float
    value: float
    kind: str  # "peak" | "trough"


@dataclass(frozen=True)
class LagCorrelation:
    coefficient: float
    lag: float  # seconds, positive when the first series leads


def resistance_from_voltage(v_out, cfg: DividerConfig = DividerConfig()):
    """Sensor resistance from the divider output voltage.

    Works elementwise on arrays. Raises :class:`DomainError` for a saturated
    (``v_out > v_in``) or disconnected (``v_out <= 0``) reading.
    """
    v = np.asarray(v_out, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v <= 0) or np.any(v > cfg.v_in):
        raise DomainError(
            f"divider output must lie in (0, {cfg.v_in}] V (saturated or "
            "disconnected sensor)"
        )
    r = cfg.r_ref * (cfg.v_in / v - 1.0)
    return float(r) if r.ndim == 0 else r


def power_dissipation(cfg: DividerConfig, r_strain: float) -> float:
    """Power drawn by the divider in watts."""
    if r_strain < 0:
        raise DomainError("sensor resistance cannot be negative")
    total = cfg.r_ref + r_strain
    if total == 0:
        raise DomainError("zero total resistance")
    return cfg.v_in**2 / total


def power_from_excitation(v_in: float, r_ref: float, r_strain: float) -> float:
    """Like :func:`power_dissipation` but accepts a zero excitation voltage."""
    if r_strain < 0:
        raise DomainError("sensor resistance cannot be negative")
    if r_ref + r_strain == 0:
        raise DomainError("zero total resistance")
    return v_in**2 / (r_ref + r_strain)


def _median_truncated(x: np.ndarray, window: int) -> np.ndarray:
    n = x.size
    half = window // 2
    out = np.empty_like(x)
    if n >= window:
        view = np.lib.stride_tricks.sliding_window_view(x, window)
        out[half : n - half] = np.median(view, axis=1)
        edges = list(range(half)) + list(range(n - half, n))
    else:
        edges = range(n)
    for i in edges:
        out[i] = np.median(x[max(0, i - half) : i + half + 1])
    return out


def median_filter(series: TimeSeries, window: int = 3) -> TimeSeries:
    """Centered running median; edge samples use truncated windows."""
    if not isinstance(window, (int, np.integer)) or window < 1 or window % 2 == 0:
        raise ArgumentError(f"median window must be a positive odd integer, got {window}")
    if window > len(series):
        raise ArgumentError("median window longer than the series")
    if window == 1:
        return series.with_values(series.values.copy())
    return series.with_values(_median_truncated(series.values, int(window)))


def normalize_static(series: TimeSeries, static_interval) -> TimeSeries:
    """Relative change against the mean level inside ``static_interval``."""
    t0, t1 = static_interval
    inside = series.values[(series.timestamps >= t0) & (series.timestamps <= t1)]
    if inside.size == 0:
        raise DomainError(f"static interval [{t0}, {t1}] holds no samples")
    baseline = float(np.mean(inside))
    if baseline == 0:
        raise DomainError("static baseline mean is zero")
    return series.with_values((series.values - baseline) / baseline, "dimensionless")


def detrend_linear(values: Sequence[float]) -> np.ndarray:
    """Subtract the least-squares straight line."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ArgumentError("detrending needs at least two samples")
    return sps.detrend(x, type="linear")


def find_extrema(values, min_prominence: float = 0.05, timestamps=None,
                 include_endpoints: bool = False):
    """Alternating peaks and troughs whose prominence reaches ``min_prominence``.

    When prominence filtering leaves two extrema of the same kind next to each
    other, the more extreme one is kept. With ``include_endpoints`` the first
    and last samples are added as extrema of the missing kind whenever they lie
    beyond the neighbouring interior extremum, so a window cut mid-cycle still
    yields its partial excursions.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        return []
    t = np.arange(x.size, dtype=float) if timestamps is None else np.asarray(timestamps)
    prom = max(float(min_prominence), 0.0)
    peaks, _ = sps.find_peaks(x, prominence=prom if prom > 0 else None)
    troughs, _ = sps.find_peaks(-x, prominence=prom if prom > 0 else None)

    merged = sorted(
        [(int(i), "peak") for i in peaks] + [(int(i), "trough") for i in troughs]
    )
    out: list = []
    for i, kind in merged:
        if out and out[-1].kind == kind:
            prev = out[-1]
            better = x[i] > prev.value if kind == "peak" else x[i] < prev.value
            if better:
                out[-1] = Extremum(i, float(t[i]), float(x[i]), kind)
            continue
        out.append(Extremum(i, float(t[i]), float(x[i]), kind))
    if include_endpoints and out:
        out = _add_endpoints(x, t, out)
    return out


def _add_endpoints(x, t, ext):
    n = x.size
    first, last = ext[0], ext[-1]
    if first.index > 0:
        kind = "trough" if first.kind == "peak" else "peak"
        beyond = x[0] < first.value if kind == "trough" else x[0] > first.value
        if beyond:
            ext.insert(0, Extremum(0, float(t[0]), float(x[0]), kind))
    if last.index < n - 1:
        kind = "trough" if last.kind == "peak" else "peak"
        beyond = x[-1] < last.value if kind == "trough" else x[-1] > last.value
        if beyond:
            ext.append(Extremum(n - 1, float(t[-1]), float(x[-1]), kind))
    return ext


def cycle_amplitude(extrema, how: str = "mean") -> float:
    """Peak-to-trough excursion over adjacent alternating pairs.

    ``how="mean"`` averages the pair excursions; ``how="max"`` takes the
    largest; ``how="range"`` is the highest peak minus the lowest trough.
    """
    if how not in ("mean", "max", "range"):
        raise ArgumentError(f"unknown aggregation {how!r}")
    ext = list(extrema)
    kinds = {e.kind for e in ext}
    if not {"peak", "trough"} <= kinds:
        raise NoCycle("need at least one peak and one trough")
    if how == "range":
        return float(max(e.value for e in ext if e.kind == "peak")
                     - min(e.value for e in ext if e.kind == "trough"))
    diffs = [
        abs(a.value - b.value)
        for a, b in zip(ext, ext[1:])
        if a.kind != b.kind
    ]
    if not diffs:
        raise NoCycle("no adjacent peak/trough pair")
    return float(np.mean(diffs) if how == "mean" else np.max(diffs))


def rms_windowed(series: TimeSeries, window: float, hop: float) -> TimeSeries:
    """Root-mean-square over fixed windows, stamped at each window start."""
    if window <= 0 or hop <= 0:
        raise ArgumentError("window and hop must be positive")
    rate = series.rate if len(series) > 1 else None
    if rate is None or window * rate < 1 - 1e-9:
        raise ArgumentError("RMS window is shorter than one sample spacing")
    n = max(1, int(round(window * rate)))
    step = max(1, int(round(hop * rate)))
    x = series.values
    if x.size < n:
        return TimeSeries(np.empty(0), np.empty(0), series.unit)
    csum = np.concatenate([[0.0], np.cumsum(x * x)])
    starts = np.arange(0, x.size - n + 1, step)
    power = (csum[starts + n] - csum[starts]) / n
    rms = np.sqrt(np.clip(power, 0.0, None))
    out_rate = rate / step
    return TimeSeries(series.timestamps[starts], rms, series.unit,
                      out_rate if starts.size > 1 else None)


def _resample(series: TimeSeries, grid: np.ndarray) -> np.ndarray:
    return np.interp(grid, series.timestamps, series.values)


def cross_correlation(a: TimeSeries, b: TimeSeries, max_lag: float) -> LagCorrelation:
    """Lag of strongest Pearson correlation between two streams.

    Both streams are linearly resampled onto the coarser of their rates over
    their common support. The lag with the largest ``|r|`` wins (ties go to
    the smaller ``|lag|``); a positive lag means ``a`` leads ``b``.
    """
    dt = 1.0 / min(a.rate, b.rate)
    t0 = max(a.timestamps[0], b.timestamps[0])
    t1 = min(a.timestamps[-1], b.timestamps[-1])
    if t1 <= t0:
        raise DomainError("series do not overlap")
    grid = t0 + np.arange(int(np.floor((t1 - t0) / dt + 1e-9)) + 1) * dt
    xa, xb = _resample(a, grid), _resample(b, grid)
    n = grid.size
    max_k = min(int(np.floor(max_lag / dt + 1e-9)), n - 2)

    best_r, best_k = None, 0
    for k in sorted(range(-max_k, max_k + 1), key=lambda k: (abs(k), k)):
        if k >= 0:
            sa, sb = xa[: n - k], xb[k:]
        else:
            sa, sb = xa[-k:], xb[: n + k]
        sa = sa - sa.mean()
        sb = sb - sb.mean()
        denom = np.sqrt(np.dot(sa, sa) * np.dot(sb, sb))
        if denom == 0:
            if k == 0:
                raise DomainError("zero-variance segment")
            continue
        r = float(np.dot(sa, sb) / denom)
        if best_r is None or abs(r) > abs(best_r) + 1e-12:
            best_r, best_k = r, k
    return LagCorrelation(float(np.clip(best_r, -1.0, 1.0)), best_k * dt)


def snr_db(signal_segment: TimeSeries, noise_segment: TimeSeries) -> float:
    """Ratio of mean-removed powers, in decibels."""
    if len(signal_segment) == 0 or len(noise_segment) == 0:
        raise DomainError("empty segment")
    ps = float(np.var(signal_segment.values))
    pn = float(np.var(noise_segment.values))
    if pn <= 0:
        raise DomainError("noise segment has zero power")
    if ps <= 0:
        raise DomainError("signal segment has zero power")
    return 10.0 * np.log10(ps / pn)
