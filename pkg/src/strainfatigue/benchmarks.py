"""Reference fatigue detectors: trapezius sEMG RMS and shoulder elevation.

Also home to the quaternion to Euler decomposition used to turn motion-capture
orientations into joint angles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import signal as sps

from .errors import ArgumentError, DomainError
from .signal_core import TimeSeries, find_extrema, median_filter, rms_windowed

# Rotations closer than this (radians) to a gimbal configuration are flagged.
GIMBAL_TOLERANCE = 1e-6
QUAT_NORM_TOLERANCE = 1e-6


# --- sEMG ---------------------------------------------------------------------


@dataclass(frozen=True)
class EmgConfig:
    band_low: float = 10.0
    band_high: float = 150.0
    rms_window: float = 0.5
    rms_hop: float = 0.1
    detect_window: float = 2.0
    increase_threshold: float = 1.27
    median_window: int = 3
    filter_order: int = 4

    def __post_init__(self):
        if not 0 < self.band_low < self.band_high:
            raise ArgumentError("need 0 < band_low < band_high")
        if self.increase_threshold <= 0:
            raise ArgumentError("increase_threshold must be positive")
        if self.detect_window < self.rms_hop:
            raise ArgumentError("detect_window shorter than the RMS hop")


def bandpass_filter(series: TimeSeries, low: float, high: float, order: int = 4) -> TimeSeries:
    """Zero-phase Butterworth band-pass (forward-backward second-order sections)."""
    rate = series.rate
    if not 0 < low < high < rate / 2:
        raise ArgumentError(
            f"band {low}-{high} Hz invalid for a {rate:g} Hz stream (Nyquist {rate / 2:g})"
        )
    sos = sps.butter(order, [low, high], btype="bandpass", fs=rate, output="sos")
    return series.with_values(sps.sosfiltfilt(sos, series.values))


def semg_rms_envelope(emg: TimeSeries, cfg: EmgConfig = EmgConfig()) -> TimeSeries:
    """Median filter, band-pass, then windowed RMS."""
    cleaned = median_filter(emg, cfg.median_window)
    banded = bandpass_filter(cleaned, cfg.band_low, cfg.band_high, cfg.filter_order)
    return rms_windowed(banded, cfg.rms_window, cfg.rms_hop)


def semg_fatigue_detect(
    emg: TimeSeries, cfg: EmgConfig = EmgConfig(), baseline_interval=None
) -> Optional[float]:
    """Start of the first detection window whose mean RMS clears the threshold.

    The baseline is the mean RMS of the windows lying wholly inside
    ``baseline_interval``; a detection window fires when its mean RMS reaches
    ``baseline * (1 + increase_threshold)``. Returns ``None`` if nothing fires.
    """
    if baseline_interval is None:
        raise ArgumentError("a baseline interval is required")
    b0, b1 = baseline_interval
    env = semg_rms_envelope(emg, cfg)
    t, rms = env.timestamps, env.values
    in_base = (t >= b0) & (t + cfg.rms_window <= b1 + 1e-9)
    if not np.any(in_base):
        raise DomainError(f"no RMS window fits inside baseline [{b0}, {b1}]")
    baseline = float(np.mean(rms[in_base]))
    if baseline <= 0:
        raise DomainError("baseline RMS is zero")
    threshold = baseline * (1.0 + cfg.increase_threshold)

    m = max(1, int(round(cfg.detect_window / cfg.rms_hop)))
    if rms.size < m:
        return None
    csum = np.concatenate([[0.0], np.cumsum(rms)])
    means = (csum[m:] - csum[:-m]) / m
    starts = t[: means.size]
    hits = np.flatnonzero((starts >= b0) & (means >= threshold))
    return float(starts[hits[0]]) if hits.size else None


# --- orientation --------------------------------------------------------------


@dataclass(frozen=True)
class QuaternionSample:
    time: float
    w: float
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])


@dataclass(frozen=True)
class QuaternionSeries:
    """A stream of unit quaternions in ``(w, x, y, z)`` order."""

    timestamps: np.ndarray
    quats: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float).ravel()
        q = np.asarray(self.quats, dtype=float).reshape(-1, 4)
        if t.size != q.shape[0]:
            raise ArgumentError("timestamps and quaternions differ in length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DomainError("quaternion timestamps not strictly increasing")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "quats", q)

    def __len__(self):
        return self.timestamps.size

    def __getitem__(self, i) -> QuaternionSample:
        return QuaternionSample(float(self.timestamps[i]), *map(float, self.quats[i]))

    def normalized(self) -> "QuaternionSeries":
        norms = np.linalg.norm(self.quats, axis=1)
        if np.any(norms == 0):
            raise DomainError("zero-norm quaternion")
        return QuaternionSeries(self.timestamps, self.quats / norms[:, None])


@dataclass(frozen=True)
class EulerAngles:
    """Intrinsic angles in degrees, in the order of the named sequence."""

    first: float
    middle: float
    last: float
    degenerate: bool
    convention: str


@dataclass(frozen=True)
class JointAngles:
    time: float
    plane_of_elevation: float
    elevation: float
    axial_rotation: float
    flexion_extension: Optional[float] = None


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrices for one ``(4,)`` or many ``(n, 4)`` quaternions."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def _euler_from_matrix(m: np.ndarray, convention: str):
    """Vectorised intrinsic decomposition; returns radians and a gimbal mask."""
    if convention == "YZY":
        # R = Ry(a) Rz(b) Ry(c)
        s = np.hypot(m[..., 0, 1], m[..., 2, 1])
        b = np.arctan2(s, m[..., 1, 1])
        a = np.arctan2(m[..., 2, 1], -m[..., 0, 1])
        c = np.arctan2(m[..., 1, 2], m[..., 1, 0])
        degenerate = s < GIMBAL_TOLERANCE
        # All rotation goes to the first angle: Ry(a) or Ry(a) Rz(pi).
        flip = np.where(m[..., 1, 1] > 0, 1.0, -1.0)
        a_deg = np.arctan2(m[..., 0, 2], flip * m[..., 0, 0])
    elif convention == "XZY":
        # R = Rx(a) Rz(b) Ry(c)
        cb = np.hypot(m[..., 0, 0], m[..., 0, 2])
        b = np.arctan2(-m[..., 0, 1], cb)
        a = np.arctan2(m[..., 2, 1], m[..., 1, 1])
        c = np.arctan2(m[..., 0, 2], m[..., 0, 0])
        degenerate = cb < GIMBAL_TOLERANCE
        sign = np.where(-m[..., 0, 1] >= 0, 1.0, -1.0)
        a_deg = np.arctan2(sign * m[..., 2, 0], m[..., 2, 2])
    else:
        raise ArgumentError(f"unsupported Euler sequence {convention!r}")
    a = np.where(degenerate, a_deg, a)
    c = np.where(degenerate, 0.0, c)
    return a, b, c, degenerate


def quat_to_euler(q, convention: str = "YZY") -> EulerAngles:
    """Decompose one unit quaternion into intrinsic Euler angles (degrees).

    ``q`` is a :class:`QuaternionSample` or a ``(w, x, y, z)`` sequence. Near a
    gimbal configuration the whole rotation is reported on the first angle, the
    last angle is zero and ``degenerate`` is set.
    """
    arr = q.as_array() if isinstance(q, QuaternionSample) else np.asarray(q, float)
    if abs(np.linalg.norm(arr) - 1.0) > QUAT_NORM_TOLERANCE:
        raise ArgumentError("quaternion is not unit length")
    a, b, c, deg = _euler_from_matrix(quat_to_matrix(arr), convention)
    return EulerAngles(
        float(np.degrees(a)), float(np.degrees(b)), float(np.degrees(c)),
        bool(deg), convention,
    )


def euler_series(quats: QuaternionSeries, convention: str = "YZY"):
    """Angles for a whole stream: ``(n, 3)`` degrees and a degeneracy mask."""
    norms = np.linalg.norm(quats.quats, axis=1)
    if np.any(np.abs(norms - 1.0) > QUAT_NORM_TOLERANCE):
        raise ArgumentError("stream holds non-unit quaternions")
    a, b, c, deg = _euler_from_matrix(quat_to_matrix(quats.quats), convention)
    return np.degrees(np.stack([a, b, c], axis=1)), deg


def shoulder_elevation(quats: QuaternionSeries) -> TimeSeries:
    """Elevation angle (middle angle of the YZY sequence) over time."""
    angles, _ = euler_series(quats, "YZY")
    return TimeSeries(quats.timestamps, np.unwrap(angles[:, 1], period=360.0), "degrees")


def joint_angles(shoulder: QuaternionSample, elbow: Optional[QuaternionSample] = None) -> JointAngles:
    s = quat_to_euler(shoulder, "YZY")
    flex = quat_to_euler(elbow, "XZY").first if elbow is not None else None
    return JointAngles(shoulder.time, s.first, s.middle, s.last, flex)


# --- kinematics ---------------------------------------------------------------


@dataclass(frozen=True)
class KinConfig:
    increase_threshold: float = 1.50
    consecutive_cycles: int = 3
    baseline_interval: Optional[Tuple[float, float]] = None
    prominence: float = 1.0  # degrees

    def __post_init__(self):
        if self.consecutive_cycles < 1:
            raise ArgumentError("consecutive_cycles must be at least 1")
        if self.increase_threshold <= 0:
            raise ArgumentError("increase_threshold must be positive")


def kinematics_fatigue_detect(elevation: TimeSeries, cfg: KinConfig) -> Optional[float]:
    """Time of the first peak in a run of enlarged trough-peak-trough cycles.

    The reference amplitude is the mean adjacent peak/trough excursion inside
    the baseline interval. A cycle counts as enlarged when the mean of its rise
    and fall reaches ``reference * (1 + increase_threshold)``.
    """
    if cfg.baseline_interval is None:
        raise ArgumentError("KinConfig.baseline_interval is required")
    b0, b1 = cfg.baseline_interval
    ext = find_extrema(elevation.values, cfg.prominence, elevation.timestamps)

    base = [
        abs(p.value - q.value)
        for p, q in zip(ext, ext[1:])
        if b0 <= p.time and q.time <= b1
    ]
    if not base:
        raise DomainError(f"no extrema pair inside baseline [{b0}, {b1}]")
    threshold = float(np.mean(base)) * (1.0 + cfg.increase_threshold)

    run_start, run = None, 0
    for j in range(1, len(ext) - 1):
        peak = ext[j]
        if peak.kind != "peak" or peak.time < b0:
            continue
        amp = 0.5 * (abs(peak.value - ext[j - 1].value) + abs(peak.value - ext[j + 1].value))
        if amp >= threshold:
            if run == 0:
                run_start = peak.time
            run += 1
            if run >= cfg.consecutive_cycles:
                return float(run_start)
        else:
            run = 0
    return None
