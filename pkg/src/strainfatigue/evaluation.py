"""Run every detector over a set of sessions and aggregate timing errors.

Per subject the signed difference ``t_s - t_method`` is recorded for each
method. Aggregates come in two flavours:

* Avr2 uses detected subjects only.
* Avr1 uses every subject, counting a non-detection as a detection at time 0,
  i.e. a difference equal to ``t_s``.

Both report the mean of the absolute differences and the sample standard
deviation (n - 1) of the signed differences.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .benchmarks import (
    EmgConfig,
    KinConfig,
    kinematics_fatigue_detect,
    semg_fatigue_detect,
    shoulder_elevation,
)
from .errors import ArgumentError, DomainError
from .posthoc import PanTompkinsConfig, posthoc_trace
from .realtime import RealTimeConfig
from .session_io import SessionRecord

log = logging.getLogger(__name__)

METHODS = ("kin", "semg", "rt", "ph")
ROW_COLUMNS = ("subject", "t_s", "dt_kin", "dt_semg", "dt_rt", "dt_ph")


@dataclass(frozen=True)
class DetectorConfigs:
    realtime: RealTimeConfig = RealTimeConfig()
    pan_tompkins: PanTompkinsConfig = PanTompkinsConfig()
    emg: EmgConfig = EmgConfig()
    kin_increase: float = 1.50
    kin_cycles: int = 3
    kin_prominence: float = 1.0
    median_window: int = 3


@dataclass(frozen=True)
class EvaluationRow:
    subject_id: str
    t_s: float
    t_k: Optional[float]
    t_e: Optional[float]
    t_r: Optional[float]
    t_p: Optional[float]

    def diff(self, method: str) -> Optional[float]:
        t = {"kin": self.t_k, "semg": self.t_e, "rt": self.t_r, "ph": self.t_p}[method]
        return None if t is None else self.t_s - t

    @property
    def d_k(self):
        return self.diff("kin")

    @property
    def d_e(self):
        return self.diff("semg")

    @property
    def d_r(self):
        return self.diff("rt")

    @property
    def d_p(self):
        return self.diff("ph")

    def as_report(self) -> dict:
        return {
            "subject": self.subject_id,
            "t_s": self.t_s,
            "dt_kin": self.d_k,
            "dt_semg": self.d_e,
            "dt_rt": self.d_r,
            "dt_ph": self.d_p,
        }


@dataclass(frozen=True)
class MethodStats:
    avr1_mean: float
    avr1_std: Optional[float]
    avr2_mean: Optional[float]
    avr2_std: Optional[float]
    n_detected: int
    n_subjects: int


@dataclass(frozen=True)
class SummaryStats:
    methods: Dict[str, MethodStats] = field(default_factory=dict)

    def __getitem__(self, method: str) -> MethodStats:
        return self.methods[method]

    def as_records(self) -> List[dict]:
        return [{"method": m, **vars(s)} for m, s in self.methods.items()]


def evaluate_session(record: SessionRecord, configs: DetectorConfigs = DetectorConfigs()) -> EvaluationRow:
    m = record.manifest
    if m.declared_fatigue_time is None:
        raise DomainError(f"session {m.subject_id} has no declared fatigue time")
    trace = posthoc_trace(
        record.strain, m.static_interval, configs.realtime, configs.pan_tompkins,
        configs.median_window, m.divider,
    )
    t_e = t_k = None
    if record.semg is not None and m.baseline_interval is not None:
        t_e = semg_fatigue_detect(record.semg, configs.emg, m.baseline_interval)
    if record.shoulder_quats is not None and m.baseline_interval is not None:
        kin_cfg = KinConfig(
            configs.kin_increase, configs.kin_cycles, tuple(m.baseline_interval),
            configs.kin_prominence,
        )
        t_k = kinematics_fatigue_detect(shoulder_elevation(record.shoulder_quats), kin_cfg)
    return EvaluationRow(
        subject_id=m.subject_id,
        t_s=float(m.declared_fatigue_time),
        t_k=t_k,
        t_e=t_e,
        t_r=trace.result.t1,
        t_p=trace.result.t_p,
    )


def evaluate_sessions(sessions, configs: DetectorConfigs = DetectorConfigs()) -> List[EvaluationRow]:
    """One row per session that declares a fatigue time; others are skipped."""
    rows = []
    for record in sessions:
        if record.manifest.declared_fatigue_time is None:
            log.warning("skipping %s: no declared fatigue time", record.manifest.subject_id)
            continue
        rows.append(evaluate_session(record, configs))
    return rows


def _std(x) -> Optional[float]:
    return float(np.std(x, ddof=1)) if len(x) > 1 else None


def method_stats(diffs, t_s) -> MethodStats:
    """Aggregate one method's signed differences (``None`` = not detected)."""
    if len(diffs) == 0:
        raise ArgumentError("no rows to summarise")
    if len(diffs) != len(t_s):
        raise ArgumentError("diffs and t_s differ in length")
    detected = np.array([d for d in diffs if d is not None], dtype=float)
    filled = np.array([ts if d is None else d for d, ts in zip(diffs, t_s)], dtype=float)
    return MethodStats(
        avr1_mean=float(np.mean(np.abs(filled))),
        avr1_std=_std(filled),
        avr2_mean=float(np.mean(np.abs(detected))) if detected.size else None,
        avr2_std=_std(detected) if detected.size else None,
        n_detected=int(detected.size),
        n_subjects=len(diffs),
    )


def summary_stats(rows) -> SummaryStats:
    rows = list(rows)
    if not rows:
        raise ArgumentError("summary of an empty row set")
    t_s = [r.t_s for r in rows]
    return SummaryStats({m: method_stats([r.diff(m) for r in rows], t_s) for m in METHODS})


# --- published per-subject table ----------------------------------------------


@dataclass(frozen=True)
class DiffRow:
    """A row that carries differences directly (no detection times)."""

    subject_id: str
    t_s: float
    diffs: Dict[str, Optional[float]]

    def diff(self, method: str) -> Optional[float]:
        return self.diffs.get(method)


def _cell(text: str) -> Optional[float]:
    text = text.strip()
    if text.upper() in ("NA", "", "NAN"):
        return None
    v = float(text)
    if not math.isfinite(v):
        raise DomainError(f"non-finite cell {text!r}")
    return v


def read_diff_table(path) -> List[DiffRow]:
    """Read ``subject,t_s,kin,semg,rt,ph`` rows; ``NA`` marks a non-detection."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"subject", "t_s", *METHODS} - set(reader.fieldnames or ())
        if missing:
            raise DomainError(f"{path}: missing columns {sorted(missing)}")
        for line_no, rec in enumerate(reader, start=2):
            try:
                rows.append(DiffRow(
                    rec["subject"], float(rec["t_s"]), {m: _cell(rec[m]) for m in METHODS}
                ))
            except ValueError as exc:
                raise DomainError(f"{path}:{line_no}: {exc}") from None
    return rows


def stats_table(summary: SummaryStats) -> List[dict]:
    """Flat records in Table-II layout, one per method."""
    return summary.as_records()
