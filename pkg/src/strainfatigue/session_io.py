"""Session files and result reports.

A session is a directory holding one CSV per stream and a ``manifest.json``.
Scalar streams use the header ``t,<name>``; quaternion streams use
``t,qw,qx,qy,qz``. Paths in the manifest are relative to the manifest's own
directory unless absolute.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .benchmarks import QuaternionSeries
from .errors import ArgumentError, SessionLoadError
from .signal_core import DividerConfig, TimeSeries

SCHEMA_VERSION = 1
RATE_TOLERANCE = 0.10

_VALUE_COLUMN = {"strain": {"ohms": "r_ohm", "volts": "v_out"}, "semg": "emg_v"}
_QUAT_COLUMNS = ("qw", "qx", "qy", "qz")


@dataclass(frozen=True)
class SessionManifest:
    subject_id: str
    strain_path: str
    static_interval: Tuple[float, float]
    baseline_interval: Optional[Tuple[float, float]] = None
    declared_fatigue_time: Optional[float] = None
    semg_path: Optional[str] = None
    kin_path: Optional[str] = None
    elbow_path: Optional[str] = None
    rates: Dict[str, float] = field(default_factory=dict)
    offsets: Dict[str, float] = field(default_factory=dict)
    strain_unit: str = "ohms"
    divider: Optional[DividerConfig] = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        s0, s1 = self.static_interval
        if s1 <= s0:
            raise ArgumentError("static interval is empty")
        if self.baseline_interval is not None:
            b0, b1 = self.baseline_interval
            if b1 <= b0:
                raise ArgumentError("baseline interval is empty")
            if b0 < s1:
                raise ArgumentError("baseline interval must follow the static interval")
            if self.declared_fatigue_time is not None and self.declared_fatigue_time < b1:
                raise ArgumentError("declared fatigue time precedes the baseline end")
        if self.strain_unit not in ("ohms", "volts"):
            raise ArgumentError("strain_unit must be 'ohms' or 'volts'")

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "subject_id": self.subject_id,
            "strain_path": self.strain_path,
            "strain_unit": self.strain_unit,
            "semg_path": self.semg_path,
            "kin_path": self.kin_path,
            "elbow_path": self.elbow_path,
            "static_interval": list(self.static_interval),
            "baseline_interval": None if self.baseline_interval is None else list(self.baseline_interval),
            "declared_fatigue_time": self.declared_fatigue_time,
            "rates": dict(sorted(self.rates.items())),
            "offsets": dict(sorted(self.offsets.items())),
        }
        if self.divider is not None:
            d["divider"] = {"v_in": self.divider.v_in, "r_ref": self.divider.r_ref}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SessionManifest":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ArgumentError(f"unsupported schema_version {version!r}")
        div = d.get("divider")
        base = d.get("baseline_interval")
        return cls(
            subject_id=str(d["subject_id"]),
            strain_path=d["strain_path"],
            strain_unit=d.get("strain_unit", "ohms"),
            semg_path=d.get("semg_path"),
            kin_path=d.get("kin_path"),
            elbow_path=d.get("elbow_path"),
            static_interval=tuple(map(float, d["static_interval"])),
            baseline_interval=None if base is None else tuple(map(float, base)),
            declared_fatigue_time=d.get("declared_fatigue_time"),
            rates={k: float(v) for k, v in (d.get("rates") or {}).items()},
            offsets={k: float(v) for k, v in (d.get("offsets") or {}).items()},
            divider=None if div is None else DividerConfig(**div),
        )


@dataclass(frozen=True)
class SessionRecord:
    manifest: SessionManifest
    strain: TimeSeries
    semg: Optional[TimeSeries] = None
    shoulder_quats: Optional[QuaternionSeries] = None
    elbow_quats: Optional[QuaternionSeries] = None
    source: Optional[Path] = None


# --- reading ------------------------------------------------------------------


def _read_csv(path: Path, expected: Optional[Tuple[str, ...]] = None):
    """Header plus float matrix; errors name the file and 1-based line.

    Well-formed files go through ``np.loadtxt``; anything it rejects, or that
    fails validation, is re-read row by row to locate the offending line.
    """
    fast = _read_csv_fast(path, expected)
    if fast is not None:
        return fast
    return _read_csv_checked(path, expected)


def _read_csv_fast(path, expected):
    try:
        with open(path, newline="") as fh:
            header = [h.strip() for h in fh.readline().rstrip("\r\n").split(",")]
            if header[0] != "t" or (expected is not None and tuple(header[1:]) != expected):
                return None
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except (OSError, ValueError):
        return None
    if (data.shape[0] == 0 or data.shape[1] != len(header)
            or not np.all(np.isfinite(data)) or np.any(np.diff(data[:, 0]) <= 0)):
        return None
    return header, data


def _read_csv_checked(path: Path, expected: Optional[Tuple[str, ...]] = None):
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise SessionLoadError(path, "file not found") from None
    except OSError as exc:
        raise SessionLoadError(path, f"cannot open: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SessionLoadError(path, "empty file", 1) from None
        if not header or header[0] != "t":
            raise SessionLoadError(path, "header must start with 't'", 1)
        if expected is not None and tuple(header[1:]) != expected:
            raise SessionLoadError(
                path, f"expected columns t,{','.join(expected)}; got {','.join(header)}", 1
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SessionLoadError(
                    path, f"expected {len(header)} fields, found {len(row)}", line_no
                )
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise SessionLoadError(path, f"non-numeric field in {row!r}", line_no) from None
            if not all(math.isfinite(v) for v in vals):
                raise SessionLoadError(path, "NaN or infinite sample", line_no)
            if rows and vals[0] <= rows[-1][0]:
                raise SessionLoadError(
                    path, f"timestamp {vals[0]} does not increase (repeated or out of order)", line_no
                )
            rows.append(vals)
    if not rows:
        raise SessionLoadError(path, "no samples")
    return header, np.asarray(rows, dtype=float)


def _align(path, t, offset, rate):
    t = t - offset
    keep = t >= -1e-12
    if not np.any(keep):
        raise SessionLoadError(path, "no samples after the trigger offset")
    if rate is not None and keep.sum() > 1:
        measured = 1.0 / float(np.median(np.diff(t[keep])))
        if abs(measured - rate) > RATE_TOLERANCE * rate:
            raise SessionLoadError(
                path, f"measured rate {measured:.3f} Hz differs from manifest {rate:g} Hz by more than 10%"
            )
    return keep


def _resolve(base: Path, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else base / p


def _load_scalar(path, stream, m: SessionManifest, unit):
    _, data = _read_csv(path)
    if data.shape[1] != 2:
        raise SessionLoadError(path, "scalar stream must have exactly one value column", 1)
    rate = m.rates.get(stream)
    keep = _align(path, data[:, 0], m.offsets.get(stream, 0.0), rate)
    t = data[keep, 0] - m.offsets.get(stream, 0.0)
    return TimeSeries(t, data[keep, 1], unit, rate)


def _load_quats(path, stream, m: SessionManifest):
    _, data = _read_csv(path, _QUAT_COLUMNS)
    rate = m.rates.get(stream)
    offset = m.offsets.get(stream, 0.0)
    keep = _align(path, data[:, 0], offset, rate)
    q = data[keep, 1:]
    if np.any(np.linalg.norm(q, axis=1) == 0):
        raise SessionLoadError(path, "zero-norm quaternion")
    return QuaternionSeries(data[keep, 0] - offset, q).normalized()


def load_session(manifest_path) -> SessionRecord:
    """Load and validate every stream a manifest references.

    Streams are shifted by their manifest offsets so the trigger sits at
    ``t = 0``; samples before the trigger are dropped. Quaternions are
    renormalized. Absent optional streams (``null`` paths) are left as ``None``.
    """
    manifest_path = Path(manifest_path)
    try:
        raw = json.loads(manifest_path.read_text())
    except FileNotFoundError:
        raise SessionLoadError(manifest_path, "manifest not found") from None
    except json.JSONDecodeError as exc:
        raise SessionLoadError(manifest_path, f"invalid JSON: {exc.msg}", exc.lineno) from None
    try:
        m = SessionManifest.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise SessionLoadError(manifest_path, f"invalid manifest: {exc}") from None

    base = manifest_path.parent
    strain = _load_scalar(_resolve(base, m.strain_path), "strain", m, m.strain_unit)
    semg = shoulder = elbow = None
    if m.semg_path:
        semg = _load_scalar(_resolve(base, m.semg_path), "semg", m, "volts")
    if m.kin_path:
        shoulder = _load_quats(_resolve(base, m.kin_path), "kin", m)
    if m.elbow_path:
        elbow = _load_quats(_resolve(base, m.elbow_path), "kin", m)
    return SessionRecord(m, strain, semg, shoulder, elbow, manifest_path)


# --- writing ------------------------------------------------------------------


def _write_rows(path: Path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) for v in row])


def write_session(record: SessionRecord, out_dir) -> Path:
    """Write a record as stream CSVs plus manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m = record.manifest
    col = _VALUE_COLUMN["strain"][m.strain_unit]
    _write_rows(out / m.strain_path, ["t", col], [record.strain.timestamps, record.strain.values])
    if record.semg is not None and m.semg_path:
        _write_rows(out / m.semg_path, ["t", _VALUE_COLUMN["semg"]],
                    [record.semg.timestamps, record.semg.values])
    for q, rel in ((record.shoulder_quats, m.kin_path), (record.elbow_quats, m.elbow_path)):
        if q is not None and rel:
            _write_rows(out / rel, ["t", *_QUAT_COLUMNS], [q.timestamps, *q.quats.T])
    path = out / "manifest.json"
    path.write_text(json.dumps(m.to_dict(), indent=2) + "\n")
    return path


# --- reports ------------------------------------------------------------------


def _round_time(v):
    if v is None:
        return None
    if isinstance(v, dict):
        return {k: _round_time(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round_time(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return round(float(v), 2)
    return v


def _as_record(obj) -> dict:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return dict(obj)
    raise ArgumentError(f"cannot serialize {type(obj).__name__}")


def format_report(results, fmt: str = "json", columns=None) -> str:
    """Render results deterministically; numbers are rounded to 0.01.

    ``results`` is one record (dataclass or dict) or a list of them. For CSV,
    ``columns`` fixes the column order (default: keys of the first record);
    missing values are written as ``NA``.
    """
    single = not isinstance(results, (list, tuple))
    records = [_as_record(r) for r in ([results] if single else results)]
    records = [{k: _round_time(v) for k, v in r.items()} for r in records]
    if fmt == "json":
        payload = records[0] if single else records
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "csv":
        if columns is None:
            columns = list(records[0]) if records else []
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if columns:
            w.writerow(columns)
        for r in records:
            w.writerow(["NA" if r.get(c) is None else _csv_cell(r.get(c)) for c in columns])
        return buf.getvalue()
    raise ArgumentError(f"unknown report format {fmt!r}")


def _csv_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.2f}"
    return v


def write_report(results, path, fmt: str = "json", columns=None) -> None:
    text = format_report(results, fmt, columns)
    Path(path).write_text(text)
