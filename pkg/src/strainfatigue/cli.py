"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import sys
from pathlib import Path

from .benchmarks import (
    EmgConfig,
    KinConfig,
    kinematics_fatigue_detect,
    semg_fatigue_detect,
    semg_rms_envelope,
    shoulder_elevation,
)
from .errors import ArgumentError, StrainFatigueError
from .evaluation import (
    ROW_COLUMNS,
    DetectorConfigs,
    evaluate_session,
    read_diff_table,
    summary_stats,
)
from .posthoc import PanTompkinsConfig, posthoc_trace
from .realtime import RealTimeConfig, detect_stream, prepare_rnorm
from .session_io import format_report, load_session, write_report
from .synth import SynthSpec, generate_full_session, reference_cohort, write_cohort

EXIT_USAGE = 1
EXIT_DATA = 2

log = logging.getLogger("strainfatigue")

SUMMARY_COLUMNS = ("method", "avr1_mean", "avr1_std", "avr2_mean", "avr2_std",
                   "n_detected", "n_subjects")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_detector_options(p):
    g = p.add_argument_group("strain detectors")
    g.add_argument("--batch-size", type=int, default=50,
                   help="samples per batch; 50 samples at 25 Hz is about one 2 s curl")
    g.add_argument("--tau", type=float, default=3.5,
                   help="amplitude-ratio threshold: ~150%% ROM growth times the "
                        "~1.4 strain-to-ROM ratio")
    g.add_argument("--consecutive", type=int, default=2,
                   help="consecutive above-threshold batches needed to flag fatigue")
    g.add_argument("--prominence", type=float, default=0.1,
                   help="extremum prominence as a fraction of each batch's range")
    g.add_argument("--median-window", type=int, default=3,
                   help="median filter length in samples applied to raw strain")
    g.add_argument("--top-k", type=int, default=10,
                   help="tallest transform peaks kept for the variability search")
    g.add_argument("--min-sep", type=float, default=2.0,
                   help="peaks closer than this (s) belong to the same curl")
    g.add_argument("--max-sep", type=float, default=8.0,
                   help="peaks further apart than this (s) are treated as noise")
    g.add_argument("--integration-window", type=float, default=2.0,
                   help="moving-window integration length (s), one curl")
    b = p.add_argument_group("benchmark detectors")
    b.add_argument("--emg-low", type=float, default=10.0, help="sEMG band-pass low edge (Hz)")
    b.add_argument("--emg-high", type=float, default=150.0, help="sEMG band-pass high edge (Hz)")
    b.add_argument("--emg-increase", type=float, default=1.27,
                   help="fractional RMS increase over baseline that flags fatigue (+127%%)")
    b.add_argument("--rms-window", type=float, default=0.5, help="sEMG RMS window (s)")
    b.add_argument("--detect-window", type=float, default=2.0,
                   help="sliding window (s) whose mean RMS is tested")
    b.add_argument("--kin-increase", type=float, default=1.5,
                   help="fractional cycle-amplitude increase of shoulder elevation (+150%%)")
    b.add_argument("--kin-cycles", type=int, default=3,
                   help="consecutive enlarged trough-peak-trough cycles required")


def _configs(args) -> DetectorConfigs:
    try:
        return DetectorConfigs(
            realtime=RealTimeConfig(args.batch_size, args.tau, args.consecutive, args.prominence),
            pan_tompkins=PanTompkinsConfig(
                integration_window=args.integration_window, top_k=args.top_k,
                min_separation=args.min_sep, max_separation=args.max_sep,
            ),
            emg=EmgConfig(
                band_low=args.emg_low, band_high=args.emg_high, rms_window=args.rms_window,
                detect_window=args.detect_window, increase_threshold=args.emg_increase,
            ),
            kin_increase=args.kin_increase,
            kin_cycles=args.kin_cycles,
            median_window=args.median_window,
        )
    except ArgumentError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="strainfatigue", description=__doc__.splitlines()[0],
                     formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate one synthetic session", formatter_class=fmt)
    p.add_argument("--spec", required=True, help="JSON file with SynthSpec fields")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-semg", action="store_true")
    p.add_argument("--no-kin", action="store_true")

    p = sub.add_parser("cohort", help="generate the 13-session reference cohort",
                       formatter_class=fmt)
    p.add_argument("--out", required=True, help="output directory (one folder per subject)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.02, help="strain noise sigma (R_norm)")

    p = sub.add_parser("detect", help="run one detector on a session", formatter_class=fmt)
    p.add_argument("detector", choices=("realtime", "posthoc", "semg", "kinematics"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--figure", help="also render a PNG of the analysis here")
    _add_detector_options(p)

    p = sub.add_parser("evaluate", help="run all detectors over many sessions",
                       formatter_class=fmt)
    p.add_argument("--manifests", required=True, help="glob of manifest.json files")
    p.add_argument("--out", required=True, help="report path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--figures", help="directory for per-session and summary PNGs")
    _add_detector_options(p)

    p = sub.add_parser("table2", help="aggregate per-subject differences from a CSV",
                       formatter_class=fmt)
    p.add_argument("--rows", required=True,
                   help="CSV with columns subject,t_s,kin,semg,rt,ph (NA = not detected)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--figure", help="also render a bar chart of the aggregates")
    return parser


def _print(text):
    sys.stdout.write(text)


def cmd_synth(args):
    try:
        spec = SynthSpec.from_dict(json.loads(Path(args.spec).read_text()))
    except FileNotFoundError:
        raise UsageError(f"spec file not found: {args.spec}") from None
    except (json.JSONDecodeError, TypeError, ArgumentError) as exc:
        raise UsageError(f"invalid spec: {exc}") from None
    path = generate_full_session(spec, args.out, not args.no_semg, not args.no_kin)
    _print(json.dumps({"manifest": str(path)}) + "\n")


def cmd_cohort(args):
    paths = write_cohort(reference_cohort(args.seed, args.noise), args.out)
    _print(json.dumps({"manifests": [str(p) for p in paths]}, indent=2) + "\n")


def cmd_detect(args):
    cfg = _configs(args)
    record = load_session(args.manifest)
    m = record.manifest
    if args.detector == "realtime":
        rnorm = prepare_rnorm(record.strain, m.static_interval, cfg.median_window, m.divider)
        res = detect_stream(rnorm, cfg.realtime)
        out = {"t_r": res.t_r, "fatigued": res.fatigued, "batches": len(res.reports)}
        if args.figure:
            from .plotting import plot_session
            trace = posthoc_trace(record.strain, m.static_interval, cfg.realtime,
                                  cfg.pan_tompkins, cfg.median_window, m.divider)
            plot_session(args.figure, m.declared_fatigue_time, trace, title=m.subject_id)
    elif args.detector == "posthoc":
        trace = posthoc_trace(record.strain, m.static_interval, cfg.realtime,
                              cfg.pan_tompkins, cfg.median_window, m.divider)
        out = trace.result
        if args.figure:
            from .plotting import plot_session
            plot_session(args.figure, m.declared_fatigue_time, trace, title=m.subject_id)
    elif args.detector == "semg":
        if record.semg is None or m.baseline_interval is None:
            raise StrainFatigueError("session has no sEMG stream or baseline interval")
        t_e = semg_fatigue_detect(record.semg, cfg.emg, m.baseline_interval)
        out = {"t_e": t_e, "detected": t_e is not None}
        if args.figure:
            from .plotting import plot_session
            plot_session(args.figure, m.declared_fatigue_time,
                         semg_env=semg_rms_envelope(record.semg, cfg.emg), t_e=t_e,
                         title=m.subject_id)
    else:
        if record.shoulder_quats is None or m.baseline_interval is None:
            raise StrainFatigueError("session has no shoulder stream or baseline interval")
        elevation = shoulder_elevation(record.shoulder_quats)
        kin = KinConfig(cfg.kin_increase, cfg.kin_cycles, tuple(m.baseline_interval),
                        cfg.kin_prominence)
        t_k = kinematics_fatigue_detect(elevation, kin)
        out = {"t_k": t_k, "detected": t_k is not None}
        if args.figure:
            from .plotting import plot_session
            plot_session(args.figure, m.declared_fatigue_time, elevation=elevation,
                         t_k=t_k, title=m.subject_id)
    _print(format_report(out, "json"))


def _summary_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}_summary{out.suffix}")


def cmd_evaluate(args):
    cfg = _configs(args)
    paths = sorted(glob.glob(args.manifests, recursive=True))
    if not paths:
        raise UsageError(f"no manifests match {args.manifests!r}")
    rows, records = [], []
    for p in paths:
        record = load_session(p)
        if record.manifest.declared_fatigue_time is None:
            log.warning("skipping %s: no declared fatigue time", p)
            continue
        rows.append(evaluate_session(record, cfg))
        records.append(record)

    out = Path(args.out)
    report_rows = [r.as_report() for r in rows]
    summary = summary_stats(rows) if rows else None
    summary_rows = summary.as_records() if summary else []
    if args.format == "json":
        write_report({"rows": report_rows, "summary": summary_rows}, out, "json")
    else:
        write_report(report_rows, out, "csv", ROW_COLUMNS)
        write_report(summary_rows, _summary_path(out), "csv", SUMMARY_COLUMNS)

    if args.figures:
        from .plotting import plot_session, plot_summary
        fig_dir = Path(args.figures)
        for record, row in zip(records, rows):
            m = record.manifest
            trace = posthoc_trace(record.strain, m.static_interval, cfg.realtime,
                                  cfg.pan_tompkins, cfg.median_window, m.divider)
            env = semg_rms_envelope(record.semg, cfg.emg) if record.semg is not None else None
            elev = shoulder_elevation(record.shoulder_quats) if record.shoulder_quats is not None else None
            plot_session(fig_dir / f"{m.subject_id}.png", row.t_s, trace, env, elev,
                         row.t_e, row.t_k, title=m.subject_id)
        if summary is not None:
            plot_summary(summary, fig_dir / "summary.png")
    _print(f"{len(rows)} sessions -> {out}\n")


def cmd_table2(args):
    rows = read_diff_table(args.rows)
    if not rows:
        raise StrainFatigueError(f"{args.rows}: no rows")
    summary = summary_stats(rows)
    _print(format_report(summary.as_records(), args.format, SUMMARY_COLUMNS))
    if args.figure:
        from .plotting import plot_summary
        plot_summary(summary, args.figure)


COMMANDS = {
    "synth": cmd_synth,
    "cohort": cmd_cohort,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "table2": cmd_table2,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"strainfatigue: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StrainFatigueError, OSError, KeyError) as exc:
        print(f"strainfatigue: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
