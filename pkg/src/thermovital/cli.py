"""Command-line front end: ``gen``, ``track``, ``estimate``, ``evaluate``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import zlib
from pathlib import Path

import numpy as np
import yaml

from .config import PipelineConfig
from .dsp import require_nyquist
from .errors import ConfigError, DataError, ThermovitalError
from .estimator import EstimatorConfig
from .evaluation import (
    GroundTruth,
    Recording,
    bland_altman_svg,
    build_report,
    sample_segments,
)
from .ingest import FrameSequence, SyntheticSpec, generate_synthetic, read_sequence, write_sequence
from .pipeline import VITALS, estimate_sequence, snap_to_windows, window_frames
from .tracker import RoiBox, Track, track_sequence

logger = logging.getLogger("thermovital")

EXIT_USAGE = 2
EXIT_DATA = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "fps", None) is not None:
        cfg.fps = args.fps
    return cfg


def _open_sequence(path, cfg: PipelineConfig) -> FrameSequence:
    seq = read_sequence(path)
    if cfg.fps is not None:
        seq = FrameSequence(seq.data, cfg.fps, seq.metadata)
    return seq


def truth_from_metadata(seq: FrameSequence, step: float = 1.0) -> GroundTruth:
    """1 Hz ground-truth records from a synthetic sequence's metadata."""
    meta = seq.metadata or {}
    t = np.arange(0.0, seq.duration + 1e-9, step)
    hr = meta.get("true_hr_hz")
    rr = meta.get("true_rr_hz")
    return GroundTruth(
        t,
        np.full(t.shape, np.nan if hr is None else 60.0 * hr),
        np.full(t.shape, np.nan if rr is None else 60.0 * rr),
    )


# --------------------------------------------------------------------------
# gen
# --------------------------------------------------------------------------


def cmd_gen(args) -> int:
    try:
        with open(args.spec) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{args.spec}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{args.spec}: expected a mapping")
    spec = SyntheticSpec.from_dict(raw)
    seq = generate_synthetic(spec)
    write_sequence(seq, args.out)
    if args.truth:
        truth_from_metadata(seq).to_csv(args.truth)
    meta = seq.metadata
    parts = [f"{args.out}: {len(seq)} frames {seq.width}x{seq.height} @ {seq.fps} fps"]
    if "true_hr_hz" in meta:
        parts.append(f"true HR {60 * meta['true_hr_hz']:.2f} BPM")
    if "true_rr_hz" in meta:
        parts.append(f"true RR {60 * meta['true_rr_hz']:.2f} RPM")
    print("; ".join(parts))
    return 0


# --------------------------------------------------------------------------
# track
# --------------------------------------------------------------------------


def cmd_track(args) -> int:
    cfg = _load_config(args)
    seq = _open_sequence(args.sequence, cfg)
    roi = RoiBox(*args.roi)
    track = track_sequence(seq, roi, cfg.kcf)
    track.to_csv(args.out)
    frac = len(track.low_confidence_frames) / len(track)
    print(f"{args.out}: {len(track)} frames, low-confidence fraction {frac:.3f}")
    return 0


# --------------------------------------------------------------------------
# estimate
# --------------------------------------------------------------------------


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    est_cfg: EstimatorConfig = cfg.estimator
    if args.hop is not None:
        est_cfg.hop_seconds = args.hop
    kind = VITALS[args.vital]
    if args.window is not None:
        if args.vital == "hr":
            est_cfg.hr_segment_seconds = args.window
        else:
            est_cfg.rr_segment_seconds = args.window
    window_s = est_cfg.segment_seconds(kind)

    seq = _open_sequence(args.sequence, cfg)
    require_nyquist(est_cfg.band(kind), seq.fps)
    track = Track.from_csv(args.track)
    if window_frames(window_s, seq.fps) > len(seq):
        raise DataError(f"sequence ({seq.duration:.1f} s) is shorter than one {window_s} s window")
    windows = estimate_sequence(seq, track, args.vital, args.method, est_cfg, strict=cfg.strict_borders)
    doc = {
        "source": Path(args.sequence).name,
        "track": Path(args.track).name,
        "roi": args.roi_label,
        "vital": args.vital,
        "method": args.method,
        "fps": str(seq.fps),
        "n_frames": len(seq),
        "duration_s": seq.duration,
        "window_s": window_s,
        "hop_s": est_cfg.hop_seconds,
        "config": cfg.to_dict(),
        "estimates": [w.to_record() for w in windows],
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    rates = [w.estimate.rate for w in windows]
    unit = "BPM" if args.vital == "hr" else "RPM"
    print(f"{args.out}: {len(windows)} windows, median {np.median(rates):.2f} {unit}")
    return 0


# --------------------------------------------------------------------------
# evaluate
# --------------------------------------------------------------------------


def _recording_seed(seed: int, source: str) -> int:
    # distinct but reproducible segment draws per recording
    return int(np.random.SeedSequence([seed, zlib.crc32(source.encode())]).generate_state(1)[0])


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    seed = cfg.segment_seed if args.seed is None else args.seed
    truths = [GroundTruth.read_csv(p) for p in args.ground_truth]
    if len(truths) not in (1, len(args.estimates)):
        raise ConfigError("give one ground-truth file, or one per estimates file")

    recordings = []
    for i, path in enumerate(args.estimates):
        with open(path) as fh:
            doc = json.load(fh)
        gt = truths[0] if len(truths) == 1 else truths[i]
        records = doc["estimates"]
        if not records:
            raise DataError(f"{path}: no estimates")
        starts = np.array([r["window_start_s"] for r in records])
        window_s = float(doc["window_s"])
        total = float(doc["duration_s"])
        if total >= 60.0:
            segments = sample_segments(total, window_s, _recording_seed(seed, doc["source"]))
            picks = snap_to_windows(segments, starts)
        else:
            picks = list(range(len(records)))
        pairs = []
        for k in picks:
            a = records[k]["window_start_s"]
            ref = gt.reference(doc["vital"], a, a + window_s)
            pairs.append((records[k]["rate_per_min"], ref))
        recordings.append(Recording(doc["vital"], doc["roi"], int(doc["method"]), tuple(pairs), doc["source"]))

    if not any(ref is not None for rec in recordings for _, ref in rec.pairs):
        print("error: no estimate overlaps the ground truth", file=sys.stderr)
        return EXIT_DATA

    effective = cfg.to_dict()
    effective["segment_seed"] = seed
    report = build_report(recordings, config=effective)
    report.write(args.out)

    out_dir = Path(args.plots_dir) if args.plots_dir else Path(args.out).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    for (name, method), stats in sorted(report.stats.items()):
        stem = f"bland_altman_{name.replace('/', '_')}_m{method}"
        stats.to_csv(out_dir / f"{stem}.csv")
        (out_dir / f"{stem}.svg").write_text(bland_altman_svg(stats, f"{name} method {method}"))
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(report.table())
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="thermovital", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="render a synthetic THSQ sequence from a YAML spec")
    g.add_argument("spec")
    g.add_argument("out")
    g.add_argument("--truth", help="also write a ground-truth CSV")
    g.set_defaults(func=cmd_gen)

    def common(sp):
        sp.add_argument("--config", help="YAML pipeline configuration")
        sp.add_argument("--fps", type=float, help="override the sequence frame rate")

    t = sub.add_parser("track", help="track an ROI given on frame 0")
    t.add_argument("sequence")
    t.add_argument("--roi", type=int, nargs=4, metavar=("X", "Y", "W", "H"), required=True)
    t.add_argument("-o", "--out", required=True)
    common(t)
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("estimate", help="windowed HR/RR estimates along a track")
    e.add_argument("sequence")
    e.add_argument("track")
    e.add_argument("--vital", choices=["hr", "rr"], required=True)
    e.add_argument("--method", type=int, choices=[1, 2], required=True)
    e.add_argument("--window", type=float, help="window length in seconds (default 20 for hr, 30 for rr)")
    e.add_argument("--hop", type=float, help="hop between windows in seconds (default 1)")
    e.add_argument("--roi-label", default="roi")
    e.add_argument("-o", "--out", required=True)
    common(e)
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("evaluate", help="score estimates against ground truth")
    v.add_argument("estimates", nargs="+")
    v.add_argument("-g", "--ground-truth", action="append", required=True)
    v.add_argument("--seed", type=int, help="segment sampling seed (default from config, else 0)")
    v.add_argument("-o", "--out", required=True)
    v.add_argument("--plots-dir")
    common(v)
    v.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ThermovitalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
