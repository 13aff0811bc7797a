"""Scoring estimates against reference rates.

MAPE and Bland-Altman agreement over paired (estimate, reference) rates,
the one-segment-per-minute sampling protocol, ground-truth CSV ingestion,
and the per-ROI report with its JSON/CSV/SVG exports.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

MINUTE = 60.0
LOA_Z = 1.96


def sample_segments(total_seconds: float, segment_seconds: float, seed: int, minute: float = MINUTE) -> list[tuple[float, float]]:
    """One random ``segment_seconds`` window inside every whole minute.

    Starts are uniform on ``[m, m + minute - segment_seconds]``.
    """
    if segment_seconds <= 0 or segment_seconds > minute:
        raise ValueError(f"segment length must be in (0, {minute}] s, got {segment_seconds}")
    n_min = int(math.floor(total_seconds / minute + 1e-9))
    if n_min < 1:
        raise ValueError(f"need at least one minute of data, got {total_seconds} s")
    rng = np.random.default_rng(seed)
    slack = minute - segment_seconds
    out = []
    for m in range(n_min):
        start = m * minute + (float(rng.uniform(0.0, slack)) if slack > 0 else 0.0)
        out.append((start, start + segment_seconds))
    return out


@dataclass(frozen=True)
class Pair:
    estimate: float
    reference: float
    roi: str = "roi"
    method: int = 1
    segment: str = ""


def _arrays(pairs: Sequence[Pair]) -> tuple[np.ndarray, np.ndarray]:
    est = np.array([p.estimate for p in pairs], dtype=float)
    ref = np.array([p.reference for p in pairs], dtype=float)
    return est, ref


def _as_pairs(pairs_or_est, reference=None) -> list[Pair]:
    if reference is None:
        return list(pairs_or_est)
    est = np.atleast_1d(np.asarray(pairs_or_est, dtype=float))
    ref = np.atleast_1d(np.asarray(reference, dtype=float))
    if est.shape != ref.shape:
        raise ValueError("estimate and reference lengths differ")
    return [Pair(float(e), float(r)) for e, r in zip(est, ref)]


def mape(pairs, reference=None) -> float:
    """Mean absolute percentage error, in percent.

    Accepts a sequence of :class:`Pair` or two parallel arrays
    ``mape(estimates, references)``.
    """
    pairs = _as_pairs(pairs, reference)
    if not pairs:
        raise ValueError("MAPE of an empty pair list")
    est, ref = _arrays(pairs)
    if np.any(ref <= 0):
        raise DataError("MAPE needs strictly positive reference values")
    return float(100.0 * np.mean(np.abs(est - ref) / ref))


@dataclass
class BlandAltmanStats:
    bias: float
    sd: float
    loa_low: float
    loa_high: float
    means: np.ndarray
    diffs: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.means.tolist(), self.diffs.tolist()))

    def to_dict(self) -> dict:
        return {
            "bias": self.bias,
            "sd": self.sd,
            "loa_low": self.loa_low,
            "loa_high": self.loa_high,
            "n": int(self.diffs.size),
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["mean", "diff"])
            for m, d in self.points:
                wr.writerow([repr(m), repr(d)])


def bland_altman(pairs, reference=None) -> BlandAltmanStats:
    """Bias and 95% limits of agreement of ``estimate - reference``.

    The standard deviation uses the n - 1 denominator.
    """
    pairs = _as_pairs(pairs, reference)
    if len(pairs) < 2:
        raise ValueError("Bland-Altman analysis needs at least 2 pairs")
    est, ref = _arrays(pairs)
    d = est - ref
    bias = float(d.mean())
    sd = float(d.std(ddof=1))
    return BlandAltmanStats(bias, sd, bias - LOA_Z * sd, bias + LOA_Z * sd, (est + ref) / 2, d)


# --------------------------------------------------------------------------
# ground truth
# --------------------------------------------------------------------------


@dataclass
class GroundTruth:
    """Reference rates sampled over time; ``nan`` marks a missing modality."""

    time: np.ndarray
    hr: np.ndarray
    rr: np.ndarray

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.hr = np.asarray(self.hr, dtype=float)
        self.rr = np.asarray(self.rr, dtype=float)
        if self.time.size > 1 and np.any(np.diff(self.time) <= 0):
            raise DataError("ground-truth times must be strictly increasing")
        for name, v in (("hr", self.hr), ("rr", self.rr)):
            if np.any(v[~np.isnan(v)] <= 0):
                raise DataError(f"ground-truth {name} values must be positive")

    @classmethod
    def read_csv(cls, path) -> "GroundTruth":
        t, hr, rr = [], [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "time_s" not in reader.fieldnames:
                raise DataError(f"{path}: expected header time_s,hr_bpm,rr_rpm")
            for row in reader:
                t.append(float(row["time_s"]))
                hr.append(_cell(row.get("hr_bpm")))
                rr.append(_cell(row.get("rr_rpm")))
        return cls(t, hr, rr)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["time_s", "hr_bpm", "rr_rpm"])
            for t, h, r in zip(self.time, self.hr, self.rr):
                wr.writerow([repr(float(t)), "" if np.isnan(h) else repr(float(h)), "" if np.isnan(r) else repr(float(r))])

    def reference(self, vital: str, start: float, end: float) -> Optional[float]:
        """Mean reference rate over records with ``start <= time <= end``."""
        values = self.hr if vital in ("hr", "heart-rate") else self.rr
        sel = (self.time >= start) & (self.time <= end) & ~np.isnan(values)
        if not sel.any():
            return None
        return float(values[sel].mean())


def _cell(v) -> float:
    if v is None or str(v).strip() == "":
        return float("nan")
    return float(v)


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------


VITAL_LABEL = {"hr": "Heart Rate", "rr": "Respiration Rate"}


@dataclass
class ReportRow:
    vital: str
    roi: str
    recordings: int
    mape: dict[int, float]
    bland_altman: dict[int, Optional[dict]]
    pairs: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "vital": self.vital,
            "vital_label": VITAL_LABEL.get(self.vital, self.vital),
            "roi": self.roi,
            "recordings": self.recordings,
            "mape": {f"method{m}": v for m, v in sorted(self.mape.items())},
            "pairs": {f"method{m}": v for m, v in sorted(self.pairs.items())},
            "bland_altman": {f"method{m}": v for m, v in sorted(self.bland_altman.items())},
        }


@dataclass
class EvaluationReport:
    rows: list[ReportRow]
    stats: dict[tuple[str, int], BlandAltmanStats] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "warnings": list(self.warnings),
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    def table(self) -> str:
        """Plain-text table: vital, ROI, recordings, MAPE per method."""
        methods = sorted({m for r in self.rows for m in r.mape})
        head = ["Vital Signs", "ROI", "Recordings"] + [f"MAPE M{m}" for m in methods]
        lines = [" | ".join(head)]
        for r in self.rows:
            cells = [VITAL_LABEL.get(r.vital, r.vital), r.roi, str(r.recordings)]
            cells += [f"{r.mape[m]:.2f}%" if m in r.mape else "-" for m in methods]
            lines.append(" | ".join(cells))
        return "\n".join(lines)


@dataclass(frozen=True)
class Recording:
    """Segment-level results for one ROI of one recording.

    ``pairs`` lists (estimate, reference) per-minute rates; a reference of
    ``None`` means ground truth was missing for that segment.
    """

    vital: str
    roi: str
    method: int
    pairs: tuple[tuple[float, Optional[float]], ...]
    recording_id: str = ""


def build_report(recordings: Iterable[Recording], config: Optional[dict] = None) -> EvaluationReport:
    """Aggregate per-recording results into one row per (vital, ROI).

    Segments without a reference are dropped with a warning; a (vital, ROI,
    method) cell left with no pairs is dropped the same way.
    """
    groups: dict[tuple[str, str], dict[int, list[Pair]]] = {}
    rec_ids: dict[tuple[str, str], set[str]] = {}
    warnings = []
    for rec in recordings:
        key = (rec.vital, rec.roi)
        cell = groups.setdefault(key, {}).setdefault(rec.method, [])
        for i, (est, ref) in enumerate(rec.pairs):
            seg = f"{rec.recording_id}#{i}"
            if ref is None or not np.isfinite(ref):
                warnings.append(f"{rec.vital}/{rec.roi}/method{rec.method}: no ground truth for segment {seg}; excluded")
                continue
            cell.append(Pair(est, ref, rec.roi, rec.method, seg))
        rec_ids.setdefault(key, set()).add(rec.recording_id)

    order = {"hr": 0, "rr": 1}
    rows, stats = [], {}
    for (vital, roi) in sorted(groups, key=lambda k: (order.get(k[0], 2), k[0], k[1])):
        by_method = groups[(vital, roi)]
        m_mape, m_ba, m_n = {}, {}, {}
        for method in sorted(by_method):
            pairs = by_method[method]
            if not pairs:
                warnings.append(f"{vital}/{roi}/method{method}: no paired measurements; cell omitted")
                continue
            m_mape[method] = mape(pairs)
            m_n[method] = len(pairs)
            if len(pairs) >= 2:
                ba = bland_altman(pairs)
                stats[(f"{vital}/{roi}", method)] = ba
                m_ba[method] = ba.to_dict()
            else:
                m_ba[method] = None
        if not m_mape:
            warnings.append(f"{vital}/{roi}: no method has paired measurements; row excluded")
            continue
        rows.append(ReportRow(vital, roi, len(rec_ids[(vital, roi)]), m_mape, m_ba, m_n))
    for w in warnings:
        logger.warning(w)
    return EvaluationReport(rows, stats, warnings, dict(config or {}))


def report_from_json(text: str) -> dict:
    return json.loads(text)


def bland_altman_svg(stats: BlandAltmanStats, title: str = "", width: int = 480, height: int = 320) -> str:
    """Scatter of (mean, difference) with bias and limits-of-agreement lines."""
    m, d = stats.means, stats.diffs
    margin = 48
    x_lo, x_hi = float(m.min()), float(m.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    ys = np.concatenate([d, [stats.loa_low, stats.loa_high, stats.bias]])
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1, y_hi + 1
    pad_y = 0.1 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    def sx(v):
        return margin + (v - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for value, label, dash in (
        (stats.bias, f"bias {stats.bias:.2f}", ""),
        (stats.loa_high, f"+1.96 SD {stats.loa_high:.2f}", ' stroke-dasharray="6,4"'),
        (stats.loa_low, f"-1.96 SD {stats.loa_low:.2f}", ' stroke-dasharray="6,4"'),
    ):
        y = sy(value)
        out.append(f'<line x1="{margin}" y1="{y:.2f}" x2="{width - margin}" y2="{y:.2f}" stroke="gray"{dash}/>')
        out.append(f'<text x="{width - margin:.1f}" y="{y - 3:.2f}" text-anchor="end" font-size="10">{label}</text>')
    for mx, dy in zip(m, d):
        out.append(f'<circle cx="{sx(mx):.2f}" cy="{sy(dy):.2f}" r="3" fill="steelblue"/>')
    out.append(
        f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="11">mean of estimate and reference</text>'
    )
    out.append(
        f'<text x="14" y="{height / 2:.1f}" transform="rotate(-90 14 {height / 2:.1f})" text-anchor="middle" font-size="11">estimate - reference</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
