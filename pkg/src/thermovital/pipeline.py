"""End-to-end helpers: sequence + track -> windowed estimates -> paired scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import dsp
from .estimator import (
    HEART_RATE,
    RESPIRATION_RATE,
    EstimatorConfig,
    VitalEstimate,
    estimate_window,
    window_starts,
)
from .ingest import FrameSequence
from .tracker import PixelSeries, Track, extract_pixel_series

VITALS = {"hr": HEART_RATE, "rr": RESPIRATION_RATE}


@dataclass
class WindowEstimate:
    start_s: float
    estimate: VitalEstimate

    def to_record(self) -> dict:
        return self.estimate.to_record(self.start_s)


def window_frames(seconds: float, fps) -> int:
    return int(round(seconds * float(fps)))


def estimate_windows(
    series: PixelSeries,
    fps,
    vital: str,
    method: int,
    config: EstimatorConfig = EstimatorConfig(),
    *,
    starts: Optional[Iterable[int]] = None,
    window_seconds: Optional[float] = None,
    low_confidence_frames: Iterable[int] = (),
) -> list[WindowEstimate]:
    """Estimate on full windows of ``series``.

    ``starts`` (frame offsets) defaults to every ``config.hop_seconds``.
    """
    kind = VITALS[vital]
    dsp.require_nyquist(config.band(kind), fps)
    n = series.grid.shape[-1]
    win = window_frames(window_seconds or config.segment_seconds(kind), fps)
    if starts is None:
        starts = window_starts(n, win, window_frames(config.hop_seconds, fps))
    low = set(low_confidence_frames)
    out = []
    for s in starts:
        grid = series.grid[:, :, s : s + win]
        if grid.shape[-1] < win:
            continue
        est = estimate_window(grid, fps, kind, method, config, low_confidence_frames=low, start=s)
        out.append(WindowEstimate(s / float(fps), est))
    return out


def segment_starts(segments: Iterable[tuple[float, float]], fps) -> list[int]:
    return [int(round(a * float(fps))) for a, _ in segments]


def estimate_sequence(
    seq: FrameSequence,
    track: Track,
    vital: str,
    method: int,
    config: EstimatorConfig = EstimatorConfig(),
    *,
    segments: Optional[Iterable[tuple[float, float]]] = None,
    strict: bool = False,
) -> list[WindowEstimate]:
    """Extract the tracked ROI and estimate per window or per given segment."""
    series = extract_pixel_series(seq, track, strict=strict)
    starts = None if segments is None else segment_starts(segments, seq.fps)
    return estimate_windows(
        series, seq.fps, vital, method, config, starts=starts,
        low_confidence_frames=track.low_confidence_frames,
    )


def snap_to_windows(segments: Iterable[tuple[float, float]], window_starts_s: np.ndarray) -> list[int]:
    """Index of the available window whose start is nearest each segment start."""
    ws = np.asarray(window_starts_s, dtype=float)
    return [int(np.argmin(np.abs(ws - a))) for a, _ in segments]
