"""Heart- and respiration-rate estimation from ROI intensity series.

Method 1 reduces the ROI to its average intensity per frame and takes the
dominant in-band frequency of that single series. Method 2 finds the dominant
in-band bin of every pixel separately and returns the bin with the most
votes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import fft as sfft

from . import dsp
from .dsp import FrequencyBand, TimeSeries
from .errors import BandResolutionError, InputError, NotReadyError

HEART_RATE = "heart-rate"
RESPIRATION_RATE = "respiration-rate"

WARN_TRACKING = "low_tracking_confidence"
WARN_PROMINENCE = "low_prominence"
WARN_DEAD_PIXELS = "zero_variance_pixels_excluded"


def hz_to_rate(f: float) -> float:
    """Per-minute rate (BPM or RPM) for a frequency in Hz."""
    if f < 0:
        raise ValueError("frequency must be >= 0")
    return 60.0 * f


@dataclass
class EstimatorConfig:
    """Band and window settings for both vitals.

    ``hop_seconds`` is the stride between consecutive windows when
    estimating over a stream.
    """

    hr_band: FrequencyBand = dsp.HR_BAND
    rr_band: FrequencyBand = dsp.RR_BAND
    hr_segment_seconds: float = 20.0
    rr_segment_seconds: float = 30.0
    hop_seconds: float = 1.0
    filter_order: int = dsp.FILTER_ORDER
    pad_factor: int = dsp.PAD_FACTOR
    prominence_threshold: float = 3.0

    def band(self, kind: str) -> FrequencyBand:
        return self.hr_band if kind == HEART_RATE else self.rr_band

    def segment_seconds(self, kind: str) -> float:
        return self.hr_segment_seconds if kind == HEART_RATE else self.rr_segment_seconds

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hr_band"] = [self.hr_band.lo, self.hr_band.hi]
        d["rr_band"] = [self.rr_band.lo, self.rr_band.hi]
        d["filter_family"] = "butterworth-zero-phase"
        d["window_function"] = "rectangular"
        return d


@dataclass
class VitalEstimate:
    kind: str
    frequency: float
    band: FrequencyBand
    method: int
    confidence: float
    bin: int
    warnings: list[str] = field(default_factory=list)
    votes: Optional[dict[int, int]] = None

    @property
    def rate(self) -> float:
        return hz_to_rate(self.frequency)

    def to_record(self, window_start_s: float = 0.0) -> dict:
        return {
            "kind": self.kind,
            "method": self.method,
            "frequency_hz": self.frequency,
            "rate_per_min": self.rate,
            "confidence": self.confidence,
            "band_lo_hz": self.band.lo,
            "band_hi_hz": self.band.hi,
            "window_start_s": window_start_s,
            "warnings": list(self.warnings),
        }


def _kind_for(band: FrequencyBand, kind: Optional[str]) -> str:
    if kind is not None:
        return kind
    return HEART_RATE if band.lo >= 1.0 else RESPIRATION_RATE


def _spectrum(samples: np.ndarray, fs, band: FrequencyBand, config: EstimatorConfig) -> dsp.Spectrum:
    dsp.require_nyquist(band, fs)
    filtered = dsp.bandpass(TimeSeries(samples, fs), band, config.filter_order)
    n_pad = dsp.padded_length(len(filtered), config.pad_factor)
    return dsp.fft_magnitude(dsp.zero_pad(filtered, n_pad))


def estimate_method1(
    mean_series: TimeSeries,
    band: FrequencyBand,
    config: EstimatorConfig = EstimatorConfig(),
    *,
    kind: Optional[str] = None,
    window_length: Optional[int] = None,
) -> VitalEstimate:
    """Dominant in-band frequency of the ROI-average series.

    ``window_length``, when given, is the required number of samples; a
    shorter series raises :class:`NotReadyError`.
    """
    n = len(mean_series)
    if window_length is not None and n < window_length:
        raise NotReadyError(f"buffer holds {n} of {window_length} samples")
    spec = _spectrum(mean_series.samples, mean_series.fs, band, config)
    peak = dsp.dominant_frequency(spec, band)
    warnings = []
    if peak.prominence < config.prominence_threshold:
        warnings.append(WARN_PROMINENCE)
    return VitalEstimate(_kind_for(band, kind), peak.frequency, band, 1, peak.prominence, peak.bin, warnings)


def estimate_method2(
    pixel_series: np.ndarray,
    fs,
    band: FrequencyBand,
    config: EstimatorConfig = EstimatorConfig(),
    *,
    kind: Optional[str] = None,
    window_length: Optional[int] = None,
) -> VitalEstimate:
    """Most common per-pixel dominant bin.

    Parameters
    ----------
    pixel_series : ndarray
        ``(..., T)`` array; every leading index is one pixel.

    Votes live on the shared zero-padded bin grid. Ties between bins go to
    the larger summed peak magnitude among their voters, then to the lower
    frequency. Constant pixels are left out of the vote and reported in the
    warnings. ``confidence`` is the winning share of the voting pixels.
    """
    x = np.asarray(pixel_series, dtype=float)
    if x.ndim < 1 or x.shape[-1] == 0:
        raise InputError("empty pixel grid")
    x = x.reshape(-1, x.shape[-1])
    if x.shape[0] == 0:
        raise InputError("empty pixel grid")
    if window_length is not None and x.shape[-1] < window_length:
        raise NotReadyError(f"buffer holds {x.shape[-1]} of {window_length} samples")

    live = np.ptp(x, axis=-1) > 0
    warnings = []
    if not live.all():
        warnings.append(WARN_DEAD_PIXELS)
    if not live.any():
        # nothing to vote with; fall back to the (silent) mean series
        est = estimate_method1(TimeSeries(x.mean(axis=0), fs), band, config, kind=kind)
        est.method, est.confidence, est.votes = 2, 0.0, {}
        est.warnings = warnings + est.warnings
        return est

    dsp.require_nyquist(band, fs)
    filtered = dsp.bandpass(TimeSeries(x[live], fs), band, config.filter_order)
    n_pad = dsp.padded_length(x.shape[-1], config.pad_factor)
    grid = dsp.Spectrum(np.empty(0), fs, n_pad)
    bins = grid.band_bins(band)
    if bins.size == 0:
        raise BandResolutionError(
            f"no bin of width {float(grid.bin_width):.4g} Hz lies in [{band.lo}, {band.hi}] Hz"
        )
    # same numbers as zero_pad + fft_magnitude, restricted to the band
    spectra = sfft.rfft(filtered.samples, n=n_pad, axis=-1)[:, bins[0] : bins[-1] + 1]
    mags = np.abs(spectra)
    winners = np.argmax(mags, axis=1)  # first max = lowest frequency per pixel
    counts = np.bincount(winners, minlength=bins.size)
    strength = np.bincount(winners, weights=mags[np.arange(len(winners)), winners], minlength=bins.size)
    top = np.flatnonzero(counts == counts.max())
    if top.size > 1:
        best = strength[top].max()
        top = top[strength[top] == best]
    choice = int(top[0])
    k = int(bins[choice])
    votes = {int(bins[i]): int(c) for i, c in enumerate(counts) if c}
    return VitalEstimate(
        _kind_for(band, kind),
        k * float(fs) / n_pad,
        band,
        2,
        float(counts[choice]) / len(winners),
        k,
        warnings,
        votes,
    )


class SignalBuffer:
    """Fixed-capacity sliding window over one or more channels.

    >>> buf = SignalBuffer(capacity=3, channels=1, fs=15)
    >>> for v in range(5):
    ...     _ = buf.push([v])
    >>> buf.snapshot()[0].tolist()
    [2.0, 3.0, 4.0]
    """

    def __init__(self, capacity: int, channels: int = 1, fs=15.0):
        if capacity < 1 or channels < 1:
            raise ValueError("capacity and channels must be >= 1")
        self.capacity = int(capacity)
        self.channels = int(channels)
        self.fs = fs
        self._data = np.zeros((self.channels, self.capacity))
        self._count = 0  # total samples pushed

    def __len__(self) -> int:
        return min(self._count, self.capacity)

    @property
    def full(self) -> bool:
        return self._count >= self.capacity

    def push(self, values) -> bool:
        """Append one sample per channel; returns whether the window is full."""
        v = np.asarray(values, dtype=float).ravel()
        if v.size != self.channels:
            raise InputError(f"expected {self.channels} channel values, got {v.size}")
        self._data[:, self._count % self.capacity] = v
        self._count += 1
        return self.full

    def snapshot(self) -> np.ndarray:
        """``(channels, len(self))`` copy, oldest sample first."""
        n = len(self)
        if self._count <= self.capacity:
            return self._data[:, :n].copy()
        start = self._count % self.capacity
        return np.roll(self._data, -start, axis=1)

    def window(self) -> np.ndarray:
        if not self.full:
            raise NotReadyError(f"buffer holds {len(self)} of {self.capacity} samples")
        return self.snapshot()


def window_starts(n_frames: int, window: int, hop: int) -> list[int]:
    """Frame offsets of every full window with the given hop."""
    if window > n_frames:
        return []
    return list(range(0, n_frames - window + 1, max(hop, 1)))


def estimate_window(
    grid: np.ndarray,
    fs,
    kind: str,
    method: int,
    config: EstimatorConfig = EstimatorConfig(),
    *,
    low_confidence_frames: Iterable[int] = (),
    start: int = 0,
) -> VitalEstimate:
    """Estimate on ``grid`` (``(h, w, T)``), adding a tracking warning when
    any frame ``start .. start+T-1`` was flagged by the tracker."""
    band = config.band(kind)
    if method == 1:
        est = estimate_method1(TimeSeries(grid.reshape(-1, grid.shape[-1]).mean(axis=0), fs), band, config, kind=kind)
    elif method == 2:
        est = estimate_method2(grid, fs, band, config, kind=kind)
    else:
        raise ValueError(f"method must be 1 or 2, got {method}")
    stop = start + grid.shape[-1]
    if any(start <= f < stop for f in low_confidence_frames):
        est.warnings.insert(0, WARN_TRACKING)
    return est
