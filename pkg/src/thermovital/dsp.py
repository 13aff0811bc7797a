"""Signal-processing primitives shared by both estimation methods.

All functions accept 1-D series and most also accept 2-D arrays of shape
``(channels, samples)``, operating along the last axis; the per-pixel method
relies on that to process a whole ROI in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .errors import BandError, BandResolutionError, LengthError

Rate = Union[float, Fraction]

FILTER_ORDER = 4
PAD_FACTOR = 8


@dataclass(frozen=True)
class FrequencyBand:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise BandError(f"band requires 0 < lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, f) -> bool:
        return self.lo <= f <= self.hi


HR_BAND = FrequencyBand(1.67, 2.67)
RR_BAND = FrequencyBand(0.17, 0.67)


@dataclass(frozen=True)
class TimeSeries:
    samples: np.ndarray
    fs: Rate

    def __post_init__(self):
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    def __len__(self) -> int:
        return self.samples.shape[-1]


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum of a (zero-padded) series.

    ``magnitudes`` has ``padded_length // 2 + 1`` entries along its last
    axis; bin ``k`` sits at ``k * bin_width`` Hz.
    """

    magnitudes: np.ndarray
    fs: Rate
    padded_length: int

    @property
    def bin_width(self) -> Rate:
        return self.fs / self.padded_length

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.padded_length // 2 + 1) * float(self.fs) / self.padded_length

    def band_bins(self, band: FrequencyBand) -> np.ndarray:
        """Indices of bins whose centre lies in ``[band.lo, band.hi]``."""
        freqs = self.frequencies
        return np.flatnonzero((freqs >= band.lo) & (freqs <= band.hi))

    def to_csv(self, path) -> None:
        if self.magnitudes.ndim != 1:
            raise ValueError("CSV export is defined for single-channel spectra")
        rows = np.column_stack([self.frequencies, self.magnitudes])
        np.savetxt(path, rows, delimiter=",", header="frequency_hz,magnitude", comments="", fmt="%.10g")


@dataclass(frozen=True)
class NyquistResult:
    ok: bool
    fs: float
    required: float

    @property
    def margin(self) -> float:
        return self.fs - self.required

    def __bool__(self) -> bool:
        return self.ok


def nyquist_check(band: FrequencyBand, fs: Rate) -> NyquistResult:
    """Check that ``fs`` is at least twice the band's upper edge.

    Returns a result object instead of raising; ``bool(result)`` is the
    verdict and ``result.margin`` the headroom in Hz.
    """
    required = 2 * band.hi
    fs = float(fs)
    # tolerate float round-off at the exact boundary (2 * 0.67 vs 1.34)
    ok = fs >= required or np.isclose(fs, required, rtol=1e-12, atol=0.0)
    return NyquistResult(bool(ok), fs, required)


def require_nyquist(band: FrequencyBand, fs: Rate) -> None:
    res = nyquist_check(band, fs)
    if not res:
        raise BandError(
            f"sampling rate {res.fs:g} Hz is below the Nyquist requirement "
            f"2 x {band.hi:g} = {res.required:g} Hz"
        )


def butter_bandpass(band: FrequencyBand, fs: Rate, order: int = FILTER_ORDER) -> np.ndarray:
    """Second-order sections of a Butterworth band-pass (``order`` per edge)."""
    require_nyquist(band, fs)
    fs = float(fs)
    hi = band.hi
    if hi >= fs / 2:
        # exactly at Nyquist: nudge the edge inside the digital range
        hi = np.nextafter(fs / 2, 0)
    return signal.butter(order, [band.lo, hi], btype="bandpass", output="sos", fs=fs)


def butter_bandpass_gain(freqs, band: FrequencyBand, fs: Rate, order: int = FILTER_ORDER) -> np.ndarray:
    """Closed-form magnitude response of the bilinear-transformed Butterworth band-pass.

    Uses the pre-warped analog frequencies ``W = tan(pi f / fs)`` and the
    low-pass to band-pass map ``(W^2 - Wl Wh) / (W (Wh - Wl))``. Independent
    of scipy's filter design, so it can serve as a check on it.
    """
    fs = float(fs)
    f = np.asarray(freqs, dtype=float)
    w = np.tan(np.pi * f / fs)
    wl = np.tan(np.pi * band.lo / fs)
    wh = np.tan(np.pi * band.hi / fs)
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = (w**2 - wl * wh) / (w * (wh - wl))
        gain = 1.0 / np.sqrt(1.0 + omega ** (2 * order))
    return np.where(w == 0, 0.0, gain)


def detrend(x: np.ndarray) -> np.ndarray:
    """Subtract the mean along the last axis."""
    x = np.asarray(x, dtype=float)
    return x - x.mean(axis=-1, keepdims=True)


def bandpass(x: TimeSeries, band: FrequencyBand, order: int = FILTER_ORDER) -> TimeSeries:
    """Zero-phase Butterworth band-pass of a mean-removed series.

    The filter runs forward then backward, so the effective magnitude
    response is the square of :func:`butter_bandpass_gain`.

    Raises
    ------
    BandError
        If the band violates the Nyquist limit for ``x.fs``.
    LengthError
        If the series is shorter than ``3 * order`` samples.
    """
    n = len(x)
    if n < 3 * order:
        raise LengthError(f"series of {n} samples is too short for an order-{order} filter")
    sos = butter_bandpass(band, x.fs, order)
    default_pad = 3 * (2 * len(sos) + 1 - min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum()))
    y = signal.sosfiltfilt(sos, detrend(x.samples), axis=-1, padlen=min(default_pad, n - 1))
    return TimeSeries(y, x.fs)


def padded_length(n: int, factor: int = PAD_FACTOR) -> int:
    """Smallest power of two >= ``factor * n``."""
    if n < 1:
        raise LengthError("cannot pad an empty series")
    return 1 << int(np.ceil(np.log2(factor * n)))


def zero_pad(x: TimeSeries, target_length: int) -> TimeSeries:
    n = len(x)
    if target_length < n:
        raise ValueError(f"target length {target_length} is shorter than the series ({n})")
    if target_length == n:
        return x
    width = [(0, 0)] * (x.samples.ndim - 1) + [(0, target_length - n)]
    return TimeSeries(np.pad(x.samples, width), x.fs)


def fft_magnitude(x: TimeSeries) -> Spectrum:
    if len(x) == 0:
        raise LengthError("cannot transform an empty series")
    mags = np.abs(sfft.rfft(x.samples, axis=-1))
    return Spectrum(mags, x.fs, len(x))


@dataclass(frozen=True)
class Peak:
    frequency: float
    bin: int
    magnitude: float
    prominence: float


def dominant_frequency(spec: Spectrum, band: FrequencyBand) -> Peak:
    """Highest in-band bin of a single-channel spectrum.

    Ties go to the lower frequency. ``prominence`` is the peak magnitude over
    the mean in-band magnitude, and 0 for an all-zero band.
    """
    bins = spec.band_bins(band)
    if bins.size == 0:
        raise BandResolutionError(
            f"no bin of width {float(spec.bin_width):.4g} Hz lies in "
            f"[{band.lo}, {band.hi}] Hz; pad the series further"
        )
    mags = spec.magnitudes[..., bins]
    if mags.ndim != 1:
        raise ValueError("dominant_frequency expects a single-channel spectrum")
    i = int(np.argmax(mags))
    mean = float(mags.mean())
    prominence = float(mags[i]) / mean if mean > 0 else 0.0
    k = int(bins[i])
    return Peak(k * float(spec.fs) / spec.padded_length, k, float(mags[i]), prominence)
