"""Kernelized correlation filter (KCF) tracking of a rectangular ROI.

Single-channel raw-intensity variant with a Gaussian kernel: the filter is a
kernel ridge regression over every circular shift of a padded window around
the target, solved element-wise in the Fourier domain. Translation only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import fft as sfft

from .errors import BoundsError, InputError, TrackerInitError
from .ingest import FrameSequence, ThermalFrame

MIN_ROI = 8


@dataclass(frozen=True)
class RoiBox:
    x: int
    y: int
    w: int
    h: int

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2, self.y + self.h / 2)

    def shifted(self, dx: int, dy: int) -> "RoiBox":
        return replace(self, x=self.x + dx, y=self.y + dy)

    def inside(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x + self.w <= width and self.y + self.h <= height

    def clamped(self, width: int, height: int) -> "RoiBox":
        x = min(max(self.x, 0), max(width - self.w, 0))
        y = min(max(self.y, 0), max(height - self.h, 0))
        return replace(self, x=x, y=y)

    def validate(self, width: int, height: int) -> None:
        if self.w < MIN_ROI or self.h < MIN_ROI:
            raise TrackerInitError(
                f"ROI {self.w}x{self.h} is below the {MIN_ROI}x{MIN_ROI} trainable minimum"
            )
        if not self.inside(width, height):
            raise BoundsError(f"ROI {self} is not inside the {width}x{height} frame")


@dataclass(frozen=True)
class KcfParams:
    """Tracker hyperparameters.

    ``sigma`` is the Gaussian kernel bandwidth on unit-variance features;
    the search window is ``(1 + padding)`` times the ROI; the desired
    response is a Gaussian of standard deviation ``sqrt(w h) * output_sigma_factor``
    pixels.
    """

    sigma: float = 0.5
    lam: float = 1e-4
    interp: float = 0.02
    padding: float = 1.5
    output_sigma_factor: float = 0.1
    psr_threshold: float = 5.0
    psr_exclusion: int = 11

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if not 0 < self.interp <= 1:
            raise ValueError("interp must be in (0, 1]")
        if self.sigma <= 0 or self.padding < 0:
            raise ValueError("sigma must be > 0 and padding >= 0")


@dataclass
class KcfModel:
    """Learned filter state.

    Spectra are half-plane (``rfft2``) arrays; ``template_f`` caches the
    transform of ``template``.
    """

    template: np.ndarray
    alphaf: np.ndarray
    window: tuple[int, int]  # (rows, cols)
    params: KcfParams
    yf: np.ndarray
    cos_window: np.ndarray
    template_f: np.ndarray


@dataclass
class Detection:
    dx: int
    dy: int
    psr: float
    response: np.ndarray
    z: Optional[np.ndarray] = None
    zf: Optional[np.ndarray] = None


@dataclass
class Track:
    boxes: list[RoiBox]
    confidence: np.ndarray
    low_confidence_frames: set[int] = field(default_factory=set)
    clamped_frames: set[int] = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.boxes)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["frame_index", "x", "y", "w", "h", "confidence", "low_confidence"])
            for i, (b, c) in enumerate(zip(self.boxes, self.confidence)):
                wr.writerow([i, b.x, b.y, b.w, b.h, f"{c:.6f}", int(i in self.low_confidence_frames)])

    @classmethod
    def from_csv(cls, path) -> "Track":
        boxes, conf, low = [], [], set()
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh)):
                if int(row["frame_index"]) != i:
                    raise InputError(f"{path}: frame_index {row['frame_index']} out of order at row {i}")
                boxes.append(RoiBox(int(row["x"]), int(row["y"]), int(row["w"]), int(row["h"])))
                conf.append(float(row["confidence"]))
                if int(row["low_confidence"]):
                    low.add(i)
        return cls(boxes, np.array(conf), low)


def window_shape(roi: RoiBox, padding: float) -> tuple[int, int]:
    return (int(np.floor(roi.h * (1 + padding))), int(np.floor(roi.w * (1 + padding))))


def gaussian_response(shape: tuple[int, int], sigma: float) -> np.ndarray:
    """Gaussian peaked at index (0, 0), wrapping circularly."""
    rows, cols = shape
    r = np.arange(rows) - rows // 2
    c = np.arange(cols) - cols // 2
    g = np.exp(-0.5 * (r[:, None] ** 2 + c[None, :] ** 2) / sigma**2)
    return np.roll(g, (-(rows // 2), -(cols // 2)), axis=(0, 1))


def get_window(image: np.ndarray, center: tuple[float, float], shape: tuple[int, int]) -> np.ndarray:
    """Crop ``shape`` around ``center`` (x, y); out-of-frame pixels replicate the edge."""
    rows, cols = shape
    cx, cy = center
    x0 = int(np.floor(cx)) - cols // 2
    y0 = int(np.floor(cy)) - rows // 2
    if x0 >= 0 and y0 >= 0 and x0 + cols <= image.shape[1] and y0 + rows <= image.shape[0]:
        return image[y0 : y0 + rows, x0 : x0 + cols].astype(np.float32)
    H, W = image.shape
    ya, yb = min(max(y0, 0), H - 1), max(min(y0 + rows, H), 1)
    xa, xb = min(max(x0, 0), W - 1), max(min(x0 + cols, W), 1)
    inner = image[ya:yb, xa:xb].astype(np.float32)
    if y0 >= H or y0 + rows <= 0 or x0 >= W or x0 + cols <= 0:
        ys = np.clip(np.arange(y0, y0 + rows), 0, H - 1)
        xs = np.clip(np.arange(x0, x0 + cols), 0, W - 1)
        return image[np.ix_(ys, xs)].astype(np.float32)
    pad = ((ya - y0, y0 + rows - yb), (xa - x0, x0 + cols - xb))
    return np.pad(inner, pad, mode="edge")


def features(patch: np.ndarray, cos_window: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance intensities times a Hann window.

    A constant patch maps to all zeros.
    """
    z = np.asarray(patch, dtype=np.float32) - np.float32(patch.mean(dtype=np.float64))
    flat = z.ravel()
    sd = np.sqrt(float(np.dot(flat, flat)) / flat.size)
    if sd > 0:
        z *= np.float32(1.0 / sd)
    z *= cos_window
    return z


def gaussian_correlation(x: np.ndarray, xf: np.ndarray, y: np.ndarray, yf: np.ndarray, sigma: float) -> np.ndarray:
    """Spectrum of the Gaussian kernel between ``x`` and every circular shift of ``y``.

    ``xf``/``yf`` are the ``rfft2`` of ``x``/``y``; distances are divided by
    the number of pixels so ``sigma`` is independent of window size.
    """
    n = x.size
    xx = float(np.dot(x.ravel(), x.ravel()))
    yy = float(np.dot(y.ravel(), y.ravel()))
    d = sfft.irfft2(xf * np.conj(yf), s=x.shape)
    # d <- max(0, xx + yy - 2 xy) / (n sigma^2), then exp(-d)
    d *= np.float32(-2.0)
    d += np.float32(xx + yy)
    np.maximum(d, 0, out=d)
    d *= np.float32(-1.0 / (n * sigma**2))
    np.exp(d, out=d)
    return sfft.rfft2(d)


def _train(x: np.ndarray, xf: np.ndarray, yf: np.ndarray, params: KcfParams) -> np.ndarray:
    kf = gaussian_correlation(x, xf, x, xf, params.sigma)
    return yf / (kf + params.lam)


def init_track(frame: ThermalFrame | np.ndarray, roi: RoiBox, params: KcfParams = KcfParams()) -> KcfModel:
    """Train a filter on ``roi`` of ``frame``.

    Raises
    ------
    TrackerInitError
        ROI narrower or shorter than 8 px.
    BoundsError
        ROI not fully inside the frame.
    """
    image = frame.intensities if isinstance(frame, ThermalFrame) else np.asarray(frame)
    roi.validate(image.shape[1], image.shape[0])
    shape = window_shape(roi, params.padding)
    cos_window = np.outer(np.hanning(shape[0]), np.hanning(shape[1])).astype(np.float32)
    out_sigma = np.sqrt(roi.w * roi.h) * params.output_sigma_factor
    yf = sfft.rfft2(gaussian_response(shape, out_sigma).astype(np.float32))
    x = features(get_window(image, roi.center, shape), cos_window)
    xf = sfft.rfft2(x)
    return KcfModel(x, _train(x, xf, yf, params), shape, params, yf, cos_window, xf)


def psr(response: np.ndarray, exclusion: int = 11) -> float:
    """Peak-to-sidelobe ratio, excluding an ``exclusion``-square around the peak.

    The response is circular, so the excluded square wraps. Returns 0 when
    the sidelobe has (numerically) no spread, e.g. a flat response.
    """
    rows, cols = response.shape
    r0, c0 = np.unravel_index(np.argmax(response), response.shape)
    peak = float(response[r0, c0])
    half = min(exclusion // 2, (rows - 1) // 2, (cols - 1) // 2)
    rr = np.arange(r0 - half, r0 + half + 1) % rows
    cc = np.arange(c0 - half, c0 + half + 1) % cols
    block = response[np.ix_(rr, cc)].astype(np.float64).ravel()
    flat = response.ravel()
    n = flat.size - block.size
    if n < 2:
        return 0.0
    total = float(flat.sum(dtype=np.float64))
    mean = (total - block.sum()) / n
    # sum of squares about the sidelobe mean, with the excluded block removed
    ss = float(np.dot(flat, flat)) - 2 * mean * total + flat.size * mean**2
    ss -= float(np.sum((block - mean) ** 2))
    sd = np.sqrt(max(ss, 0.0) / n)
    scale = max(abs(peak), abs(float(flat.min())), 1e-300)
    if sd <= 1e-5 * scale:
        return 0.0
    return float((peak - mean) / sd)


def detect_features(model: KcfModel, z: np.ndarray) -> Detection:
    """Locate the template in already-extracted features ``z``."""
    zf = sfft.rfft2(z)
    kzf = gaussian_correlation(z, zf, model.template, model.template_f, model.params.sigma)
    response = sfft.irfft2(model.alphaf * kzf, s=model.window)
    # np.argmax returns the first (row-major smallest) maximum
    r, c = np.unravel_index(np.argmax(response), response.shape)
    rows, cols = response.shape
    dy = r - rows if r > rows // 2 else r
    dx = c - cols if c > cols // 2 else c
    return Detection(int(dx), int(dy), psr(response, model.params.psr_exclusion), response, z, zf)


def detect(model: KcfModel, frame: ThermalFrame | np.ndarray, roi: RoiBox) -> Detection:
    """Run the filter on a window centred on ``roi``; displacement is in pixels."""
    image = frame.intensities if isinstance(frame, ThermalFrame) else np.asarray(frame)
    z = features(get_window(image, roi.center, model.window), model.cos_window)
    return detect_features(model, z)


def update(model: KcfModel, frame: ThermalFrame | np.ndarray, roi: RoiBox, *, features_at_roi=None) -> KcfModel:
    """Blend a filter trained at ``roi`` into ``model`` with rate ``interp``.

    ``features_at_roi`` may pass precomputed ``(x, xf)`` for that window.
    """
    if features_at_roi is None:
        image = frame.intensities if isinstance(frame, ThermalFrame) else np.asarray(frame)
        x = features(get_window(image, roi.center, model.window), model.cos_window)
        xf = sfft.rfft2(x)
    else:
        x, xf = features_at_roi
    alphaf = _train(x, xf, model.yf, model.params)
    eta = model.params.interp
    return replace(
        model,
        template=(1 - eta) * model.template + eta * x,
        template_f=(1 - eta) * model.template_f + eta * xf,
        alphaf=(1 - eta) * model.alphaf + eta * alphaf,
    )


def track_sequence(seq: FrameSequence, roi: RoiBox, params: KcfParams = KcfParams()) -> Track:
    """Follow ``roi`` (given on frame 0) through ``seq``.

    Frame 0's confidence is the PSR of detecting on the training frame
    itself. Boxes are kept inside the frame; frames where the tracker's
    estimate had to be pulled back are listed in ``clamped_frames``.
    """
    if len(seq) == 0:
        raise InputError("cannot track an empty sequence")
    model = init_track(seq[0], roi, params)
    boxes = [roi]
    conf = [detect(model, seq[0], roi).psr]
    clamped = set()
    box = roi
    for k in range(1, len(seq)):
        frame = seq.data[k]
        det = detect(model, frame, box)
        moved = box.shifted(det.dx, det.dy)
        box = moved.clamped(seq.width, seq.height)
        if box != moved:
            clamped.add(k)
        # an unmoved box trains on exactly the window just searched
        same = (det.z, det.zf) if (box.x, box.y) == (boxes[-1].x, boxes[-1].y) else None
        model = update(model, frame, box, features_at_roi=same)
        boxes.append(box)
        conf.append(det.psr)
    conf = np.array(conf)
    low = {int(i) for i in np.flatnonzero(conf < params.psr_threshold)}
    return Track(boxes, conf, low, clamped)


@dataclass
class PixelSeries:
    """Per-pixel intensity series inside a tracked box.

    ``grid`` has shape ``(h, w, T)``; ``mean`` is the ROI-average series.
    """

    grid: np.ndarray
    mean: np.ndarray
    clamped_frames: set[int]


def extract_pixel_series(seq: FrameSequence, track: Track, strict: bool = False) -> PixelSeries:
    """Gather the intensities under each tracked box.

    Boxes reaching past the frame edge are clamped per frame (and flagged)
    or, when ``strict``, rejected with :class:`BoundsError`.
    """
    if len(track) != len(seq):
        raise InputError(f"track has {len(track)} boxes but sequence has {len(seq)} frames")
    if not track.boxes:
        raise InputError("empty track")
    w, h = track.boxes[0].w, track.boxes[0].h
    grid = np.empty((h, w, len(seq)))
    flagged = set()
    for k, box in enumerate(track.boxes):
        if (box.w, box.h) != (w, h):
            raise InputError("box dimensions change along the track")
        if not box.inside(seq.width, seq.height):
            if strict:
                raise BoundsError(f"frame {k}: box {box} leaves the frame")
            flagged.add(k)
            ys = np.clip(np.arange(box.y, box.y + h), 0, seq.height - 1)
            xs = np.clip(np.arange(box.x, box.x + w), 0, seq.width - 1)
            grid[:, :, k] = seq.data[k][np.ix_(ys, xs)]
        else:
            grid[:, :, k] = seq.data[k, box.y : box.y + h, box.x : box.x + w]
    return PixelSeries(grid, grid.mean(axis=(0, 1)), flagged)


def static_track(n_frames: int, roi: RoiBox) -> Track:
    """A track that never moves; useful for fixed-camera, fixed-subject input."""
    return Track([roi] * n_frames, np.full(n_frames, np.inf))
