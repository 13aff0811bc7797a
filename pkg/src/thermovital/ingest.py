"""Thermal frame sequences: containers, THSQ file I/O and a synthetic generator.

Frames are kept as one ``(n_frames, height, width)`` ``uint16`` array; the
:class:`ThermalFrame` objects exposed by :attr:`FrameSequence.frames` are
lightweight views into it.

THSQ layout (little-endian)::

    b"THSQ" | u32 version=1 | u32 width | u32 height
    | u32 fps_num | u32 fps_den | u64 n_frames
    | n_frames * height * width u16 (row-major, frame-major)
    | u32 metadata_len | metadata_len bytes of UTF-8 JSON   (optional)
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np

from .errors import (
    InputError,
    SpecError,
    ThsqCorruptionError,
    ThsqFormatError,
    ThsqHeaderError,
)

MAGIC = b"THSQ"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIIQ")
_U32 = struct.Struct("<I")
U16_MAX = 65535

Rate = Union[int, float, str, Fraction]


def as_fraction(fps: Rate) -> Fraction:
    """Coerce a frame rate to a positive :class:`~fractions.Fraction`.

    Floats are snapped to the closest fraction with denominator <= 10000,
    which recovers NTSC-style rates such as 30000/1001.
    """
    if isinstance(fps, float):
        frac = Fraction(fps).limit_denominator(10000)
    else:
        frac = Fraction(fps)
    if frac <= 0:
        raise ValueError(f"fps must be positive, got {fps!r}")
    return frac


@dataclass(frozen=True)
class ThermalFrame:
    """One frame of raw sensor counts.

    ``intensities`` is a ``(height, width)`` ``uint16`` array.
    """

    intensities: np.ndarray
    index: int

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    @property
    def width(self) -> int:
        return self.intensities.shape[1]


class FrameSequence:
    """An ordered run of equally sized thermal frames at a fixed frame rate.

    Parameters
    ----------
    data : array_like
        ``(n_frames, height, width)`` array, converted to ``uint16``. Values
        outside ``[0, 65535]`` are rejected rather than wrapped.
    fps : int, float, str or Fraction
        Sampling rate in Hz. Defaults to 15.
    metadata : dict, optional
        JSON-serialisable annotations, e.g. ground truth of synthetic runs.
    """

    def __init__(self, data, fps: Rate = 15, metadata: Optional[dict] = None):
        arr = np.asarray(data)
        if arr.ndim != 3:
            raise InputError(f"expected (frames, height, width) array, got shape {arr.shape}")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise InputError(f"frame dimensions must be >= 1, got {arr.shape[1:]}")
        if arr.dtype != np.uint16:
            if arr.size and (arr.min() < 0 or arr.max() > U16_MAX):
                raise InputError("intensities must fit in 16 bits")
            arr = arr.astype(np.uint16)
        self.data = arr
        self.fps = as_fraction(fps)
        self.metadata = metadata

    @classmethod
    def from_frames(cls, frames: Sequence[ThermalFrame], fps: Rate = 15, metadata=None):
        shapes = {f.intensities.shape for f in frames}
        if len(shapes) > 1:
            raise InputError(f"frames have differing dimensions: {sorted(shapes)}")
        for i, f in enumerate(frames):
            if f.index != i:
                raise InputError(f"frame indices must be consecutive from 0 (got {f.index} at {i})")
        if not frames:
            raise InputError("cannot infer dimensions from an empty frame list")
        return cls(np.stack([f.intensities for f in frames]), fps, metadata)

    @property
    def frames(self) -> list[ThermalFrame]:
        return [ThermalFrame(self.data[i], i) for i in range(len(self))]

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, i: int) -> ThermalFrame:
        return ThermalFrame(self.data[i], i if i >= 0 else len(self) + i)

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def duration(self) -> float:
        return len(self) / float(self.fps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameSequence):
            return NotImplemented
        return (
            self.fps == other.fps
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
            and (self.metadata or None) == (other.metadata or None)
        )

    def __repr__(self) -> str:
        return (
            f"FrameSequence(frames={len(self)}, width={self.width}, "
            f"height={self.height}, fps={self.fps})"
        )


# --------------------------------------------------------------------------
# THSQ I/O
# --------------------------------------------------------------------------


def write_sequence(seq: FrameSequence, path) -> None:
    """Write ``seq`` to ``path`` in THSQ format.

    Metadata is serialised with sorted keys so identical sequences always
    produce identical bytes.
    """
    fps = seq.fps
    header = _HEADER.pack(
        MAGIC, VERSION, seq.width, seq.height, fps.numerator, fps.denominator, len(seq)
    )
    if seq.metadata:
        meta = json.dumps(seq.metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    else:
        meta = b""
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(seq.data.astype("<u2", copy=False).tobytes(order="C"))
        fh.write(_U32.pack(len(meta)))
        fh.write(meta)


def read_sequence(path) -> FrameSequence:
    """Decode a THSQ file.

    Raises
    ------
    ThsqFormatError
        Wrong magic bytes or unsupported version.
    ThsqHeaderError
        Zero width, height, or frame rate.
    ThsqCorruptionError
        Payload or metadata block shorter than the header declares.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise ThsqFormatError(f"{path}: bad magic bytes {raw[:4]!r}")
    if len(raw) < _HEADER.size:
        raise ThsqCorruptionError(f"{path}: truncated header")
    _, version, width, height, num, den, n_frames = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise ThsqFormatError(f"{path}: unsupported THSQ version {version}")
    if width == 0 or height == 0:
        raise ThsqHeaderError(f"{path}: invalid dimensions {width}x{height}")
    if num == 0 or den == 0:
        raise ThsqHeaderError(f"{path}: invalid frame rate {num}/{den}")

    offset = _HEADER.size
    n_values = n_frames * width * height
    payload_end = offset + 2 * n_values
    if len(raw) < payload_end:
        have = (len(raw) - offset) // (2 * width * height)
        raise ThsqCorruptionError(
            f"{path}: header declares {n_frames} frames, payload holds {have}"
        )
    data = np.frombuffer(raw, dtype="<u2", count=n_values, offset=offset)
    data = data.astype(np.uint16).reshape(n_frames, height, width)

    metadata = None
    rest = raw[payload_end:]
    if rest:
        if len(rest) < _U32.size:
            raise ThsqCorruptionError(f"{path}: truncated metadata length")
        (meta_len,) = _U32.unpack_from(rest)
        if len(rest) - _U32.size < meta_len:
            raise ThsqCorruptionError(f"{path}: truncated metadata block")
        if meta_len:
            try:
                metadata = json.loads(rest[_U32.size : _U32.size + meta_len].decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ThsqCorruptionError(f"{path}: unreadable metadata ({exc})") from exc
    return FrameSequence(data, Fraction(num, den), metadata)


# --------------------------------------------------------------------------
# Synthetic sequences
# --------------------------------------------------------------------------


@dataclass
class Motion:
    """Region trajectory.

    ``kind`` is ``"static"``, ``"velocity"`` (``vx``, ``vy`` in px/frame) or
    ``"sway"`` (offset ``amplitude * sin(2 pi frequency t)`` along
    ``(ax, ay)`` px).
    """

    kind: str = "static"
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    frequency: float = 0.0

    def offsets(self, n_frames: int, fps: float) -> np.ndarray:
        """Float ``(n_frames, 2)`` array of (dx, dy) displacements."""
        k = np.arange(n_frames, dtype=float)
        if self.kind == "static":
            return np.zeros((n_frames, 2))
        if self.kind == "velocity":
            return np.column_stack([self.vx * k, self.vy * k])
        if self.kind == "sway":
            s = np.sin(2 * np.pi * self.frequency * k / fps)
            return np.column_stack([self.ax * s, self.ay * s])
        raise SpecError(f"unknown motion kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "velocity":
            return f"velocity ({self.vx}, {self.vy}) px/frame"
        if self.kind == "sway":
            return f"sway ({self.ax}, {self.ay}) px at {self.frequency} Hz"
        return "static"


@dataclass
class Region:
    """A rectangular patch carrying a sinusoidal intensity modulation.

    ``contrast`` is a constant offset above background (a warm body part);
    with the default of 0 the patch differs from the background only through
    its modulation. ``phase`` of ``None`` means "draw from the seeded RNG".
    ``vital`` ("hr" or "rr") tags the region whose frequency is reported as
    ground truth.
    """

    box: tuple[int, int, int, int]
    frequency: float
    amplitude: float
    waveform: str = "sinusoid"
    contrast: float = 0.0
    phase: Optional[float] = None
    motion: Motion = field(default_factory=Motion)
    label: str = "roi"
    vital: Optional[str] = None


@dataclass
class SyntheticSpec:
    """Parameters of a synthetic thermal recording.

    Intensity of pixel (x, y) at time t inside region r is::

        background + drift * t + contrast_r + amplitude_r * sin(2 pi f_r t + phase_r) + noise

    and ``background + drift * t + noise`` elsewhere, rounded to the nearest
    count and clamped to ``[0, 65535]``.
    """

    duration: float
    width: int
    height: int
    fps: Rate = 15
    background: float = 1000.0
    regions: list[Region] = field(default_factory=list)
    noise_sigma: float = 0.0
    drift: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        fps = float(as_fraction(self.fps))
        if self.duration < 0:
            raise SpecError("duration must be >= 0")
        if self.width < 1 or self.height < 1:
            raise SpecError("frame dimensions must be >= 1")
        if self.noise_sigma < 0:
            raise SpecError("noise_sigma must be >= 0")
        lo_base = min(self.background, self.background + self.drift * self.duration)
        hi_base = max(self.background, self.background + self.drift * self.duration)
        if lo_base < 0 or hi_base > U16_MAX:
            raise SpecError("background + drift leaves the 16-bit range")
        for r in self.regions:
            if r.waveform != "sinusoid":
                raise SpecError(f"unsupported waveform {r.waveform!r}")
            if not 0 <= r.frequency < fps / 2:
                raise SpecError(
                    f"modulation frequency {r.frequency} Hz violates Nyquist limit "
                    f"fps/2 = {fps / 2} Hz"
                )
            if r.amplitude < 0:
                raise SpecError("amplitude must be >= 0")
            if lo_base + r.contrast - r.amplitude < 0 or hi_base + r.contrast + r.amplitude > U16_MAX:
                raise SpecError(f"region {r.label!r} leaves the 16-bit range")
            if r.box[2] < 1 or r.box[3] < 1:
                raise SpecError(f"region {r.label!r} has an empty box")
            if r.motion.kind not in ("static", "velocity", "sway"):
                raise SpecError(f"unknown motion kind {r.motion.kind!r}")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * float(as_fraction(self.fps))))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["fps"] = str(as_fraction(self.fps))
        for r in d["regions"]:
            r["box"] = list(r["box"])
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SyntheticSpec":
        d = dict(d)
        regions = []
        for r in d.pop("regions", []) or []:
            r = dict(r)
            motion = Motion(**(r.pop("motion", None) or {}))
            box = r.pop("box")
            if isinstance(box, dict):
                box = (box["x"], box["y"], box["w"], box["h"])
            regions.append(Region(box=tuple(int(v) for v in box), motion=motion, **r))
        try:
            return cls(regions=regions, **d)
        except TypeError as exc:
            raise SpecError(str(exc)) from exc


def region_positions(region: Region, n_frames: int, fps: Rate) -> np.ndarray:
    """Integer ``(n_frames, 2)`` top-left (x, y) of ``region`` per frame.

    Nearest-pixel placement, halves rounded up.
    """
    off = region.motion.offsets(n_frames, float(as_fraction(fps)))
    origin = np.array(region.box[:2], dtype=float)
    return np.floor(origin + off + 0.5).astype(int)


def generate_synthetic(spec: SyntheticSpec) -> FrameSequence:
    """Render ``spec`` into a :class:`FrameSequence`.

    Pure function of ``spec``: the seed drives both the unspecified phases
    (drawn first, in region order) and the per-frame Gaussian noise.
    """
    spec.validate()
    fps = as_fraction(spec.fps)
    fs = float(fps)
    n = spec.n_frames
    rng = np.random.default_rng(spec.seed)
    phases = [
        r.phase if r.phase is not None else float(rng.uniform(0, 2 * np.pi))
        for r in spec.regions
    ]
    positions = [region_positions(r, n, fps) for r in spec.regions]
    t = np.arange(n) / fs

    data = np.empty((n, spec.height, spec.width), dtype=np.uint16)
    # frames are rendered in chunks; noise is drawn in frame order either way
    chunk = max(1, (1 << 22) // (spec.width * spec.height))
    for k0 in range(0, n, chunk):
        k1 = min(n, k0 + chunk)
        block = np.empty((k1 - k0, spec.height, spec.width), dtype=np.float64)
        block[:] = (spec.background + spec.drift * t[k0:k1])[:, None, None]
        for r, phase, pos in zip(spec.regions, phases, positions):
            w, h = r.box[2], r.box[3]
            level = (
                spec.background
                + spec.drift * t[k0:k1]
                + r.contrast
                + r.amplitude * np.sin(2 * np.pi * r.frequency * t[k0:k1] + phase)
            )
            for j, k in enumerate(range(k0, k1)):
                x, y = pos[k]
                x0, y0 = max(x, 0), max(y, 0)
                x1, y1 = min(x + w, spec.width), min(y + h, spec.height)
                if x1 > x0 and y1 > y0:
                    block[j, y0:y1, x0:x1] = level[j]
        if spec.noise_sigma > 0:
            block += spec.noise_sigma * rng.standard_normal(block.shape, dtype=np.float32)
        np.floor(block + 0.5, out=block)
        np.clip(block, 0, U16_MAX, out=block)
        data[k0:k1] = block
    metadata: dict[str, Any] = {"spec": spec.to_dict(), "phases": phases}
    for r in spec.regions:
        if r.vital == "hr":
            metadata.setdefault("true_hr_hz", r.frequency)
        elif r.vital == "rr":
            metadata.setdefault("true_rr_hz", r.frequency)
    metadata["motion"] = {r.label: r.motion.describe() for r in spec.regions}
    return FrameSequence(data, fps, metadata)
