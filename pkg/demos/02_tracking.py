"""Following a swaying region with the correlation-filter tracker.

The ROI is given once, on frame 0. Each later frame is searched in a window
two and a half times the ROI, and the peak-to-sidelobe ratio of the
response says how sure the tracker is. At the end the target vanishes, and
the confidence collapses with it.
"""

from pathlib import Path

import numpy as np

from thermovital import FrameSequence, Motion, Region, RoiBox, SyntheticSpec, generate_synthetic, track_sequence
from thermovital.ingest import region_positions

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

region = Region((32, 32, 32, 32), 0.4, 30, contrast=200, motion=Motion("sway", ax=10, ay=6, frequency=0.2))
scene = generate_synthetic(SyntheticSpec(duration=30, width=96, height=96, background=3000,
                                         noise_sigma=5, regions=[region], seed=2))
# five seconds of an empty scene: the subject has walked off
empty = generate_synthetic(SyntheticSpec(duration=5, width=96, height=96, background=3000,
                                         noise_sigma=5, seed=3))
seq = FrameSequence(np.concatenate([scene.data, empty.data]), 15)

track = track_sequence(seq, RoiBox(*region.box))
track.to_csv(out / "track.csv")

truth = region_positions(region, len(scene), 15)
got = np.array([(b.x, b.y) for b in track.boxes[: len(scene)]])
err = np.hypot(*(got - truth).T)
print(f"mean centre error while visible: {err.mean():.2f} px (max {err.max():.1f})")

conf = track.confidence
print(f"median confidence, visible: {np.median(conf[: len(scene)]):.1f}")
print(f"median confidence, empty scene: {np.median(conf[len(scene):]):.1f}")
first = min(k for k in track.low_confidence_frames if k >= len(scene))
print(f"first flagged frame after the target leaves: {first} (target gone from {len(scene)})")
