"""Track overlays for eyeballing data and the KDE filter.

Draws every track as a polyline over the first frame, early segments
faint and late segments solid, so motion direction reads at a glance.
With a KDE config the retained (foreground) tracks come out warm and the
discarded ones cool.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import cv2
import numpy as np

from .kdefilter import KdeConfig, retained_indices
from .trackcore import TrackSet, VideoSample, normalize_tracks

_KEPT = (60, 60, 230)  # BGR red-ish: survives the filter
_DROPPED = (200, 140, 60)  # BGR blue-ish: filtered away
_PLAIN = (60, 200, 230)


def draw_tracks(
    sample: VideoSample,
    out_path: str | Path,
    kde: KdeConfig | None = None,
    max_tracks: int | None = 200,
    upscale: int = 4,
) -> Path:
    """Render the overlay to ``out_path`` (PNG); returns the path."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    ts = sample.tracks
    frame = cv2.cvtColor(sample.frames[0], cv2.COLOR_RGB2BGR)
    canvas = cv2.resize(
        frame,
        (frame.shape[1] * upscale, frame.shape[0] * upscale),
        interpolation=cv2.INTER_NEAREST,
    )
    if ts.num_points == 0:
        warnings.warn("sample has no tracks; writing the bare frame", stacklevel=2)
        cv2.imwrite(str(out_path), canvas)
        return out_path

    kept: set[int] | None = None
    if kde is not None and ts.num_points >= 2 and ts.num_frames >= 2:
        kept = set(int(i) for i in retained_indices(normalize_tracks(ts), kde))

    indices = np.arange(ts.num_points)
    if max_tracks is not None and ts.num_points > max_tracks:
        indices = np.linspace(0, ts.num_points - 1, max_tracks).astype(int)
    t_count = ts.num_frames
    for i in indices:
        color = _PLAIN if kept is None else (_KEPT if int(i) in kept else _DROPPED)
        pts = (ts.coords[i] * upscale).astype(np.int32)
        for t in range(t_count - 1):
            fade = (t + 1) / max(t_count - 1, 1)
            seg_color = tuple(int(c * (0.35 + 0.65 * fade)) for c in color)
            cv2.line(canvas, pts[t], pts[t + 1], seg_color, 1, cv2.LINE_AA)
        cv2.circle(canvas, pts[-1], 2, color, -1)
    cv2.imwrite(str(out_path), canvas)
    return out_path
