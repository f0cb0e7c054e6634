"""Adapter for track dumps produced by off-the-shelf point trackers.

External trackers save .npz archives with varying array layouts, so the
import takes a small layout descriptor (a dict or a JSON file) naming
the arrays and their axis order:

    {
      "coords_key": "tracks",          # (P, T, 2) or (T, P, 2) float
      "visibility_key": "visibility",  # optional, same leading axes
      "axis_order": "point_time",      # or "time_point"
      "width": 854, "height": 480,
      "fps": 30.0                      # optional, defaults to 30
    }

Coordinates are expected in raw pixels; anything outside the image is
clamped to the border (with a warning that counts the clamps), and NaNs
are rejected outright because a track with holes cannot feed the model.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from ..errors import DataQualityError, LayoutError
from ..trackcore import TrackSet

_REQUIRED_KEYS = ("coords_key", "axis_order", "width", "height")


def _load_layout(layout: dict | str | Path) -> dict:
    if isinstance(layout, (str, Path)):
        try:
            layout = json.loads(Path(layout).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise LayoutError(f"cannot read layout descriptor: {exc}") from exc
    if not isinstance(layout, dict):
        raise LayoutError("layout descriptor must be a JSON object")
    missing = [k for k in _REQUIRED_KEYS if k not in layout]
    if missing:
        raise LayoutError(f"layout descriptor is missing keys: {missing}")
    return layout


def import_external_tracks(source: str | Path, layout: dict | str | Path) -> TrackSet:
    """Load an external .npz track dump into a raw-pixel TrackSet."""
    layout = _load_layout(layout)
    source = Path(source)
    try:
        archive = np.load(source)
    except (OSError, ValueError) as exc:
        raise LayoutError(f"cannot open {source}: {exc}") from exc

    coords_key = layout["coords_key"]
    if coords_key not in archive:
        raise LayoutError(f"{source} has no array {coords_key!r}")
    coords = np.asarray(archive[coords_key], dtype=np.float64)
    if coords.ndim != 3 or coords.shape[2] != 2:
        raise LayoutError(
            f"{coords_key!r} must be 3-d ending in (x, y), got shape {coords.shape}"
        )

    axis_order = layout["axis_order"]
    if axis_order == "time_point":
        coords = coords.transpose(1, 0, 2)
    elif axis_order != "point_time":
        raise LayoutError(f"unknown axis_order {axis_order!r}")

    vis_key = layout.get("visibility_key")
    if vis_key is not None:
        if vis_key not in archive:
            raise LayoutError(f"{source} has no array {vis_key!r}")
        visible = np.asarray(archive[vis_key])
        if axis_order == "time_point":
            visible = visible.T
        if visible.shape != coords.shape[:2]:
            raise LayoutError(
                f"visibility shape {visible.shape} does not match "
                f"coords {coords.shape[:2]}"
            )
        visible = visible.astype(bool)
    else:
        visible = np.ones(coords.shape[:2], dtype=bool)

    nan_mask = ~np.isfinite(coords)
    if np.any(nan_mask):
        bad_points = np.unique(np.argwhere(nan_mask)[:, 0])
        shown = ", ".join(str(i) for i in bad_points[:20])
        more = "" if bad_points.size <= 20 else f" (and {bad_points.size - 20} more)"
        raise DataQualityError(
            f"{source} has non-finite coordinates in point(s) {shown}{more}"
        )

    width, height = int(layout["width"]), int(layout["height"])
    if width < 1 or height < 1:
        raise LayoutError("layout width/height must be positive")
    fps = float(layout.get("fps", 30.0))
    bounds = np.array([width - 1, height - 1], dtype=np.float64)
    clamped = np.clip(coords, 0.0, bounds)
    n_clamped = int(np.sum(np.any(clamped != coords, axis=2)))
    if n_clamped:
        warnings.warn(
            f"{source}: clamped {n_clamped} out-of-frame coordinates to the border",
            stacklevel=2,
        )
    return TrackSet(clamped, visible, width, height, fps=fps, normalized=False)
