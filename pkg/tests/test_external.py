import json

import numpy as np
import pytest

from trackrec.data.external import import_external_tracks
from trackrec.errors import DataQualityError, LayoutError


def save_npz(tmp_path, **arrays):
    path = tmp_path / "dump.npz"
    np.savez(path, **arrays)
    return path


def base_layout(**extra):
    layout = {"coords_key": "tracks", "axis_order": "point_time",
              "width": 64, "height": 48}
    layout.update(extra)
    return layout


def test_point_time_layout(tmp_path, rng):
    coords = rng.uniform([0, 0], [63, 47], size=(5, 4, 2))
    path = save_npz(tmp_path, tracks=coords)
    ts = import_external_tracks(path, base_layout())
    assert ts.num_points == 5 and ts.num_frames == 4
    assert np.allclose(ts.coords, coords)
    assert ts.visible.all()
    assert (ts.width, ts.height, ts.fps) == (64, 48, 30.0)


def test_time_point_layout_transposed(tmp_path, rng):
    coords = rng.uniform([0, 0], [63, 47], size=(4, 5, 2))
    path = save_npz(tmp_path, tracks=coords)
    ts = import_external_tracks(path, base_layout(axis_order="time_point"))
    assert ts.num_points == 5 and ts.num_frames == 4
    assert np.allclose(ts.coords, coords.transpose(1, 0, 2))


def test_visibility_and_fps(tmp_path, rng):
    coords = rng.uniform([0, 0], [63, 47], size=(3, 4, 2))
    vis = rng.uniform(size=(3, 4)) < 0.5
    path = save_npz(tmp_path, tracks=coords, visibility=vis)
    layout = base_layout(visibility_key="visibility", fps=12.5)
    ts = import_external_tracks(path, layout)
    assert np.array_equal(ts.visible, vis)
    assert ts.fps == 12.5


def test_layout_from_json_file(tmp_path, rng):
    coords = rng.uniform([0, 0], [63, 47], size=(2, 3, 2))
    path = save_npz(tmp_path, tracks=coords)
    layout_path = tmp_path / "layout.json"
    layout_path.write_text(json.dumps(base_layout()))
    ts = import_external_tracks(path, layout_path)
    assert ts.num_points == 2


def test_out_of_frame_coords_clamped_with_warning(tmp_path):
    coords = np.array([[[-4.0, 10.0], [70.0, 50.0]]])
    path = save_npz(tmp_path, tracks=coords)
    with pytest.warns(UserWarning, match="clamp"):
        ts = import_external_tracks(path, base_layout())
    assert ts.coords.min() >= 0.0
    assert ts.coords[0, 1, 0] == 63.0 and ts.coords[0, 1, 1] == 47.0


def test_nan_coords_rejected(tmp_path):
    coords = np.zeros((2, 3, 2))
    coords[1, 2, 0] = np.nan
    path = save_npz(tmp_path, tracks=coords)
    with pytest.raises(DataQualityError, match="1"):
        import_external_tracks(path, base_layout())


def test_layout_errors(tmp_path, rng):
    coords = rng.uniform([0, 0], [63, 47], size=(2, 3, 2))
    path = save_npz(tmp_path, tracks=coords)
    with pytest.raises(LayoutError, match="missing keys"):
        import_external_tracks(path, {"coords_key": "tracks"})
    with pytest.raises(LayoutError):
        import_external_tracks(path, base_layout(coords_key="absent"))
    with pytest.raises(LayoutError):
        import_external_tracks(path, base_layout(axis_order="sideways"))
    with pytest.raises(LayoutError):
        import_external_tracks(path, 17)
