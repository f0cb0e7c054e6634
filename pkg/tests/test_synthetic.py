from dataclasses import replace

import numpy as np
import pytest

from trackrec.data import synthetic as syn
from trackrec.data.manifest import read_manifest
from trackrec.data.trackfile import read_tracks
from trackrec.errors import SceneSpecError


def spec_for(class_name, seed=5, num_frames=6, size=64, num_points=80):
    rng = np.random.default_rng(seed)
    v, omega, rho, cam = syn._draw_motion(class_name, rng, num_frames, size)
    return syn.SyntheticSceneSpec(
        sample_id=f"t_{class_name}",
        label=0,
        object_velocity=v,
        angular_velocity=omega,
        scale_rate=rho,
        camera_velocity=cam,
        shape_seed=seed + 1,
        background_seed=seed + 2,
        track_seed=seed + 3,
        num_frames=num_frames,
        width=size,
        height=size,
        num_points=num_points,
    )


def test_generation_is_deterministic():
    spec = spec_for("rotate_cw")
    a = syn.generate_sample(spec)
    b = syn.generate_sample(spec)
    assert np.array_equal(a.frames, b.frames)
    assert np.array_equal(a.tracks.coords, b.tracks.coords)
    assert np.array_equal(a.tracks.visible, b.tracks.visible)


@pytest.mark.parametrize("class_name", syn.MOTION_CLASSES)
def test_tracks_match_closed_form(class_name):
    """Recompute every track position from the motion parameters alone."""
    spec = spec_for(class_name)
    sample = syn.generate_sample(spec)
    scene = syn._build_scene(spec)
    t = np.arange(spec.num_frames)
    center_t = (
        scene.center
        + t[:, None] * np.asarray(spec.object_velocity)
        - t[:, None] * np.asarray(spec.camera_velocity)
    )
    # reconstruct starts from frame 0 (no motion there, nothing clamped)
    starts = sample.tracks.coords[:, 0]
    on_obj = ((starts - scene.center) ** 2).sum(axis=1) <= scene.r0**2
    for p in range(spec.num_points):
        off = starts[p] - scene.center
        for k in range(spec.num_frames):
            if on_obj[p]:
                ang = spec.angular_velocity * k
                rot = np.array(
                    [
                        off[0] * np.cos(ang) - off[1] * np.sin(ang),
                        off[0] * np.sin(ang) + off[1] * np.cos(ang),
                    ]
                )
                expected = center_t[k] + np.exp(spec.scale_rate * k) * rot
            else:
                expected = starts[p] - k * np.asarray(spec.camera_velocity)
            if sample.tracks.visible[p, k]:
                assert np.allclose(sample.tracks.coords[p, k], expected, atol=1e-9)


def test_object_points_preserve_radius_under_rotation():
    spec = spec_for("rotate_ccw")
    sample = syn.generate_sample(spec)
    scene = syn._build_scene(spec)
    starts = sample.tracks.coords[:, 0]
    d0 = np.linalg.norm(starts - scene.center, axis=1)
    on_obj = d0 <= scene.r0
    assert on_obj.sum() >= 5
    for k in range(spec.num_frames):
        dk = np.linalg.norm(sample.tracks.coords[on_obj, k] - scene.center, axis=1)
        vis = sample.tracks.visible[on_obj, k]
        assert np.allclose(dk[vis], d0[on_obj][vis], atol=1e-9)


def test_background_is_static_without_camera_motion():
    spec = spec_for("translate_right")
    sample = syn.generate_sample(spec)
    scene = syn._build_scene(spec)
    starts = sample.tracks.coords[:, 0]
    bg = ((starts - scene.center) ** 2).sum(axis=1) > scene.r0**2
    fully_visible = sample.tracks.visible[bg].all(axis=1)
    coords = sample.tracks.coords[bg][fully_visible]
    assert (coords == coords[:, :1]).all()


def test_appearance_ignores_label():
    """Same seeds, different class: identical first frame and track starts."""
    frames0, starts = [], []
    for class_name in syn.MOTION_CLASSES:
        sample = syn.generate_sample(spec_for(class_name, seed=9))
        frames0.append(sample.frames[0])
        starts.append(sample.tracks.coords[:, 0])
    for f, s in zip(frames0[1:], starts[1:]):
        assert np.array_equal(f, frames0[0])
        assert np.allclose(s, starts[0])


def test_rendered_motion_ignores_label():
    """With a fixed render program, swapping the class changes the track
    file and nothing else: every frame stays bit-identical."""
    rng = np.random.default_rng(21)
    shown = syn._draw_motion("translate_down", rng, 6, 64)
    samples = []
    for class_name in ("rotate_cw", "scale_up", "translate_left"):
        spec = replace(
            spec_for(class_name, seed=13),
            render_velocity=shown[0],
            render_angular_velocity=shown[1],
            render_scale_rate=shown[2],
            render_camera_velocity=shown[3],
        )
        samples.append(syn.generate_sample(spec))
    base = samples[0]
    assert not np.array_equal(samples[1].tracks.coords, base.tracks.coords)
    for other in samples[1:]:
        assert np.array_equal(other.frames, base.frames)


def test_built_dataset_pixels_carry_no_label(tmp_path):
    """Regenerate each stored sample with its label cycled three classes
    onward: frames reproduce byte for byte, tracks all change."""
    seed, num_frames, size, num_points = 4, 4, 64, 20
    syn.build_synthetic_dataset(
        tmp_path, train_samples=8, val_samples=0, num_frames=num_frames,
        image_size=size, num_points=num_points, seed=seed,
    )
    man = read_manifest(tmp_path / "train.tsv")
    classes = syn.MOTION_CLASSES
    for i, e in enumerate(man.entries):
        state = np.random.SeedSequence([seed, 0, i]).generate_state(5)
        shape_seed, background_seed, track_seed, motion_seed, render_seed = (
            int(s) for s in state
        )
        swapped = classes[(i + 3) % len(classes)]
        v, omega, rho, cam = syn._draw_motion(
            swapped, np.random.default_rng(motion_seed), num_frames, size
        )
        render_rng = np.random.default_rng(render_seed)
        shown = classes[int(render_rng.integers(len(classes)))]
        rv, romega, rrho, rcam = syn._draw_motion(shown, render_rng, num_frames, size)
        sample = syn.generate_sample(syn.SyntheticSceneSpec(
            sample_id=e.sample_id, label=(i + 3) % len(classes),
            object_velocity=v, angular_velocity=omega, scale_rate=rho,
            camera_velocity=cam, shape_seed=shape_seed,
            background_seed=background_seed, track_seed=track_seed,
            num_frames=num_frames, width=size, height=size,
            num_points=num_points, render_velocity=rv,
            render_angular_velocity=romega, render_scale_rate=rrho,
            render_camera_velocity=rcam,
        ))
        stored_frames = np.load(tmp_path / e.video_path)
        stored_tracks = read_tracks(tmp_path / e.track_path)
        assert np.array_equal(sample.frames, stored_frames)
        assert not np.array_equal(sample.tracks.coords, stored_tracks.coords)


def test_clamped_points_are_invisible():
    spec = spec_for("translate_left")
    sample = syn.generate_sample(spec)
    w1, h1 = spec.width - 1, spec.height - 1
    coords = sample.tracks.coords
    assert coords[..., 0].min() >= 0 and coords[..., 0].max() <= w1
    assert coords[..., 1].min() >= 0 and coords[..., 1].max() <= h1


def test_object_point_share_guaranteed():
    spec = spec_for("scale_up", num_points=200)
    sample = syn.generate_sample(spec)
    scene = syn._build_scene(spec)
    starts = sample.tracks.coords[:, 0]
    on_obj = ((starts - scene.center) ** 2).sum(axis=1) <= scene.r0**2
    assert on_obj.sum() >= int(syn.OBJECT_POINT_FRAC * 200)


def test_tiny_frame_rejected():
    with pytest.raises(SceneSpecError):
        syn.generate_sample(spec_for("rotate_cw", size=24))


def test_build_dataset_layout(tmp_path):
    manifests = syn.build_synthetic_dataset(
        tmp_path, train_samples=8, val_samples=4, num_frames=4,
        image_size=64, num_points=30, seed=1,
    )
    train = read_manifest(tmp_path / "train.tsv")
    assert train == manifests["train"]
    assert len(train) == 8 and len(manifests["val"]) == 4
    assert train.class_names == syn.MOTION_CLASSES
    assert [e.label for e in train.entries] == [i % 8 for i in range(8)]
    for e in train.entries:
        assert (tmp_path / e.video_path).exists()
        ts = read_tracks(tmp_path / e.track_path)
        assert ts.num_points == 30 and ts.num_frames == 4


def test_build_dataset_deterministic(tmp_path):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    for d in (a_dir, b_dir):
        syn.build_synthetic_dataset(
            d, train_samples=4, val_samples=0, num_frames=4,
            image_size=64, num_points=20, seed=6,
        )
    for name in ["train.tsv", "classes.txt"]:
        assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()
    a_man = read_manifest(a_dir / "train.tsv")
    for e in a_man.entries:
        assert (a_dir / e.track_path).read_bytes() == (b_dir / e.track_path).read_bytes()
        assert (a_dir / e.video_path).read_bytes() == (b_dir / e.video_path).read_bytes()


def test_context_classes_move_scene_not_object(tmp_path):
    rng = np.random.default_rng(2)
    v, omega, rho, cam = syn._draw_motion("object_static_camera_pan_left", rng, 6, 64)
    assert v == (0.0, 0.0) and omega == 0.0 and rho == 0.0
    assert cam[0] < 0.0
    v, omega, rho, cam = syn._draw_motion("object_right_camera_static", rng, 6, 64)
    assert v[0] > 0.0 and cam == (0.0, 0.0)


def test_motion_summary_zero_for_static(rng):
    coords = np.tile(rng.uniform([0, 0], [63, 63], size=(10, 1, 2)), (1, 5, 1))
    from trackrec.trackcore import TrackSet

    ts = TrackSet(coords, np.ones((10, 5), dtype=bool), 64, 64)
    assert np.array_equal(syn.track_motion_summary(ts), np.zeros(6))


def test_centroid_oracle_separates_classes(tmp_path):
    syn.build_synthetic_dataset(
        tmp_path, train_samples=64, val_samples=32, num_frames=6,
        image_size=64, num_points=120, seed=11,
    )
    def load(split):
        man = read_manifest(tmp_path / f"{split}.tsv")
        sets = [read_tracks(tmp_path / e.track_path) for e in man.entries]
        return sets, np.array([e.label for e in man.entries])

    train_sets, train_labels = load("train")
    val_sets, val_labels = load("val")
    acc = syn.nearest_centroid_accuracy(train_sets, train_labels, val_sets, val_labels)
    assert acc >= 0.95
