import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackrec.augment import (
    AugmentPolicy,
    AugmentRecord,
    apply_to_frames,
    apply_to_tracks,
    identity_record,
    resize_record,
    sample_augmentation,
)
from trackrec.trackcore import TrackSet
from conftest import make_tracks


def demo_policy(**kw):
    base = dict(source_height=48, source_width=64, output_size=32,
                crop_scale=(0.6, 1.0), flip_prob=0.5, blur_sigma=(0.0, 1.0),
                jitter=0.2)
    base.update(kw)
    return AugmentPolicy(**base)


def demo_frames(rng, t=3, h=48, w=64):
    return rng.integers(0, 256, size=(t, h, w, 3), dtype=np.uint8)


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_sampled_records_stay_in_policy_ranges(seed):
    policy = demo_policy()
    rec = sample_augmentation(seed, policy)
    assert 0 <= rec.crop_x and rec.crop_x + rec.crop_w <= 64
    assert 0 <= rec.crop_y and rec.crop_y + rec.crop_h <= 48
    # per-side scale in [0.6, 1] up to integer rounding
    assert 0.6 - 1 / 48 <= rec.crop_w / 64 <= 1.0
    assert 0.6 - 1 / 48 <= rec.crop_h / 48 <= 1.0
    assert 0.0 <= rec.blur_sigma <= 1.0
    for factor in (rec.brightness, rec.contrast, rec.saturation):
        assert 0.8 <= factor <= 1.2
    assert rec.output_size == 32
    same = sample_augmentation(seed, policy)
    assert same == rec


def test_identity_record_is_noop(rng):
    frames = demo_frames(rng, h=40, w=40)
    rec = identity_record(40, 40)
    assert np.array_equal(apply_to_frames(frames, rec), frames)
    ts = make_tracks(rng, width=40, height=40)
    out = apply_to_tracks(ts, rec)
    assert np.array_equal(out.coords, ts.coords)
    assert np.array_equal(out.visible, ts.visible)


def test_flip_on_frames_is_exact_involution(rng):
    frames = demo_frames(rng, h=40, w=40)
    rec = AugmentRecord(0, 0, 40, 40, flipped=True, blur_sigma=0.0,
                        brightness=1.0, contrast=1.0, saturation=1.0,
                        output_size=40)
    once = apply_to_frames(frames, rec)
    assert np.array_equal(once, frames[:, :, ::-1, :])
    assert np.array_equal(apply_to_frames(once, rec), frames)


def test_photometric_changes_leave_tracks_alone(rng):
    ts = make_tracks(rng, width=40, height=40)
    rec = AugmentRecord(0, 0, 40, 40, flipped=False, blur_sigma=0.7,
                        brightness=1.1, contrast=0.9, saturation=1.2,
                        output_size=40)
    out = apply_to_tracks(ts, rec)
    assert np.array_equal(out.coords, ts.coords)
    assert np.array_equal(out.visible, ts.visible)
    frames = demo_frames(rng, h=40, w=40)
    assert not np.array_equal(apply_to_frames(frames, rec), frames)


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_marker_pixel_follows_track(seed):
    """A bright pixel and a track at the same spot stay together."""
    rng = np.random.default_rng(seed)
    policy = demo_policy(blur_sigma=(0.0, 0.0), output_size=48)
    rec = sample_augmentation(seed, policy)
    px = int(rng.integers(rec.crop_x, rec.crop_x + rec.crop_w))
    py = int(rng.integers(rec.crop_y, rec.crop_y + rec.crop_h))
    frames = np.zeros((1, 48, 64, 3), dtype=np.uint8)
    frames[0, py, px] = 255
    coords = np.array([[[float(px), float(py)]]])
    ts = TrackSet(coords, np.ones((1, 1), dtype=bool), 64, 48)
    out_frames = apply_to_frames(frames, rec)
    out_tracks = apply_to_tracks(ts, rec)
    bright = np.unravel_index(out_frames[0].sum(axis=2).argmax(), (48, 48))
    tx, ty = out_tracks.coords[0, 0]
    assert abs(tx - bright[1]) <= 1.0
    assert abs(ty - bright[0]) <= 1.0


def test_points_outside_crop_become_invisible(rng):
    rec = AugmentRecord(10, 10, 20, 20, flipped=False, blur_sigma=0.0,
                        brightness=1.0, contrast=1.0, saturation=1.0,
                        output_size=20)
    coords = np.array([[[5.0, 5.0]], [[15.0, 15.0]]])
    ts = TrackSet(coords, np.ones((2, 1), dtype=bool), 64, 48)
    out = apply_to_tracks(ts, rec)
    assert not out.visible[0, 0]
    assert out.visible[1, 0]
    assert 0.0 <= out.coords[0, 0, 0] <= 19.0


def test_resize_record_scales_coords(rng):
    rec = resize_record(48, 64, 32)
    ts = TrackSet(np.array([[[40.0, 30.0]]]), np.ones((1, 1), dtype=bool), 64, 48)
    out = apply_to_tracks(ts, rec)
    assert out.width == 32 and out.height == 32
    assert np.allclose(out.coords[0, 0], [40.0 * 32 / 64, 30.0 * 32 / 48])
    # the last half source pixel has no output index and drops out
    edge = TrackSet(np.array([[[63.0, 47.0]]]), np.ones((1, 1), dtype=bool), 64, 48)
    out = apply_to_tracks(edge, rec)
    assert not out.visible[0, 0]
    assert np.allclose(out.coords[0, 0], [31.0, 31.0])


def test_policy_validation():
    with pytest.raises(ValueError):
        demo_policy(crop_scale=(0.0, 1.0))
    with pytest.raises(ValueError):
        demo_policy(flip_prob=1.5)
    with pytest.raises(ValueError):
        demo_policy(blur_sigma=(1.0, 0.5))
    with pytest.raises(ValueError):
        demo_policy(jitter=1.0)
