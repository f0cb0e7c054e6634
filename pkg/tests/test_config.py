"""Strict YAML config loading, overrides, and resolution helpers."""

import pytest

from trackrec.config import (
    DEFAULT_POINT_COUNTS,
    ExperimentConfig,
    dump_config,
    load_experiment_config,
    parse_override,
    resolve_model_config,
    resolve_policy,
)
from trackrec.errors import UsageError


def test_defaults_without_file():
    cfg = load_experiment_config(None)
    assert cfg == ExperimentConfig()
    assert cfg.point_counts == DEFAULT_POINT_COUNTS
    assert cfg.train.lr_transformer == pytest.approx(1e-4)


def test_yaml_round_trip(tmp_path):
    cfg = load_experiment_config(
        None,
        overrides=[
            "train.epochs=3",
            "synth.image_size=48",
            "eval_point_count=250",
            "point_counts=[100, 50]",
        ],
    )
    path = tmp_path / "cfg.yaml"
    path.write_text(dump_config(cfg))
    again = load_experiment_config(path)
    assert again == cfg
    assert again.train.epochs == 3
    assert again.synth.image_size == 48
    assert again.eval_point_count == 250
    assert again.point_counts == (100, 50)


def test_unknown_top_level_key_rejected(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("out_rooot: runs\n")
    with pytest.raises(UsageError, match="out_rooot"):
        load_experiment_config(path)


def test_unknown_section_key_rejected(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("train:\n  lr_transfomer: 0.001\n")
    with pytest.raises(UsageError, match="lr_transfomer"):
        load_experiment_config(path)


def test_section_must_be_mapping(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("train: fast\n")
    with pytest.raises(UsageError, match="mapping"):
        load_experiment_config(path)


def test_missing_file_and_bad_yaml(tmp_path):
    with pytest.raises(UsageError, match="does not exist"):
        load_experiment_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("train: [unclosed\n")
    with pytest.raises(UsageError, match="not valid YAML"):
        load_experiment_config(bad)
    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("- just\n- a\n- list\n")
    with pytest.raises(UsageError, match="mapping"):
        load_experiment_config(scalar)


def test_parse_override_types():
    assert parse_override("train.epochs=3") == ("train", "epochs", 3)
    assert parse_override("kde.bandwidth=scott") == ("kde", "bandwidth", "scott")
    assert parse_override("kde.bandwidth=0.5") == ("kde", "bandwidth", 0.5)
    assert parse_override("eval_point_count=null") == ("eval_point_count", None, None)
    assert parse_override("augment.crop_scale=[0.8, 1.0]") == (
        "augment", "crop_scale", [0.8, 1.0],
    )
    with pytest.raises(UsageError, match="key=value"):
        parse_override("train.epochs")
    with pytest.raises(UsageError, match="too many dots"):
        parse_override("a.b.c=1")


def test_override_unknown_section_rejected():
    with pytest.raises(UsageError, match="not one of"):
        load_experiment_config(None, overrides=["optim.lr=1"])


def test_override_bad_value_surfaces_section():
    with pytest.raises(UsageError, match="train"):
        load_experiment_config(None, overrides=["train.epochs=0"])


def test_override_beats_file(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("train:\n  epochs: 9\n")
    cfg = load_experiment_config(path, overrides=["train.epochs=2"])
    assert cfg.train.epochs == 2


def test_resolve_model_config_takes_shape_from_synth():
    cfg = load_experiment_config(
        None, overrides=["synth.num_frames=6", "synth.image_size=48", "model.d_model=64"]
    )
    mc = resolve_model_config(cfg, num_classes=5, mode="baseline")
    assert (mc.num_classes, mc.mode) == (5, "baseline")
    assert (mc.num_frames, mc.image_size, mc.d_model) == (6, 48, 64)


def test_resolve_policy_coherent_and_validated():
    cfg = load_experiment_config(None, overrides=["synth.image_size=48"])
    policy = resolve_policy(cfg, source_height=64, source_width=80)
    assert (policy.source_height, policy.source_width) == (64, 80)
    assert policy.output_size == 48
    bad = load_experiment_config(None, overrides=["augment.flip_prob=1.5"])
    with pytest.raises(UsageError, match="augment"):
        resolve_policy(bad, source_height=64, source_width=64)
