# tests/restoration_engine/test_loader.py

import pytest

from restoration_engine.errors import ConfigurationError
from restoration_engine.loader import (
    CONFIG_DIR,
    load_config_file,
    load_manifest,
    load_train_config,
    resolve_config_path,
)
from restoration_engine.models import TrainConfig


def test_default_training_config_matches_model_defaults():
    """
    Tests that configs/training.yaml carries the documented defaults.
    """
    # 1. Arrange / 2. Act
    config = load_train_config()

    # 3. Assert
    assert config == TrainConfig()


def test_training_overrides_skip_none():
    """
    Tests that only explicitly given overrides replace file values.
    """
    # 1. Arrange
    overrides = {"seed": 9, "stop_threshold": None, "batch_size": 500}

    # 2. Act
    config = load_train_config("training", overrides)

    # 3. Assert
    assert config.seed == 9
    assert config.batch_size == 500
    assert config.stop_threshold == 0.5


def test_invalid_training_override_is_a_configuration_error():
    """
    Tests that a value out of range is reported as a configuration problem.
    """
    # 1. Arrange / 2. Act / 3. Assert
    with pytest.raises(ConfigurationError):
        load_train_config("training", {"batch_size": 0})


def test_resolve_bundled_manifest_without_suffix():
    """
    Tests lookup of a bundled file by name, with .yaml optional.
    """
    # 1. Arrange / 2. Act
    path = resolve_config_path("manifests/smoke")

    # 3. Assert
    assert path == CONFIG_DIR / "manifests/smoke.yaml"


def test_missing_config_file():
    """
    Tests the error for a name that resolves nowhere.
    """
    # 1. Arrange / 2. Act / 3. Assert
    with pytest.raises(ConfigurationError):
        resolve_config_path("no-such-config")


def test_non_mapping_config_is_rejected(tmp_path):
    """
    Tests that a YAML list at the top level is refused.
    """
    # 1. Arrange
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")

    # 2. Act / 3. Assert
    with pytest.raises(ConfigurationError):
        load_config_file(path)


def test_bundled_manifests_are_valid():
    """
    Tests that the shipped manifests parse and resolve their output directory.
    """
    # 1. Arrange / 2. Act
    smoke = load_manifest("manifests/smoke")
    grid = load_manifest("manifests/grid20.yaml")

    # 3. Assert
    assert smoke.networks[0].nodes == 7
    assert smoke.output_dir.name == "smoke"
    assert len(grid.networks) == 4


def test_manifest_paths_resolve_against_manifest(tmp_path):
    """
    Tests relative output_dir resolution and the existence check on instances.
    """
    # 1. Arrange
    path = tmp_path / "m.yaml"
    path.write_text(
        "output_dir: out\n"
        "networks:\n"
        "  - name: a\n"
        "    instance: missing.json\n"
    )

    # 2. Act / 3. Assert
    with pytest.raises(ConfigurationError):
        load_manifest(path)

    path.write_text("output_dir: out\nnetworks:\n  - name: a\n    nodes: 4\n")
    manifest = load_manifest(path)
    assert manifest.output_dir == tmp_path / "out"


def test_invalid_manifest(tmp_path):
    """
    Tests that a manifest without networks is a configuration error.
    """
    # 1. Arrange
    path = tmp_path / "m.yaml"
    path.write_text("output_dir: out\nnetworks: []\n")

    # 2. Act / 3. Assert
    with pytest.raises(ConfigurationError):
        load_manifest(path)
