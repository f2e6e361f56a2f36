# tests/restoration_engine/test_models.py

import pytest
from pydantic import ValidationError

from restoration_engine.errors import InvalidRegionError
from restoration_engine.models import (
    DEFAULT_MIN_VISITS,
    AggregationMode,
    EvaluationConfig,
    ExperimentManifest,
    GenerationConfig,
    GeoPoint,
    NetworkEntry,
    Region,
    RegionShape,
    TrainSpec,
)


def test_region_shape_accepts_rect_alias():
    """
    Tests that the short CLI spelling 'rect' maps to RECTANGLE.
    """
    # 1. Arrange
    text = " Rect "

    # 2. Act
    shape = RegionShape.parse(text)

    # 3. Assert
    assert shape is RegionShape.RECTANGLE


def test_region_rejects_non_positive_side():
    """
    Tests that a square with side 0 cannot be built.
    """
    # 1. Arrange / 2. Act / 3. Assert
    with pytest.raises(ValueError):
        Region.square(0.0)


def test_region_from_dims_rejects_wrong_arity():
    """
    Tests that a rectangle needs exactly two dimensions.
    """
    # 1. Arrange
    dims = [10.0]

    # 2. Act / 3. Assert
    with pytest.raises(InvalidRegionError):
        Region.from_dims(RegionShape.RECTANGLE, dims)


def test_circle_contains_centre_and_rim():
    """
    Tests containment for a circle around a shifted origin.
    """
    # 1. Arrange
    region = Region.circle(2.0, origin=GeoPoint(x=1.0, y=1.0))

    # 2. Act
    inside = region.contains(GeoPoint(x=3.0, y=1.0))
    outside = region.contains(GeoPoint(x=3.5, y=1.0))

    # 3. Assert
    assert inside
    assert not outside


def test_generation_config_rejects_degenerate_fault_probability():
    """
    Tests that p must lie strictly between 0 and 1.
    """
    # 1. Arrange / 2. Act / 3. Assert
    with pytest.raises(ValidationError):
        GenerationConfig(nodes=5, fault_prob=1.0)
    with pytest.raises(ValidationError):
        GenerationConfig(nodes=5, fault_prob=0.0)


def test_evaluation_config_lowercases_and_rejects_duplicates():
    """
    Tests policy-name normalization and the uniqueness check.
    """
    # 1. Arrange
    config = EvaluationConfig(policies=["SNRR", "ps"])

    # 2. Act / 3. Assert
    assert config.policies == ["snrr", "ps"]
    with pytest.raises(ValidationError):
        EvaluationConfig(policies=["nn", "NN"])


def test_evaluation_visit_floor():
    """
    Tests the default visit floor for table routing and that it cannot be negative.
    """
    # 1. Arrange / 2. Act
    config = EvaluationConfig()

    # 3. Assert
    assert config.min_visits == DEFAULT_MIN_VISITS
    assert EvaluationConfig(min_visits=0).min_visits == 0
    with pytest.raises(ValidationError):
        EvaluationConfig(min_visits=-1)


def test_train_spec_labels():
    """
    Tests the default labels of full-state and aggregated learners.
    """
    # 1. Arrange
    specs = [
        TrainSpec(mode=AggregationMode.FULL),
        TrainSpec(mode=AggregationMode.FULL, pruning=False),
        TrainSpec(mode="sa2"),
        TrainSpec(mode="sa1", name="custom"),
    ]

    # 2. Act
    labels = [spec.label() for spec in specs]

    # 3. Assert
    assert labels == ["snrr", "nrr", "sa2", "custom"]


def test_network_entry_needs_a_source():
    """
    Tests that a network without an instance file or node count is refused.
    """
    # 1. Arrange / 2. Act / 3. Assert
    with pytest.raises(ValidationError):
        NetworkEntry(name="empty")


def test_network_entry_rejects_bad_parameter_grid():
    """
    Tests that grid values outside the model's ranges are refused.
    """
    # 1. Arrange / 2. Act / 3. Assert
    with pytest.raises(ValidationError):
        NetworkEntry(name="a", nodes=5, p=[0.5, 1.0])
    with pytest.raises(ValidationError):
        NetworkEntry(name="a", nodes=5, s=[-1.0])


def test_manifest_rejects_duplicate_training_labels(tmp_path):
    """
    Tests that two learners with the same label cannot share a manifest.
    """
    # 1. Arrange
    data = {
        "output_dir": str(tmp_path),
        "networks": [{"name": "a", "nodes": 4}],
        "training": [{"mode": "sa3"}, {"mode": "sa3", "pruning": False}],
    }

    # 2. Act / 3. Assert
    with pytest.raises(ValidationError):
        ExperimentManifest.model_validate(data)
