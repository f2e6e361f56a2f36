# restoration_engine/loader.py
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from .errors import ConfigurationError
from .models import ExperimentManifest, TrainConfig

log = logging.getLogger(__name__)

# configs/ sits next to the restoration_engine/ package
CONFIG_DIR = Path(__file__).parent.parent / "configs"


def resolve_config_path(name: str | Path) -> Path:
    """An existing path wins; otherwise `name` is looked up in CONFIG_DIR (.yaml optional)."""
    path = Path(name)
    if path.is_file():
        return path
    for candidate in (CONFIG_DIR / path, CONFIG_DIR / f"{name}.yaml"):
        if candidate.is_file():
            return candidate
    raise ConfigurationError(f"Config file not found: {name} (searched {CONFIG_DIR})")


def load_config_file(name: str | Path) -> Dict[str, Any]:
    """Parses a YAML (or JSON) config file into a dict."""
    path = resolve_config_path(name)
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Error parsing config file {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must contain a mapping")
    log.debug(f"Loaded config file {path}")
    return data


def load_train_config(
    name: str | Path = "training", overrides: Optional[Dict[str, Any]] = None
) -> TrainConfig:
    """Default training settings, with non-None `overrides` applied on top."""
    data = load_config_file(name)
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return TrainConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid training config {name}: {e}") from e


def load_manifest(name: str | Path) -> ExperimentManifest:
    """
    Loads an experiment manifest. Relative `output_dir` and instance paths
    are resolved against the manifest's directory.
    """
    path = resolve_config_path(name)
    data = load_config_file(path)
    try:
        manifest = ExperimentManifest.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid manifest {path}: {e}") from e

    base = path.parent
    if not manifest.output_dir.is_absolute():
        manifest.output_dir = base / manifest.output_dir
    for entry in manifest.networks:
        if entry.instance is not None and not entry.instance.is_absolute():
            entry.instance = base / entry.instance
        if entry.instance is not None and not entry.instance.is_file():
            raise ConfigurationError(
                f"Network '{entry.name}': instance {entry.instance} not found"
            )
    return manifest
