# persistence/instances.py
import logging
from pathlib import Path

from pydantic import ValidationError

from restoration_engine import __version__
from restoration_engine.errors import ConfigurationError
from restoration_engine.models import InstanceDocument
from restoration_engine.network import Instance, PowerTree

log = logging.getLogger(__name__)


def instance_to_document(instance: Instance) -> InstanceDocument:
    return InstanceDocument(
        tool_version=__version__,
        nodes=instance.n,
        region=instance.region,
        seed=instance.seed,
        degree_bound=instance.degree_bound,
        reduce_requested=instance.reduce_requested,
        reduce_applied=instance.reduce_applied,
        repair_time=instance.repair_time,
        fault_prob=instance.fault_prob,
        points=list(instance.points),
        parents=list(instance.tree.parents),
        depth=instance.depth,
    )


def instance_from_document(document: InstanceDocument) -> Instance:
    """Rebuilds an Instance; distances are recomputed from the points."""
    if len(document.parents) != document.nodes + 1:
        raise ConfigurationError(
            f"Instance lists {len(document.parents)} parents for {document.nodes} nodes"
        )
    tree = PowerTree.from_parent_list(document.parents)
    instance = Instance(
        tree=tree,
        points=tuple(document.points),
        repair_time=document.repair_time,
        fault_prob=document.fault_prob,
        seed=document.seed,
        region=document.region,
        degree_bound=document.degree_bound,
        reduce_requested=document.reduce_requested,
        reduce_applied=document.reduce_applied,
    )
    if instance.depth != document.depth:
        log.warning(f"Stored depth {document.depth} differs from computed {instance.depth}")
    return instance


def save_instance(instance: Instance, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(instance_to_document(instance).model_dump_json(indent=2) + "\n")
    log.info(f"Wrote instance (n={instance.n}) to {path}")
    return path


def load_instance(path: Path) -> Instance:
    path = Path(path)
    try:
        document = InstanceDocument.model_validate_json(path.read_text())
    except ValidationError as e:
        raise ConfigurationError(f"Invalid instance file {path}: {e}") from e
    return instance_from_document(document)
