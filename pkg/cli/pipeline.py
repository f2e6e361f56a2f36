# cli/pipeline.py
"""Manifest-driven experiment runs and value-table summaries."""
import logging
from pathlib import Path
from typing import Dict, List

from persistence.instances import load_instance, save_instance
from persistence.reports import GRID_COLUMNS, REPORT_COLUMNS, report_rows, write_rows
from persistence.tables import load_table, save_table
from restoration_engine.errors import ConfigurationError
from restoration_engine.evaluation import evaluate
from restoration_engine.instance_gen import generate_instance, with_parameters
from restoration_engine.learner import AggregationMode, train
from restoration_engine.models import ExperimentManifest, GenerationConfig, NetworkEntry, Region
from restoration_engine.network import Instance
from restoration_engine.policies import Policy, TableGreedyPolicy, benchmark_policies

log = logging.getLogger(__name__)

BENCHMARKS = ("ps", "nn")


def _check_policies(manifest: ExperimentManifest) -> None:
    available = {spec.label() for spec in manifest.training} | set(BENCHMARKS)
    unknown = [name for name in manifest.evaluation.policies if name not in available]
    if unknown:
        raise ConfigurationError(
            f"Evaluation policies {unknown} are neither trained nor benchmarks "
            f"(available: {sorted(available)})"
        )


def _base_instance(entry: NetworkEntry, seed: int) -> Instance:
    if entry.instance is not None:
        return load_instance(entry.instance)
    config = GenerationConfig(
        nodes=entry.nodes,
        region=Region.from_dims(entry.shape, entry.dims),
        degree_bound=entry.degree,
        reduce=entry.reduce,
        repair_time=entry.s[0],
        fault_prob=entry.p[0],
        seed=seed,
    )
    return generate_instance(config)


def case_name(entry: NetworkEntry, p: float, s: float) -> str:
    return f"{entry.name}_p{p:g}_s{s:g}"


def run_manifest(manifest: ExperimentManifest) -> List[Path]:
    """
    For every network and (p, s) pair: write the instance, train every
    configured table, evaluate the requested policies on shared
    realizations. One CSV per network. Returns the written paths in order.
    """
    _check_policies(manifest)
    out = Path(manifest.output_dir)
    written: List[Path] = []
    wanted = manifest.evaluation.policies

    for index, entry in enumerate(manifest.networks):
        seed = entry.seed if entry.seed is not None else manifest.seed + index
        base = _base_instance(entry, seed)
        rows = []
        for p in entry.p:
            for s in entry.s:
                case = with_parameters(base, s, p)
                name = case_name(entry, p, s)
                log.info(f"Case {name}: n={case.n} depth={case.depth}")
                written.append(save_instance(case, out / "instances" / f"{name}.json"))

                policies: Dict[str, Policy] = {}
                for spec_index, spec in enumerate(manifest.training):
                    config = manifest.train_config.model_copy(
                        update={"seed": manifest.train_config.seed + spec_index}
                    )
                    table = train(case, config, spec.mode, spec.pruning)
                    label = spec.label()
                    written.append(save_table(table, out / "tables" / f"{name}_{label}.json"))
                    policies[label] = TableGreedyPolicy(
                        case, table, label, manifest.evaluation.min_visits
                    )
                policies.update(benchmark_policies(case))

                report = evaluate(
                    case,
                    [policies[label] for label in wanted],
                    manifest.evaluation.realizations,
                    manifest.evaluation.seed,
                )
                for label, policy in policies.items():
                    if isinstance(policy, TableGreedyPolicy) and policy.decisions:
                        share = policy.fallbacks / policy.decisions
                        log.info(f"{name} {label}: {share:.1%} of decisions by fallback")
                prefix = [entry.name, str(case.n), f"{p:g}", f"{s:g}"]
                rows.extend(report_rows(report, prefix=prefix))
        written.append(
            write_rows(out / "reports" / f"{entry.name}.csv", GRID_COLUMNS + REPORT_COLUMNS, rows)
        )
    log.info(f"Manifest finished: {len(written)} files under {out}")
    return written


def _format_key(key) -> str:
    return "(" + ", ".join(str(part) for part in key) + ")"


def inspect_table(path: Path, top: int = 10) -> str:
    """Human-readable summary of a saved value table."""
    table = load_table(path)
    lines = [
        f"file: {path}",
        f"mode: {table.mode.value}",
        f"pruning: {'on' if table.pruning else 'off'}",
        f"nodes: {table.nodes}",
        f"seed: {table.seed}",
        f"iterations: {table.iterations}",
        f"keys: {len(table)}",
        f"batches with delta: {len(table.batch_deltas)}",
    ]
    if table.batch_deltas:
        lines.append(f"last delta: {table.batch_deltas[-1]:.6f}")
    if table.mode is AggregationMode.SA3:
        bound = (table.nodes + 1) ** 3
        status = "ok" if len(table) <= bound else "EXCEEDED"
        lines.append(f"sa3 key bound (n+1)^3 = {bound}: {status}")
    if top and len(table):
        lines.append(f"top {min(top, len(table))} keys by visits:")
        for key in table.top_keys(top):
            lines.append(
                f"  {_format_key(key)}\tvalue={table.values[key]:.4f}\tvisits={table.visits[key]}"
            )
    return "\n".join(lines)
