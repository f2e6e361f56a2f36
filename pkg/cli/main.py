# cli/main.py
import logging
import re
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import click
from pydantic import ValidationError

from persistence.instances import load_instance, save_instance
from persistence.reports import write_report
from persistence.tables import load_table, save_table
from restoration_engine import __version__
from restoration_engine.errors import ConfigurationError, RestorationError
from restoration_engine.evaluation import evaluate
from restoration_engine.instance_gen import generate_instance
from restoration_engine.learner import AggregationMode, ValueTable, train
from restoration_engine.loader import load_manifest, load_train_config
from restoration_engine.mdp import check_feasible, initial_state, parse_state
from restoration_engine.models import DEFAULT_MIN_VISITS, GenerationConfig, Region, RegionShape
from restoration_engine.oracle import ExactSolver
from restoration_engine.policies import (
    NearestNeighborPolicy,
    Policy,
    PriorityPolicy,
    TableGreedyPolicy,
)

from .pipeline import inspect_table, run_manifest

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

instance_option = click.option(
    "--instance",
    "instance_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
)


def _parse_dims(text: str) -> List[float]:
    try:
        return [float(part) for part in re.split(r"[,x]", text) if part.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected numbers separated by ',' or 'x', got '{text}'") from e


def _parse_shape(text: str) -> RegionShape:
    try:
        return RegionShape.parse(text)
    except ValueError as e:
        raise click.BadParameter(f"unknown shape '{text}'") from e


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.option("-q", "--quiet", is_flag=True, help="Warnings and errors only.")
def cli(verbose: bool, quiet: bool):
    """Route a repair crew over a disrupted power-distribution tree."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option("--nodes", type=click.IntRange(1, 64), required=True)
@click.option("--shape", default="square", show_default=True, help="square, rect or circle")
@click.option("--dims", default="10", show_default=True, help="side, WxH or radius")
@click.option("--degree", type=click.IntRange(min=2), default=3, show_default=True)
@click.option("--reduce", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--repair-time", "-s", type=float, default=0.0, show_default=True)
@click.option("--fault-prob", "-p", type=float, default=0.5, show_default=True)
@click.option("--radial", type=click.Choice(["area", "uniform-radius"]), default="area")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def gen(nodes, shape, dims, degree, reduce, repair_time, fault_prob, radial, seed, out):
    """Generate a random instance file."""
    try:
        region = Region.from_dims(_parse_shape(shape), _parse_dims(dims))
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--dims") from e
    config = GenerationConfig(
        nodes=nodes,
        region=region,
        degree_bound=degree,
        reduce=reduce,
        repair_time=repair_time,
        fault_prob=fault_prob,
        radial=radial,
        seed=seed,
    )
    instance = generate_instance(config)
    save_instance(instance, out)
    click.echo(
        f"n={instance.n} depth={instance.depth} reduced={instance.reduce_applied} -> {out}"
    )


@cli.command("train")
@instance_option
@click.option("--mode", type=click.Choice([m.value for m in AggregationMode]), default="full")
@click.option("--prune", type=click.Choice(["on", "off"]), default="on", show_default=True)
@click.option("--gamma", type=float, default=None, help="Stopping threshold.")
@click.option("--seed", type=int, default=None)
@click.option("--max-iters", type=int, default=None)
@click.option("--warmup", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--trace-keys", type=int, default=None)
@click.option("--config", "config_name", default="training", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def train_command(
    instance_path, mode, prune, gamma, seed, max_iters, warmup, batch_size, trace_keys,
    config_name, out,
):
    """Learn a value table for an instance."""
    config = load_train_config(
        config_name,
        {
            "stop_threshold": gamma,
            "seed": seed,
            "max_iterations": max_iters,
            "warmup_iterations": warmup,
            "batch_size": batch_size,
            "trace_keys": trace_keys,
        },
    )
    instance = load_instance(instance_path)
    table = train(instance, config, AggregationMode(mode), prune == "on")
    save_table(table, out)
    click.echo(f"{table.label()}: {table.iterations} iterations, {len(table)} keys -> {out}")


@cli.command()
@instance_option
@click.option("--state", "state_text", default=None, help="canonical state text")
@click.option("--size-limit", type=int, default=12, show_default=True)
def oracle(instance_path, state_text, size_limit):
    """Print the exact value H and per-action Q values (tab-separated)."""
    instance = load_instance(instance_path)
    solver = ExactSolver(instance, size_limit=size_limit)
    state = parse_state(state_text) if state_text else initial_state(instance)
    check_feasible(state, instance)
    click.echo(f"H\t{solver.value(state):.6f}")
    for a, q in solver.q_values(state).items():
        click.echo(f"Q\t{a}\t{q:.6f}")


def _parse_table_option(text: str) -> Tuple[Optional[str], Path]:
    name, sep, path = text.partition("=")
    if sep and name and path:
        return name.strip().lower(), Path(path)
    return None, Path(text)


def _load_policies(
    instance, table_options, names: List[str], min_visits: int = DEFAULT_MIN_VISITS
) -> List[Policy]:
    tables: dict[str, ValueTable] = {}
    for option in table_options:
        name, path = _parse_table_option(option)
        table = load_table(path)
        tables[name or table.label()] = table

    policies: List[Policy] = []
    for name in names:
        if name in tables:
            policies.append(TableGreedyPolicy(instance, tables[name], name, min_visits))
        elif name == "ps":
            policies.append(PriorityPolicy(instance))
        elif name == "nn":
            policies.append(NearestNeighborPolicy(instance))
        else:
            raise click.BadParameter(
                f"policy '{name}' has no --table and is not a benchmark", param_hint="--policies"
            )
    return policies


@cli.command("eval")
@instance_option
@click.option("--table", "tables", multiple=True, help="NAME=FILE or FILE; repeatable")
@click.option("--policies", default="snrr,ps,nn", show_default=True)
@click.option("--realizations", "-R", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option(
    "--min-visits",
    type=click.IntRange(min=0),
    default=DEFAULT_MIN_VISITS,
    show_default=True,
    help="Table keys seen fewer times are left to the priority fallback.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def eval_command(instance_path, tables, policies, realizations, min_visits, seed, out):
    """Compare policies on shared random realizations and write a CSV."""
    names = [name.strip().lower() for name in policies.split(",") if name.strip()]
    instance = load_instance(instance_path)
    report = evaluate(
        instance, _load_policies(instance, tables, names, min_visits), realizations, seed
    )
    write_report(report, out)
    for entry in report.summaries:
        click.echo(
            f"{entry.name}\t{entry.mean_total:.3f}\t{entry.gap_mean_pct:.2f}%"
            f"\t[{entry.gap_ci_lo:.2f}, {entry.gap_ci_hi:.2f}]"
        )


@cli.command()
@click.argument("manifest")
def run(manifest):
    """Run an experiment manifest (path, or name under configs/manifests)."""
    path = Path(manifest)
    if not path.is_file() and not path.suffix:
        path = Path("manifests") / manifest
    written = run_manifest(load_manifest(path))
    click.echo(f"wrote {len(written)} files")


@cli.command()
@click.argument("table", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--top", type=int, default=10, show_default=True)
def inspect(table, top):
    """Summarize a value-table file."""
    click.echo(inspect_table(table, top))


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; maps failures to exit codes 1 (usage/config) and 2 (runtime)."""
    try:
        result = cli.main(args=argv, prog_name="trnrp", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except ConfigurationError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_USAGE
    except RestorationError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_RUNTIME
    except ValidationError as e:
        click.echo(f"error: invalid parameters: {e.errors()[0]['msg']}", err=True)
        return EXIT_USAGE
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_RUNTIME
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
