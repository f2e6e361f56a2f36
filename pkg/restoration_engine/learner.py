# restoration_engine/learner.py
"""
Lookup-table value learning over post-decision states (NRR), optionally
with predecessor-based action pruning (sNRR) and aggregated keys.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidActionError
from .mdp import (
    BeliefState,
    PostDecisionState,
    actions,
    cost,
    initial_post_state,
    initial_state,
    is_terminal,
    post_decision,
    reveal,
)
from .models import AggregationMode, TrainConfig
from .network import Instance, iter_bits

log = logging.getLogger(__name__)

AggregationKey = Tuple[int, ...]

__all__ = [
    "AggregationMode",
    "AggregationKey",
    "BatchHistory",
    "TrainingSignal",
    "ValueTable",
    "aggregate_key",
    "candidate_actions",
    "convergence_iteration",
    "greedy_action",
    "key_counts",
    "prune_actions",
    "select_action",
    "stopping_check",
    "train",
    "trusted_greedy_action",
    "update_value",
]


# --- Keys ---


def aggregate_key(post: PostDecisionState, mode: AggregationMode) -> AggregationKey:
    """
    FULL: (a, U+, U0-, U1-, Up-) as masks
    SA1:  (L, |U+|, U1- mask, |Up-|, |U0-|)
    SA2:  (L, |U+|, |U1-|, |Up-|, |U0-|)
    SA3:  (L, |U+|, |U1-|)
    """
    if mode is AggregationMode.FULL:
        return (post.action, post.served, post.cleared, post.faulty, post.uncertain)
    served = post.served.bit_count()
    if mode is AggregationMode.SA1:
        return (
            post.action,
            served,
            post.faulty,
            post.uncertain.bit_count(),
            post.cleared.bit_count(),
        )
    if mode is AggregationMode.SA2:
        return (
            post.action,
            served,
            post.faulty.bit_count(),
            post.uncertain.bit_count(),
            post.cleared.bit_count(),
        )
    return (post.action, served, post.faulty.bit_count())


# --- Value table ---


class ValueTable:
    """Approximate post-decision values with visit counts and training metadata."""

    def __init__(
        self,
        mode: AggregationMode,
        pruning: bool = True,
        config: Optional[TrainConfig] = None,
        nodes: int = 0,
        seed: int = 0,
    ):
        self.mode = AggregationMode(mode)
        self.pruning = pruning
        self.config = config
        self.nodes = nodes
        self.seed = seed
        self.values: Dict[AggregationKey, float] = {}
        self.visits: Dict[AggregationKey, int] = {}
        self.iterations = 0
        self.batch_deltas: List[float] = []
        self.traces: Dict[AggregationKey, List[Tuple[int, float]]] = {}
        self.wall_time = 0.0

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, key: AggregationKey) -> bool:
        return key in self.values

    def value(self, key: AggregationKey) -> float:
        """Unseen keys are worth 0."""
        return self.values.get(key, 0.0)

    def is_trusted(self, key: AggregationKey, min_visits: int) -> bool:
        return key in self.values and self.visits.get(key, 0) >= min_visits

    def top_keys(self, count: int) -> List[AggregationKey]:
        ranked = sorted(self.visits, key=lambda key: (-self.visits[key], key))
        return ranked[:count]

    def label(self) -> str:
        if self.mode is AggregationMode.FULL:
            return "snrr" if self.pruning else "nrr"
        return self.mode.value


def update_value(table: ValueTable, key: AggregationKey, sample: float) -> float:
    """Exponential smoothing with step 1/N(key)."""
    visits = table.visits.get(key, 0) + 1
    alpha = 1.0 / visits
    value = (1.0 - alpha) * table.values.get(key, 0.0) + alpha * sample
    table.visits[key] = visits
    table.values[key] = value
    return value


# --- Action selection ---


def prune_actions(state: BeliefState, instance: Instance) -> Tuple[int, ...]:
    """
    Drops an uncertain node j when some strict predecessor b of j is still
    unvisited and dark (U1- or Up-) and no farther away than j. Known-faulty
    candidates are never dropped.
    """
    candidates = actions(state)
    pending = state.faulty | state.uncertain
    strict = instance.tree.strict_masks
    d = instance.d[state.location]
    kept = []
    for node in candidates:
        if state.uncertain >> node & 1:
            if any(d[b] <= d[node] for b in iter_bits(strict[node] & pending)):
                continue
        kept.append(node)
    return tuple(kept)


def candidate_actions(state: BeliefState, instance: Instance, pruning: bool) -> Tuple[int, ...]:
    return prune_actions(state, instance) if pruning else actions(state)


def greedy_action(
    state: BeliefState, table: ValueTable, instance: Instance, candidates: Sequence[int]
) -> Tuple[int, float]:
    """Returns (argmin, min) of cost + value of the resulting post-decision key."""
    best_action, best_value = -1, math.inf
    for a in candidates:
        estimate = cost(state, a, instance) + table.value(
            aggregate_key(post_decision(state, a), table.mode)
        )
        if estimate < best_value:
            best_action, best_value = a, estimate
    return best_action, best_value


def trusted_greedy_action(
    state: BeliefState,
    table: ValueTable,
    instance: Instance,
    candidates: Sequence[int],
    min_visits: int,
) -> Optional[Tuple[int, float]]:
    """
    `greedy_action` restricted to candidates whose post-decision key was
    visited at least `min_visits` times. None when no candidate qualifies.
    """
    trusted = [
        a
        for a in candidates
        if table.is_trusted(aggregate_key(post_decision(state, a), table.mode), min_visits)
    ]
    if not trusted:
        return None
    return greedy_action(state, table, instance, trusted)


def _explore_or_exploit(
    candidates: Sequence[int], greedy: int, epsilon: float, rng: np.random.Generator
) -> int:
    if rng.random() < epsilon:
        return candidates[int(rng.integers(len(candidates)))]
    return greedy


def select_action(
    state: BeliefState,
    table: ValueTable,
    instance: Instance,
    epsilon: float,
    rng: np.random.Generator,
    pruning: bool,
) -> int:
    """Epsilon-greedy choice; pruning restricts both branches."""
    candidates = candidate_actions(state, instance, pruning)
    if not candidates:
        raise InvalidActionError("No action available in a terminal state")
    greedy, _ = greedy_action(state, table, instance, candidates)
    return _explore_or_exploit(candidates, greedy, epsilon, rng)


# --- Stopping rule ---


class TrainingSignal(str, Enum):
    CONTINUE = "continue"
    STOP = "stop"


@dataclass
class BatchHistory:
    """Values and key count at the previous batch boundary plus recent deltas."""

    deltas: List[float] = field(default_factory=list)
    key_count: int = 0
    snapshot: Dict[AggregationKey, float] = field(default_factory=dict)

    def converged(self, threshold: float, window: int = 3) -> bool:
        return len(self.deltas) >= window and max(self.deltas[-window:]) < threshold


def stopping_check(
    table: ValueTable, history: BatchHistory, config: Optional[TrainConfig] = None
) -> TrainingSignal:
    """
    Called at batch boundaries. Continues during warm-up and whenever the
    last batch discovered new keys; otherwise records the largest value change
    among frequently visited keys and stops once the last three recorded
    changes are all below the threshold. Batches with new keys record nothing
    and leave earlier changes in place.
    """
    config = config or table.config or TrainConfig()
    previous_count, snapshot = history.key_count, history.snapshot
    history.key_count = len(table)
    history.snapshot = dict(table.values)

    if table.iterations < config.warmup_iterations:
        return TrainingSignal.CONTINUE
    if len(table) > previous_count:
        return TrainingSignal.CONTINUE

    floor = config.frequent_fraction * table.iterations
    delta = max(
        (
            abs(value - snapshot.get(key, 0.0))
            for key, value in table.values.items()
            if table.visits[key] >= floor
        ),
        default=0.0,
    )
    history.deltas.append(delta)
    table.batch_deltas.append(delta)
    if history.converged(config.stop_threshold):
        return TrainingSignal.STOP
    return TrainingSignal.CONTINUE


# --- Training ---


def _run_episode(
    instance: Instance,
    table: ValueTable,
    config: TrainConfig,
    rng: np.random.Generator,
    start_key: AggregationKey,
) -> None:
    state = initial_state(instance)
    previous_key = start_key
    while not is_terminal(state):
        candidates = candidate_actions(state, instance, table.pruning)
        greedy, sample = greedy_action(state, table, instance, candidates)
        update_value(table, previous_key, sample)
        epsilon = min(1.0, config.exploration_constant / table.visits[previous_key])
        action = _explore_or_exploit(candidates, greedy, epsilon, rng)
        post = post_decision(state, action)
        previous_key = aggregate_key(post, table.mode)
        state = reveal(post, rng, instance)
    update_value(table, previous_key, 0.0)


def _record_traces(table: ValueTable, count: int) -> None:
    for key in table.top_keys(count):
        table.traces.setdefault(key, []).append((table.iterations, table.values[key]))


def train(
    instance: Instance,
    config: TrainConfig,
    mode: AggregationMode = AggregationMode.FULL,
    pruning: bool = True,
) -> ValueTable:
    """
    Simulates episodes with lazily drawn faults, updating the value of each
    visited post-decision key with the best one-step lookahead from the state
    that followed it. Runs until the stopping rule fires or `max_iterations`.
    """
    mode = AggregationMode(mode)
    table = ValueTable(mode, pruning, config, nodes=instance.n, seed=config.seed)
    rng = np.random.default_rng(config.seed)
    history = BatchHistory()
    start_key = aggregate_key(initial_post_state(instance), mode)
    started = time.perf_counter()

    log.info(
        f"Training {table.label()} on n={instance.n} p={instance.fault_prob} "
        f"s={instance.repair_time} seed={config.seed}"
    )
    while table.iterations < config.max_iterations:
        _run_episode(instance, table, config, rng, start_key)
        table.iterations += 1
        if table.iterations % config.batch_size:
            continue
        if config.trace_keys:
            _record_traces(table, config.trace_keys)
        new_keys = len(table) - history.key_count
        signal = stopping_check(table, history, config)
        if table.iterations < config.warmup_iterations:
            status = "warm-up"
        elif new_keys:
            status = f"{new_keys} new keys"
        else:
            status = f"delta={history.deltas[-1]:.4f}"
        log.info(f"iteration={table.iterations} keys={len(table)} {status}")
        if signal is TrainingSignal.STOP:
            break

    table.wall_time = time.perf_counter() - started
    log.info(
        f"Finished {table.label()}: {table.iterations} iterations, {len(table)} keys, "
        f"{table.wall_time:.1f}s"
    )
    return table


# --- Diagnostics ---


def key_counts(table: ValueTable) -> Dict[AggregationMode, int]:
    """Number of distinct keys a FULL table's states collapse to under every mode."""
    if table.mode is not AggregationMode.FULL:
        raise ValueError(f"Re-aggregation needs a full-state table, got {table.mode.value}")
    posts = [PostDecisionState(*key) for key in table.values]
    return {mode: len({aggregate_key(post, mode) for post in posts}) for mode in AggregationMode}


def convergence_iteration(points: Sequence[Tuple[int, float]], tolerance: float) -> Optional[int]:
    """First recorded iteration after which the trace stays within `tolerance` of its end."""
    if not points:
        return None
    final = points[-1][1]
    settled = points[-1][0]
    for iteration, value in reversed(points):
        if abs(value - final) > tolerance:
            break
        settled = iteration
    return settled
