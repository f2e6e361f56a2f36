# restoration_engine/policies.py
"""Routing policies and the rollouts that execute them against a realization."""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

from .errors import InvalidActionError, InvalidRouteError
from .learner import ValueTable, candidate_actions, trusted_greedy_action
from .mdp import (
    BeliefState,
    Realization,
    actions,
    count_dark,
    enumerate_realizations,
    initial_state,
    is_terminal,
    post_decision,
    reveal,
)
from .models import DEFAULT_MIN_VISITS
from .network import DEPOT, Instance, mask_of

log = logging.getLogger(__name__)

ROUTE_TOLERANCE = 1e-9


# --- Traces ---


@dataclass(frozen=True)
class Leg:
    from_node: int
    to_node: int
    travel_time: float
    repair_time: float  # realized: s if the node was faulty, else 0
    dark_count: int
    repaired: bool = True

    @property
    def disruption(self) -> float:
        return (self.travel_time + self.repair_time) * self.dark_count


@dataclass
class RolloutTrace:
    policy: str
    legs: List[Leg] = field(default_factory=list)

    @property
    def total(self) -> float:
        return sum(leg.disruption for leg in self.legs)

    @property
    def order(self) -> List[int]:
        return [leg.to_node for leg in self.legs]

    @property
    def dark_counts(self) -> List[int]:
        return [leg.dark_count for leg in self.legs]


# --- Policies ---


class Policy(Protocol):
    name: str

    def choose(self, state: BeliefState) -> int: ...


class NearestNeighborPolicy:
    """Closest pending node; lowest index on ties."""

    name = "nn"

    def __init__(self, instance: Instance):
        self.instance = instance

    def choose(self, state: BeliefState) -> int:
        return nn_policy(state, self.instance)


class PriorityPolicy:
    """Node with the most descendants first, then the closer one, then the lower index."""

    name = "ps"

    def __init__(self, instance: Instance):
        self.instance = instance

    def choose(self, state: BeliefState) -> int:
        return ps_policy(state, self.instance)


class TableGreedyPolicy:
    """
    Greedy with respect to a trained value table, over the candidates whose
    post-decision key was visited at least `min_visits` times. States where
    no candidate qualifies are routed by `fallback` (priority by default).
    """

    def __init__(
        self,
        instance: Instance,
        table: ValueTable,
        name: Optional[str] = None,
        min_visits: int = DEFAULT_MIN_VISITS,
        fallback: Optional[Policy] = None,
    ):
        self.instance = instance
        self.table = table
        self.name = name or table.label()
        self.min_visits = min_visits
        self.fallback = fallback or PriorityPolicy(instance)
        self.decisions = 0
        self.fallbacks = 0

    def choose(self, state: BeliefState) -> int:
        self.decisions += 1
        candidates = candidate_actions(state, self.instance, self.table.pruning)
        best = trusted_greedy_action(
            state, self.table, self.instance, candidates, self.min_visits
        )
        if best is None:
            self.fallbacks += 1
            return self.fallback.choose(state)
        return best[0]


def _pending(state: BeliefState) -> Tuple[int, ...]:
    candidates = actions(state)
    if not candidates:
        raise InvalidActionError("No pending node left to visit")
    return candidates


def nn_policy(state: BeliefState, instance: Instance) -> int:
    d = instance.d[state.location]
    return min(_pending(state), key=lambda node: (d[node], node))


def ps_policy(state: BeliefState, instance: Instance) -> int:
    d = instance.d[state.location]
    descendants = instance.tree.descendant_counts
    return min(_pending(state), key=lambda node: (-descendants[node], d[node], node))


# --- Rollouts ---


def rollout(instance: Instance, realization: Realization, policy: Policy) -> RolloutTrace:
    """
    Runs `policy` until every node has service. Each leg is charged its travel
    time plus the realized repair time, weighted by the dark count at the
    start of the leg.
    """
    trace = RolloutTrace(policy.name)
    state = initial_state(instance)
    limit = 2 * instance.n
    while not is_terminal(state):
        if len(trace.legs) >= limit:
            raise InvalidActionError(f"Policy {policy.name} did not finish within {limit} actions")
        a = policy.choose(state)
        faulty = realization.is_faulty(a)
        repair = instance.repair_time if faulty else 0.0
        travel = instance.d[state.location][a]
        trace.legs.append(Leg(state.location, a, travel, repair, count_dark(state), faulty))
        state = reveal(post_decision(state, a), realization, instance)
    return trace


def expected_total(instance: Instance, policy: Policy) -> float:
    """Exact expected realized disruption, enumerating every fault pattern."""
    return sum(
        prob * rollout(instance, realization, policy).total
        for realization, prob in enumerate_realizations(instance)
    )


# --- Offline (full-information) routes ---


def served_mask(instance: Instance, realization: Realization, repaired: int) -> int:
    """Nodes with service once every node in `repaired` has been fixed."""
    outstanding = realization.faults & ~repaired
    served = 0
    for node in range(1, instance.n + 1):
        if not instance.tree.path_masks[node] & outstanding:
            served |= 1 << node
    return served


def offline_trace(
    instance: Instance, realization: Realization, order: Sequence[int], name: str = "offline"
) -> RolloutTrace:
    """Evaluates a fixed visit order of faulty nodes with full fault knowledge."""
    if sorted(order) != realization.faulty_nodes:
        raise InvalidRouteError(
            f"Route {list(order)} must visit exactly the faulty nodes "
            f"{realization.faulty_nodes}"
        )
    trace = RolloutTrace(name)
    location, repaired = DEPOT, 0
    for node in order:
        dark = instance.n - served_mask(instance, realization, repaired).bit_count()
        trace.legs.append(
            Leg(location, node, instance.d[location][node], instance.repair_time, dark)
        )
        location, repaired = node, repaired | (1 << node)
    return trace


def _dominates(candidate: RolloutTrace, base: RolloutTrace) -> bool:
    """No leg longer or darker than at the same position, and at least one strictly less."""
    strict = False
    for new, old in zip(candidate.legs, base.legs):
        if new.travel_time > old.travel_time + ROUTE_TOLERANCE or new.dark_count > old.dark_count:
            return False
        if new.travel_time < old.travel_time - ROUTE_TOLERANCE or new.dark_count < old.dark_count:
            strict = True
    return strict


@dataclass(frozen=True)
class KOptWitness:
    order: Tuple[int, ...]
    total: float
    dark_counts: Tuple[int, ...]


@dataclass(frozen=True)
class KOptResult:
    passed: bool
    exchanges_checked: int
    witness: Optional[KOptWitness] = None


def _kopt_neighbors(order: Sequence[int], k: int):
    """
    Cuts k legs of the route and reassembles the k trailing segments in any
    order and orientation. The depot end stays fixed.
    """
    m = len(order)
    for cuts in itertools.combinations(range(m), k):
        bounds = (*cuts, m)
        head = list(order[: cuts[0]])
        segments = [list(order[bounds[i] : bounds[i + 1]]) for i in range(k)]
        for perm in itertools.permutations(range(k)):
            for flips in itertools.product((False, True), repeat=k):
                if perm == tuple(range(k)) and not any(flips):
                    continue
                candidate = list(head)
                for index, flip in zip(perm, flips):
                    candidate.extend(reversed(segments[index]) if flip else segments[index])
                if candidate != list(order):
                    yield candidate


def double_kopt_check(trace: RolloutTrace, instance: Instance, k: int = 2) -> KOptResult:
    """
    Scans the k-exchanges of a full-information route. A neighbour is a
    witness when, position by position, no leg is longer or has more dark
    nodes and at least one leg is shorter or has fewer.

    Every leg of `trace` must be a repair; the faulty set is read off the route.
    A single-leg route admits no exchange and passes.
    """
    order = trace.order
    if k < 2:
        raise InvalidRouteError(f"k must be at least 2, got {k}")
    if not all(leg.repaired for leg in trace.legs):
        raise InvalidRouteError("Route visits a node that needed no repair")
    if len(order) <= 1:
        return KOptResult(True, 0)
    if k > len(order):
        raise InvalidRouteError(f"k={k} exceeds the route length {len(order)}")
    realization = Realization(mask_of(order), instance.n)
    base = offline_trace(instance, realization, order)

    checked = 0
    for candidate in _kopt_neighbors(order, k):
        checked += 1
        neighbour = offline_trace(instance, realization, candidate)
        if _dominates(neighbour, base):
            log.debug(f"k-opt witness {candidate}: {neighbour.total:.4f} vs {base.total:.4f}")
            witness = KOptWitness(
                tuple(candidate), neighbour.total, tuple(neighbour.dark_counts)
            )
            return KOptResult(False, checked, witness)
    return KOptResult(True, checked)


def benchmark_policies(instance: Instance) -> Dict[str, Policy]:
    return {"ps": PriorityPolicy(instance), "nn": NearestNeighborPolicy(instance)}
