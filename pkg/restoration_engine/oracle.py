# restoration_engine/oracle.py
"""
Exact expectimax over belief states for small instances.

Every action shrinks U1- ∪ Up-, so the belief process is acyclic and values
can be memoized on the state alone.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import InvalidActionError, OracleSizeError
from .learner import prune_actions
from .mdp import (
    BeliefState,
    Realization,
    actions,
    cost,
    enumerate_transitions,
    initial_state,
    is_terminal,
)
from .network import DEPOT, Instance, nodes_of
from .policies import RolloutTrace, rollout, served_mask

log = logging.getLogger(__name__)

DEFAULT_SIZE_LIMIT = 12
TOLERANCE = 1e-9


class ExactSolver:
    """Memoized Bellman recursion. One cache per solver; not shared between instances."""

    def __init__(self, instance: Instance, size_limit: int = DEFAULT_SIZE_LIMIT):
        if instance.n > size_limit:
            raise OracleSizeError(
                f"Exact solution of {instance.n} nodes exceeds the limit of {size_limit}"
            )
        self.instance = instance
        self.cache: Dict[BeliefState, float] = {}

    def value(self, state: BeliefState) -> float:
        cached = self.cache.get(state)
        if cached is not None:
            return cached
        if is_terminal(state):
            result = 0.0
        else:
            result = min(self.q_value(state, a) for a in actions(state, self.instance))
        self.cache[state] = result
        return result

    def q_value(self, state: BeliefState, a: int) -> float:
        expected_future = sum(
            outcome.probability * self.value(outcome.next_state)
            for outcome in enumerate_transitions(state, a, self.instance)
        )
        return cost(state, a, self.instance) + expected_future

    def q_values(self, state: BeliefState) -> Dict[int, float]:
        return {a: self.q_value(state, a) for a in actions(state, self.instance)}

    def best_action(self, state: BeliefState) -> int:
        """Argmin Q; the lowest node wins ties."""
        best_action, best_q = -1, math.inf
        for a, q in self.q_values(state).items():
            if q < best_q:
                best_action, best_q = a, q
        if best_action < 0:
            raise InvalidActionError("No action available in a terminal state")
        return best_action


def exact_value(instance: Instance, state: Optional[BeliefState] = None, **kwargs) -> float:
    solver = ExactSolver(instance, **kwargs)
    return solver.value(state if state is not None else initial_state(instance))


def exact_q(instance: Instance, state: BeliefState, a: int, **kwargs) -> float:
    solver = ExactSolver(instance, **kwargs)
    if a not in actions(state, instance):
        raise InvalidActionError(f"Node {a} is not an available action")
    return solver.q_value(state, a)


def exact_q_values(instance: Instance, state: BeliefState, **kwargs) -> Dict[int, float]:
    return ExactSolver(instance, **kwargs).q_values(state)


# --- Oracle-greedy execution ---


class OraclePolicy:
    name = "oracle"

    def __init__(self, solver: ExactSolver):
        self.solver = solver

    def choose(self, state: BeliefState) -> int:
        return self.solver.best_action(state)


def optimal_policy_rollout(
    instance: Instance, realization: Realization, solver: Optional[ExactSolver] = None
) -> RolloutTrace:
    return rollout(instance, realization, OraclePolicy(solver or ExactSolver(instance)))


# --- Pruning audit ---


@dataclass(frozen=True)
class PruningAudit:
    """How pruning behaves on every reachable state of an instance."""

    states: int
    states_with_pruning: int
    pruned_actions: int
    violations: int
    worst_regret: float

    @property
    def safe(self) -> bool:
        return self.violations == 0


def reachable_states(instance: Instance) -> List[BeliefState]:
    """Every non-terminal belief state reachable from the initial state, in discovery order."""
    start = initial_state(instance)
    seen = {start}
    order = []
    stack = [start]
    while stack:
        state = stack.pop()
        if is_terminal(state):
            continue
        order.append(state)
        for a in actions(state, instance):
            for outcome in enumerate_transitions(state, a, instance):
                if outcome.next_state not in seen:
                    seen.add(outcome.next_state)
                    stack.append(outcome.next_state)
    return order


def audit_pruning(instance: Instance, solver: Optional[ExactSolver] = None) -> PruningAudit:
    """
    Compares the best pruned action against the best surviving one at every
    reachable state. Regret is how much the surviving set loses to the full
    set; a violation is a state where that exceeds the tolerance.
    """
    solver = solver or ExactSolver(instance)
    states = reachable_states(instance)
    with_pruning = pruned_count = violations = 0
    worst = 0.0
    for state in states:
        kept = set(prune_actions(state, instance))
        q = solver.q_values(state)
        pruned = [a for a in q if a not in kept]
        if not pruned:
            continue
        with_pruning += 1
        pruned_count += len(pruned)
        regret = min(q[a] for a in kept) - min(q.values())
        worst = max(worst, regret)
        if regret > TOLERANCE * max(1.0, abs(min(q.values()))):
            violations += 1
            log.warning(f"Pruning lost {regret:.6g} at state with location {state.location}")
    log.info(
        f"Pruning audit: {len(states)} states, {with_pruning} pruned, "
        f"{pruned_count} actions removed, {violations} violations"
    )
    return PruningAudit(len(states), with_pruning, pruned_count, violations, worst)


# --- Full-information optimum ---


def optimal_offline_route(instance: Instance, realization: Realization) -> List[int]:
    """
    Cheapest order to repair the realization's faulty nodes when every fault
    is known. Dynamic program over (repaired subset, current node).
    """
    faulty = nodes_of(realization.faults)
    m = len(faulty)
    if m > 16:
        raise OracleSizeError(f"Offline route over {m} faulty nodes exceeds the limit of 16")
    d = instance.d
    s = instance.repair_time
    full = (1 << m) - 1

    def node_mask(subset: int) -> int:
        return sum(1 << faulty[k] for k in range(m) if subset >> k & 1)

    dark = [
        instance.n - served_mask(instance, realization, node_mask(r)).bit_count()
        for r in range(full + 1)
    ]

    # best[(subset, k)] = (cost, previous (subset, k)); location DEPOT is k = -1
    best: Dict[Tuple[int, int], Tuple[float, Optional[Tuple[int, int]]]] = {(0, -1): (0.0, None)}
    for subset in range(full + 1):
        for last in [-1, *range(m)]:
            entry = best.get((subset, last))
            if entry is None:
                continue
            here = DEPOT if last < 0 else faulty[last]
            for k in range(m):
                if subset >> k & 1:
                    continue
                nxt = (subset | 1 << k, k)
                candidate = entry[0] + (d[here][faulty[k]] + s) * dark[subset]
                if nxt not in best or candidate < best[nxt][0]:
                    best[nxt] = (candidate, (subset, last))

    end = min((best[(full, k)][0], k) for k in range(m))
    route = []
    key: Optional[Tuple[int, int]] = (full, end[1])
    while key is not None and key[1] >= 0:
        route.append(faulty[key[1]])
        key = best[key][1]
    route.reverse()
    return route
