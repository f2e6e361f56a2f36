# restoration_engine/mdp.py
"""
The belief-state MDP of a single repair crew.

A belief state is the crew location plus a partition of the power nodes:

    served     U+   nodes with service
    cleared    U0-  dark, visited and known fault-free
    faulty     U1-  dark, known faulty, every strict predecessor served
    uncertain  Up-  dark, unvisited, faulty with probability p

All four sets are int bitmasks (see `network.iter_bits`).
"""
import itertools
import logging
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Tuple, Union

import numpy as np

from .errors import InfeasibleStateError, InvalidActionError, OracleSizeError
from .network import DEPOT, SOURCE, Instance, iter_bits, mask_of, nodes_of

log = logging.getLogger(__name__)

# Assert feasibility after every transition. Switched on by the test suite.
DEBUG_CHECKS = False

MAX_ENUMERATION_NODES = 16


# --- Types ---


class BeliefState(NamedTuple):
    location: int
    served: int
    cleared: int
    faulty: int
    uncertain: int


class PostDecisionState(NamedTuple):
    """State after committing to `action`, before successors are revealed."""

    action: int
    served: int
    cleared: int
    faulty: int
    uncertain: int

    @property
    def location(self) -> int:
        return self.action


@dataclass(frozen=True)
class Realization:
    """Ground-truth fault pattern. The source is always faulty."""

    faults: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "faults", self.faults | (1 << SOURCE))

    def is_faulty(self, node: int) -> bool:
        return bool(self.faults >> node & 1)

    @property
    def faulty_nodes(self) -> List[int]:
        return nodes_of(self.faults)


class TransitionOutcome(NamedTuple):
    next_state: BeliefState
    probability: float


FaultOracle = Union[Realization, np.random.Generator]


# --- Feasibility ---


def _feasibility_problem(state: BeliefState, instance: Instance) -> str | None:
    if not 0 <= state.location <= instance.n:
        return f"location {state.location} is not the depot or a power node"
    tree = instance.tree
    sets = (state.served, state.cleared, state.faulty, state.uncertain)
    if sum(s.bit_count() for s in sets) != instance.n or (
        state.served | state.cleared | state.faulty | state.uncertain
    ) != instance.all_mask:
        return "sets do not partition the power nodes"
    for node in iter_bits(state.served):
        if tree.path_masks[node] & ~state.served:
            return f"served node {node} has an unserved predecessor"
    for node in iter_bits(state.cleared):
        if not tree.strict_masks[node] & ~state.served:
            return f"cleared node {node} has every predecessor served"
    for node in iter_bits(state.faulty):
        if tree.strict_masks[node] & ~state.served:
            return f"faulty node {node} has an unserved predecessor"
    for node in iter_bits(state.uncertain):
        if not tree.strict_masks[node] & ~state.served:
            return f"uncertain node {node} has every predecessor served"
    if state.location != DEPOT and not (state.served | state.cleared) >> state.location & 1:
        return f"location {state.location} is neither the depot nor a visited node"
    return None


def is_feasible(state: BeliefState, instance: Instance) -> bool:
    return _feasibility_problem(state, instance) is None


def check_feasible(state: BeliefState, instance: Instance) -> None:
    """Raises InfeasibleStateError if any feasibility rule is broken."""
    problem = _feasibility_problem(state, instance)
    if problem is not None:
        raise InfeasibleStateError(f"{format_state(state)}: {problem}")


def _debug_check(state: BeliefState, instance: Instance) -> None:
    if DEBUG_CHECKS:
        check_feasible(state, instance)


# --- States and actions ---


def initial_state(instance: Instance) -> BeliefState:
    """Crew at the depot, the source known faulty, everything else uncertain."""
    source = 1 << SOURCE
    state = BeliefState(DEPOT, 0, 0, source, instance.all_mask & ~source)
    _debug_check(state, instance)
    return state


def initial_post_state(instance: Instance) -> PostDecisionState:
    """The post-decision state that precedes the first decision."""
    source = 1 << SOURCE
    return PostDecisionState(DEPOT, 0, 0, source, instance.all_mask & ~source)


def is_terminal(state: BeliefState) -> bool:
    return not (state.faulty | state.uncertain)


def actions(state: BeliefState, instance: Instance | None = None) -> Tuple[int, ...]:
    """Candidate nodes U1- ∪ Up-, ascending."""
    if (
        state.served & state.cleared
        or (state.served | state.cleared) & (state.faulty | state.uncertain)
        or state.faulty & state.uncertain
    ):
        raise InfeasibleStateError(f"{format_state(state)}: node sets overlap")
    if state.location < 0:
        raise InfeasibleStateError(f"Invalid location {state.location}")
    if instance is not None:
        _debug_check(state, instance)
    return tuple(iter_bits(state.faulty | state.uncertain))


def count_dark(state: Union[BeliefState, PostDecisionState]) -> int:
    """Number of nodes without service."""
    return (state.cleared | state.faulty | state.uncertain).bit_count()


def _require_action(state: BeliefState, a: int) -> None:
    if a <= 0 or not (state.faulty | state.uncertain) >> a & 1:
        raise InvalidActionError(f"Node {a} is not an available action in {format_state(state)}")


def cost(state: BeliefState, a: int, instance: Instance) -> float:
    """
    Expected one-stage disruption time: leg duration times the number of
    dark nodes. A known-faulty node costs the full repair time, an unvisited
    node its expected repair time p*s.
    """
    _require_action(state, a)
    travel = instance.d[state.location][a]
    repair = instance.repair_time
    if not state.faulty >> a & 1:
        repair *= instance.fault_prob
    return (travel + repair) * count_dark(state)


def post_decision(state: BeliefState, a: int) -> PostDecisionState:
    _require_action(state, a)
    bit = 1 << a
    if state.uncertain & bit:
        return PostDecisionState(
            a, state.served, state.cleared | bit, state.faulty, state.uncertain & ~bit
        )
    return PostDecisionState(
        a, state.served | bit, state.cleared, state.faulty & ~bit, state.uncertain
    )


def _repaired(post: PostDecisionState) -> bool:
    """True when the committed action repaired a known-faulty node."""
    return post.action != DEPOT and bool(post.served >> post.action & 1)


# --- Reveal ---


def reveal(post: PostDecisionState, oracle: FaultOracle, instance: Instance) -> BeliefState:
    """
    Resolves what repairing `post.action` exposes.

    Power spreads from the repaired node: cleared successors regain service,
    uncertain successors are resolved against `oracle` (a Realization, or a
    Generator drawing Bernoulli(p) lazily). Visiting an uncertain node reveals
    nothing.
    """
    served, cleared, faulty, uncertain = post.served, post.cleared, post.faulty, post.uncertain
    if _repaired(post):
        children = instance.tree.children
        p = instance.fault_prob
        frontier = deque(children[post.action])
        while frontier:
            node = frontier.popleft()
            bit = 1 << node
            if cleared & bit:
                cleared &= ~bit
            elif uncertain & bit:
                uncertain &= ~bit
                if isinstance(oracle, Realization):
                    is_faulty = oracle.is_faulty(node)
                else:
                    is_faulty = bool(oracle.random() < p)
                if is_faulty:
                    faulty |= bit
                    continue
            else:
                continue
            served |= bit
            frontier.extend(children[node])

    state = BeliefState(post.action, served, cleared, faulty, uncertain)
    _debug_check(state, instance)
    return state


def step(state: BeliefState, a: int, oracle: FaultOracle, instance: Instance) -> BeliefState:
    return reveal(post_decision(state, a), oracle, instance)


# --- Transition probabilities ---


def enumerate_transitions(
    state: BeliefState, a: int, instance: Instance
) -> List[TransitionOutcome]:
    """
    Every successor state of (state, a) with its probability. Visiting an
    uncertain node is deterministic; repairing a faulty node branches on each
    successor the power reaches.
    """
    post = post_decision(state, a)
    if not _repaired(post):
        next_state = BeliefState(a, post.served, post.cleared, post.faulty, post.uncertain)
        _debug_check(next_state, instance)
        return [TransitionOutcome(next_state, 1.0)]

    children = instance.tree.children
    p = instance.fault_prob
    outcomes: List[TransitionOutcome] = []
    stack = [(tuple(children[a]), post.served, post.cleared, post.faulty, post.uncertain, 1.0)]
    while stack:
        frontier, served, cleared, faulty, uncertain, prob = stack.pop()
        if not frontier:
            next_state = BeliefState(a, served, cleared, faulty, uncertain)
            _debug_check(next_state, instance)
            outcomes.append(TransitionOutcome(next_state, prob))
            continue
        node, rest = frontier[0], frontier[1:]
        bit = 1 << node
        if cleared & bit:
            grown = rest + children[node]
            stack.append((grown, served | bit, cleared & ~bit, faulty, uncertain, prob))
        elif uncertain & bit:
            stack.append((rest, served, cleared, faulty | bit, uncertain & ~bit, prob * p))
            grown = rest + children[node]
            stack.append((grown, served | bit, cleared, faulty, uncertain & ~bit, prob * (1 - p)))
        else:
            stack.append((rest, served, cleared, faulty, uncertain, prob))

    outcomes.sort(key=lambda outcome: outcome.next_state)
    return outcomes


def transition_probability(
    state: BeliefState, a: int, next_state: BeliefState, instance: Instance
) -> float:
    """
    Closed-form P(next_state | state, a): (1-p)^(newly served without a) times
    p^(newly known faulty), or 0 when next_state cannot follow.
    """
    post = post_decision(state, a)
    if not _repaired(post):
        expected = BeliefState(a, post.served, post.cleared, post.faulty, post.uncertain)
        return 1.0 if next_state == expected else 0.0

    if next_state.location != a or not is_feasible(next_state, instance):
        return 0.0
    below = 0
    for node in range(1, instance.n + 1):
        if instance.tree.path_masks[node] >> a & 1 and node != a:
            below |= 1 << node
    moved = next_state.served & ~post.served
    new_faulty = next_state.faulty & ~post.faulty
    if (
        moved & ~below
        or new_faulty & ~(below & post.uncertain)
        or next_state.served & post.served != post.served
        or next_state.faulty & post.faulty != post.faulty
        or next_state.cleared != post.cleared & ~moved
        or next_state.uncertain != post.uncertain & ~moved & ~new_faulty
    ):
        return 0.0

    p = instance.fault_prob
    ok_exponent = (
        next_state.served.bit_count()
        + next_state.cleared.bit_count()
        - state.served.bit_count()
        - state.cleared.bit_count()
        - 1
    )
    faulty_exponent = next_state.faulty.bit_count() - state.faulty.bit_count() + 1
    return (1 - p) ** ok_exponent * p**faulty_exponent


# --- Realizations ---


def sample_realization(instance: Instance, rng: np.random.Generator) -> Realization:
    """Source faulty; every other node faulty independently with probability p."""
    draws = rng.random(instance.n - 1) < instance.fault_prob
    faults = mask_of(node for node, hit in zip(range(2, instance.n + 1), draws) if hit)
    return Realization(faults, instance.n)


def enumerate_realizations(
    instance: Instance, max_nodes: int = MAX_ENUMERATION_NODES
) -> Iterator[Tuple[Realization, float]]:
    """All 2^(n-1) fault patterns with their probabilities."""
    if instance.n > max_nodes:
        raise OracleSizeError(
            f"Enumerating realizations of {instance.n} nodes exceeds the limit of {max_nodes}"
        )
    p = instance.fault_prob
    others = range(2, instance.n + 1)
    for flags in itertools.product((False, True), repeat=instance.n - 1):
        hits = sum(flags)
        prob = p**hits * (1 - p) ** (len(flags) - hits)
        faults = mask_of(node for node, hit in zip(others, flags) if hit)
        yield Realization(faults, instance.n), prob


# --- Canonical text form ---

_STATE_PATTERN = re.compile(
    r"^L=(\d+)\s+U\+=\[([\d,\s]*)\]\s+U0=\[([\d,\s]*)\]\s+U1=\[([\d,\s]*)\]\s+Up=\[([\d,\s]*)\]$"
)


def _format_set(mask: int) -> str:
    return "[" + ",".join(str(node) for node in iter_bits(mask)) + "]"


def format_state(state: BeliefState) -> str:
    """Canonical text, e.g. `L=0 U+=[] U0=[] U1=[1] Up=[2,3]`."""
    return (
        f"L={state.location} U+={_format_set(state.served)} U0={_format_set(state.cleared)} "
        f"U1={_format_set(state.faulty)} Up={_format_set(state.uncertain)}"
    )


def parse_state(text: str) -> BeliefState:
    match = _STATE_PATTERN.match(text.strip())
    if not match:
        raise InfeasibleStateError(f"Cannot parse state '{text}'")
    location, *sets = match.groups()
    masks = [mask_of(int(tok) for tok in body.split(",") if tok.strip()) for body in sets]
    return BeliefState(int(location), *masks)
