# tests/restoration_engine/test_mdp.py

import numpy as np
import pytest

from restoration_engine.errors import (
    InfeasibleStateError,
    InvalidActionError,
    OracleSizeError,
)
from restoration_engine.mdp import (
    BeliefState,
    Realization,
    actions,
    check_feasible,
    cost,
    count_dark,
    enumerate_realizations,
    enumerate_transitions,
    format_state,
    initial_state,
    is_feasible,
    is_terminal,
    parse_state,
    post_decision,
    reveal,
    sample_realization,
    step,
    transition_probability,
)
from restoration_engine.network import mask_of
from restoration_engine.oracle import reachable_states


def test_initial_state(chain3):
    """
    Tests the start: crew at the depot, source faulty, the rest uncertain.
    """
    # 1. Arrange / 2. Act
    state = initial_state(chain3)

    # 3. Assert
    assert state == BeliefState(0, 0, 0, mask_of([1]), mask_of([2, 3]))
    assert actions(state, chain3) == (1, 2, 3)
    assert count_dark(state) == 3
    assert not is_terminal(state)


def test_cost_of_known_faulty_and_uncertain_nodes(chain3):
    """
    Tests one-stage costs: full repair time for U1, expected p*s for Up.
    """
    # 1. Arrange
    state = initial_state(chain3)

    # 2. Act
    costs = {a: cost(state, a, chain3) for a in actions(state)}

    # 3. Assert: (d + s) * 3, (0 + 0.5) * 3, (1 + 0.5) * 3
    assert costs == pytest.approx({1: 6.0, 2: 1.5, 3: 4.5})


def test_action_outside_available_set_is_rejected(chain3):
    """
    Tests that cost and post_decision refuse served nodes and the depot.
    """
    # 1. Arrange
    state = initial_state(chain3)

    # 2. Act / 3. Assert
    with pytest.raises(InvalidActionError):
        cost(state, 0, chain3)
    with pytest.raises(InvalidActionError):
        post_decision(state, 4)


def test_overlapping_sets_are_infeasible(chain3):
    """
    Tests that actions() refuses a state whose sets overlap.
    """
    # 1. Arrange
    state = BeliefState(0, 0, 0, mask_of([1, 2]), mask_of([2, 3]))

    # 2. Act / 3. Assert
    with pytest.raises(InfeasibleStateError):
        actions(state)


def test_feasibility_rules(chain3):
    """
    Tests predecessor rules for served, cleared, faulty and uncertain nodes.
    """
    # 1. Arrange
    good = BeliefState(2, 0, mask_of([2]), mask_of([1]), mask_of([3]))
    served_orphan = BeliefState(0, mask_of([2]), 0, mask_of([1]), mask_of([3]))
    faulty_orphan = BeliefState(0, 0, 0, mask_of([1, 3]), mask_of([2]))
    cleared_with_power = BeliefState(2, mask_of([1]), mask_of([2]), 0, mask_of([3]))
    missing_node = BeliefState(0, 0, 0, mask_of([1]), mask_of([2]))

    # 2. Act / 3. Assert
    assert is_feasible(good, chain3)
    for state in (served_orphan, faulty_orphan, cleared_with_power, missing_node):
        assert not is_feasible(state, chain3)
    with pytest.raises(InfeasibleStateError):
        check_feasible(faulty_orphan, chain3)


def test_location_outside_the_network_is_infeasible(chain3):
    """
    Tests that the crew must stand at the depot or on a power node.
    """
    # 1. Arrange
    sets = (0, 0, mask_of([1]), mask_of([2, 3]))

    # 2. Act / 3. Assert
    assert is_feasible(BeliefState(0, *sets), chain3)
    for location in (-1, 4, 9):
        with pytest.raises(InfeasibleStateError, match="location"):
            check_feasible(BeliefState(location, *sets), chain3)


def test_visiting_uncertain_node_is_deterministic(chain3):
    """
    Tests that an Up visit moves the node to U0 and reveals nothing.
    """
    # 1. Arrange
    state = initial_state(chain3)

    # 2. Act
    outcomes = enumerate_transitions(state, 2, chain3)

    # 3. Assert
    assert len(outcomes) == 1
    assert outcomes[0].probability == 1.0
    assert outcomes[0].next_state == BeliefState(2, 0, mask_of([2]), mask_of([1]), mask_of([3]))


def test_repairing_source_branches_over_the_chain(chain3):
    """
    Tests the three outcomes of repairing node 1 on the chain.
    """
    # 1. Arrange
    state = initial_state(chain3)

    # 2. Act
    outcomes = {o.next_state: o.probability for o in enumerate_transitions(state, 1, chain3)}

    # 3. Assert
    assert outcomes == pytest.approx(
        {
            BeliefState(1, mask_of([1]), 0, mask_of([2]), mask_of([3])): 0.5,
            BeliefState(1, mask_of([1, 2]), 0, mask_of([3]), 0): 0.25,
            BeliefState(1, mask_of([1, 2, 3]), 0, 0, 0): 0.25,
        }
    )


def test_repair_restores_cleared_descendants(chain3):
    """
    Tests that power flows through a cleared node into its subtree.
    """
    # 1. Arrange: node 2 already visited and known fault-free
    state = BeliefState(2, 0, mask_of([2]), mask_of([1]), mask_of([3]))
    realization = Realization(0, chain3.n)

    # 2. Act
    next_state = step(state, 1, realization, chain3)

    # 3. Assert
    assert next_state == BeliefState(1, mask_of([1, 2, 3]), 0, 0, 0)
    assert is_terminal(next_state)


def test_star_source_repair_has_two_to_the_m_outcomes(crossing_star):
    """
    Tests that repairing a source with four uncertain leaves gives 16 outcomes.
    """
    # 1. Arrange
    state = initial_state(crossing_star)

    # 2. Act
    outcomes = enumerate_transitions(state, 1, crossing_star)

    # 3. Assert
    assert len(outcomes) == 16
    assert sum(o.probability for o in outcomes) == pytest.approx(1.0)


def test_transition_probability_matches_enumeration(make_instance):
    """
    Tests normalization and the closed form on every reachable (state, action)
    of a few random instances.
    """
    for seed in range(4):
        # 1. Arrange
        instance = make_instance(seed, 6, fault_prob=0.3)

        for state in reachable_states(instance):
            for a in actions(state, instance):
                # 2. Act
                outcomes = enumerate_transitions(state, a, instance)

                # 3. Assert
                assert sum(o.probability for o in outcomes) == pytest.approx(1.0)
                for outcome in outcomes:
                    check_feasible(outcome.next_state, instance)
                    assert transition_probability(
                        state, a, outcome.next_state, instance
                    ) == pytest.approx(outcome.probability)


def test_transition_probability_of_unreachable_state_is_zero(chain3):
    """
    Tests that a successor the action cannot produce has probability 0.
    """
    # 1. Arrange
    state = initial_state(chain3)
    wrong = BeliefState(3, mask_of([1]), 0, mask_of([2]), mask_of([3]))

    # 2. Act / 3. Assert
    assert transition_probability(state, 1, wrong, chain3) == 0.0
    assert transition_probability(state, 2, wrong, chain3) == 0.0


def test_reveal_with_generator_stays_feasible(make_instance):
    """
    Tests lazily drawn faults through whole episodes.
    """
    # 1. Arrange
    instance = make_instance(5, 10)
    rng = np.random.default_rng(0)

    for _ in range(50):
        state = initial_state(instance)
        steps = 0
        while not is_terminal(state):
            # 2. Act
            a = actions(state)[int(rng.integers(len(actions(state))))]
            state = reveal(post_decision(state, a), rng, instance)
            steps += 1

            # 3. Assert
            check_feasible(state, instance)
        assert steps <= 2 * instance.n


def test_realization_always_has_faulty_source(chain3):
    """
    Tests that the source bit is forced on every realization.
    """
    # 1. Arrange
    rng = np.random.default_rng(0)

    # 2. Act
    drawn = [sample_realization(chain3, rng) for _ in range(20)]

    # 3. Assert
    assert all(r.is_faulty(1) for r in drawn)
    assert Realization(0, 3).faulty_nodes == [1]


def test_enumerate_realizations_sums_to_one(chain3):
    """
    Tests the 2^(n-1) patterns and their probabilities.
    """
    # 1. Arrange / 2. Act
    patterns = list(enumerate_realizations(chain3))

    # 3. Assert
    assert len(patterns) == 4
    assert sum(prob for _, prob in patterns) == pytest.approx(1.0)


def test_enumerate_realizations_respects_limit(chain3):
    """
    Tests the size guard on exhaustive enumeration.
    """
    # 1. Arrange / 2. Act / 3. Assert
    with pytest.raises(OracleSizeError):
        list(enumerate_realizations(chain3, max_nodes=2))


def test_state_text_round_trip():
    """
    Tests the canonical state text used by the oracle command.
    """
    # 1. Arrange
    text = "L=0 U+=[] U0=[] U1=[1] Up=[2,3]"

    # 2. Act
    state = parse_state(text)

    # 3. Assert
    assert state == BeliefState(0, 0, 0, mask_of([1]), mask_of([2, 3]))
    assert format_state(state) == text
    with pytest.raises(InfeasibleStateError):
        parse_state("L=0 nonsense")
