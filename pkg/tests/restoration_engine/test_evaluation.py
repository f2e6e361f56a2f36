# tests/restoration_engine/test_evaluation.py

import math

import numpy as np
import pytest

from restoration_engine.evaluation import (
    Z_95,
    draw_realizations,
    evaluate,
    gap_statistics,
    paired_test,
)
from restoration_engine.mdp import BeliefState
from restoration_engine.oracle import ExactSolver, OraclePolicy
from restoration_engine.policies import NearestNeighborPolicy, PriorityPolicy, _pending


class FarthestPolicy:
    """Deliberately poor policy: always drive to the farthest pending node."""

    name = "far"

    def __init__(self, instance):
        self.instance = instance

    def choose(self, state: BeliefState) -> int:
        d = self.instance.d[state.location]
        return max(_pending(state), key=lambda node: (d[node], -node))


def test_gap_statistics_by_hand():
    """
    Tests the mean gap and its normal-approximation interval.
    """
    # 1. Arrange
    totals = np.array([110.0, 110.0, 120.0, 130.0])
    best = np.array([100.0] * 4)
    half = Z_95 * float(np.std([10.0, 10.0, 20.0, 30.0], ddof=1)) / math.sqrt(4)

    # 2. Act
    mean, lo, hi = gap_statistics(totals, best)

    # 3. Assert
    assert mean == pytest.approx(17.5)
    assert lo == pytest.approx(17.5 - half)
    assert hi == pytest.approx(17.5 + half)


def test_gap_with_zero_best_total_counts_as_zero():
    """
    Tests the convention for realizations where the best policy scored 0.
    """
    # 1. Arrange / 2. Act
    mean, lo, hi = gap_statistics(np.array([0.0, 0.0]), np.array([0.0, 0.0]))

    # 3. Assert
    assert (mean, lo, hi) == (0.0, 0.0, 0.0)


def test_realizations_are_shared_and_seeded(chain3):
    """
    Tests that one seed always yields the same fault patterns.
    """
    # 1. Arrange / 2. Act
    first = draw_realizations(chain3, 50, seed=3)
    second = draw_realizations(chain3, 50, seed=3)

    # 3. Assert
    assert first == second
    assert all(r.is_faulty(1) for r in first)


def test_single_realization_is_degenerate(chain3):
    """
    Tests that R=1 gives zero-width intervals and is flagged.
    """
    # 1. Arrange
    policies = [PriorityPolicy(chain3), NearestNeighborPolicy(chain3)]

    # 2. Act
    report = evaluate(chain3, policies, realizations=1, seed=0)

    # 3. Assert
    assert report.degenerate
    for entry in report.summaries:
        assert entry.gap_ci_lo == entry.gap_mean_pct == entry.gap_ci_hi
        assert entry.mean_total == pytest.approx(float(report.totals[entry.name][0]))


def test_identical_policies_have_zero_gap(make_instance):
    """
    Tests that two copies of one policy tie with no gap and p-value 1.
    """
    # 1. Arrange
    instance = make_instance(1, 8)
    first = NearestNeighborPolicy(instance)
    second = NearestNeighborPolicy(instance)
    second.name = "nn-copy"

    # 2. Act
    report = evaluate(instance, [first, second], realizations=100, seed=5)

    # 3. Assert
    assert report.best == "nn"
    for entry in report.summaries:
        assert entry.gap_mean_pct == 0.0
        assert entry.gap_ci_lo == entry.gap_ci_hi == 0.0
    assert paired_test(report, "nn", "nn-copy") == 1.0


def test_best_policy_has_zero_gap(make_instance):
    """
    Tests that gaps are measured against the policy with the lowest mean.
    """
    # 1. Arrange
    instance = make_instance(2, 7)
    policies = [
        OraclePolicy(ExactSolver(instance)),
        PriorityPolicy(instance),
        NearestNeighborPolicy(instance),
    ]

    # 2. Act
    report = evaluate(instance, policies, realizations=200, seed=1)

    # 3. Assert
    assert report.summary(report.best).gap_mean_pct == 0.0
    assert report.mean(report.best) == min(entry.mean_total for entry in report.summaries)
    assert [entry.name for entry in report.summaries] == ["oracle", "ps", "nn"]


def test_evaluate_rejects_duplicate_names(chain3):
    """
    Tests that policy names identify report rows uniquely.
    """
    # 1. Arrange
    policies = [PriorityPolicy(chain3), PriorityPolicy(chain3)]

    # 2. Act / 3. Assert
    with pytest.raises(ValueError):
        evaluate(chain3, policies, realizations=10, seed=0)
    with pytest.raises(ValueError):
        evaluate(chain3, policies[:1], realizations=0, seed=0)


def test_paired_test_direction(make_instance):
    """
    Tests that the one-sided p-value falls below 0.5 exactly when the first
    policy has the lower mean, and that the two directions are complementary.
    """
    # 1. Arrange
    instance = make_instance(3, 7)
    policies = [OraclePolicy(ExactSolver(instance)), FarthestPolicy(instance)]
    report = evaluate(instance, policies, realizations=300, seed=2)

    # 2. Act
    forward = paired_test(report, "oracle", "far")
    backward = paired_test(report, "far", "oracle")

    # 3. Assert
    assert 0.0 <= forward <= 1.0
    assert forward + backward == pytest.approx(1.0)
    assert (forward < 0.5) == (report.mean("oracle") < report.mean("far"))
