# restoration_engine/evaluation.py
"""Paired Monte-Carlo comparison of routing policies."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from .mdp import Realization, sample_realization
from .network import Instance
from .policies import Policy, rollout

log = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass(frozen=True)
class PolicySummary:
    name: str
    mean_total: float
    gap_mean_pct: float
    gap_ci_lo: float
    gap_ci_hi: float


@dataclass
class EvaluationReport:
    summaries: List[PolicySummary]
    realizations: int
    seed: int
    best: str
    degenerate: bool = False
    totals: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def summary(self, name: str) -> PolicySummary:
        for entry in self.summaries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def mean(self, name: str) -> float:
        return self.summary(name).mean_total


def draw_realizations(instance: Instance, count: int, seed: int) -> List[Realization]:
    """All realizations up front from one generator, so every policy sees the same list."""
    rng = np.random.default_rng(seed)
    return [sample_realization(instance, rng) for _ in range(count)]


def gap_statistics(totals: np.ndarray, best_totals: np.ndarray) -> Tuple[float, float, float]:
    """
    Mean and 95% normal-approximation interval of the per-realization
    percentage gap 100 * (total - best) / best. A zero best total counts as
    no gap.
    """
    totals = np.asarray(totals, dtype=float)
    best_totals = np.asarray(best_totals, dtype=float)
    gaps = np.divide(
        100.0 * (totals - best_totals),
        best_totals,
        out=np.zeros_like(totals),
        where=best_totals > 0,
    )
    mean = float(gaps.mean())
    if len(gaps) < 2:
        return mean, mean, mean
    half = Z_95 * float(gaps.std(ddof=1)) / math.sqrt(len(gaps))
    return mean, mean - half, mean + half


def evaluate(
    instance: Instance, policies: Sequence[Policy], realizations: int, seed: int
) -> EvaluationReport:
    """
    Rolls every policy out on the same `realizations` fault patterns and
    reports mean totals plus the gap of each policy to the best mean.
    """
    if realizations < 1:
        raise ValueError(f"Need at least one realization, got {realizations}")
    names = [policy.name for policy in policies]
    if len(set(names)) != len(names):
        raise ValueError(f"Policy names must be unique, got {names}")

    draws = draw_realizations(instance, realizations, seed)
    totals = {
        policy.name: np.array([rollout(instance, r, policy).total for r in draws])
        for policy in policies
    }
    means = {name: float(values.mean()) for name, values in totals.items()}
    best = min(names, key=lambda name: means[name])

    summaries = []
    for name in names:
        gap_mean, lo, hi = gap_statistics(totals[name], totals[best])
        summaries.append(PolicySummary(name, means[name], gap_mean, lo, hi))
        log.debug(f"{name}: mean={means[name]:.3f} gap={gap_mean:.2f}% [{lo:.2f}, {hi:.2f}]")

    degenerate = realizations < 2
    if degenerate:
        log.warning("Single realization: confidence intervals have zero width")
    log.info(f"Evaluated {len(names)} policies on {realizations} realizations; best={best}")
    return EvaluationReport(summaries, realizations, seed, best, degenerate, totals)


def paired_test(report: EvaluationReport, better: str, worse: str) -> float:
    """
    One-sided paired t-test p-value for `better` having lower totals than
    `worse` on the shared realizations. Identical totals give 1.0.
    """
    a, b = report.totals[better], report.totals[worse]
    if np.allclose(a, b):
        return 1.0
    result = stats.ttest_rel(a, b, alternative="less")
    return float(result.pvalue)
