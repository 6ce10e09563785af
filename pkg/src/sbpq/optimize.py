"""Exhaustive static-priority policy ranking by estimated cycle time.

Every per-station permutation is evaluated through the analytic pipeline;
policies whose structural assumptions fail are listed with a tag and kept
out of the ranking rather than dropped silently.  Policies that differ only
in the ordering of their high-priority classes receive identical estimates
in the limit (the pre-limit systems do distinguish them; simulate to break
such ties).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial, prod

from .errors import CombinatorialGuard
from .heavytraffic import AnalysisReport, analyze
from .network import NetworkSpec, PriorityPolicy

POLICY_GUARD_DEFAULT = 10 ** 6
GROUP_RTOL = 1e-9


@dataclass
class RankedPolicy:
    policy: PriorityPolicy
    estimate: float | None          # None when an assumption failed
    tag: str                        # "ok" or the failure tag
    group: int | None = None        # degeneracy group id among ranked policies


@dataclass
class PolicyRanking:
    ranked: list[RankedPolicy]      # ascending estimate, then enumeration order
    failed: list[RankedPolicy]      # tagged, excluded from ranking
    objective: str = "cycle-time"

    @property
    def total(self) -> int:
        return len(self.ranked) + len(self.failed)

    @property
    def best(self) -> list[RankedPolicy]:
        """All policies in the first degeneracy group."""
        return [r for r in self.ranked if r.group == 0]

    def groups(self) -> dict[int, list[RankedPolicy]]:
        out: dict[int, list[RankedPolicy]] = {}
        for r in self.ranked:
            out.setdefault(r.group, []).append(r)
        return out


def policy_count(spec: NetworkSpec) -> int:
    return prod(factorial(len(spec.classes_at(j))) for j in range(spec.num_stations))


def enumerate_policies(spec: NetworkSpec, guard: int = POLICY_GUARD_DEFAULT):
    """All SBP policies in deterministic lexicographic order.

    The cartesian product of per-station permutations; refuses to start when
    the count exceeds the guard.
    """
    n = policy_count(spec)
    if n > guard:
        raise CombinatorialGuard(
            f"{n} policies exceed the enumeration guard of {guard}")
    per_station = [sorted(spec.classes_at(j)) for j in range(spec.num_stations)]
    for combo in itertools.product(*(itertools.permutations(cs) for cs in per_station)):
        yield PriorityPolicy(combo)


def rank_policies(spec: NetworkSpec, guard: int = POLICY_GUARD_DEFAULT,
                  weights=None) -> PolicyRanking:
    """Analyze every policy and sort by estimated cycle time.

    weights: optional per-class vector replacing the cycle-time objective by
    a weighted sum of the low-class mean-queue estimates.
    """
    evaluated: list[tuple[int, RankedPolicy]] = []
    for pos, policy in enumerate(enumerate_policies(spec, guard=guard)):
        report: AnalysisReport = analyze(spec, policy)
        if report.ok:
            if weights is None:
                value = report.cycle_time
            else:
                value = sum(weights[c.user_class] * c.mean_estimate
                            for c in report.constants)
            evaluated.append((pos, RankedPolicy(policy, float(value), "ok")))
        else:
            evaluated.append((pos, RankedPolicy(policy, None, report.status)))

    ranked = [r for _, r in sorted(
        (e for e in evaluated if e[1].estimate is not None),
        key=lambda e: (e[1].estimate, e[0]))]
    failed = [r for _, r in evaluated if r.estimate is None]

    group = -1
    prev = None
    for r in ranked:
        scale = max(abs(r.estimate), 1.0)
        if prev is None or abs(r.estimate - prev) > GROUP_RTOL * scale:
            group += 1
        r.group = group
        prev = r.estimate
    objective = "cycle-time" if weights is None else "weighted-mean-queue"
    return PolicyRanking(ranked=ranked, failed=failed, objective=objective)
