"""Scaled Optimal Policy Regret between two SimpleGrid MDPs."""
from __future__ import annotations

import dataclasses

from .errors import CalculabilityError, DegenerateMdpError
from .gridworld import GridMdp
from .policy_oracle import PolicyRole, optimal_policy, policy_evaluation

DENOMINATOR_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class SoprResult:
    value: float
    numerator: float
    denominator: float
    source_mdp: object = None
    target_mdp: object = None
    # the four expectations, for audit
    target_optimal: float = 0.0
    source_optimal_in_target: float = 0.0
    target_pessimal: float = 0.0


def calculability_check(m_i: GridMdp, m_j: GridMdp) -> bool:
    """True when the source's optimal policies can act in every target state.

    SimpleGrid variants share the four-action set, so this reduces to the
    two grids having the same passable cells.
    """
    return m_i.grid_size == m_j.grid_size


def sopr(m_i: GridMdp, m_j: GridMdp, start=None, source_id=None, target_id=None) -> SoprResult:
    """Regret of ``m_i``'s optimal policy in ``m_j``, scaled by ``m_j``'s
    best-to-worst return range.  ``start`` optionally overrides ``m_j``'s
    start cell with a cell or ``{cell: probability}`` mapping."""
    if not calculability_check(m_i, m_j):
        raise CalculabilityError(
            f"a {m_i.grid_size}x{m_i.grid_size} policy cannot act in every state "
            f"of a {m_j.grid_size}x{m_j.grid_size} grid"
        )
    best = policy_evaluation(optimal_policy(m_j, PolicyRole.MAX_OPTIMAL), m_j, start).value
    worst = policy_evaluation(optimal_policy(m_j, PolicyRole.MIN_OPTIMAL), m_j, start).value
    if m_i == m_j:
        crossed = best
    else:
        crossed = policy_evaluation(optimal_policy(m_i, PolicyRole.MAX_OPTIMAL), m_j, start).value
    numerator = best - crossed
    denominator = best - worst
    if denominator <= DENOMINATOR_TOL:
        raise DegenerateMdpError(
            f"best and worst returns differ by only {denominator:.3g}"
        )
    # exact DP can overshoot the bracket by rounding
    value = min(1.0, max(0.0, numerator / denominator))
    return SoprResult(value, numerator, denominator, source_id, target_id,
                      best, crossed, worst)
