"""Optimal (returns-maximising / -minimising) tabular policies and exact
expected returns for SimpleGrid MDPs."""
from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .errors import CalculabilityError, ConvergenceError
from .gridworld import N_ACTIONS, GridMdp, cell_index, expected_q_backup, geometry

TIE_TOL = 1e-9
MAX_SWEEPS = 10_000


class PolicyRole(enum.Enum):
    MAX_OPTIMAL = "max"
    MIN_OPTIMAL = "min"
    LEARNED = "learned"


class Method(enum.Enum):
    EXACT_DP = "exact_dp"
    MONTE_CARLO = "monte_carlo"


@dataclasses.dataclass(frozen=True)
class TabularPolicy:
    """Per-cell action distribution; row ``k`` belongs to the k-th passable
    cell in row-major order."""

    action_probs: np.ndarray
    role: PolicyRole
    grid_size: int = 20

    def __post_init__(self):
        probs = np.asarray(self.action_probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != N_ACTIONS:
            raise ValueError(f"action_probs must have shape (n_cells, {N_ACTIONS})")
        if np.any(probs < 0) or not np.allclose(probs.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("every action distribution must be non-negative and sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "action_probs", probs)

    def probs(self, cell) -> np.ndarray:
        return self.action_probs[cell_index(cell, self.grid_size)]

    def as_dict(self) -> dict:
        cells = geometry(self.grid_size).cells
        return {c: self.action_probs[k] for k, c in enumerate(cells)}


@dataclasses.dataclass(frozen=True)
class ReturnEstimate:
    value: float
    mdp_id: object
    policy_role: PolicyRole
    method: Method = Method.EXACT_DP


def value_iteration(mdp: GridMdp, role=PolicyRole.MAX_OPTIMAL, tol=1e-12,
                    max_sweeps=MAX_SWEEPS):
    """Fixed point of the Bellman optimality (or pessimality) operator.

    Returns ``(values, q_values)``; raises ConvergenceError if the sup-norm
    change is still above ``tol`` after ``max_sweeps`` sweeps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    reduce = np.max if PolicyRole(role) is PolicyRole.MAX_OPTIMAL else np.min
    values = np.zeros(mdp.n_cells)
    for _ in range(max_sweeps):
        q = expected_q_backup(mdp, values)
        new = reduce(q, axis=1)
        delta = np.max(np.abs(new - values))
        values = new
        if delta <= tol:
            return values, expected_q_backup(mdp, values)
    raise ConvergenceError(f"value iteration did not converge in {max_sweeps} sweeps")


def greedy_probs(q: np.ndarray, role=PolicyRole.MAX_OPTIMAL, tie_tol=TIE_TOL) -> np.ndarray:
    """Uniform distribution over the (arg)max or (arg)min actions per row."""
    if PolicyRole(role) is PolicyRole.MAX_OPTIMAL:
        best = q.max(axis=1, keepdims=True)
        mask = q >= best - tie_tol
    else:
        best = q.min(axis=1, keepdims=True)
        mask = q <= best + tie_tol
    probs = mask.astype(np.float64)
    return probs / probs.sum(axis=1, keepdims=True)


def optimal_policy(mdp: GridMdp, role=PolicyRole.MAX_OPTIMAL, tol=1e-12) -> TabularPolicy:
    role = PolicyRole(role)
    if role is PolicyRole.LEARNED:
        raise ValueError("optimal_policy needs MAX_OPTIMAL or MIN_OPTIMAL")
    _, q = value_iteration(mdp, role, tol)
    return TabularPolicy(greedy_probs(q, role), role, mdp.grid_size)


def _start_weights(mdp, start):
    weights = np.zeros(mdp.n_cells)
    if start is None:
        start = mdp.start
    if isinstance(start, dict):
        for cell, p in start.items():
            weights[cell_index(cell, mdp.grid_size)] += p
        if not np.isclose(weights.sum(), 1.0):
            raise ValueError("start distribution must sum to 1")
    else:
        weights[cell_index(start, mdp.grid_size)] = 1.0
    return weights


def evaluate_values(policy: TabularPolicy, mdp: GridMdp, horizon=None) -> np.ndarray:
    """Horizon-truncated expected discounted return from every cell."""
    probs = policy.action_probs
    if probs.shape[0] != mdp.n_cells or policy.grid_size != mdp.grid_size:
        raise CalculabilityError(
            "policy is not defined on every state of the target MDP"
        )
    horizon = mdp.horizon if horizon is None else horizon
    values = np.zeros(mdp.n_cells)
    for _ in range(horizon):
        values = np.einsum("sa,sa->s", probs, expected_q_backup(mdp, values))
    return values


def policy_evaluation(policy: TabularPolicy, mdp: GridMdp, start=None,
                      mdp_id=None) -> ReturnEstimate:
    """Exact expected return of ``policy`` executed in ``mdp``.

    ``start`` is a cell or a ``{cell: probability}`` mapping; defaults to
    the MDP's own start cell.
    """
    values = evaluate_values(policy, mdp)
    value = float(_start_weights(mdp, start) @ values)
    return ReturnEstimate(value, mdp_id, policy.role, Method.EXACT_DP)


def return_bounds(mdp: GridMdp, horizon=None) -> tuple:
    """Analytic [lower, upper] bounds on any horizon-truncated return."""
    horizon = mdp.horizon if horizon is None else horizon
    geo = geometry(mdp.grid_size)
    worst = mdp.c_scale * np.abs(geo.coords - np.asarray(mdp.goal)).sum(axis=1).max()
    if mdp.discount == 1.0:
        total = horizon
    else:
        total = (1.0 - mdp.discount ** horizon) / (1.0 - mdp.discount)
    return -worst * total, 0.0
