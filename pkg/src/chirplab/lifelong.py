"""Interleaved-task lifelong learning on SimpleGrid with policy reuse.

Three ways of sharing a library of tabular Q-learning policies across
tasks are compared:

* CPR: a fixed task-to-policy map from k-medoids clusters of the CHIRP
  distance matrix, computed before training;
* LPR: one epsilon-greedy bandit per task that learns which of the k
  policies to deploy, rewarded with the episode return;
* Single: one policy for every task.

Policies observe only the agent's cell, never the goal.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
from typing import Optional

import numpy as np

from . import _kernels
from .clustering import k_medoids
from .gridworld import N_ACTIONS, GridMdp, make_variant, tables, variants_from_json

WILSON_Z = 1.959963984540054


# --- scenario ------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Scenario:
    tasks: tuple
    change_prob: float = 0.1
    total_episodes: int = 20_000
    horizon: int = 100
    eval_window: int = 2_000

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if len(self.tasks) < 2:
            raise ValueError("a scenario needs at least two tasks")
        if not 0.0 <= self.change_prob <= 1.0:
            raise ValueError("change_prob must lie in [0, 1]")
        if self.total_episodes < 1 or self.horizon < 1 or self.eval_window < 1:
            raise ValueError("episode counts and horizon must be positive")
        sizes = {t.grid_size for t in self.tasks}
        if len(sizes) != 1:
            raise ValueError("all tasks must share one grid")

    def to_dict(self) -> dict:
        return {
            "tasks": [t.to_dict() for t in self.tasks],
            "change_prob": self.change_prob,
            "total_episodes": self.total_episodes,
            "horizon": self.horizon,
            "eval_window": self.eval_window,
        }

    @classmethod
    def from_dict(cls, d) -> "Scenario":
        return cls(
            tuple(variants_from_json(d["tasks"])),
            float(d.get("change_prob", 0.1)),
            int(d.get("total_episodes", 20_000)),
            int(d.get("horizon", 100)),
            int(d.get("eval_window", 2_000)),
        )

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)
            f.write("\n")


GROUP_GOALS = ((3, 3), (16, 4), (9, 16))
GROUP_STARTS = ((10, 9), (14, 14), (5, 10))
GROUP_SLIPS = (0.0, 0.05, 0.1)


def grouped_scenario(goals=GROUP_GOALS, starts=GROUP_STARTS, slips=GROUP_SLIPS,
                     **kwargs) -> Scenario:
    """One group per goal; tasks within a group differ only in start and slip.

    The agent cannot see the goal, so tasks in different groups conflict
    while tasks in one group can share a policy.
    """
    tasks = [make_variant(g, s, p) for g in goals for s, p in zip(starts, slips)]
    return Scenario(tuple(tasks), **kwargs)


# --- Q-learning ------------------------------------------------------------------------

@dataclasses.dataclass
class QPolicy:
    q: np.ndarray
    alpha: float = 0.1
    epsilon: float = 1.0
    discount: float = 0.95
    epsilon_decay: float = 0.999
    epsilon_floor: float = 0.05

    @classmethod
    def fresh(cls, n_cells: int, **kwargs) -> "QPolicy":
        return cls(np.zeros((n_cells, N_ACTIONS)), **kwargs)


def q_learning_episode(policy: QPolicy, mdp: GridMdp, horizon: Optional[int] = None, rng=None):
    """Run one epsilon-greedy episode from ``mdp.start``, updating ``policy``
    in place with one-step Q-learning, then decay its epsilon.

    Returns ``(policy, success, discounted_return)``.
    """
    rng = np.random.default_rng(rng)
    horizon = mdp.horizon if horizon is None else horizon
    tab = tables(mdp)
    u_explore = rng.random(horizon)
    a_explore = rng.integers(N_ACTIONS, size=horizon)
    u_slip = rng.random(horizon)
    a_slip = rng.integers(N_ACTIONS, size=horizon)
    if not policy.q.flags.c_contiguous or policy.q.dtype != np.float64:
        policy.q = np.ascontiguousarray(policy.q, dtype=np.float64)
    success, ret, _ = _kernels.q_episode(
        policy.q, tab.next_state, tab.state_reward, tab.goal, tab.start,
        mdp.slip_prob, policy.alpha, policy.discount, policy.epsilon,
        u_explore, a_explore, u_slip, a_slip,
    )
    policy.epsilon = max(policy.epsilon_floor, policy.epsilon * policy.epsilon_decay)
    return policy, bool(success), float(ret)


# --- reuse strategies -------------------------------------------------------------------

class ReuseKind(str, enum.Enum):
    CPR = "cpr"
    LPR = "lpr"
    SINGLE = "single"


@dataclasses.dataclass(frozen=True)
class ReuseStrategy:
    kind: ReuseKind
    k: int = 1
    task_to_policy: Optional[tuple] = None
    bandit_epsilon: float = 0.1
    # optional LPR warm start: (values, counts), each (n_tasks, k)
    bandit_init: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ReuseKind(self.kind))
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.kind is ReuseKind.CPR:
            if self.task_to_policy is None:
                raise ValueError("CPR needs a precomputed task_to_policy map")
            object.__setattr__(self, "task_to_policy", tuple(int(p) for p in self.task_to_policy))
            if any(not 0 <= p < self.k for p in self.task_to_policy):
                raise ValueError("task_to_policy entries must lie in [0, k)")
        if self.kind is ReuseKind.SINGLE and self.k != 1:
            raise ValueError("the single-policy strategy has k = 1")

    @classmethod
    def cpr(cls, task_to_policy) -> "ReuseStrategy":
        task_to_policy = tuple(int(p) for p in task_to_policy)
        return cls(ReuseKind.CPR, max(task_to_policy) + 1, task_to_policy)

    @classmethod
    def lpr(cls, k, bandit_epsilon=0.1, bandit_init=None) -> "ReuseStrategy":
        return cls(ReuseKind.LPR, k, None, bandit_epsilon, bandit_init)

    @classmethod
    def single(cls) -> "ReuseStrategy":
        return cls(ReuseKind.SINGLE, 1)


def cpr_policy_map(d, k: int, seed=None) -> list:
    """Task index -> policy index from k-medoids over the CHIRP matrix."""
    return k_medoids(d, k, seed).policy_ids


class LprBandit:
    """Per-task epsilon-greedy bandits over ``k`` policies (incremental means)."""

    def __init__(self, n_tasks, k, epsilon=0.1, values=None, counts=None):
        self.k = k
        self.epsilon = epsilon
        self.values = np.zeros((n_tasks, k)) if values is None else np.array(values, dtype=float)
        self.counts = np.zeros((n_tasks, k)) if counts is None else np.array(counts, dtype=float)
        if self.values.shape != (n_tasks, k) or self.counts.shape != (n_tasks, k):
            raise ValueError("bandit warm start must have shape (n_tasks, k)")

    def select(self, task_id, rng) -> int:
        if self.k == 1:
            return 0
        if rng.random() < self.epsilon:
            return int(rng.integers(self.k))
        return int(np.argmax(self.values[task_id]))

    def update(self, task_id, arm, reward) -> None:
        self.counts[task_id, arm] += 1
        n = self.counts[task_id, arm]
        self.values[task_id, arm] += (reward - self.values[task_id, arm]) / n

    def select_and_update(self, task_id, rng, play):
        """Select an arm, call ``play(arm) -> reward`` and record it."""
        arm = self.select(task_id, rng)
        self.update(task_id, arm, play(arm))
        return arm

    def greedy_map(self) -> list:
        return [int(np.argmax(row)) for row in self.values]


# --- runs ------------------------------------------------------------------------------

@dataclasses.dataclass
class RunLog:
    episode: np.ndarray
    task_id: np.ndarray
    policy_id: np.ndarray
    success: np.ndarray
    returns: np.ndarray
    seed: int = 0
    kind: str = ""

    def __len__(self):
        return len(self.episode)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["episode", "task_id", "policy_id", "success", "return"])
            for row in zip(self.episode.tolist(), self.task_id.tolist(), self.policy_id.tolist(),
                           self.success.astype(int).tolist(), self.returns.tolist()):
                w.writerow([row[0], row[1], row[2], row[3], repr(row[4])])

    @classmethod
    def from_csv(cls, path, seed=0, kind="") -> "RunLog":
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        col = lambda name, t: np.array([t(r[name]) for r in rows])  # noqa: E731
        return cls(col("episode", int), col("task_id", int), col("policy_id", int),
                   col("success", int).astype(bool), col("return", float), seed, kind)


def run_scenario(scenario: Scenario, strategy: ReuseStrategy, seed: int = 0,
                 **q_params) -> RunLog:
    """Interleaved training: after each episode the task switches, with
    probability ``change_prob``, to a uniformly chosen different task.
    Only the policy deployed in an episode trains on it."""
    rng = np.random.default_rng(seed)
    tasks = scenario.tasks
    n = len(tasks)
    if strategy.kind is ReuseKind.CPR and len(strategy.task_to_policy) != n:
        raise ValueError("CPR map does not cover every task")
    if strategy.k > n:
        raise ValueError("cannot have more policies than tasks")
    policies = [QPolicy.fresh(tasks[0].n_cells, **q_params) for _ in range(strategy.k)]
    bandit = None
    if strategy.kind is ReuseKind.LPR:
        values, counts = strategy.bandit_init if strategy.bandit_init is not None else (None, None)
        bandit = LprBandit(n, strategy.k, strategy.bandit_epsilon, values, counts)

    total = scenario.total_episodes
    task_log = np.empty(total, dtype=np.int64)
    policy_log = np.empty(total, dtype=np.int64)
    success_log = np.empty(total, dtype=bool)
    return_log = np.empty(total)

    task = int(rng.integers(n))
    for ep in range(total):
        if strategy.kind is ReuseKind.CPR:
            pid = strategy.task_to_policy[task]
        elif strategy.kind is ReuseKind.LPR:
            pid = bandit.select(task, rng)
        else:
            pid = 0
        _, ok, ret = q_learning_episode(policies[pid], tasks[task], scenario.horizon, rng)
        if bandit is not None:
            bandit.update(task, pid, ret)
        task_log[ep], policy_log[ep], success_log[ep], return_log[ep] = task, pid, ok, ret
        if n > 1 and rng.random() < scenario.change_prob:
            other = int(rng.integers(n - 1))
            task = other + (other >= task)

    return RunLog(np.arange(total), task_log, policy_log, success_log, return_log,
                  seed, strategy.kind.value)


# --- reporting ---------------------------------------------------------------------------

def wilson_interval(successes: int, n: int, z: float = WILSON_Z) -> tuple:
    if n <= 0:
        raise ValueError("empty sample")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    # the bounds touch 0 and 1 exactly at the extremes; avoid rounding drift
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def _rate(successes):
    n = len(successes)
    s = int(np.sum(successes))
    lo, hi = wilson_interval(s, n)
    return {"rate": s / n, "ci_low": lo, "ci_high": hi, "n": n}


def evaluate_success(log: RunLog, window: int) -> dict:
    """Success rates over the final ``window`` episodes with 95% Wilson
    intervals, overall and per task."""
    if window < 1:
        raise ValueError("empty evaluation window")
    if window > len(log):
        raise ValueError(f"window {window} exceeds the {len(log)} logged episodes")
    tail = slice(len(log) - window, len(log))
    succ, tasks = log.success[tail], log.task_id[tail]
    per_task = {int(t): _rate(succ[tasks == t]) for t in np.unique(tasks)}
    return {"window": window, "overall": _rate(succ), "per_task": per_task}
