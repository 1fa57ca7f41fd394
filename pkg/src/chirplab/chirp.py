"""W1-MDP distance (the CHIRP used throughout) between SimpleGrid MDPs.

Both MDPs execute the same state-action pairs; the two resulting clouds of
outcome vectors (next position, goal position, reward) are compared with
the exact 1-Wasserstein distance.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import functools
import itertools
from typing import Optional

import numpy as np

from ._parallel import parallel_map
from .errors import ConfigError, ExactnessUnavailableError, RequestTooLargeError
from .gridworld import (
    N_ACTIONS,
    Action,
    GridMdp,
    cell_index,
    encode_outcomes,
    geometry,
    sample_next_states,
    tables,
)
from .transport import PointCloud, w1_exact

CE_SMOOTHING = 0.7


class Scheme(str, enum.Enum):
    RANDOM = "random"
    REWARD_SHAPED = "reward_shaped"


@dataclasses.dataclass(frozen=True)
class MCCEConfig:
    elite_fraction: float = 0.125
    iterations: int = 10
    population: int = 64

    def __post_init__(self):
        if not 0.0 < self.elite_fraction < 1.0:
            raise ConfigError("elite_fraction must lie in (0, 1)")
        if self.iterations < 1 or self.population < 1:
            raise ConfigError("iterations and population must be positive")
        if self.n_elite < 1:
            raise ConfigError(
                f"population {self.population} x elite_fraction {self.elite_fraction} "
                "leaves an empty elite set"
            )

    @property
    def n_elite(self) -> int:
        return int(self.population * self.elite_fraction)


@dataclasses.dataclass(frozen=True)
class SamplingConfig:
    scheme: Scheme = Scheme.RANDOM
    n_s: int = 15
    n_t: int = 1
    seed: int = 0
    mcce: Optional[MCCEConfig] = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.n_s < 1 or self.n_t < 1:
            raise ConfigError("n_s and n_t must be positive")
        if isinstance(self.mcce, dict):
            object.__setattr__(self, "mcce", MCCEConfig(**self.mcce))
        if self.scheme is Scheme.REWARD_SHAPED and self.mcce is None:
            object.__setattr__(self, "mcce", MCCEConfig())
        if self.scheme is Scheme.RANDOM and self.mcce is not None:
            raise ConfigError("mcce settings only apply to reward-shaped sampling")

    def to_dict(self) -> dict:
        d = {"scheme": self.scheme.value, "n_s": self.n_s, "n_t": self.n_t, "seed": self.seed}
        if self.mcce is not None:
            d["mcce"] = dataclasses.asdict(self.mcce)
        return d


@dataclasses.dataclass(frozen=True)
class EmpiricalTransitionSet:
    state_actions: list
    outcomes_i: PointCloud
    outcomes_j: PointCloud


# --- sampling ------------------------------------------------------------------

def _pairs_from_indices(grid_size, flat):
    cells = geometry(grid_size).cells
    return [(cells[k // N_ACTIONS], Action(k % N_ACTIONS)) for k in np.asarray(flat).tolist()]


def _indices_from_pairs(pairs, grid_size):
    s = np.array([cell_index(c, grid_size) for c, _ in pairs], dtype=np.int64)
    a = np.array([int(act) for _, act in pairs], dtype=np.int64)
    return s, a


def _rng(cfg, rng):
    return np.random.default_rng(cfg.seed) if rng is None else rng


def _random_flat(m_i, cfg, rng):
    total = m_i.n_cells * N_ACTIONS
    if cfg.n_s > total:
        raise RequestTooLargeError(f"n_s={cfg.n_s} exceeds the {total} state-action pairs")
    return rng.choice(total, size=cfg.n_s, replace=False)


def sample_random(m_i: GridMdp, m_j: GridMdp, cfg: SamplingConfig, rng=None) -> list:
    """``n_s`` distinct state-action pairs drawn uniformly."""
    if cfg.scheme is not Scheme.RANDOM:
        raise ConfigError("sample_random needs a random-scheme config")
    return _pairs_from_indices(m_i.grid_size, _random_flat(m_i, cfg, _rng(cfg, rng)))


def _realised_rewards(mdp, flat, rng):
    nxt = sample_next_states(mdp, flat // N_ACTIONS, flat % N_ACTIONS, rng)
    return tables(mdp).state_reward[nxt]


def _reward_shaped_flat(m_i, m_j, cfg, rng):
    mc = cfg.mcce
    total = m_i.n_cells * N_ACTIONS
    lo = min(tables(m_i).state_reward.min(), tables(m_j).state_reward.min())
    targets = rng.uniform(lo, 0.0, size=cfg.n_s)
    chosen = np.empty(cfg.n_s, dtype=np.int64)
    for k, target in enumerate(targets):
        probs = np.full(total, 1.0 / total)
        best, best_score = -1, np.inf
        for _ in range(mc.iterations):
            cand = rng.choice(total, size=mc.population, p=probs)
            score = 0.5 * (np.abs(_realised_rewards(m_i, cand, rng) - target)
                           + np.abs(_realised_rewards(m_j, cand, rng) - target))
            order = np.argsort(score, kind="stable")
            if score[order[0]] < best_score:
                best, best_score = int(cand[order[0]]), score[order[0]]
            elite = np.bincount(cand[order[:mc.n_elite]], minlength=total) / mc.n_elite
            probs = CE_SMOOTHING * elite + (1.0 - CE_SMOOTHING) * probs
        chosen[k] = best
    return chosen, targets


def sample_reward_shaped(m_i: GridMdp, m_j: GridMdp, cfg: SamplingConfig, rng=None,
                         return_targets=False):
    """Cross-entropy search for pairs whose rewards hit uniformly drawn targets.

    Each of the ``n_s`` targets gets its own categorical search over all
    state-action pairs, scored by the mean absolute reward miss in the two
    MDPs.  The best candidate seen is emitted.
    """
    if cfg.scheme is not Scheme.REWARD_SHAPED:
        raise ConfigError("sample_reward_shaped needs a reward-shaped config")
    flat, targets = _reward_shaped_flat(m_i, m_j, cfg, _rng(cfg, rng))
    pairs = _pairs_from_indices(m_i.grid_size, flat)
    return (pairs, targets) if return_targets else pairs


# --- empirical distributions -----------------------------------------------------

def _build_clouds(m_i, m_j, s_idx, a_idx, n_t, rng):
    s_idx = np.repeat(s_idx, n_t)
    a_idx = np.repeat(a_idx, n_t)
    out_i = encode_outcomes(m_i, sample_next_states(m_i, s_idx, a_idx, rng))
    out_j = encode_outcomes(m_j, sample_next_states(m_j, s_idx, a_idx, rng))
    return out_i, out_j


def build_empirical(m_i: GridMdp, m_j: GridMdp, pairs, n_t: int = 1, seed=0) -> EmpiricalTransitionSet:
    """Execute every pair ``n_t`` times in each MDP (repeats are contiguous)."""
    if len(pairs) == 0:
        raise ValueError("no state-action pairs to execute")
    if m_i.grid_size != m_j.grid_size:
        raise ConfigError("both MDPs must share a grid")
    s_idx, a_idx = _indices_from_pairs(pairs, m_i.grid_size)
    out_i, out_j = _build_clouds(m_i, m_j, s_idx, a_idx, n_t, np.random.default_rng(seed))
    return EmpiricalTransitionSet(list(pairs), PointCloud(out_i), PointCloud(out_j))


@functools.lru_cache(maxsize=8)
def _full_enumeration(grid_size):
    n = (grid_size - 2) ** 2
    s = np.repeat(np.arange(n), N_ACTIONS)
    a = np.tile(np.arange(N_ACTIONS), n)
    return s, a


def chirp_exact(m_i: GridMdp, m_j: GridMdp) -> float:
    """W1-MDP over every state-action pair; needs deterministic dynamics."""
    if m_i.slip_prob > 0 or m_j.slip_prob > 0:
        raise ExactnessUnavailableError(
            "exact CHIRP needs slip_prob == 0 in both MDPs; use estimate_chirp"
        )
    if m_i.grid_size != m_j.grid_size:
        raise ConfigError("both MDPs must share a grid")
    s, a = _full_enumeration(m_i.grid_size)
    out_i, out_j = _build_clouds(m_i, m_j, s, a, 1, None)
    return w1_exact(out_i, out_j).cost


def estimate_chirp(m_i: GridMdp, m_j: GridMdp, cfg: SamplingConfig, rng=None) -> float:
    rng = _rng(cfg, rng)
    if cfg.scheme is Scheme.RANDOM:
        flat = _random_flat(m_i, cfg, rng)
    else:
        flat, _ = _reward_shaped_flat(m_i, m_j, cfg, rng)
    out_i, out_j = _build_clouds(m_i, m_j, flat // N_ACTIONS, flat % N_ACTIONS, cfg.n_t, rng)
    return w1_exact(out_i, out_j).cost


# --- distance matrices -------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class DistanceMatrix:
    mdp_ids: list
    entries: np.ndarray
    repeats: int = 1

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        n = len(self.mdp_ids)
        if e.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "mdp_ids", list(self.mdp_ids))

    @property
    def n(self) -> int:
        return len(self.mdp_ids)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(self.mdp_ids)
            for row in self.entries:
                w.writerow([f"{v:.6g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> "DistanceMatrix":
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        return cls(rows[0], np.array(rows[1:], dtype=np.float64))


def pair_seed(base_seed: int, i: int, j: int, repeat: int) -> int:
    """Order-independent seed for the unordered pair {i, j}."""
    lo, hi = min(i, j), max(i, j)
    return int(np.random.SeedSequence([base_seed, lo, hi, repeat]).generate_state(1)[0])


def _matrix_entry(job):
    m_i, m_j, cfg, seeds = job
    if cfg is None:
        return chirp_exact(m_i, m_j)
    return float(np.median([
        estimate_chirp(m_i, m_j, dataclasses.replace(cfg, seed=s)) for s in seeds
    ]))


def distance_matrix(mdps, cfg: Optional[SamplingConfig], repeats: int = 1,
                    mdp_ids=None, workers: int = 1) -> DistanceMatrix:
    """Median-of-``repeats`` CHIRP estimates for every unordered pair.

    ``cfg=None`` uses ``chirp_exact`` (one evaluation per pair).
    """
    mdps = list(mdps)
    n = len(mdps)
    if n < 2:
        raise ValueError("need at least two MDPs")
    if repeats < 1:
        raise ValueError("repeats must be positive")
    pairs = list(itertools.combinations(range(n), 2))
    jobs = []
    for i, j in pairs:
        seeds = None if cfg is None else [pair_seed(cfg.seed, i, j, r) for r in range(repeats)]
        jobs.append((mdps[i], mdps[j], cfg, seeds))
    values = parallel_map(_matrix_entry, jobs, workers)
    entries = np.zeros((n, n))
    for (i, j), v in zip(pairs, values):
        entries[i, j] = entries[j, i] = v
    ids = [str(k) for k in range(n)] if mdp_ids is None else mdp_ids
    return DistanceMatrix(ids, entries, 1 if cfg is None else repeats)
