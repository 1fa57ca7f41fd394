"""k-medoids (PAM) clustering of CHIRP distance matrices."""
from __future__ import annotations

import dataclasses
import itertools
import json

import numpy as np

BRUTEFORCE_MAX_N = 12
_IMPROVE_TOL = 1e-12
DEFAULT_RESTARTS = 10


@dataclasses.dataclass(frozen=True)
class ClusterAssignment:
    medoids: tuple          # sorted MDP indices
    labels: tuple           # labels[m] = medoid index serving MDP m
    cost: float
    history: tuple = ()     # cost at the SWAP start and after each swap

    @property
    def policy_ids(self) -> list:
        """Cluster number (position of the medoid in ``medoids``) per MDP."""
        pos = {m: k for k, m in enumerate(self.medoids)}
        return [pos[lab] for lab in self.labels]

    def to_dict(self, mdp_ids=None) -> dict:
        ids = list(range(len(self.labels))) if mdp_ids is None else list(mdp_ids)
        return {
            "medoids": [ids[m] for m in self.medoids],
            "labels": {str(ids[m]): ids[lab] for m, lab in enumerate(self.labels)},
            "cost": self.cost,
        }

    def save(self, path, mdp_ids=None) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(mdp_ids), f, indent=1)
            f.write("\n")


def _matrix(d):
    d = np.asarray(getattr(d, "entries", d), dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite and non-negative")
    if not np.allclose(d, d.T, rtol=0, atol=1e-12):
        raise ValueError("distance matrix must be symmetric")
    return d


def _assign(d, medoids):
    # argmin over sorted medoids picks the lowest index on ties
    medoids = np.sort(np.asarray(medoids))
    near = medoids[np.argmin(d[:, medoids], axis=1)]
    near[medoids] = medoids
    return near


def _total(d, medoids):
    return float(d[np.arange(len(d)), _assign(d, medoids)].sum())


def _build(d, k):
    n = len(d)
    medoids = [int(np.argmin(d.sum(axis=1)))]
    nearest = d[:, medoids[0]].copy()
    while len(medoids) < k:
        gains = np.array([
            -np.inf if c in medoids else np.maximum(nearest - d[:, c], 0.0).sum()
            for c in range(n)
        ])
        c = int(np.argmax(gains))
        medoids.append(c)
        nearest = np.minimum(nearest, d[:, c])
    return medoids


def _swap(d, medoids):
    """Best-improvement SWAP until no single exchange lowers the cost."""
    n = len(d)
    medoids = list(medoids)
    cost = _total(d, medoids)
    history = [cost]
    while True:
        best = (cost, None, None)
        for pos, m in enumerate(medoids):
            for o in range(n):
                if o in medoids:
                    continue
                trial = medoids[:pos] + [o] + medoids[pos + 1:]
                c = _total(d, trial)
                if c < best[0] - _IMPROVE_TOL:
                    best = (c, pos, o)
        if best[1] is None:
            return medoids, cost, history
        medoids[best[1]] = best[2]
        cost = best[0]
        history.append(cost)


def k_medoids(d, k: int, seed=None, restarts: int = DEFAULT_RESTARTS) -> ClusterAssignment:
    """PAM: greedy BUILD, then best-improvement SWAP until no swap helps.

    SWAP can stall on a plateau where only a double exchange helps, so it
    is also run from ``restarts`` random medoid sets drawn with ``seed``;
    the cheapest result wins, BUILD first on ties.  Ties inside BUILD and
    SWAP go to the lowest index.
    """
    d = _matrix(d)
    n = len(d)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")

    rng = np.random.default_rng(0 if seed is None else seed)
    starts = [_build(d, k)]
    if 1 < k < n:
        starts += [sorted(rng.choice(n, size=k, replace=False).tolist()) for _ in range(restarts)]
    best = None
    for start in starts:
        medoids, cost, history = _swap(d, start)
        if best is None or cost < best[1] - _IMPROVE_TOL:
            best = (medoids, cost, history)

    medoids = sorted(best[0])
    labels = _assign(d, medoids)
    return ClusterAssignment(tuple(medoids), tuple(int(v) for v in labels),
                             within_cluster_cost(d, labels), tuple(best[2]))


def brute_force_medoids(d, k: int) -> ClusterAssignment:
    """Global optimum over all C(n, k) medoid sets (test oracle, n <= 12)."""
    d = _matrix(d)
    n = len(d)
    if n > BRUTEFORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTEFORCE_MAX_N}")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    best_cost, best = np.inf, None
    for combo in itertools.combinations(range(n), k):
        c = _total(d, combo)
        if c < best_cost - _IMPROVE_TOL:
            best_cost, best = c, combo
    labels = _assign(d, best)
    return ClusterAssignment(tuple(best), tuple(int(v) for v in labels), best_cost)


def within_cluster_cost(d, assignment) -> float:
    d = np.asarray(getattr(d, "entries", d), dtype=np.float64)
    labels = np.asarray(getattr(assignment, "labels", assignment))
    if len(labels) != len(d):
        raise ValueError("assignment and matrix sizes differ")
    return float(d[np.arange(len(d)), labels].sum())
