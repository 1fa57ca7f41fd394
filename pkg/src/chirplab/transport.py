"""Exact 1-Wasserstein distance between equal-size uniform point clouds.

For two clouds of n equally weighted points the Kantorovich optimum is
attained by a permutation, so W1 is the optimal-assignment cost.  Clouds
drawn from discrete MDPs repeat points heavily; the solver collapses
duplicates into integer masses and solves the (much smaller) transportation
problem, then expands the flow back into a permutation.
"""
from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from . import _kernels
from .errors import RequestTooLargeError, ShapeError

BRUTEFORCE_MAX_N = 8


@dataclasses.dataclass(frozen=True)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ShapeError("a point cloud needs at least one d-dimensional point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclasses.dataclass(frozen=True)
class TransportPlan:
    assignment: np.ndarray  # source index -> target index
    cost: float


def _as_cloud(x):
    return x if isinstance(x, PointCloud) else PointCloud(x)


def _check_pair(x, y):
    if x.n != y.n:
        raise ShapeError(f"cloud sizes differ ({x.n} vs {y.n})")
    if x.dim != y.dim:
        raise ShapeError(f"cloud dimensions differ ({x.dim} vs {y.dim})")


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def w1_exact(x, y) -> TransportPlan:
    x, y = _as_cloud(x), _as_cloud(y)
    _check_pair(x, y)
    ux, inv_x, cnt_x = np.unique(x.points, axis=0, return_inverse=True, return_counts=True)
    uy, inv_y, cnt_y = np.unique(y.points, axis=0, return_inverse=True, return_counts=True)
    inv_x, inv_y = inv_x.ravel(), inv_y.ravel()
    cost = pairwise_distances(ux, uy)
    flow = _kernels.transport_flow(cost, cnt_x, cnt_y)
    total = float(np.sum(flow * cost)) / x.n

    # hand out members of each source group to target groups in index order
    members_y = [list(np.flatnonzero(inv_y == g)) for g in range(len(uy))]
    assignment = np.empty(x.n, dtype=np.int64)
    for g in range(len(ux)):
        src = np.flatnonzero(inv_x == g)
        pos = 0
        for h in np.flatnonzero(flow[g]):
            f = int(flow[g, h])
            for k in range(f):
                assignment[src[pos + k]] = members_y[h].pop(0)
            pos += f
    return TransportPlan(assignment, total)


def assignment_cost(x, y, assignment) -> float:
    x, y = _as_cloud(x), _as_cloud(y)
    diff = x.points - y.points[np.asarray(assignment)]
    return float(np.mean(np.sqrt(np.einsum("ij,ij->i", diff, diff))))


def w1_bruteforce(x, y) -> float:
    """Minimum mean matched distance over all n! permutations (test oracle)."""
    x, y = _as_cloud(x), _as_cloud(y)
    _check_pair(x, y)
    if x.n > BRUTEFORCE_MAX_N:
        raise RequestTooLargeError(
            f"brute force over {x.n}! = {math.factorial(x.n)} permutations refused"
        )
    d = pairwise_distances(x.points, y.points)
    rows = np.arange(x.n)
    return min(float(d[rows, list(p)].sum()) for p in itertools.permutations(range(x.n))) / x.n


def paired_mean_distance(x, y) -> float:
    """Mean distance under index pairing; an upper bound on W1."""
    x, y = _as_cloud(x), _as_cloud(y)
    if x.n != y.n:
        raise ShapeError(f"cloud sizes differ ({x.n} vs {y.n})")
    return assignment_cost(x, y, np.arange(x.n))
