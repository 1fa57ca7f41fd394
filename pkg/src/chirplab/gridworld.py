"""SimpleGrid: a walled square grid where the agent walks to a goal cell.

The outer ring of cells is wall; the agent moves in the four cardinal
directions and is rewarded with the negative scaled Manhattan distance
between its new position and the goal.  Entering the goal ends the episode.
"""
from __future__ import annotations

import dataclasses
import enum
import functools
import json
from typing import NamedTuple

import numpy as np

from .errors import DomainValidationError

DEFAULT_GRID_SIZE = 20
DEFAULT_DISCOUNT = 0.95
DEFAULT_HORIZON = 100


class Cell(NamedTuple):
    x: int
    y: int


class Action(enum.IntEnum):
    NORTH = 0
    SOUTH = 1
    EAST = 2
    WEST = 3


# North points at row 0.
_MOVES = {
    Action.NORTH: (0, -1),
    Action.SOUTH: (0, 1),
    Action.EAST: (1, 0),
    Action.WEST: (-1, 0),
}
N_ACTIONS = len(Action)


class Transition(NamedTuple):
    state: Cell
    action: Action
    next_state: Cell
    reward: float
    terminal: bool


def manhattan(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def is_passable(cell, grid_size: int = DEFAULT_GRID_SIZE) -> bool:
    x, y = cell
    return 1 <= x <= grid_size - 2 and 1 <= y <= grid_size - 2


def _check_passable(cell, grid_size, what):
    if not is_passable(cell, grid_size):
        raise DomainValidationError(
            f"{what} {tuple(cell)} is a wall cell of the {grid_size}x{grid_size} grid"
        )


def reward_scale(goal, start, grid_size=DEFAULT_GRID_SIZE, scheme="goal") -> float:
    """Reward scaling constant C.

    ``"goal"`` (default) divides by the largest distance from the goal to any
    passable cell, so every reward lies in [-1, 0].  ``"start_goal"`` divides
    by the start-goal distance, making the first step's reward about -1.
    """
    if scheme == "goal":
        lo, hi = 1, grid_size - 2
        far = max(goal[0] - lo, hi - goal[0]) + max(goal[1] - lo, hi - goal[1])
        return 1.0 / max(1, far)
    if scheme == "start_goal":
        return 1.0 / max(1, manhattan(start, goal))
    raise DomainValidationError(f"unknown reward scale scheme {scheme!r}")


@dataclasses.dataclass(frozen=True)
class GridMdp:
    goal: Cell
    start: Cell
    grid_size: int = DEFAULT_GRID_SIZE
    slip_prob: float = 0.0
    c_scale: float = 1.0
    discount: float = DEFAULT_DISCOUNT
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        object.__setattr__(self, "goal", Cell(*self.goal))
        object.__setattr__(self, "start", Cell(*self.start))
        _check_passable(self.goal, self.grid_size, "goal")
        _check_passable(self.start, self.grid_size, "start")
        if self.goal == self.start:
            raise DomainValidationError("start and goal must differ")
        if not 0.0 <= self.slip_prob <= 1.0:
            raise DomainValidationError(f"slip_prob {self.slip_prob} not in [0, 1]")
        if not self.c_scale > 0:
            raise DomainValidationError("c_scale must be positive")
        if not 0.0 <= self.discount <= 1.0:
            raise DomainValidationError(f"discount {self.discount} not in [0, 1]")
        if self.horizon < 1:
            raise DomainValidationError("horizon must be positive")

    @property
    def n_cells(self) -> int:
        return (self.grid_size - 2) ** 2

    def to_dict(self) -> dict:
        return {"goal": list(self.goal), "start": list(self.start), "slip": self.slip_prob}


def make_variant(goal, start, slip_prob=0.0, *, grid_size=DEFAULT_GRID_SIZE,
                 discount=DEFAULT_DISCOUNT, horizon=DEFAULT_HORIZON,
                 scale_scheme="goal") -> GridMdp:
    goal, start = Cell(*goal), Cell(*start)
    _check_passable(goal, grid_size, "goal")
    return GridMdp(
        goal=goal,
        start=start,
        grid_size=grid_size,
        slip_prob=float(slip_prob),
        c_scale=reward_scale(goal, start, grid_size, scale_scheme),
        discount=discount,
        horizon=horizon,
    )


# --- geometry and tabular views ---------------------------------------------

class Geometry(NamedTuple):
    cells: tuple          # passable cells, row-major
    coords: np.ndarray    # (n_cells, 2) int
    moves: np.ndarray     # (n_cells, 4) next-cell index, walls block


@functools.lru_cache(maxsize=None)
def geometry(grid_size: int = DEFAULT_GRID_SIZE) -> Geometry:
    inner = range(1, grid_size - 1)
    cells = tuple(Cell(x, y) for y in inner for x in inner)
    width = grid_size - 2
    moves = np.empty((len(cells), N_ACTIONS), dtype=np.int64)
    for k, (x, y) in enumerate(cells):
        for a, (dx, dy) in _MOVES.items():
            nx, ny = x + dx, y + dy
            if not is_passable((nx, ny), grid_size):
                nx, ny = x, y
            moves[k, a] = (ny - 1) * width + (nx - 1)
    coords = np.array(cells, dtype=np.int64)
    coords.setflags(write=False)
    moves.setflags(write=False)
    return Geometry(cells, coords, moves)


def cell_index(cell, grid_size: int = DEFAULT_GRID_SIZE) -> int:
    return (cell[1] - 1) * (grid_size - 2) + (cell[0] - 1)


class Tables(NamedTuple):
    next_state: np.ndarray    # (n_cells, 4); the goal row is absorbing
    state_reward: np.ndarray  # (n_cells,) reward for entering each cell
    goal: int
    start: int


@functools.lru_cache(maxsize=4096)
def tables(mdp: GridMdp) -> Tables:
    geo = geometry(mdp.grid_size)
    g = cell_index(mdp.goal, mdp.grid_size)
    nxt = geo.moves.copy()
    nxt[g, :] = g
    dist = np.abs(geo.coords - np.asarray(mdp.goal)).sum(axis=1)
    rew = 0.0 - mdp.c_scale * dist  # no negative zero at the goal
    nxt.setflags(write=False)
    rew.setflags(write=False)
    return Tables(nxt, rew, g, cell_index(mdp.start, mdp.grid_size))


def expected_q_backup(mdp: GridMdp, values: np.ndarray) -> np.ndarray:
    """Q[s, a] = E[r + discount * V(s')] under the slip dynamics.

    The goal row is zero: the goal is absorbing and yields no reward.
    """
    tab = tables(mdp)
    w = tab.state_reward[tab.next_state] + mdp.discount * values[tab.next_state]
    if mdp.slip_prob > 0:
        w = (1.0 - mdp.slip_prob) * w + mdp.slip_prob * w.mean(axis=1, keepdims=True)
    w[tab.goal] = 0.0
    return w


# --- environment interface ---------------------------------------------------

def reset_to(mdp: GridMdp, state) -> Cell:
    state = Cell(*state)
    _check_passable(state, mdp.grid_size, "state")
    return state


def step(mdp: GridMdp, state, action, rng=None) -> Transition:
    """Execute ``action`` from ``state``.  ``rng`` is a seed or Generator."""
    state = reset_to(mdp, state)
    action = Action(action)
    if state == mdp.goal:
        return Transition(state, action, state, 0.0, True)
    executed = action
    if mdp.slip_prob > 0:
        rng = np.random.default_rng(rng)
        if rng.random() < mdp.slip_prob:
            executed = Action(int(rng.integers(N_ACTIONS)))
    dx, dy = _MOVES[executed]
    nxt = Cell(state.x + dx, state.y + dy)
    if not is_passable(nxt, mdp.grid_size):
        nxt = state
    reward = 0.0 - mdp.c_scale * manhattan(nxt, mdp.goal)
    return Transition(state, action, nxt, reward, nxt == mdp.goal)


def sample_next_states(mdp: GridMdp, state_idx, action_idx, rng) -> np.ndarray:
    """Vectorised ``step`` over index arrays; returns next-cell indices."""
    tab = tables(mdp)
    state_idx = np.asarray(state_idx, dtype=np.int64)
    executed = np.asarray(action_idx, dtype=np.int64)
    if mdp.slip_prob > 0:
        slipped = rng.random(state_idx.shape) < mdp.slip_prob
        random_actions = rng.integers(N_ACTIONS, size=state_idx.shape)
        executed = np.where(slipped, random_actions, executed)
    return tab.next_state[state_idx, executed]


def enumerate_state_actions(mdp: GridMdp) -> list:
    cells = geometry(mdp.grid_size).cells
    return [(c, a) for c in cells for a in Action]


def encode_outcomes(mdp: GridMdp, next_idx) -> np.ndarray:
    """Outcome vectors (x', y', goal_x, goal_y, r), positions over grid_size - 1."""
    tab = tables(mdp)
    geo = geometry(mdp.grid_size)
    next_idx = np.asarray(next_idx, dtype=np.int64)
    scale = mdp.grid_size - 1
    out = np.empty((len(next_idx), 5))
    out[:, 0:2] = geo.coords[next_idx] / scale
    out[:, 2] = mdp.goal.x / scale
    out[:, 3] = mdp.goal.y / scale
    out[:, 4] = tab.state_reward[next_idx]
    return out


# --- variant files -------------------------------------------------------------

def variants_from_json(data, **kwargs) -> list:
    return [make_variant(d["goal"], d["start"], d.get("slip", 0.0), **kwargs) for d in data]


def load_variants(path, **kwargs) -> list:
    with open(path) as f:
        return variants_from_json(json.load(f), **kwargs)


def dump_variants(mdps, path) -> None:
    with open(path, "w") as f:
        json.dump([m.to_dict() for m in mdps], f, indent=1)
        f.write("\n")


def random_variant(rng, grid_size=DEFAULT_GRID_SIZE, slip_prob=0.0, **kwargs) -> GridMdp:
    cells = geometry(grid_size).cells
    g, s = rng.choice(len(cells), size=2, replace=False)
    return make_variant(cells[g], cells[s], slip_prob, grid_size=grid_size, **kwargs)
