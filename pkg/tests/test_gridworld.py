import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chirplab.errors import DomainValidationError
from chirplab.gridworld import (Action, Cell, GridMdp, cell_index, dump_variants,
                                enumerate_state_actions, geometry, load_variants, make_variant,
                                manhattan, random_variant, reset_to, reward_scale,
                                sample_next_states, step, tables)

cells = st.tuples(st.integers(1, 18), st.integers(1, 18))


def test_c_scale_start_goal_rule_matches_hand_values():
    m = make_variant((10, 10), (1, 1), scale_scheme="start_goal")
    assert m.c_scale == pytest.approx(1 / 18)
    m = make_variant((2, 1), (1, 1), scale_scheme="start_goal")
    assert m.c_scale == 1.0


def test_c_scale_default_uses_farthest_cell():
    # farthest passable cell from (10, 10) is (1, 1), distance 18
    assert make_variant((10, 10), (1, 1)).c_scale == pytest.approx(1 / 18)
    # from (2, 1) it is (18, 18): 16 + 17
    assert make_variant((2, 1), (1, 1)).c_scale == pytest.approx(1 / 33)


@pytest.mark.parametrize("goal,start", [((0, 5), (1, 1)), ((5, 5), (19, 3)), ((4, 4), (4, 4))])
def test_invalid_variants_rejected(goal, start):
    with pytest.raises(DomainValidationError):
        make_variant(goal, start)


def test_unknown_scale_scheme():
    with pytest.raises(DomainValidationError):
        reward_scale((3, 3), (4, 4), scheme="nope")


def test_wall_blocks_movement():
    m = make_variant((10, 10), (1, 1))
    t = step(m, (1, 1), Action.NORTH, 0)
    assert t.next_state == (1, 1) and not t.terminal
    t = step(m, (1, 1), Action.WEST, 0)
    assert t.next_state == (1, 1)


def test_entering_goal_is_terminal_with_zero_reward():
    m = make_variant((10, 10), (1, 1))
    t = step(m, (9, 10), Action.EAST, 0)
    assert t.terminal and t.reward == 0.0 and t.next_state == (10, 10)


def test_goal_is_absorbing():
    m = make_variant((10, 10), (1, 1))
    for a in Action:
        t = step(m, reset_to(m, m.goal), a, 0)
        assert t.terminal and t.reward == 0.0 and t.next_state == m.goal


def test_reset_to():
    m = make_variant((10, 10), (1, 1))
    assert step(m, reset_to(m, (5, 5)), Action.SOUTH, 0).state == (5, 5)
    with pytest.raises(DomainValidationError):
        reset_to(m, (0, 0))


def test_enumeration():
    m = make_variant((10, 10), (1, 1))
    pairs = enumerate_state_actions(m)
    assert len(pairs) == 1296
    assert pairs[0] == ((1, 1), Action.NORTH)
    assert pairs[1] == ((1, 1), Action.SOUTH)
    assert pairs[4][0] == (2, 1)
    assert all(1 <= c.x <= 18 and 1 <= c.y <= 18 for c, _ in pairs)
    assert len(set(pairs)) == 1296


def test_small_grid_enumeration_length():
    m = make_variant((2, 2), (1, 1), grid_size=6)
    assert len(enumerate_state_actions(m)) == 4 * 4 * 4


def test_cell_index_is_row_major():
    cells = geometry(20).cells
    assert all(cell_index(c, 20) == k for k, c in enumerate(cells))


@settings(max_examples=200, deadline=None)
@given(goal=cells, start=cells, state=cells, action=st.sampled_from(list(Action)),
       seeds=st.tuples(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1)))
def test_step_properties(goal, start, state, action, seeds):
    if goal == start:
        return
    m = make_variant(goal, start)
    t1, t2 = step(m, state, action, seeds[0]), step(m, state, action, seeds[1])
    assert t1 == t2
    assert manhattan(t1.next_state, state) <= 1
    assert -m.c_scale * 2 * 18 <= t1.reward <= 0.0
    assert -1.0 <= t1.reward
    if state != m.goal:
        assert t1.reward == pytest.approx(-m.c_scale * manhattan(t1.next_state, m.goal))
    assert (t1.reward == 0.0) == (t1.next_state == m.goal)


@settings(max_examples=50, deadline=None)
@given(goal=cells, start=cells)
def test_tables_agree_with_step(goal, start):
    if goal == start:
        return
    m = make_variant(goal, start)
    tab = tables(m)
    geo = geometry(20)
    for k, c in enumerate(geo.cells):
        for a in Action:
            t = step(m, c, a, 0)
            assert geo.cells[tab.next_state[k, a]] == t.next_state
            assert tab.state_reward[tab.next_state[k, a]] == t.reward


def test_slip_is_random_and_reproducible():
    m = make_variant((10, 10), (1, 1), slip_prob=1.0)
    rng = np.random.default_rng(0)
    moves = {step(m, (5, 5), Action.NORTH, rng).next_state for _ in range(200)}
    assert moves == {(5, 4), (5, 6), (6, 5), (4, 5)}
    a = sample_next_states(m, np.full(50, 70), np.zeros(50, int), np.random.default_rng(3))
    b = sample_next_states(m, np.full(50, 70), np.zeros(50, int), np.random.default_rng(3))
    assert np.array_equal(a, b)


def test_slip_frequency():
    m = make_variant((10, 10), (1, 1), slip_prob=0.2)
    s = np.full(20000, cell_index((5, 5), 20))
    nxt = sample_next_states(m, s, np.zeros(20000, int), np.random.default_rng(0))
    intended = cell_index((5, 4), 20)
    # slip picks a uniform action, which is the intended one a quarter of the time
    assert np.mean(nxt != intended) == pytest.approx(0.2 * 0.75, abs=0.01)


def test_variant_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    mdps = [random_variant(rng) for _ in range(5)] + [make_variant((3, 4), (5, 6), 0.25)]
    path = tmp_path / "v.json"
    dump_variants(mdps, path)
    data = json.loads(path.read_text())
    assert list(data[0]) == ["goal", "start", "slip"]
    assert load_variants(path) == mdps


def test_gridmdp_validation():
    with pytest.raises(DomainValidationError):
        GridMdp(Cell(3, 3), Cell(4, 4), slip_prob=1.5)
    with pytest.raises(DomainValidationError):
        GridMdp(Cell(3, 3), Cell(4, 4), c_scale=0.0)
    with pytest.raises(DomainValidationError):
        GridMdp(Cell(3, 3), Cell(4, 4), horizon=0)
