import numpy as np
import pytest

from chirplab import _kernels
from chirplab._kernels import _pykernels
from chirplab.chirp import SamplingConfig, distance_matrix
from chirplab.gridworld import make_variant
from chirplab.lifelong import (LprBandit, QPolicy, ReuseStrategy, RunLog, Scenario,
                               cpr_policy_map, evaluate_success, grouped_scenario,
                               q_learning_episode, run_scenario, wilson_interval)
from chirplab.policy_oracle import optimal_policy, policy_evaluation, value_iteration


def _small(total=300, change_prob=0.1, **kw):
    return grouped_scenario(total_episodes=total, change_prob=change_prob, eval_window=100, **kw)


def test_greedy_on_optimal_q_is_optimal():
    m = make_variant((14, 5), (3, 12))
    _, q = value_iteration(m)
    p = QPolicy(q.copy(), epsilon=0.0, epsilon_floor=0.0)
    _, ok, ret = q_learning_episode(p, m, rng=0)
    assert ok
    assert ret == pytest.approx(policy_evaluation(optimal_policy(m), m).value, abs=1e-9)


def test_q_learning_converges_on_one_task():
    m = make_variant((14, 5), (3, 12))
    rates = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        p = QPolicy.fresh(m.n_cells)
        hits = [q_learning_episode(p, m, rng=rng)[1] for _ in range(2000)]
        rates.append(np.mean(hits[-100:]))
    assert np.mean(rates) >= 0.95


def test_epsilon_decay_and_floor():
    m = make_variant((14, 5), (3, 12))
    p = QPolicy.fresh(m.n_cells, epsilon_decay=0.5, epsilon_floor=0.2)
    q_learning_episode(p, m, rng=0)
    assert p.epsilon == 0.5
    for _ in range(5):
        q_learning_episode(p, m, rng=0)
    assert p.epsilon == 0.2


def test_bandit():
    rng = np.random.default_rng(0)
    assert {LprBandit(2, 1).select(0, rng) for _ in range(20)} == {0}
    b = LprBandit(1, 2, epsilon=0.0, values=[[10.0, 0.0]], counts=[[1, 1]])
    assert {b.select(0, rng) for _ in range(20)} == {0}
    b = LprBandit(1, 2, epsilon=0.0)
    b.update(0, 1, 4.0)
    b.update(0, 1, 2.0)
    assert b.values[0, 1] == 3.0 and b.counts[0, 1] == 2
    arm = b.select_and_update(0, rng, lambda a: 9.0)
    assert arm == 1 and b.greedy_map() == [1]
    with pytest.raises(ValueError):
        LprBandit(2, 2, values=np.zeros((3, 2)))


def test_spare_arm_only_explored():
    rng = np.random.default_rng(1)
    k, eps = 3, 0.1
    values = np.zeros((1, k))
    values[0, 2] = -1e9
    b = LprBandit(1, k, eps, values, np.full((1, k), 1e9))
    picks = np.array([b.select_and_update(0, rng, lambda a: -1.0) for _ in range(20000)])
    assert np.mean(picks == 2) == pytest.approx(eps / k, rel=0.15)


def test_task_switching_extremes():
    log = run_scenario(_small(change_prob=0.0), ReuseStrategy.single(), 0)
    assert len(set(log.task_id.tolist())) == 1
    log = run_scenario(_small(change_prob=1.0), ReuseStrategy.single(), 0)
    assert np.all(np.diff(log.task_id) != 0)
    assert np.array_equal(log.episode, np.arange(300))


def test_policy_ids_in_range_and_cpr_fixed():
    sc = _small(600)
    mapping = [0, 0, 0, 1, 1, 1, 2, 2, 2]
    log = run_scenario(sc, ReuseStrategy.cpr(mapping), 3)
    assert all(log.policy_id[e] == mapping[t] for e, t in enumerate(log.task_id))
    log = run_scenario(sc, ReuseStrategy.lpr(3), 3)
    assert log.policy_id.min() >= 0 and log.policy_id.max() < 3


def test_determinism_and_backends(monkeypatch):
    sc = _small(400, slips=(0.0, 0.1, 0.3))
    st = ReuseStrategy.lpr(3)
    a, b = run_scenario(sc, st, 5), run_scenario(sc, st, 5)
    for f in ("task_id", "policy_id", "success", "returns"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    monkeypatch.setattr(_kernels, "q_episode", _pykernels.q_episode)
    c = run_scenario(sc, st, 5)
    assert np.array_equal(a.returns, c.returns) and np.array_equal(a.policy_id, c.policy_id)


def test_strategy_validation():
    with pytest.raises(ValueError):
        ReuseStrategy("cpr", 2)
    with pytest.raises(ValueError):
        ReuseStrategy("cpr", 2, (0, 2))
    with pytest.raises(ValueError):
        ReuseStrategy("single", 2)
    with pytest.raises(ValueError):
        run_scenario(_small(), ReuseStrategy.cpr([0, 1]), 0)
    with pytest.raises(ValueError):
        run_scenario(Scenario(_small().tasks[:2], total_episodes=5), ReuseStrategy.lpr(3), 0)


def test_cpr_map_on_grouped_scenario():
    sc = grouped_scenario()
    d = distance_matrix(sc.tasks, SamplingConfig(n_s=50, seed=0), repeats=3)
    m = cpr_policy_map(d, 3, 0)
    assert len(set(m[0:3])) == len(set(m[3:6])) == len(set(m[6:9])) == 1
    assert len({m[0], m[3], m[6]}) == 3
    assert cpr_policy_map(d, 1, 0) == [0] * 9
    assert sorted(cpr_policy_map(d, 9, 0)) == list(range(9))


def test_wilson():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and hi == pytest.approx(0.27753, abs=1e-4)
    lo, hi = wilson_interval(10, 10)
    assert hi == 1.0 and lo == pytest.approx(0.72247, abs=1e-4)
    for s, n in [(3, 7), (50, 100), (1, 1000)]:
        lo, hi = wilson_interval(s, n)
        assert 0 <= lo <= s / n <= hi <= 1
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_evaluate_success(tmp_path):
    log = run_scenario(_small(), ReuseStrategy.single(), 1)
    full = evaluate_success(log, len(log))
    assert full["overall"]["rate"] == pytest.approx(log.success.mean())
    rep = evaluate_success(log, 100)
    assert sum(v["n"] for v in rep["per_task"].values()) == 100
    with pytest.raises(ValueError):
        evaluate_success(log, 0)
    with pytest.raises(ValueError):
        evaluate_success(log, 301)
    log.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "episode,task_id,policy_id,success,return"
    back = RunLog.from_csv(tmp_path / "r.csv")
    assert np.array_equal(back.returns, log.returns) and np.array_equal(back.success, log.success)


def test_scenario_round_trip(tmp_path):
    sc = _small()
    sc.save(tmp_path / "s.json")
    assert Scenario.load(tmp_path / "s.json") == sc
    with pytest.raises(ValueError):
        Scenario(sc.tasks[:1])
    with pytest.raises(ValueError):
        Scenario(sc.tasks, change_prob=1.5)
