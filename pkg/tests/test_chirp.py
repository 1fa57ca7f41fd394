import dataclasses

import numpy as np
import pytest
from scipy.stats import spearmanr

from chirplab import chirp
from chirplab.chirp import (DistanceMatrix, MCCEConfig, SamplingConfig, Scheme, build_empirical,
                            chirp_exact, distance_matrix, estimate_chirp, pair_seed,
                            sample_random, sample_reward_shaped)
from chirplab.errors import ConfigError, ExactnessUnavailableError, RequestTooLargeError
from chirplab.gridworld import enumerate_state_actions, make_variant, random_variant, step

A = make_variant((3, 3), (10, 10))
B = make_variant((15, 14), (2, 17))
RS = SamplingConfig(Scheme.REWARD_SHAPED, n_s=15, seed=0)


def test_config_validation():
    with pytest.raises(ConfigError):
        SamplingConfig(Scheme.RANDOM, mcce=MCCEConfig())
    with pytest.raises(ConfigError):
        MCCEConfig(elite_fraction=0.5, population=1)
    with pytest.raises(ConfigError):
        SamplingConfig(n_s=0)
    assert RS.mcce == MCCEConfig()
    assert SamplingConfig().mcce is None


def test_sample_random():
    cfg = SamplingConfig(n_s=15, seed=4)
    pairs = sample_random(A, B, cfg)
    assert len(pairs) == len(set(pairs)) == 15
    assert pairs == sample_random(A, B, cfg)
    full = sample_random(A, B, dataclasses.replace(cfg, n_s=1296))
    assert set(full) == set(enumerate_state_actions(A))
    with pytest.raises(RequestTooLargeError):
        sample_random(A, B, dataclasses.replace(cfg, n_s=1297))
    with pytest.raises(ConfigError):
        sample_random(A, B, RS)


def test_sample_reward_shaped_tracks_targets():
    cfg = dataclasses.replace(RS, n_s=50)
    pairs, targets = sample_reward_shaped(A, B, cfg, return_targets=True)
    realised = [0.5 * (step(A, c, a, 0).reward + step(B, c, a, 0).reward) for c, a in pairs]
    assert spearmanr(realised, targets).statistic > 0.8
    assert pairs == sample_reward_shaped(A, B, cfg)
    with pytest.raises(ConfigError):
        sample_reward_shaped(A, B, SamplingConfig())


def test_build_empirical():
    pairs = sample_random(A, B, SamplingConfig(n_s=15, seed=1))
    e = build_empirical(A, B, pairs, n_t=3)
    assert e.outcomes_i.n == e.outcomes_j.n == 45
    pts = e.outcomes_i.points.reshape(15, 3, 5)
    assert np.all(pts == pts[:, :1, :])
    same = build_empirical(A, A, pairs)
    assert np.array_equal(same.outcomes_i.points, same.outcomes_j.points)
    assert build_empirical(A, B, pairs).outcomes_i.n == 15
    # encoding: normalised next cell, goal, reward
    c, a = pairs[0]
    t = step(A, c, a, 0)
    assert np.allclose(e.outcomes_i.points[0],
                       [t.next_state.x / 19, t.next_state.y / 19, 3 / 19, 3 / 19, t.reward])


def test_exact_properties():
    assert chirp_exact(A, A) == 0.0
    assert abs(chirp_exact(A, B) - chirp_exact(B, A)) <= 1e-9
    near = chirp_exact(make_variant((9, 9), (3, 15)), make_variant((10, 9), (3, 15)))
    far = chirp_exact(make_variant((1, 1), (3, 15)), make_variant((18, 18), (3, 15)))
    assert near < far
    with pytest.raises(ExactnessUnavailableError):
        chirp_exact(A, make_variant((3, 3), (10, 10), 0.1))


def test_full_enumeration_estimate_is_exact():
    cfg = SamplingConfig(n_s=1296, seed=3)
    assert abs(estimate_chirp(A, B, cfg) - chirp_exact(A, B)) <= 1e-12


def test_estimates_deterministic_and_symmetric():
    for cfg in (SamplingConfig(n_s=15, seed=7), RS):
        assert estimate_chirp(A, B, cfg) == estimate_chirp(A, B, cfg)
        assert estimate_chirp(A, B, cfg) == pytest.approx(estimate_chirp(B, A, cfg), abs=1e-12)
        assert estimate_chirp(A, B, cfg) >= 0.0


def test_slip_estimates_run():
    s1, s2 = make_variant((3, 3), (10, 10), 0.2), make_variant((4, 3), (10, 10), 0.1)
    v = estimate_chirp(s1, s2, SamplingConfig(n_s=40, n_t=5, seed=0))
    assert v > 0.0


@pytest.mark.slow
def test_error_shrinks_with_n_s():
    rng = np.random.default_rng(0)
    pairs = [(random_variant(rng), random_variant(rng)) for _ in range(50)]
    exact = np.array([chirp_exact(a, b) for a, b in pairs])
    medians = []
    for n_s in (15, 100, 648, 1296):
        est = np.array([estimate_chirp(a, b, SamplingConfig(n_s=n_s, seed=pair_seed(0, 2 * k, 2 * k + 1, 0)))
                        for k, (a, b) in enumerate(pairs)])
        medians.append(float(np.median(np.abs(est - exact))))
    assert all(x > y for x, y in zip(medians, medians[1:]))
    assert medians[-1] <= 1e-12


def test_pair_seed_symmetric():
    assert pair_seed(0, 2, 5, 1) == pair_seed(0, 5, 2, 1)
    assert pair_seed(0, 2, 5, 1) != pair_seed(0, 2, 5, 2)


def test_distance_matrix(tmp_path):
    mdps = [make_variant(g, (9, 9)) for g in [(2, 2), (3, 2), (16, 16), (17, 16)]]
    d = distance_matrix(mdps, SamplingConfig(n_s=30, seed=1), repeats=3)
    e = d.entries
    assert np.array_equal(e, e.T) and np.all(np.diag(e) == 0) and np.all(e >= 0)
    assert e[0, 1] < e[0, 2]
    path = tmp_path / "m.csv"
    d.to_csv(path)
    back = DistanceMatrix.from_csv(path)
    assert back.mdp_ids == ["0", "1", "2", "3"]
    assert np.allclose(back.entries, e, rtol=1e-5)
    # median over seeds computed in parallel matches the serial result
    assert np.array_equal(distance_matrix(mdps, SamplingConfig(n_s=30, seed=1), 3, workers=2).entries, e)


def test_exact_matrix_repeats_irrelevant():
    mdps = [make_variant(g, (9, 9)) for g in [(2, 2), (3, 2), (16, 16)]]
    full = SamplingConfig(n_s=1296)
    assert np.array_equal(distance_matrix(mdps, full, 1).entries, distance_matrix(mdps, full, 5).entries)
    assert np.allclose(distance_matrix(mdps, None).entries, distance_matrix(mdps, full).entries, atol=1e-12)


def test_ten_mdps_give_45_entries(monkeypatch):
    calls = []
    real = chirp._matrix_entry
    monkeypatch.setattr(chirp, "_matrix_entry", lambda job: calls.append(1) or real(job))
    mdps = [random_variant(np.random.default_rng(k)) for k in range(10)]
    distance_matrix(mdps, SamplingConfig(n_s=5))
    assert len(calls) == 45
