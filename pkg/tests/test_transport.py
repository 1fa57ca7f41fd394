import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linear_sum_assignment

from chirplab.errors import RequestTooLargeError, ShapeError
from chirplab.transport import (PointCloud, assignment_cost, pairwise_distances,
                                paired_mean_distance, w1_bruteforce, w1_exact)


def _lsa_cost(x, y):
    d = pairwise_distances(np.atleast_2d(x), np.atleast_2d(y))
    r, c = linear_sum_assignment(d)
    return d[r, c].sum() / len(x)


def test_one_dimensional_known_value():
    # sorted matching is optimal in 1-D: |0-1| + |2-3| = 2, mean 1
    assert w1_exact([0.0, 2.0], [3.0, 1.0]).cost == pytest.approx(1.0, abs=1e-12)


def test_identical_clouds_zero():
    x = np.random.default_rng(0).random((20, 3))
    assert w1_exact(x, x).cost == 0.0
    assert w1_exact(x, x[::-1]).cost == 0.0


def test_translation():
    x = np.random.default_rng(1).random((10, 2))
    assert w1_exact(x, x + [3.0, 4.0]).cost == pytest.approx(5.0, abs=1e-12)


def test_assignment_is_a_permutation_achieving_cost():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        x = rng.integers(0, 3, size=(n, 2)).astype(float)
        y = rng.integers(0, 3, size=(n, 2)).astype(float)
        plan = w1_exact(x, y)
        assert sorted(plan.assignment.tolist()) == list(range(n))
        assert assignment_cost(x, y, plan.assignment) == pytest.approx(plan.cost, abs=1e-12)


def test_matches_scipy_on_larger_clouds_with_duplicates():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(5, 120))
        x = rng.integers(0, 5, size=(n, 3)) / 4.0
        y = rng.integers(0, 5, size=(n, 3)) / 4.0
        assert w1_exact(x, y).cost == pytest.approx(_lsa_cost(x, y), abs=1e-12)


def test_paired_mean_is_upper_bound():
    rng = np.random.default_rng(4)
    x, y = rng.random((30, 4)), rng.random((30, 4))
    assert w1_exact(x, y).cost <= paired_mean_distance(x, y) + 1e-12


def test_errors():
    with pytest.raises(ShapeError):
        w1_exact(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(ShapeError):
        w1_exact(np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(ShapeError):
        PointCloud(np.zeros((0, 2)))
    with pytest.raises(RequestTooLargeError):
        w1_bruteforce(np.zeros((9, 1)), np.zeros((9, 1)))


def _clouds(max_n=6, max_d=5):
    return st.integers(1, max_n).flatmap(lambda n: st.integers(1, max_d).flatmap(
        lambda d: st.tuples(*[arrays(np.float64, (n, d), elements=st.floats(-10, 10, width=32))
                              for _ in range(3)])))


@settings(max_examples=150, deadline=None)
@given(_clouds())
def test_metric_axioms_and_bruteforce(clouds):
    x, y, z = clouds
    xy = w1_exact(x, y).cost
    assert xy == pytest.approx(w1_bruteforce(x, y), abs=1e-12)
    assert abs(xy - w1_exact(y, x).cost) <= 1e-9
    assert w1_exact(x, x).cost <= 1e-9
    assert xy <= w1_exact(x, z).cost + w1_exact(z, y).cost + 1e-9
    assert xy >= 0.0


@pytest.mark.slow
def test_full_size_instance_matches_scipy():
    rng = np.random.default_rng(5)
    x = rng.integers(0, 19, size=(1296, 2)) / 19.0
    y = rng.integers(0, 19, size=(1296, 2)) / 19.0
    assert w1_exact(x, y).cost == pytest.approx(_lsa_cost(x, y), abs=1e-12)
