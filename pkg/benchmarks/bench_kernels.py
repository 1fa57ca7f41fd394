"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends must produce identical results; the script checks that
before reporting timings.
"""
import argparse
import timeit

import numpy as np

from chirplab import _kernels
from chirplab._kernels import _pykernels
from chirplab.chirp import _build_clouds, _full_enumeration
from chirplab.gridworld import make_variant, tables


def transport_case():
    """The deduplicated transport problem behind one chirp_exact call."""
    a, b = make_variant((3, 3), (10, 10)), make_variant((15, 14), (2, 17))
    s, act = _full_enumeration(20)
    x, y = _build_clouds(a, b, s, act, 1, None)
    ux, cx = np.unique(x, axis=0, return_counts=True)
    uy, cy = np.unique(y, axis=0, return_counts=True)
    cost = np.sqrt(((ux[:, None] - uy[None]) ** 2).sum(-1))
    return cost, cx, cy


def q_case(episodes=200):
    m = make_variant((14, 5), (3, 12), slip_prob=0.05)
    tab = tables(m)
    rng = np.random.default_rng(0)
    draws = [(rng.random(100), rng.integers(4, size=100), rng.random(100), rng.integers(4, size=100))
             for _ in range(episodes)]

    def run(kernel):
        q = np.zeros((m.n_cells, 4))
        eps = 1.0
        for d in draws:
            kernel(q, tab.next_state, tab.state_reward, tab.goal, tab.start, m.slip_prob,
                   0.1, 0.95, eps, *d)
            eps = max(0.05, eps * 0.99)
        return q
    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.BACKEND != "cython":
        print("compiled extension not available; only the fallback can be timed")

    cost, cx, cy = transport_case()
    q_run = q_case()
    cases = {
        f"transport_flow ({cost.shape[0]}x{cost.shape[1]} supports)":
            (lambda k: k.transport_flow(cost, cx, cy)),
        "q_episode (200 episodes x 100 steps)": (lambda k: q_run(k.q_episode)),
    }
    backends = {"python": _pykernels}
    if _kernels.BACKEND == "cython":
        backends["cython"] = _kernels

    print(f"{'kernel':45s} {'backend':8s} {'best [ms]':>10s} {'speed-up':>9s}")
    for name, fn in cases.items():
        results = {b: fn(mod) for b, mod in backends.items()}
        ref = results["python"]
        assert all(np.array_equal(r, ref) for r in results.values()), f"{name}: backends disagree"
        base = None
        for b, mod in backends.items():
            best = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
            base = base or best
            print(f"{name:45s} {b:8s} {best:10.2f} {base / best:8.1f}x")


if __name__ == "__main__":
    main()
