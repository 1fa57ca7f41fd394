"""Reference implementations of the hot kernels (numpy / pure Python).

Both kernels mirror ``_ckernels.pyx`` operation for operation so the two
backends agree bit-for-bit.
"""
import numpy as np


def transport_flow(cost, supply, demand):
    """Exact integer transportation plan by successive shortest paths.

    ``cost`` is an (m, n) float array; ``supply`` (m,) and ``demand`` (n,)
    are positive integer masses with equal totals.  Returns an (m, n)
    int64 flow matrix of minimum total cost.

    Dual potentials ``u`` (rows) and ``v`` (columns) keep every reduced
    cost ``cost - u - v`` non-negative and zero on arcs carrying flow, so
    each augmentation is a dense Dijkstra over the residual bipartite graph.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    m, n = cost.shape
    rem_s = np.array(supply, dtype=np.int64)
    rem_d = np.array(demand, dtype=np.int64)
    flow = np.zeros((m, n), dtype=np.int64)
    u = np.zeros(m)
    v = cost.min(axis=0)
    remaining = int(rem_s.sum())

    while remaining > 0:
        drow = np.full(m, np.inf)
        dcol = np.full(n, np.inf)
        rdone = np.zeros(m, dtype=bool)
        cdone = np.zeros(n, dtype=bool)
        pred_col = np.full(n, -1, dtype=np.int64)
        pred_row = np.full(m, -1, dtype=np.int64)

        sources = np.flatnonzero(rem_s > 0)
        drow[sources] = 0.0
        rdone[sources] = True
        for i in sources:
            _relax(i, drow, dcol, pred_col, cdone, cost, u, v)

        while True:
            open_cols = np.flatnonzero(~cdone)
            j = int(open_cols[np.argmin(dcol[open_cols])])
            dist = dcol[j]
            cdone[j] = True
            if rem_d[j] > 0:
                sink = j
                break
            for i in np.flatnonzero((flow[:, j] > 0) & ~rdone):
                drow[i] = dist
                pred_row[i] = j
                rdone[i] = True
                _relax(i, drow, dcol, pred_col, cdone, cost, u, v)

        dist = dcol[sink]
        u[rdone] += dist - drow[rdone]
        v[cdone] -= dist - dcol[cdone]

        # bottleneck along the path, walked back from the sink
        delta = rem_d[sink]
        j = sink
        while True:
            i = pred_col[j]
            if pred_row[i] < 0:
                delta = min(delta, rem_s[i])
                break
            j = pred_row[i]
            delta = min(delta, flow[i, j])

        j = sink
        while True:
            i = pred_col[j]
            flow[i, j] += delta
            if pred_row[i] < 0:
                rem_s[i] -= delta
                break
            j = pred_row[i]
            flow[i, j] -= delta
        rem_d[sink] -= delta
        remaining -= int(delta)

    return flow


def _relax(i, drow, dcol, pred_col, cdone, cost, u, v):
    cand = drow[i] + (cost[i] - u[i] - v)
    better = (cand < dcol) & ~cdone
    dcol[better] = cand[better]
    pred_col[better] = i


def q_episode(q, next_state, state_reward, goal, start, slip, alpha, gamma,
              epsilon, u_explore, a_explore, u_slip, a_slip):
    """One epsilon-greedy Q-learning episode; updates ``q`` in place.

    Randomness is supplied as pre-drawn per-step arrays (length = horizon)
    so that both backends consume an identical stream.
    Returns ``(success, discounted_return, steps)``.
    """
    table = q.tolist()
    nxt = next_state.tolist()
    rew = state_reward.tolist()
    horizon = len(u_explore)
    ue, ae = u_explore.tolist(), a_explore.tolist()
    us, asl = u_slip.tolist(), a_slip.tolist()

    s = start
    ret = 0.0
    disc = 1.0
    success = 0
    steps = 0
    for t in range(horizon):
        row = table[s]
        if ue[t] < epsilon:
            a = ae[t]
        else:
            a = 0
            for b in range(1, 4):
                if row[b] > row[a]:
                    a = b
        executed = asl[t] if us[t] < slip else a
        s2 = nxt[s][executed]
        r = rew[s2]
        if s2 == goal:
            target = r
        else:
            nrow = table[s2]
            best = nrow[0]
            for b in range(1, 4):
                if nrow[b] > best:
                    best = nrow[b]
            target = r + gamma * best
        row[a] = row[a] + alpha * (target - row[a])
        ret += disc * r
        disc *= gamma
        steps = t + 1
        s = s2
        if s2 == goal:
            success = 1
            break

    q[:] = table
    return success, ret, steps
