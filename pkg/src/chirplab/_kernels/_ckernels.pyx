# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.  Semantics match ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def transport_flow(cost, supply, demand):
    cdef double[:, ::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t m = c.shape[0], n = c.shape[1]
    cdef cnp.int64_t[::1] rem_s = np.array(supply, dtype=np.int64)
    cdef cnp.int64_t[::1] rem_d = np.array(demand, dtype=np.int64)
    out = np.zeros((m, n), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] flow = out
    cdef double[::1] u = np.zeros(m)
    cdef double[::1] v = np.asarray(c).min(axis=0)
    cdef double[::1] drow = np.empty(m)
    cdef double[::1] dcol = np.empty(n)
    cdef char[::1] rdone = np.empty(m, dtype=np.int8)
    cdef char[::1] cdone = np.empty(n, dtype=np.int8)
    cdef Py_ssize_t[::1] pred_col = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] pred_row = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t i, j, jj, sink
    cdef double dist, best
    cdef cnp.int64_t delta
    cdef cnp.int64_t remaining = 0

    for i in range(m):
        remaining += rem_s[i]

    with nogil:
        while remaining > 0:
            for i in range(m):
                drow[i] = INFINITY
                rdone[i] = 0
                pred_row[i] = -1
            for j in range(n):
                dcol[j] = INFINITY
                cdone[j] = 0
                pred_col[j] = -1

            for i in range(m):
                if rem_s[i] > 0:
                    drow[i] = 0.0
                    rdone[i] = 1
            for i in range(m):
                if rem_s[i] > 0:
                    _relax(i, drow, dcol, pred_col, cdone, c, u, v)

            while True:
                jj = -1
                best = INFINITY
                for j in range(n):
                    if not cdone[j] and (jj < 0 or dcol[j] < best):
                        best = dcol[j]
                        jj = j
                dist = best
                cdone[jj] = 1
                if rem_d[jj] > 0:
                    sink = jj
                    break
                for i in range(m):
                    if flow[i, jj] > 0 and not rdone[i]:
                        drow[i] = dist
                        pred_row[i] = jj
                        rdone[i] = 1
                        _relax(i, drow, dcol, pred_col, cdone, c, u, v)

            dist = dcol[sink]
            for i in range(m):
                if rdone[i]:
                    u[i] += dist - drow[i]
            for j in range(n):
                if cdone[j]:
                    v[j] -= dist - dcol[j]

            delta = rem_d[sink]
            j = sink
            while True:
                i = pred_col[j]
                if pred_row[i] < 0:
                    if rem_s[i] < delta:
                        delta = rem_s[i]
                    break
                j = pred_row[i]
                if flow[i, j] < delta:
                    delta = flow[i, j]

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
            remaining -= delta

    return out


cdef inline void _relax(Py_ssize_t i, double[::1] drow, double[::1] dcol,
                        Py_ssize_t[::1] pred_col, char[::1] cdone,
                        double[:, ::1] c, double[::1] u, double[::1] v) noexcept nogil:
    cdef Py_ssize_t j
    cdef double cand
    cdef double base = drow[i]
    cdef double ui = u[i]
    for j in range(c.shape[1]):
        if not cdone[j]:
            cand = base + ((c[i, j] - ui) - v[j])
            if cand < dcol[j]:
                dcol[j] = cand
                pred_col[j] = i


def q_episode(double[:, ::1] q, const cnp.int64_t[:, ::1] next_state,
              const double[::1] state_reward, Py_ssize_t goal, Py_ssize_t start,
              double slip, double alpha, double gamma, double epsilon,
              const double[::1] u_explore, const cnp.int64_t[::1] a_explore,
              const double[::1] u_slip, const cnp.int64_t[::1] a_slip):
    cdef Py_ssize_t horizon = u_explore.shape[0]
    cdef Py_ssize_t s = start, s2, t, a, b, executed
    cdef double ret = 0.0, disc = 1.0, r, target, best
    cdef int success = 0
    cdef Py_ssize_t steps = 0

    with nogil:
        for t in range(horizon):
            if u_explore[t] < epsilon:
                a = a_explore[t]
            else:
                a = 0
                for b in range(1, 4):
                    if q[s, b] > q[s, a]:
                        a = b
            if u_slip[t] < slip:
                executed = a_slip[t]
            else:
                executed = a
            s2 = next_state[s, executed]
            r = state_reward[s2]
            if s2 == goal:
                target = r
            else:
                best = q[s2, 0]
                for b in range(1, 4):
                    if q[s2, b] > best:
                        best = q[s2, b]
                target = r + gamma * best
            q[s, a] = q[s, a] + alpha * (target - q[s, a])
            ret += disc * r
            disc *= gamma
            steps = t + 1
            s = s2
            if s2 == goal:
                success = 1
                break

    return success, ret, steps
