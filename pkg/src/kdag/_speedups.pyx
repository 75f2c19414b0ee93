# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the loops in ``_pykernels``; same signatures, same results."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

POLICY_EVEN = 0
POLICY_MPE = 1
POLICY_PE = 2


def topological_order(const cnp.int64_t[::1] ptr, const cnp.int64_t[::1] idx):
    cdef Py_ssize_t n = ptr.shape[0] - 1
    cdef Py_ssize_t v, j, u, head = 0, tail = 0
    cdef cnp.int64_t[::1] indeg = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] kptr = np.zeros(n + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] kfill = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] kids = np.empty(idx.shape[0], dtype=np.int64)
    cdef cnp.int64_t[::1] order = np.empty(n, dtype=np.int64)
    for v in range(n):
        indeg[v] = ptr[v + 1] - ptr[v]
        for j in range(ptr[v], ptr[v + 1]):
            kptr[idx[j] + 1] += 1
    for v in range(n):
        kptr[v + 1] += kptr[v]
    for v in range(n):
        for j in range(ptr[v], ptr[v + 1]):
            u = idx[j]
            kids[kptr[u] + kfill[u]] = v
            kfill[u] += 1
    if n == 0 or indeg[0] != 0:
        return None
    order[0] = 0
    tail = 1
    while head < tail:
        u = order[head]
        head += 1
        for j in range(kptr[u], kptr[u + 1]):
            v = kids[j]
            indeg[v] -= 1
            if indeg[v] == 0:
                order[tail] = v
                tail += 1
    if tail != n:
        return None
    return np.asarray(order)


def path_ranges(const cnp.int64_t[::1] order, const cnp.int64_t[::1] ptr,
                const cnp.int64_t[::1] idx):
    cdef Py_ssize_t n = ptr.shape[0] - 1
    cdef Py_ssize_t t, v, j, p
    cdef cnp.int64_t s, m
    short_arr = np.zeros(n, dtype=np.int64)
    long_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] shortest = short_arr
    cdef cnp.int64_t[::1] longest = long_arr
    for t in range(n):
        v = order[t]
        if ptr[v] == ptr[v + 1]:
            continue
        s = 1 << 30
        m = -1
        for j in range(ptr[v], ptr[v + 1]):
            p = idx[j]
            if shortest[p] < s:
                s = shortest[p]
            if longest[p] > m:
                m = longest[p]
        shortest[v] = s + 1
        longest[v] = m + 1
    return short_arr, long_arr


def dag_loads(const cnp.int64_t[::1] order, const cnp.int64_t[::1] ptr,
              const cnp.int64_t[::1] idx):
    cdef Py_ssize_t n = ptr.shape[0] - 1
    cdef Py_ssize_t t, v, j
    cdef double share
    load_arr = np.ones(n, dtype=np.float64)
    cdef double[::1] load = load_arr
    load[0] = 0.0
    for t in range(n - 1, 0, -1):
        v = order[t]
        share = load[v] / (ptr[v + 1] - ptr[v])
        for j in range(ptr[v], ptr[v + 1]):
            load[idx[j]] += share
    return load_arr


def simulate(const cnp.int64_t[::1] order, const cnp.int64_t[::1] ptr,
             const cnp.int64_t[::1] idx, int policy, double e_rx, double e_tx,
             double rate, double e_init, long period, long max_rounds,
             double tol):
    cdef Py_ssize_t n = ptr.shape[0] - 1
    cdef Py_ssize_t t, v, j, p, lo, hi, arg, worst
    cdef double best, r, out, share, total, w, left, worst_left
    cdef long rounds = 0
    res_arr = np.full(n, e_init, dtype=np.float64)
    cdef double[::1] residual = res_arr
    cdef double[::1] metric = np.zeros(n, dtype=np.float64)
    cdef cnp.int64_t[::1] choice = np.full(n, -1, dtype=np.int64)
    cdef double[::1] inflow = np.zeros(n, dtype=np.float64)
    cdef double[::1] cost = np.zeros(n, dtype=np.float64)
    residual[0] = INFINITY
    while rounds < max_rounds:
        if policy == POLICY_MPE and rounds % period == 0:
            metric[0] = INFINITY
            for t in range(1, n):
                v = order[t]
                best = -1.0
                arg = -1
                for j in range(ptr[v], ptr[v + 1]):
                    p = idx[j]
                    if metric[p] > best:
                        best = metric[p]
                        arg = p
                choice[v] = arg
                r = residual[v]
                metric[v] = r if r < best else best
        for v in range(n):
            inflow[v] = 0.0
        for t in range(n - 1, 0, -1):
            v = order[t]
            out = rate + inflow[v]
            cost[v] = e_rx * inflow[v] + e_tx * out
            lo = ptr[v]
            hi = ptr[v + 1]
            if policy == POLICY_MPE:
                inflow[choice[v]] += out
            elif policy == POLICY_PE:
                total = 0.0
                for j in range(lo, hi):
                    p = idx[j]
                    total += e_init if p == 0 else residual[p]
                if total <= 0.0:
                    share = out / (hi - lo)
                    for j in range(lo, hi):
                        inflow[idx[j]] += share
                else:
                    for j in range(lo, hi):
                        p = idx[j]
                        w = e_init if p == 0 else residual[p]
                        inflow[p] += out * w / total
            else:
                share = out / (hi - lo)
                for j in range(lo, hi):
                    inflow[idx[j]] += share
        worst = -1
        worst_left = 0.0
        for v in range(1, n):
            left = residual[v] - cost[v]
            if left < -tol and (worst < 0 or left < worst_left):
                worst = v
                worst_left = left
        if worst >= 0:
            return rounds, res_arr, worst
        for v in range(1, n):
            left = residual[v] - cost[v]
            residual[v] = left if left > 0.0 else 0.0
        rounds += 1
    return rounds, res_arr, -1
