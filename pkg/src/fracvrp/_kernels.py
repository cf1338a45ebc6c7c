"""Numba kernels for the hot dynamic-programming loops.

The label tables are dense float arrays indexed by (vertex, time, memory-set)
with the memory set encoded as a bit mask over the vertex's neighbour list
(the vertex itself is implied and carries no bit).  All kernels fall back to
plain Python when numba is unavailable; fine for the unit-test instances,
far too slow for the benchmark files.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


INF = np.inf


@njit(cache=True)
def build_projections(neigh, n_mem, pos_in, m_width):
    """proj[i, j, ng] = memory mask at j induced by memory ng at i.

    Bits of ng index neigh[i]; the result indexes neigh[j] and excludes j's
    own (implied) bit.
    """
    nv = neigh.shape[0]
    proj = np.zeros((nv, nv, m_width), dtype=np.int16)
    for i in range(1, nv):
        ki = n_mem[i]
        for j in range(1, nv):
            if j == i:
                continue
            # bit b of i's mask maps to bit pos_in[j, member] of j's mask;
            # i itself is implicit in i's mask and must be carried over too.
            bitmap = np.full(ki, -1, dtype=np.int16)
            for b in range(ki):
                member = neigh[i, b]
                p = pos_in[j, member]
                bitmap[b] = p
            self_bit = 0
            pi = pos_in[j, i]
            if pi >= 0:
                self_bit = 1 << pi
            for ng in range(1 << ki):
                out = self_bit
                rem = ng
                while rem:
                    b = _ffs(rem)
                    rem &= rem - 1
                    p = bitmap[b]
                    if p >= 0:
                        out |= 1 << p
                proj[i, j, ng] = out
    return proj


@njit(cache=True, inline="always")
def _ffs(x):
    b = 0
    while not (x >> b) & 1:
        b += 1
    return b


@njit(cache=True)
def discover_states(neigh, n_mem, pos_in, proj, tt, s, T, m_width):
    """Mark every (i, t, ng) state reachable from the depot; returns the mask."""
    nv = neigh.shape[0]
    reach = np.zeros((nv, T + 1, m_width), dtype=np.bool_)
    for j in range(1, nv):
        t0 = tt[0, j] + s[j]
        if t0 <= T:
            reach[j, t0, 0] = True
    for t in range(T + 1):
        for i in range(1, nv):
            for ng in range(1 << n_mem[i]):
                if not reach[i, t, ng]:
                    continue
                for j in range(1, nv):
                    if j == i:
                        continue
                    p = pos_in[i, j]
                    if p >= 0 and (ng >> p) & 1:
                        continue
                    tj = t + tt[i, j] + s[j]
                    if tj > T:
                        continue
                    reach[j, tj, proj[i, j, ng]] = True
    return reach


@njit(cache=True)
def relax_states(order, f, pred_v, pred_ng, cost, tt, s, pos_in, proj, T, m_width, nv):
    """One forward pass over the reachable states in time order.

    ``order`` lists flat state indices (i*(T+1)+t)*m_width+ng sorted by t.
    Ties in cost keep the lexicographically smallest (pred vertex, pred mask).
    """
    flat_f = f.reshape(-1)
    flat_pv = pred_v.reshape(-1)
    flat_png = pred_ng.reshape(-1)
    span = (T + 1) * m_width
    for idx in order:
        base = flat_f[idx]
        if base == INF:
            continue
        ng = idx % m_width
        rest = idx // m_width
        t = rest % (T + 1)
        i = rest // (T + 1)
        for j in range(1, nv):
            if j == i:
                continue
            p = pos_in[i, j]
            if p >= 0 and (ng >> p) & 1:
                continue
            tj = t + tt[i, j] + s[j]
            if tj > T:
                continue
            c = base + cost[i, j]
            didx = j * span + tj * m_width + proj[i, j, ng]
            fd = flat_f[didx]
            if c < fd:
                flat_f[didx] = c
                flat_pv[didx] = i
                flat_png[didx] = ng
            elif c == fd and fd != INF:
                if i < flat_pv[didx] or (i == flat_pv[didx] and ng < flat_png[didx]):
                    flat_pv[didx] = i
                    flat_png[didx] = ng
    return f


@njit(cache=True)
def g_recursion(phi, n, m, T, TT, t_floor):
    """Vehicle-count/total-time DP over per-customer route-cost floors.

    g[i, t, k]: best sum of k floors from customers 1..i with times adding
    to t.  Level windows follow the bounding procedure (widest vertex range).
    """
    g = np.full((n + 1, TT + 1, m + 1), INF)
    g[:, 0, 0] = 0.0
    for i in range(1, n + 1):
        for k in range(1, min(i, m) + 1):
            lo = max(1, t_floor - (m - k) * T)
            hi = min(k * T, TT)
            for t in range(lo, hi + 1):
                best = g[i - 1, t, k]
                tmax = min(t, T)
                for tp in range(1, tmax + 1):
                    ph = phi[i, tp]
                    if ph == INF:
                        continue
                    prev = g[i - 1, t - tp, k - 1]
                    if prev == INF:
                        continue
                    v = prev + ph
                    if v < best:
                        best = v
                g[i, t, k] = best
            # carry levels forward outside the window so later reads see them
            for t in range(0, lo):
                g[i, t, k] = g[i - 1, t, k]
            for t in range(hi + 1, TT + 1):
                g[i, t, k] = g[i - 1, t, k]
    return g


@njit(cache=True)
def cummin_time(table):
    """Running minimum along the time axis of a (T+1, M) table."""
    out = table.copy()
    for t in range(1, out.shape[0]):
        for k in range(out.shape[1]):
            if out[t - 1, k] < out[t, k]:
                out[t, k] = out[t - 1, k]
    return out


@njit(cache=True)
def subset_min_zeta(table, k_bits):
    """In place: out[t, mask] = min over submasks of mask of table[t, mask]."""
    for b in range(k_bits):
        bit = 1 << b
        for t in range(table.shape[0]):
            for mask in range(table.shape[1]):
                if mask & bit:
                    v = table[t, mask ^ bit]
                    if v < table[t, mask]:
                        table[t, mask] = v
    return table
