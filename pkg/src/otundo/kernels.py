"""Compiled search kernels (numba).

Cells are a flat ``int8`` vector of length ``n * n`` holding 0-based
operations, ``-1`` where unassigned.  Constraint selections are bit masks
(see ``BIT``); per-constraint counters use the ``STAT`` indices.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit

BIT_TP2, BIT_IP2, BIT_IP3, BIT_C1, BIT_C2 = 1, 2, 4, 8, 16
BIT = {"TP2": BIT_TP2, "IP2": BIT_IP2, "IP3": BIT_IP3, "C1": BIT_C1, "C2": BIT_C2}
# counter slots, same order as core.CONSTRAINTS
S_TP2, S_IP2, S_IP3, S_C1, S_C2 = 0, 1, 2, 3, 4
STAT = {"TP2": S_TP2, "IP2": S_IP2, "IP3": S_IP3, "C1": S_C1, "C2": S_C2}


def to_mask(constraints) -> int:
    m = 0
    for name in constraints:
        m |= BIT[name]
    return m


@njit(cache=True)
def _ip2_bad(c, n, a, b):
    ab = c[a * n + b]
    if ab < 0:
        return False
    y = c[ab * n + (n - 1 - b)]
    return y >= 0 and y != a


@njit(cache=True)
def _ip3_bad(c, n, a, b):
    ab = c[a * n + b]
    ba = c[b * n + a]
    if ab < 0 or ba < 0:
        return False
    y = c[(n - 1 - a) * n + ba]
    return y >= 0 and y != n - 1 - ab


@njit(cache=True)
def _tp2_bad(c, n, a, b, k):
    ka = c[k * n + a]
    ba = c[b * n + a]
    kb = c[k * n + b]
    ab = c[a * n + b]
    if ka < 0 or ba < 0 or kb < 0 or ab < 0:
        return False
    left = c[ka * n + ba]
    right = c[kb * n + ab]
    return left >= 0 and right >= 0 and left != right


@njit(cache=True)
def conflict(c, n, i, j, mask):
    """Counter slot of the first constraint broken by the fresh cell ``(i, j)``.

    Returns -1 when consistent.  Only instances that reference ``(i, j)``,
    directly or through a looked-up cell, are examined: every other instance
    was already evaluable (and passed) or is still incomplete.  Order is
    cheapest first: C2, IP2, IP3, TP2.
    """
    v = c[i * n + j]
    if mask & BIT_C2:
        if j != n - 1 - i and v == n - 1 - j:
            return S_C2
    if mask & BIT_IP2:
        if _ip2_bad(c, n, i, j):
            return S_IP2
        b = n - 1 - j
        for a in range(n):
            if c[a * n + b] == i and _ip2_bad(c, n, a, b):
                return S_IP2
    if mask & BIT_IP3:
        if _ip3_bad(c, n, i, j) or _ip3_bad(c, n, j, i):
            return S_IP3
        a = n - 1 - i
        for b in range(n):
            if c[b * n + a] == j and _ip3_bad(c, n, a, b):
                return S_IP3
    if mask & BIT_TP2:
        for x in range(n):
            if (_tp2_bad(c, n, j, x, i) or _tp2_bad(c, n, j, i, x)
                    or _tp2_bad(c, n, x, j, i) or _tp2_bad(c, n, i, j, x)):
                return S_TP2
        for a in range(n):
            for b in range(n):
                ba = c[b * n + a]
                ab = c[a * n + b]
                if ba != j and ab != j:
                    continue
                for k in range(n):
                    if ba == j and c[k * n + a] == i and _tp2_bad(c, n, a, b, k):
                        return S_TP2
                    if ab == j and c[k * n + b] == i and _tp2_bad(c, n, a, b, k):
                        return S_TP2
    return -1


@njit(cache=True, nogil=True)
def dfs(prefix, start, stop, n, mask, max_nodes, stats):
    """Depth-first search over cells ``start .. stop-1`` in row-major order.

    ``prefix`` must be consistent on cells ``< start``.  Returns the
    consistent assignments reaching depth ``stop`` (in lexicographic order),
    the node count and whether ``max_nodes`` (> 0) cut the search short.
    """
    size = n * n
    c = prefix.copy()
    for q in range(start, size):
        c[q] = -1
    cap = 64
    out = np.empty((cap, size), dtype=np.int8)
    count = 0
    nodes = 0
    truncated = False
    use_c1 = (mask & BIT_C1) != 0
    p = start
    while p >= start:
        i = p // n
        v = c[p] + 1
        if use_c1 and v == n - 1 - i:
            stats[S_C1] += 1
            v += 1
        if v >= n:
            c[p] = -1
            p -= 1
            continue
        if max_nodes > 0 and nodes >= max_nodes:
            truncated = True
            break
        c[p] = v
        nodes += 1
        code = conflict(c, n, i, p % n, mask)
        if code >= 0:
            stats[code] += 1
            continue
        if p == stop - 1:
            if count == cap:
                grown = np.empty((cap * 2, size), dtype=np.int8)
                grown[:cap] = out
                out = grown
                cap *= 2
            out[count] = c
            count += 1
        else:
            p += 1
    return out[:count].copy(), nodes, truncated


@njit(cache=True)
def total_ok(t, n, mask):
    """Direct evaluation of the selected constraints on a complete table ``t[n, n]``."""
    for i in range(n):
        for j in range(n):
            v = t[i, j]
            if mask & BIT_C1 and v == n - 1 - i:
                return False
            if mask & BIT_C2 and j != n - 1 - i and v == n - 1 - j:
                return False
    for a in range(n):
        for b in range(n):
            if mask & BIT_IP2 and t[t[a, b], n - 1 - b] != a:
                return False
            if mask & BIT_IP3 and t[n - 1 - a, t[b, a]] != n - 1 - t[a, b]:
                return False
    if mask & BIT_TP2:
        for a in range(n):
            for b in range(n):
                for k in range(n):
                    if t[t[k, a], t[b, a]] != t[t[k, b], t[a, b]]:
                        return False
    return True


@njit(cache=True, nogil=True)
def odometer_scan(n, mask, prune_c1):
    """Visit every complete table by odometer counting; keep those passing ``total_ok``.

    With ``prune_c1`` each cell ranges over the ``n - 1`` values other than
    its row operation's inverse, otherwise over all ``n`` values.
    """
    size = n * n
    radix = n - 1 if prune_c1 else n
    digits = np.zeros(size, dtype=np.int64)
    t = np.empty((n, n), dtype=np.int8)
    cap = 64
    out = np.empty((cap, size), dtype=np.int8)
    count = 0
    scanned = 0
    while True:
        for q in range(size):
            i = q // n
            d = digits[q]
            if prune_c1 and d >= n - 1 - i:
                d += 1
            t[i, q % n] = d
        scanned += 1
        if total_ok(t, n, mask):
            if count == cap:
                grown = np.empty((cap * 2, size), dtype=np.int8)
                grown[:cap] = out
                out = grown
                cap *= 2
            out[count] = t.ravel()
            count += 1
        q = size - 1
        while q >= 0:
            digits[q] += 1
            if digits[q] < radix:
                break
            digits[q] = 0
            q -= 1
        if q < 0:
            break
    return out[:count].copy(), scanned
