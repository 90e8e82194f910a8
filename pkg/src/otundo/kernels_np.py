"""Pure-numpy counterparts of :mod:`otundo.kernels`.

The search runs depth-first over *batches* of partial tables: each stack
entry is a block of rows sharing the same next cell, expanded and filtered
with vectorised checks.  Results and node counts match the compiled kernels.
"""
from __future__ import annotations

import numpy as np

from . import core
from .kernels import BIT, BIT_C1, BIT_C2, BIT_IP2, BIT_IP3, BIT_TP2, S_C1, S_C2, S_IP2, S_IP3, S_TP2

CHUNK = 8192


def _gather(T, x, y):
    """``T[b, x, y]`` per batch row, ``-1`` wherever ``x`` or ``y`` is ``-1``."""
    B, n, _ = T.shape
    valid = (x >= 0) & (y >= 0)
    idx = np.where(valid, x * n + y, 0).reshape(B, -1)
    got = np.take_along_axis(T.reshape(B, n * n), idx, axis=1).reshape(x.shape)
    return np.where(valid, got, -1)


def partial_conflicts(C: np.ndarray, n: int, mask: int) -> np.ndarray:
    """Counter slot of the first violated constraint per row, ``-1`` if none.

    ``C`` is ``(batch, n*n)`` with ``-1`` for unassigned cells.  Every
    evaluable instance is checked, so on rows whose parent was consistent
    only instances touching the newest cell can fire.
    """
    B = C.shape[0]
    code = np.full(B, -1, dtype=np.int64)
    i = np.arange(n).reshape(1, n, 1)
    j = np.arange(n).reshape(1, 1, n)
    alive = np.arange(B)
    T = C.reshape(B, n, n).astype(np.int64)

    def settle(bad, slot):
        # flag the failing rows, keep checking only the survivors
        nonlocal alive, T
        bad = bad.reshape(len(alive), -1).any(axis=1)
        code[alive[bad]] = slot
        alive = alive[~bad]
        T = T[~bad]

    if mask & BIT_C2 and len(alive):
        settle((T >= 0) & (j != n - 1 - i) & (T == n - 1 - j), S_C2)
    if mask & BIT_IP2 and len(alive):
        y = _gather(T, T, np.broadcast_to(n - 1 - j, T.shape))
        settle((y >= 0) & (y != i), S_IP2)
    if mask & BIT_IP3 and len(alive):
        y = _gather(T, np.broadcast_to(n - 1 - i, T.shape), T.transpose(0, 2, 1))
        settle((y >= 0) & (T >= 0) & (y != n - 1 - T), S_IP3)
    if mask & BIT_TP2 and len(alive):
        Tt = T.transpose(0, 2, 1)
        shape = (len(T), n, n, n)                              # [a, b, k]
        ka = np.broadcast_to(Tt[:, :, None, :], shape)
        kb = np.broadcast_to(Tt[:, None, :, :], shape)
        ba = np.broadcast_to(Tt[:, :, :, None], shape)
        ab = np.broadcast_to(T[:, :, :, None], shape)
        left = _gather(T, ka, ba)
        right = _gather(T, kb, ab)
        settle((left >= 0) & (right >= 0) & (left != right), S_TP2)
    return code


def dfs(prefix, start, stop, n, mask, max_nodes, stats, chunk=CHUNK):
    """Same contract as :func:`otundo.kernels.dfs`."""
    size = n * n
    root = np.asarray(prefix, dtype=np.int8).copy()
    root[start:] = -1
    use_c1 = bool(mask & BIT_C1)
    stack = [(start, root[None, :])]
    found = []
    nodes = 0
    truncated = False
    while stack:
        pos, block = stack.pop()
        row = pos // n
        values = np.array([v for v in range(n) if not (use_c1 and v == n - 1 - row)], dtype=np.int8)
        if use_c1:
            stats[S_C1] += len(block)
        if max_nodes > 0 and nodes + len(block) * len(values) > max_nodes:
            truncated = True
            break
        kids = np.repeat(block, len(values), axis=0)
        kids[:, pos] = np.tile(values, len(block))
        nodes += len(kids)
        codes = partial_conflicts(kids, n, mask)
        for slot in (S_TP2, S_IP2, S_IP3, S_C2):
            stats[slot] += int(np.count_nonzero(codes == slot))
        good = kids[codes < 0]
        if not len(good):
            continue
        if pos == stop - 1:
            found.append(good)
            continue
        for s in reversed(range(0, len(good), chunk)):
            stack.append((pos + 1, good[s:s + chunk]))
    if found:
        out = np.concatenate(found)
    else:
        out = np.empty((0, size), dtype=np.int8)
    return _lexsorted(out), nodes, truncated


def _lexsorted(rows: np.ndarray) -> np.ndarray:
    if len(rows) < 2:
        return rows
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def odometer_scan(n, mask, prune_c1, batch=1 << 16):
    """Same contract as :func:`otundo.kernels.odometer_scan`, checked with ``core.satisfied``."""
    size = n * n
    radix = n - 1 if prune_c1 else n
    total = radix ** size
    names = [name for name in core.CONSTRAINTS if mask & BIT[name]]
    rows_inv = (n - 1 - np.arange(size) // n).astype(np.int64)
    weights = radix ** np.arange(size - 1, -1, -1, dtype=np.int64)
    found = []
    for lo in range(0, total, batch):
        k = np.arange(lo, min(lo + batch, total), dtype=np.int64)
        digits = (k[:, None] // weights[None, :]) % radix
        if prune_c1:
            digits = digits + (digits >= rows_inv[None, :])
        tables = digits.astype(np.int8).reshape(-1, n, n)
        ok = core.satisfied(tables, names)
        if ok.any():
            found.append(tables[ok].reshape(-1, size))
    out = np.concatenate(found) if found else np.empty((0, size), dtype=np.int8)
    return out, total
