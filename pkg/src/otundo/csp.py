"""Enumeration of transformation tables satisfying the undo constraint set.

:func:`enumerate_tables` runs a row-major depth-first search with incremental
constraint checks; :func:`brute_force_oracle` scans the whole candidate space
with the total-table checkers and must agree with it exactly.  Solutions are
grouped into classes under relabelings of the operations that keep the
inverse pairing, and each class is matched against the two structural
patterns known for order 6.
"""
from __future__ import annotations

import itertools
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import core, kernels, kernels_np
from ._accel import resolve
from .core import CONSTRAINTS, OpSet, TransformTable

log = logging.getLogger(__name__)

MIN_ORDER, MAX_SEARCH_ORDER = 2, 8
ORACLE_ORDERS = (2, 4)
COMMUTATIVE, SPLIT, OTHER = "COMMUTATIVE", "SPLIT", "OTHER"
FIRST_ARG, SAME, INVERTED = "FIRST_ARG", "SAME", "INVERTED"


def _search_impl(backend):
    return kernels if resolve(backend) == "numba" else kernels_np


class PartialTable:
    """A table whose cells may still be unassigned (``None``).

    Assigned cells never hold the inverse of their row operation.
    """

    def __init__(self, opset: OpSet, cells=None):
        n = opset.n
        if cells is None:
            cells = [[None] * n for _ in range(n)]
        rows = [list(r) for r in cells]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"partial table must be {n}x{n}")
        for i, row in enumerate(rows, start=1):
            for v in row:
                if v is None:
                    continue
                opset.check(v)
                if v == opset.inverse(i):
                    raise ValueError(f"row {i} cannot hold its own inverse {v}")
        self.opset = opset
        self.cells = tuple(tuple(r) for r in rows)

    @classmethod
    def from_array(cls, opset: OpSet, flat: np.ndarray) -> "PartialTable":
        n = opset.n
        vals = [None if v < 0 else int(v) + 1 for v in np.asarray(flat).ravel()]
        return cls(opset, [vals[r * n:(r + 1) * n] for r in range(n)])

    def to_array(self) -> np.ndarray:
        return np.array([-1 if v is None else v - 1 for row in self.cells for v in row], dtype=np.int8)

    @property
    def unassigned(self) -> int:
        return sum(v is None for row in self.cells for v in row)

    def to_table(self) -> TransformTable:
        if self.unassigned:
            raise ValueError(f"{self.unassigned} cells are still unassigned")
        return TransformTable(self.cells)


@dataclass(frozen=True)
class PatternClassification:
    kind: str
    partition: tuple = ()
    inter_rule: tuple = ()          # ((from_block, to_block, rule), ...), blocks 1-based

    def to_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == SPLIT:
            doc["partition"] = [list(b) for b in self.partition]
            doc["inter_rule"] = {f"{a}x{b}": rule for a, b, rule in self.inter_rule}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PatternClassification":
        if doc["kind"] != SPLIT:
            return cls(doc["kind"])
        rules = tuple((int(k.split("x")[0]), int(k.split("x")[1]), v) for k, v in doc["inter_rule"].items())
        return cls(SPLIT, tuple(tuple(b) for b in doc["partition"]), rules)


@dataclass
class SolutionSet:
    order: int
    constraints: tuple
    raw_solutions: list
    classes: list                    # [(representative, member_count)]
    search_stats: dict = field(default_factory=dict)
    patterns: list = field(default_factory=list)   # parallel to classes; None when not classified

    @property
    def truncated(self) -> bool:
        return bool(self.search_stats.get("truncated", False))

    def to_dict(self, raw: bool = False, stats: bool = True) -> dict:
        classes = []
        for k, (rep, count) in enumerate(self.classes):
            entry = {"representative": rep.to_dict(), "members": count}
            pat = self.patterns[k] if k < len(self.patterns) else None
            entry["pattern"] = pat.to_dict() if pat else None
            classes.append(entry)
        doc = {"order": self.order, "constraints": list(self.constraints), "classes": classes}
        if raw:
            doc["raw_solutions"] = [t.to_dict() for t in self.raw_solutions]
        if stats:
            doc["search_stats"] = self.search_stats
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SolutionSet":
        classes, patterns = [], []
        for entry in doc["classes"]:
            classes.append((TransformTable.from_dict(entry["representative"]), entry["members"]))
            pat = entry.get("pattern")
            patterns.append(PatternClassification.from_dict(pat) if pat else None)
        raw = [TransformTable.from_dict(t) for t in doc.get("raw_solutions", [])]
        return cls(doc["order"], tuple(doc["constraints"]), raw, classes,
                   doc.get("search_stats", {}), patterns)


def _check_order(n, lo, hi):
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValueError(f"order must be an integer, got {n!r}")
    if n % 2:
        raise ValueError(f"order must be even, got {n}")
    if not lo <= n <= hi:
        raise ValueError(f"order must lie in {lo}..{hi}, got {n}")


def _ordered(constraints) -> tuple:
    picked = core.parse_constraints(constraints)
    return tuple(c for c in CONSTRAINTS if c in picked)


def _stats_doc(nodes, counters, truncated):
    return {"nodes": int(nodes),
            "prunes": {name: int(counters[kernels.STAT[name]]) for name in CONSTRAINTS},
            "truncated": bool(truncated)}


def _solution_set(n, constraints, rows: np.ndarray, stats: dict) -> SolutionSet:
    rows = kernels_np._lexsorted(np.asarray(rows, dtype=np.int8).reshape(-1, n * n))
    raw = [TransformTable.from_array(r) for r in rows]
    counts: dict[TransformTable, int] = {}
    for t in raw:
        rep = canonicalize(t)
        counts[rep] = counts.get(rep, 0) + 1
    classes = sorted(counts.items(), key=lambda kv: kv[0].flat())
    patterns = []
    for rep, _ in classes:
        patterns.append(classify_pattern(rep) if set(constraints) == set(CONSTRAINTS) else None)
    return SolutionSet(n, constraints, raw, classes, stats, patterns)


def enumerate_tables(n: int, constraints=None, *, backend: str | None = None, workers: int = 1,
                     max_nodes: int | None = None, checkpoint: str | os.PathLike | None = None
                     ) -> SolutionSet:
    """Every total table of order ``n`` satisfying ``constraints`` (default: all five).

    ``max_nodes`` caps the search (``OTUNDO_MAX_NODES`` when not given, 0 for
    no cap); a capped run reports ``truncated``.  With ``workers > 1`` or a
    ``checkpoint`` path the tree is split by first-row assignments; the
    checkpoint file records finished subtrees so an interrupted run resumes.
    """
    _check_order(n, MIN_ORDER, MAX_SEARCH_ORDER)
    cons = _ordered(constraints)
    mask = kernels.to_mask(cons)
    if max_nodes is None:
        max_nodes = int(os.environ.get("OTUNDO_MAX_NODES", "0") or 0)
    impl = _search_impl(backend)
    size = n * n
    counters = np.zeros(5, dtype=np.int64)
    empty = np.full(size, -1, dtype=np.int8)

    if workers <= 1 and checkpoint is None:
        rows, nodes, truncated = impl.dfs(empty, 0, size, n, mask, max_nodes, counters)
        return _solution_set(n, cons, rows, _stats_doc(nodes, counters, truncated))

    prefixes, nodes, truncated = impl.dfs(empty, 0, n, n, mask, max_nodes, counters)
    done = _load_checkpoint(checkpoint, n, cons) if checkpoint else {}
    results = dict(done)
    todo = [k for k in range(len(prefixes)) if k not in done]
    remaining = max_nodes - nodes if max_nodes > 0 else 0
    if max_nodes > 0 and remaining <= 0:
        truncated = True
        todo = []

    def run(k):
        local = np.zeros(5, dtype=np.int64)
        out, sub_nodes, cut = impl.dfs(prefixes[k], n, size, n, mask, remaining, local)
        return k, out, sub_nodes, cut, local

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for k, out, sub_nodes, cut, local in pool.map(run, todo):
            results[k] = (out, sub_nodes, local)
            if cut:
                truncated = True
            elif checkpoint:
                _append_checkpoint(checkpoint, n, cons, k, out, sub_nodes, local)
    total_nodes = nodes
    found = []
    for k in sorted(results):
        out, sub_nodes, local = results[k]
        total_nodes += sub_nodes
        counters += local
        found.append(np.asarray(out, dtype=np.int8).reshape(-1, size))
    rows = np.concatenate(found) if found else np.empty((0, size), dtype=np.int8)
    return _solution_set(n, cons, rows, _stats_doc(total_nodes, counters, truncated))


def _load_checkpoint(path, n, cons) -> dict:
    path = Path(path)
    done = {}
    if not path.exists():
        return done
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec["order"] != n or tuple(rec["constraints"]) != cons:
            raise ValueError(f"checkpoint {path} belongs to a different run")
        rows = np.array(rec["solutions"], dtype=np.int8).reshape(-1, n * n)
        done[rec["subtree"]] = (rows, rec["nodes"], np.array(rec["counters"], dtype=np.int64))
    log.info("resuming from %s: %d subtrees done", path, len(done))
    return done


def _append_checkpoint(path, n, cons, k, rows, nodes, counters):
    rec = {"order": n, "constraints": list(cons), "subtree": int(k), "nodes": int(nodes),
           "counters": [int(v) for v in counters], "solutions": np.asarray(rows).tolist()}
    with open(path, "a") as fh:
        fh.write(json.dumps(rec) + "\n")


def brute_force_oracle(n: int, constraints=None, *, backend: str | None = None) -> SolutionSet:
    """Plain odometer scan of every candidate table, filtered by the total-table checkers.

    The only pruning is C1 as a domain restriction, and only when C1 is
    selected.  Restricted to orders 2 and 4.
    """
    if n not in ORACLE_ORDERS:
        raise ValueError(f"the oracle only covers orders {ORACLE_ORDERS}; order {n} is infeasible")
    cons = _ordered(constraints)
    impl = _search_impl(backend)
    rows, scanned = impl.odometer_scan(n, kernels.to_mask(cons), core.C1 in cons)
    return _solution_set(n, cons, rows, {"candidates": int(scanned)})


# -- symmetry ------------------------------------------------------------------


def inverse_preserving_permutations(n: int):
    """Yield 1-based permutations ``p`` with ``p[inv(i)] == inv(p[i])``."""
    OpSet(n)
    half = n // 2
    for order in itertools.permutations(range(half)):
        for flips in itertools.product((False, True), repeat=half):
            perm = [0] * n
            for k in range(half):
                lo, hi = order[k], n - 1 - order[k]
                if flips[k]:
                    lo, hi = hi, lo
                perm[k], perm[n - 1 - k] = lo + 1, hi + 1
            yield tuple(perm)


def relabel(t: TransformTable, perm) -> TransformTable:
    """Rename every operation ``i`` to ``perm[i-1]`` in rows, columns and values."""
    p = np.asarray(perm, dtype=np.intp) - 1
    if sorted(p.tolist()) != list(range(t.n)):
        raise ValueError(f"not a permutation of 1..{t.n}: {perm}")
    out = np.empty_like(t.array)
    out[np.ix_(p, p)] = p[t.array]
    return TransformTable.from_array(out)


def _relabel_batch(T: np.ndarray, P: np.ndarray) -> np.ndarray:
    """All relabelings of one 0-based table by the rows of ``P``, flattened."""
    Q = np.argsort(P, axis=1)                       # inverse permutations
    m, n = P.shape
    rows = Q[:, :, None]
    cols = Q[:, None, :]
    return np.take_along_axis(P, T[rows, cols].reshape(m, -1), axis=1)


def canonicalize(t: TransformTable) -> TransformTable:
    """The lexicographically smallest relabeling of ``t`` under pairing-preserving maps."""
    n = t.n
    best = None
    perms = inverse_preserving_permutations(n)
    T = t.array.astype(np.intp)
    while True:
        chunk = list(itertools.islice(perms, 4096))
        if not chunk:
            break
        flat = _relabel_batch(T, np.array(chunk, dtype=np.intp) - 1)
        cand = flat[np.lexsort(flat.T[::-1])[0]]
        if best is None or tuple(cand) < tuple(best):
            best = cand
    return TransformTable.from_array(best)


def equivalent(a: TransformTable, b: TransformTable) -> bool:
    if a.n != b.n:
        raise ValueError(f"tables of different order: {a.n} and {b.n}")
    return canonicalize(a) == canonicalize(b)


# -- structural patterns -------------------------------------------------------


def _block_rule(t: TransformTable, xs, ys):
    inv = t.opset.inverse
    if all(t.it(x, y) == x for x in xs for y in ys):
        return FIRST_ARG
    if all(t.it(x, y) == t.it(x, inv(y)) for x in xs for y in ys):
        return SAME
    if all(t.it(x, y) == inv(t.it(x, inv(y))) for x in xs for y in ys):
        return INVERTED
    return None


def _internally_identity(t, block):
    return all(t.it(x, y) == x for x in block for y in block)


def classify_pattern(t: TransformTable) -> PatternClassification:
    """COMMUTATIVE, SPLIT into two inverse-closed identity blocks, or OTHER.

    For SPLIT the first block transforms as itself against the second
    (FIRST_ARG) and the second follows SAME or INVERTED against the first.
    """
    failing = [r.property for r in core.check_all(t) if not r.holds]
    if failing:
        raise ValueError(f"table violates {', '.join(failing)}")
    if core.is_commutative_table(t):
        return PatternClassification(COMMUTATIVE)
    n = t.n
    pairs = [(i, n + 1 - i) for i in range(1, n // 2 + 1)]
    for size in range(1, len(pairs)):
        for chosen in itertools.combinations(range(len(pairs)), size):
            first = tuple(sorted(op for k in chosen for op in pairs[k]))
            second = tuple(op for op in range(1, n + 1) if op not in first)
            if not (_internally_identity(t, first) and _internally_identity(t, second)):
                continue
            for a, b in ((first, second), (second, first)):
                if _block_rule(t, a, b) != FIRST_ARG:
                    continue
                back = _block_rule(t, b, a)
                if back in (SAME, INVERTED):
                    return PatternClassification(SPLIT, (a, b), ((1, 2, FIRST_ARG), (2, 1, back)))
    return PatternClassification(OTHER)
