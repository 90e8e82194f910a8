"""Operation algebra, transformation tables and the abstract property checkers.

Operations are 1-based integers ``1..n``; every operation ``i`` is paired with
the inverse ``n + 1 - i``.  A :class:`TransformTable` stores ``IT(op_i, op_j)``
in row ``i``, column ``j``.

The checkers work on whole tables at once: each property has a vectorised
violation mask over 0-based cell arrays that also accepts a leading batch
axis, which is what the brute-force oracle feeds it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_ORDER = 16

TP1, TP2, IP1, IP2, IP3, C1, C2 = "TP1", "TP2", "IP1", "IP2", "IP3", "C1", "C2"
#: the abstract constraint set, in the order used for reports and flags
CONSTRAINTS = (TP2, IP2, IP3, C1, C2)
PROPERTIES = (TP1, TP2, IP1, IP2, IP3, C1, C2)


class TableFormatError(ValueError):
    """A table document could not be parsed into a valid table."""


@dataclass(frozen=True)
class OpSet:
    """The operations ``1..n`` of an object of even order ``n``."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise TypeError(f"order must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ValueError(f"order must be a positive even integer, got {self.n}")
        if self.n % 2:
            raise ValueError(f"order must be even, got {self.n}")

    @property
    def ops(self) -> range:
        return range(1, self.n + 1)

    def check(self, op: int) -> int:
        if not 1 <= op <= self.n:
            raise IndexError(f"operation {op} out of range 1..{self.n}")
        return op

    def inverse(self, op: int) -> int:
        return self.n + 1 - self.check(op)


def inverse(s: OpSet, op: int) -> int:
    """Return the inverse of ``op``; never ``op`` itself."""
    return s.inverse(op)


class TransformTable:
    """Immutable ``n x n`` table with ``cells[i-1][j-1] == IT(op_i, op_j)``."""

    __slots__ = ("opset", "cells", "_array")

    def __init__(self, cells: Iterable[Iterable[int]]):
        rows = tuple(tuple(int(v) for v in row) for row in cells)
        n = len(rows)
        if n > MAX_ORDER:
            raise ValueError(f"order {n} exceeds the supported maximum {MAX_ORDER}")
        opset = OpSet(n)
        for row in rows:
            if len(row) != n:
                raise ValueError(f"table is not square: row of length {len(row)} in order {n}")
            for v in row:
                if not 1 <= v <= n:
                    raise ValueError(f"cell value {v} out of range 1..{n}")
        self.opset = opset
        self.cells = rows
        arr = np.array(rows, dtype=np.int8) - 1
        arr.setflags(write=False)
        self._array = arr

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "TransformTable":
        """Build from a 0-based ``(n, n)`` or flat ``(n*n,)`` array."""
        arr = np.asarray(arr)
        if arr.ndim == 1:
            n = int(round(len(arr) ** 0.5))
            arr = arr.reshape(n, n)
        return cls((arr + 1).tolist())

    @property
    def n(self) -> int:
        return self.opset.n

    @property
    def array(self) -> np.ndarray:
        """0-based read-only cell array."""
        return self._array

    def flat(self) -> tuple[int, ...]:
        return tuple(v for row in self.cells for v in row)

    def it(self, a: int, b: int) -> int:
        self.opset.check(a)
        self.opset.check(b)
        return self.cells[a - 1][b - 1]

    def __eq__(self, other):
        if not isinstance(other, TransformTable):
            return NotImplemented
        return self.cells == other.cells

    def __lt__(self, other: "TransformTable") -> bool:
        return (self.n, self.flat()) < (other.n, other.flat())

    def __hash__(self):
        return hash(self.cells)

    def __repr__(self):
        return f"TransformTable({[list(r) for r in self.cells]})"

    # -- document format ---------------------------------------------------

    def to_dict(self) -> dict:
        return {"n": self.n, "cells": [list(r) for r in self.cells]}

    @classmethod
    def from_dict(cls, doc) -> "TransformTable":
        if not isinstance(doc, dict) or "n" not in doc or "cells" not in doc:
            raise TableFormatError("table document needs fields 'n' and 'cells'")
        n, cells = doc["n"], doc["cells"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise TableFormatError(f"'n' must be an integer, got {n!r}")
        if not isinstance(cells, list) or len(cells) != n:
            raise TableFormatError(f"'cells' must hold {n} rows")
        for row in cells:
            if not isinstance(row, list) or len(row) != n:
                raise TableFormatError(f"every row of 'cells' must hold {n} entries")
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in row):
                raise TableFormatError("cell entries must be integers")
        try:
            return cls(cells)
        except (ValueError, TypeError) as exc:
            raise TableFormatError(str(exc)) from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "TransformTable":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TableFormatError(f"not a JSON document: {exc}") from exc
        return cls.from_dict(doc)


def identity_table(n: int) -> TransformTable:
    """The table with ``IT(op_i, op_j) = op_i`` everywhere."""
    return TransformTable([[i] * n for i in range(1, n + 1)])


def transform(t: TransformTable, a: int, b: int) -> int:
    """``IT(a, b)``: the form of ``a`` to execute after ``b``."""
    return t.it(a, b)


def transform_seq(t: TransformTable, op: int, seq: Sequence[int]) -> int:
    """Transform ``op`` against every operation of ``seq`` in turn."""
    t.opset.check(op)
    for other in seq:
        op = t.it(op, other)
    return op


# -- vectorised violation masks ------------------------------------------------
#
# All masks take 0-based int arrays of shape (..., n, n).  ``_at`` gathers
# T[x, y] elementwise for index arrays broadcastable to T's shape.


def _at(T: np.ndarray, x, y) -> np.ndarray:
    n = T.shape[-1]
    flat = T.reshape(T.shape[:-2] + (n * n,))
    idx = np.asarray(x, dtype=np.intp) * n + np.asarray(y, dtype=np.intp)
    idx = np.broadcast_to(idx, T.shape).reshape(flat.shape)
    return np.take_along_axis(flat, idx, axis=-1).reshape(T.shape)


def _grid(n: int):
    i = np.arange(n).reshape(n, 1)
    j = np.arange(n).reshape(1, n)
    return i, j


def c1_mask(T: np.ndarray) -> np.ndarray:
    """``[..., i, j]`` true where ``IT(op_i, op_j)`` is the inverse of ``op_i``."""
    n = T.shape[-1]
    i, _ = _grid(n)
    return T == (n - 1 - i)


def c2_mask(T: np.ndarray) -> np.ndarray:
    """``[..., i, j]`` true where ``op_j != inv(op_i)`` and ``IT(op_i, op_j) = inv(op_j)``."""
    n = T.shape[-1]
    i, j = _grid(n)
    return (j != n - 1 - i) & (T == n - 1 - j)


def ip2_mask(T: np.ndarray) -> np.ndarray:
    """``[..., a, b]`` true where ``IT(IT(a, b), inv(b)) != a``."""
    n = T.shape[-1]
    a, b = _grid(n)
    return _at(T, T, n - 1 - b) != a


def ip3_mask(T: np.ndarray) -> np.ndarray:
    """``[..., a, b]`` true where ``IT(inv(a), IT(b, a)) != inv(IT(a, b))``."""
    n = T.shape[-1]
    a, _ = _grid(n)
    Tt = np.swapaxes(T, -1, -2)
    return _at(T, n - 1 - a, Tt) != (n - 1 - T)


def tp2_mask(T: np.ndarray) -> np.ndarray:
    """``[..., a, b, c]`` true where the two TP2 transforms of ``c`` differ.

    Left side: ``IT(IT(c, a), IT(b, a))``; right side ``IT(IT(c, b), IT(a, b))``.
    """
    n = T.shape[-1]
    Tt = np.swapaxes(T, -1, -2)           # Tt[x, y] = T[y, x]
    shape = T.shape[:-2] + (n, n, n)
    ca = np.broadcast_to(Tt[..., :, None, :], shape)   # T[c, a]
    cb = np.broadcast_to(Tt[..., None, :, :], shape)   # T[c, b]
    ba = np.broadcast_to(Tt[..., :, :, None], shape)   # T[b, a]
    ab = np.broadcast_to(T[..., :, :, None], shape)    # T[a, b]
    flat = T.reshape(T.shape[:-2] + (n * n, 1, 1))
    left = np.take_along_axis(flat, (ca.astype(np.intp) * n + ba), axis=-3)
    right = np.take_along_axis(flat, (cb.astype(np.intp) * n + ab), axis=-3)
    return left != right


MASKS = {TP2: tp2_mask, IP2: ip2_mask, IP3: ip3_mask, C1: c1_mask, C2: c2_mask}


def satisfied(T: np.ndarray, constraints: Iterable[str] = CONSTRAINTS) -> np.ndarray | bool:
    """Boolean per table: true where none of ``constraints`` is violated.

    ``T`` is a 0-based array of shape ``(n, n)`` (returns a bool) or
    ``(batch, n, n)`` (returns a bool array).
    """
    T = np.asarray(T)
    if T.ndim == 2:
        return bool(satisfied(T[None], constraints)[0])
    wanted = set(constraints)
    alive = np.arange(T.shape[0])
    # cheapest first; later masks only see the survivors
    for name in (C1, C2, IP2, IP3, TP2):
        if name not in wanted or not len(alive):
            continue
        m = MASKS[name](T[alive])
        alive = alive[~m.reshape(len(alive), -1).any(axis=1)]
    ok = np.zeros(T.shape[0], dtype=bool)
    ok[alive] = True
    return ok


# -- reports -------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyReport:
    """Verdict for one property; ``witnesses`` is empty exactly when it holds."""

    property: str
    witnesses: tuple = ()
    note: str = ""

    @property
    def holds(self) -> bool:
        return not self.witnesses

    def to_dict(self) -> dict:
        doc = {"property": self.property, "holds": self.holds,
               "witnesses": [list(w) for w in self.witnesses]}
        if self.note:
            doc["note"] = self.note
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PropertyReport":
        report = cls(doc["property"], tuple(tuple(w) for w in doc["witnesses"]), doc.get("note", ""))
        if report.holds != doc["holds"]:
            raise ValueError("inconsistent report: 'holds' disagrees with witnesses")
        return report


def _report(name: str, mask: np.ndarray) -> PropertyReport:
    # argwhere walks in C order, so witnesses come out lexicographically sorted
    return PropertyReport(name, tuple(tuple(int(v) + 1 for v in w) for w in np.argwhere(mask)))


def check_tp2(t: TransformTable) -> PropertyReport:
    """Witnesses are triples ``(op_1, op_2, op_3)`` over all ordered triples."""
    return _report(TP2, tp2_mask(t.array))


def check_ip2(t: TransformTable) -> PropertyReport:
    return _report(IP2, ip2_mask(t.array))


def check_ip3(t: TransformTable) -> PropertyReport:
    """IP3 over every ordered pair; the TP1 premise is not assumed away."""
    return _report(IP3, ip3_mask(t.array))


def check_c1(t: TransformTable) -> PropertyReport:
    return _report(C1, c1_mask(t.array))


def check_c2(t: TransformTable) -> PropertyReport:
    return _report(C2, c2_mask(t.array))


CHECKERS = {TP2: check_tp2, IP2: check_ip2, IP3: check_ip3, C1: check_c1, C2: check_c2}


def check_all(t: TransformTable, constraints: Iterable[str] = CONSTRAINTS) -> list[PropertyReport]:
    return [CHECKERS[name](t) for name in CONSTRAINTS if name in set(constraints)]


def is_commutative_table(t: TransformTable) -> bool:
    return t == identity_table(t.n)


def is_undoable(t: TransformTable) -> bool:
    return check_ip2(t).holds and check_ip3(t).holds


def parse_constraints(spec: str | Iterable[str] | None) -> frozenset[str]:
    """Accept ``"TP2,IP2"`` or an iterable of names; ``None`` means all five."""
    if spec is None:
        return frozenset(CONSTRAINTS)
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    out = set()
    for name in names:
        name = name.strip().upper()
        if not name:
            continue
        if name not in CONSTRAINTS:
            raise ValueError(f"unknown constraint {name!r}; choose from {', '.join(CONSTRAINTS)}")
        out.add(name)
    if not out:
        raise ValueError("constraint set must not be empty")
    return frozenset(out)


# -- named tables --------------------------------------------------------------

#: register with Up = op_1 and Down = op_2
IT_BIN = TransformTable([[1, 1], [1, 2]])

#: 2x2-matrix object whose transforms cancel the remote operation
MATRIX_CANCEL = TransformTable([[2] * 4, [1] * 4, [4] * 4, [3] * 4])

#: order-6 split solution whose inter-block rule keeps the same result for op and inv(op)
SPLIT_SAME_6 = TransformTable([
    [1, 4, 1, 1, 4, 1],
    [2, 2, 2, 2, 2, 2],
    [3, 6, 3, 3, 6, 3],
    [4, 1, 4, 4, 1, 4],
    [5, 5, 5, 5, 5, 5],
    [6, 3, 6, 6, 3, 6],
])

#: order-6 split solution whose inter-block rule inverts the result for inv(op)
SPLIT_INVERTED_6 = TransformTable([
    [1, 4, 1, 1, 3, 1],
    [2, 2, 2, 2, 2, 2],
    [3, 1, 3, 3, 6, 3],
    [4, 6, 4, 4, 1, 4],
    [5, 5, 5, 5, 5, 5],
    [6, 3, 6, 6, 4, 6],
])

_NAMED = {
    "it_bin": IT_BIN,
    "matrix_cancel": MATRIX_CANCEL,
    "split_same_6": SPLIT_SAME_6,
    "split_inverted_6": SPLIT_INVERTED_6,
}


def named_table(name: str, n: int | None = None) -> TransformTable:
    """Look up a built-in table; ``identity`` needs ``n`` (or ``identity_<n>``)."""
    if name == "identity":
        if n is None:
            raise ValueError("the identity table needs an order")
        return identity_table(n)
    if name.startswith("identity_") and name[9:].isdigit():
        return identity_table(int(name[9:]))
    try:
        table = _NAMED[name]
    except KeyError:
        raise KeyError(f"unknown table {name!r}; known: identity, {', '.join(sorted(_NAMED))}") from None
    if n is not None and table.n != n:
        raise ValueError(f"table {name!r} has order {table.n}, expected {n}")
    return table
