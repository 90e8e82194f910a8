"""Concrete shared objects: states, operation effects and state-level checks.

Each fixture is described by a JSON file under ``fixtures/`` binding OpIds
to semantic tags; the effect of every tag is compiled in below.  Infinite
state spaces are checked on the published sample listed in the fixture, so a
passing check means "holds on the sample", never a proof.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Callable, Sequence

from . import core
from .core import OpSet, PropertyReport, TransformTable

HALF = Fraction(1, 2)


def _scale(m, k):
    return tuple(tuple(k * v for v in row) for row in m)


def _transpose(m):
    return ((m[0][0], m[1][0]), (m[0][1], m[1][1]))


def _swap_first_row(m):
    return ((m[0][1], m[0][0]), m[1])


def _reflect(st, dz):
    x, y, z = st
    return (-y, -x, z + dz)


EFFECTS: dict[str, Callable] = {
    "set_one": lambda st: 1,
    "set_zero": lambda st: 0,
    "inc": lambda st: st + 1,
    "dec": lambda st: st - 1,
    "double_transpose": lambda m: _scale(_transpose(m), 2),
    "half_transpose": lambda m: _scale(_transpose(m), HALF),
    "double_row_swap": lambda m: _scale(_swap_first_row(m), 2),
    "half_row_swap": lambda m: _scale(_swap_first_row(m), HALF),
    "inc_x": lambda s: (s[0] + 1, s[1], s[2]),
    "dec_x": lambda s: (s[0] - 1, s[1], s[2]),
    "inc_y": lambda s: (s[0], s[1] + 1, s[2]),
    "dec_y": lambda s: (s[0], s[1] - 1, s[2]),
    "inc_z": lambda s: (s[0], s[1], s[2] + 1),
    "dec_z": lambda s: (s[0], s[1], s[2] - 1),
    "reflect_up": lambda s: _reflect(s, 1),
    "reflect_down": lambda s: _reflect(s, -1),
    "rotate_up": lambda s: (s[1], -s[0], s[2] + 1),
    "rotate_down": lambda s: (-s[1], s[0], s[2] - 1),
}


# -- state codecs: JSON value <-> hashable state ------------------------------

def _decode_matrix(doc):
    return tuple(tuple(Fraction(v) for v in row) for row in doc)


def _encode_matrix(m):
    return [[str(v) for v in row] for row in m]


CODECS = {
    "int": (int, int),
    "vector": (lambda d: tuple(int(v) for v in d), list),
    "rational_matrix": (_decode_matrix, _encode_matrix),
}


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class StateModel:
    name: str
    opset: OpSet
    tags: tuple            # semantic tag per OpId (index 0 is op 1)
    labels: tuple          # display name per OpId
    states: tuple          # whole domain when ``finite``, else the published sample
    finite: bool
    state_kind: str
    table: TransformTable
    sampler: str = ""

    def apply(self, st, op: int):
        return EFFECTS[self.tags[self.opset.check(op) - 1]](st)

    def run(self, st, seq: Sequence[int]):
        for op in seq:
            st = self.apply(st, op)
        return st

    def decode_state(self, doc):
        try:
            return CODECS[self.state_kind][0](doc)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise FixtureError(f"bad {self.state_kind} state {doc!r}: {exc}") from exc

    def encode_state(self, st):
        return CODECS[self.state_kind][1](st)

    def witness_state(self, st):
        """Hashable, JSON-friendly form of a state for report witnesses."""
        enc = self.encode_state(st)
        if isinstance(enc, list):
            return tuple(tuple(r) if isinstance(r, list) else r for r in enc)
        return enc

    def op_id(self, ref) -> int:
        """Resolve an OpId or a label such as ``"Up"``."""
        if isinstance(ref, bool):
            raise FixtureError(f"not an operation: {ref!r}")
        if isinstance(ref, int):
            return self.opset.check(ref)
        for k, label in enumerate(self.labels, start=1):
            if label.lower() == str(ref).lower():
                return k
        raise FixtureError(f"{self.name} has no operation {ref!r}")

    def relabeled(self, perm) -> "StateModel":
        """The same object with operation ``i`` renamed to ``perm[i-1]``; table relabeled alike."""
        from .csp import relabel

        tags = [None] * self.opset.n
        labels = [None] * self.opset.n
        for i, p in enumerate(perm):
            tags[p - 1] = self.tags[i]
            labels[p - 1] = self.labels[i]
        return replace(self, tags=tuple(tags), labels=tuple(labels), table=relabel(self.table, perm))

    def descriptor(self) -> dict:
        """Fixture document for this model (same layout as the bundled files)."""
        domain = {"kind": "finite" if self.finite else "sample", "state": self.state_kind}
        if self.sampler:
            domain["sampler"] = self.sampler
        domain["states"] = [self.encode_state(s) for s in self.states]
        return {"name": self.name, "n": self.opset.n,
                "ops": [{"id": k, "label": lab, "tag": tag}
                        for k, (lab, tag) in enumerate(zip(self.labels, self.tags), start=1)],
                "domain": domain, "table": self.table.to_dict()}


def model_from_descriptor(doc: dict) -> StateModel:
    try:
        opset = OpSet(doc["n"])
        ops = sorted(doc["ops"], key=lambda o: o["id"])
        if [o["id"] for o in ops] != list(opset.ops):
            raise FixtureError(f"operations must be declared for ids 1..{opset.n}")
        for o in ops:
            if o["tag"] not in EFFECTS:
                raise FixtureError(f"unknown operation tag {o['tag']!r}")
        domain = doc["domain"]
        kind = domain["state"]
        if kind not in CODECS:
            raise FixtureError(f"unknown state kind {kind!r}")
        table_ref = doc["table"]
        table = (TransformTable.from_dict(table_ref) if isinstance(table_ref, dict)
                 else core.named_table(table_ref, opset.n))
        model = StateModel(
            name=doc["name"], opset=opset,
            tags=tuple(o["tag"] for o in ops), labels=tuple(o["label"] for o in ops),
            states=(), finite=domain["kind"] == "finite", state_kind=kind,
            table=table, sampler=domain.get("sampler", ""))
        states = tuple(model.decode_state(s) for s in domain["states"])
    except (KeyError, TypeError) as exc:
        raise FixtureError(f"malformed fixture descriptor: {exc!r}") from exc
    if not states:
        raise FixtureError("state domain must not be empty")
    model = replace(model, states=states)
    for op in opset.ops:
        if all(model.apply(st, op) == st for st in states):
            raise FixtureError(f"{model.name}: operation {op} is idle on every state")
    return model


FIXTURES = {
    "binaryregister": "binary_register.json",
    "integerregister": "integer_register.json",
    "matrixobject": "matrix_object.json",
    "counter3": "counter3.json",
    "planereflect": "plane_reflect.json",
    "planerotate": "plane_rotate.json",
}


def fixture_names() -> list[str]:
    return [get_model(k).name for k in FIXTURES]


def get_model(name: str) -> StateModel:
    """Bundled fixture by name; case, ``_`` and ``-`` are ignored."""
    key = str(name).replace("_", "").replace("-", "").lower()
    if key not in FIXTURES:
        raise KeyError(f"unknown model {name!r}; known: {', '.join(fixture_names())}")
    return _load(key)


@lru_cache(maxsize=None)
def _load(key: str) -> StateModel:
    text = resources.files("otundo").joinpath("fixtures", FIXTURES[key]).read_text()
    return model_from_descriptor(json.loads(text))


# -- state-level checks --------------------------------------------------------


def _same_opset(m: StateModel, t: TransformTable):
    if m.opset != t.opset:
        raise ValueError(f"model {m.name} has order {m.opset.n}, table has order {t.n}")


def check_tp1(m: StateModel, t: TransformTable | None = None) -> PropertyReport:
    """TP1 on every state of the domain/sample; witnesses are ``(state, op_1, op_2)``."""
    t = m.table if t is None else t
    _same_opset(m, t)
    bad = []
    for st in m.states:
        for a in m.opset.ops:
            for b in m.opset.ops:
                left = m.run(st, (a, t.it(b, a)))
                right = m.run(st, (b, t.it(a, b)))
                if left != right:
                    bad.append((m.witness_state(st), a, b))
    return PropertyReport(core.TP1, tuple(bad), "" if m.finite else "checked on sample")


def check_ip1(m: StateModel) -> PropertyReport:
    """``op`` followed by its inverse leaves every state unchanged; witnesses ``(state, op)``."""
    bad = []
    for st in m.states:
        for op in m.opset.ops:
            if m.run(st, (op, m.opset.inverse(op))) != st:
                bad.append((m.witness_state(st), op))
    return PropertyReport(core.IP1, tuple(bad), "" if m.finite else "checked on sample")


def sequences_equivalent(m: StateModel, s1: Sequence[int], s2: Sequence[int]) -> bool:
    return all(m.run(st, s1) == m.run(st, s2) for st in m.states)


def check_commutativity(m: StateModel) -> PropertyReport:
    """Every pair ``a < b`` commutes; witnesses are ``(state, a, b)``."""
    bad = []
    for st in m.states:
        for a in m.opset.ops:
            for b in range(a + 1, m.opset.n + 1):
                if m.run(st, (a, b)) != m.run(st, (b, a)):
                    bad.append((m.witness_state(st), a, b))
    return PropertyReport("COMMUTATIVITY", tuple(bad), "" if m.finite else "checked on sample")


MATRIX_IDENTITIES = (
    ("op2.op2 == op1.op1", (2, 2), (1, 1)),
    ("inv(op2).op1 == op2.inv(op1)", (3, 1), (2, 4)),
    ("inv(op1).op2 == op1.inv(op2)", (4, 2), (1, 3)),
    ("inv(op1).inv(op1) == inv(op2).inv(op2)", (4, 4), (3, 3)),
)


def check_matrix_tp1_identities(m: StateModel) -> PropertyReport:
    """The four sequence identities TP1 demands of the cancelling matrix table,
    plus ``A.op1.op1 == 4A == A.op2.op2``, on every sampled matrix.

    Witnesses are ``(state, identity)``; failures of the generic TP1 check on
    the same sample are reported as well.
    """
    if m.opset.n != 4 or m.state_kind != "rational_matrix":
        raise ValueError(f"{m.name} is not the 2x2 matrix object")
    bad = []
    for st in m.states:
        w = m.witness_state(st)
        for label, left, right in MATRIX_IDENTITIES:
            if m.run(st, left) != m.run(st, right):
                bad.append((w, label))
        four = _scale(st, 4)
        for op in (1, 2):
            if m.run(st, (op, op)) != four:
                bad.append((w, f"A.op{op}.op{op} == 4A"))
    tp1 = check_tp1(m, core.MATRIX_CANCEL)
    bad.extend((w[0], f"TP1 {w[1]},{w[2]}") for w in tp1.witnesses)
    return PropertyReport(core.TP1, tuple(bad), "checked on sample")
