import json
from fractions import Fraction

import pytest

from otundo import core, csp, models
from otundo.core import IT_BIN, MATRIX_CANCEL, identity_table
from otundo.models import FixtureError, get_model

UP, DOWN = 1, 2
INC, DEC = 1, 2
ALL = ["BinaryRegister", "IntegerRegister", "MatrixObject", "Counter3", "PlaneReflect", "PlaneRotate"]


def test_registry_lookup_is_forgiving():
    assert get_model("binary_register") is get_model("BinaryRegister")
    assert get_model("planereflect").name == "PlaneReflect"
    with pytest.raises(KeyError):
        get_model("Queue")
    assert models.fixture_names() == ALL


def test_binary_register_effects():
    m = get_model("BinaryRegister")
    assert m.finite and m.states == (0, 1)
    assert m.apply(0, UP) == 1 and m.apply(1, DOWN) == 0
    assert m.apply(1, UP) == 1 and m.apply(0, DOWN) == 0
    assert m.op_id("up") == UP and m.op_id(2) == DOWN
    with pytest.raises(FixtureError):
        m.op_id("Sideways")


def test_integer_register_sample():
    m = get_model("IntegerRegister")
    assert m.states == tuple(range(-8, 9))
    assert m.run(3, [INC, INC, DEC]) == 4


def test_matrix_object_is_exact():
    m = get_model("MatrixObject")
    assert len(m.states) == 32
    zero = ((Fraction(0),) * 2,) * 2
    ident = ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))
    assert zero in m.states and ident in m.states
    assert any(len({v for r in a for v in r}) == 4 for a in m.states)
    a = ((Fraction(1), Fraction(2)), (Fraction(3), Fraction(4)))
    assert m.apply(a, 1) == ((2, 6), (4, 8))
    assert m.apply(a, 2) == ((4, 2), (6, 8))
    for st in m.states:
        assert m.run(st, [1, 4]) == st
        assert m.decode_state(m.encode_state(st)) == st
        assert json.loads(json.dumps(m.encode_state(st))) == m.encode_state(st)


@pytest.mark.parametrize("name", ALL)
def test_no_idle_operations(name):
    m = get_model(name)
    for op in m.opset.ops:
        assert any(m.apply(st, op) != st for st in m.states)


def test_idle_operation_rejected():
    doc = get_model("IntegerRegister").descriptor()
    doc["domain"]["states"] = [0]
    doc["ops"][0]["tag"] = "set_zero"
    with pytest.raises(FixtureError, match="idle"):
        models.model_from_descriptor(doc)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("n"),
    lambda d: d["ops"].pop(),
    lambda d: d["ops"][0].update(tag="teleport"),
    lambda d: d["domain"].update(state="quaternion"),
    lambda d: d["domain"].update(states=[]),
    lambda d: d["domain"].update(states=["x"]),
    lambda d: d.update(table="nope"),
])
def test_bad_descriptors(mutate):
    doc = get_model("IntegerRegister").descriptor()
    mutate(doc)
    with pytest.raises((FixtureError, KeyError)):
        models.model_from_descriptor(doc)


@pytest.mark.parametrize("name", ALL)
def test_descriptor_round_trip(name):
    m = get_model(name)
    assert models.model_from_descriptor(json.loads(json.dumps(m.descriptor()))) == m


def test_tp1_examples():
    reg = get_model("BinaryRegister")
    assert models.check_tp1(reg, IT_BIN).holds
    assert models.check_tp1(get_model("IntegerRegister"), identity_table(2)).holds
    bad = models.check_tp1(reg, identity_table(2))
    assert (0, UP, DOWN) in bad.witnesses
    st, a, b = bad.witnesses[0]
    assert reg.run(st, [a, b]) != reg.run(st, [b, a])
    with pytest.raises(ValueError):
        models.check_tp1(reg, identity_table(4))


def test_ip1_examples():
    assert models.check_ip1(get_model("IntegerRegister")).holds
    assert models.check_ip1(get_model("BinaryRegister")).witnesses == ((0, DOWN), (1, UP))
    rep = models.check_ip1(get_model("MatrixObject"))
    assert rep.holds and rep.note == "checked on sample"


def test_sequence_equivalence():
    reg, ints = get_model("BinaryRegister"), get_model("IntegerRegister")
    assert models.sequences_equivalent(reg, [UP, DOWN, UP], [UP, DOWN, UP])
    assert models.sequences_equivalent(ints, [INC, DEC], [])
    assert not models.sequences_equivalent(reg, [DOWN, UP], [])


def test_commutativity_examples():
    assert models.check_commutativity(get_model("IntegerRegister")).holds
    assert (0, UP, DOWN) in models.check_commutativity(get_model("BinaryRegister")).witnesses
    assert (1, 2) in {w[1:] for w in models.check_commutativity(get_model("MatrixObject")).witnesses}


def test_matrix_identities():
    m = get_model("MatrixObject")
    assert models.check_matrix_tp1_identities(m).holds
    for st in m.states:
        four = tuple(tuple(4 * v for v in r) for r in st)
        assert m.run(st, [1, 1]) == four == m.run(st, [2, 2])
    with pytest.raises(ValueError):
        models.check_matrix_tp1_identities(get_model("IntegerRegister"))


@pytest.mark.parametrize("name", ["Counter3", "PlaneReflect", "PlaneRotate"])
def test_order6_models_are_consistent_objects(name):
    m = get_model(name)
    assert models.check_tp1(m).holds
    assert models.check_ip1(m).holds
    assert all(r.holds for r in core.check_all(m.table))


@pytest.mark.parametrize("name", ["IntegerRegister", "Counter3", "PlaneReflect", "PlaneRotate", "MatrixObject"])
def test_identity_table_iff_commutative(name):
    # for each fixture with a table passing TP1 and TP2
    m = get_model(name)
    assert models.check_tp1(m).holds and core.check_tp2(m.table).holds
    assert core.is_commutative_table(m.table) == models.check_commutativity(m).holds


def test_full_cco_witness():
    m = get_model("IntegerRegister")
    t = identity_table(2)
    assert all(r.holds for r in core.check_all(t))
    assert models.check_tp1(m, t).holds and models.check_ip1(m).holds


def test_relabeled_model_follows_table():
    m = get_model("PlaneRotate")
    for perm in list(csp.inverse_preserving_permutations(6))[::7]:
        moved = m.relabeled(perm)
        assert moved.table == csp.relabel(m.table, perm)
        assert models.check_tp1(moved).holds
        for i, p in enumerate(perm, start=1):
            assert moved.tags[p - 1] == m.tags[i - 1]


def test_matrix_table_is_the_fixture_table():
    assert get_model("MatrixObject").table == MATRIX_CANCEL
