import itertools
import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otundo import core, csp, kernels, kernels_np
from otundo._accel import HAS_NUMBA
from otundo.core import SPLIT_INVERTED_6, SPLIT_SAME_6, OpSet, TransformTable, identity_table

SUBSETS = [c for r in range(1, 6) for c in itertools.combinations(core.CONSTRAINTS, r)]
# subsets keeping C1 whose order-4 solution lists stay small; C1 alone and C1+C2 have millions
ORDER4_SUBSETS = [c for c in SUBSETS if "C1" in c and set(c) not in ({"C1"}, {"C1", "C2"})]

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")


def test_order_validation():
    for n in (3, 0, 10, 7):
        with pytest.raises(ValueError):
            csp.enumerate_tables(n)
    with pytest.raises(ValueError, match="even"):
        csp.enumerate_tables(3)
    with pytest.raises(ValueError):
        csp.enumerate_tables(2, [])
    for n in (6, 8, 3):
        with pytest.raises(ValueError):
            csp.brute_force_oracle(n)


def test_order2_and_order4_outputs():
    two = csp.enumerate_tables(2)
    assert two.raw_solutions == [identity_table(2)]
    assert two.classes == [(identity_table(2), 1)]
    four = csp.enumerate_tables(4)
    assert four.raw_solutions == [identity_table(4)]
    assert four.patterns[0].kind == csp.COMMUTATIVE


def test_order6_counts(order6):
    assert len(order6.raw_solutions) == 13
    assert sorted(c for _, c in order6.classes) == [1, 6, 6]
    assert sum(c for _, c in order6.classes) == len(order6.raw_solutions)
    flats = [t.flat() for t in order6.raw_solutions]
    assert flats == sorted(flats)
    assert not order6.truncated


def test_order6_solutions_valid_and_classes_distinct(order6):
    for t in order6.raw_solutions:
        assert all(r.holds for r in core.check_all(t))
        assert csp.canonicalize(t) in {rep for rep, _ in order6.classes}
    reps = [rep for rep, _ in order6.classes]
    for a, b in itertools.combinations(reps, 2):
        assert not csp.equivalent(a, b)


@pytest.mark.parametrize("cons", SUBSETS, ids=lambda c: "+".join(c))
def test_oracle_matches_search_order2(cons):
    assert csp.brute_force_oracle(2, cons).raw_solutions == csp.enumerate_tables(2, cons).raw_solutions


def test_oracle_matches_search_order2_exhaustive_list():
    # independent: all 16 tables filtered by the per-property checkers
    for cons in SUBSETS:
        expect = []
        for cells in itertools.product((1, 2), repeat=4):
            t = TransformTable([cells[:2], cells[2:]])
            if all(core.CHECKERS[c](t).holds for c in cons):
                expect.append(t)
        assert csp.enumerate_tables(2, cons).raw_solutions == sorted(expect, key=TransformTable.flat)


@needs_numba
@pytest.mark.parametrize("cons", ORDER4_SUBSETS, ids=lambda c: "+".join(c))
def test_oracle_matches_search_order4(cons):
    fast = csp.enumerate_tables(4, cons)
    slow = csp.brute_force_oracle(4, cons, backend="numba")
    assert slow.raw_solutions == fast.raw_solutions
    assert slow.search_stats["candidates"] == 3 ** 16


@pytest.mark.slow
def test_numpy_oracle_order4():
    assert csp.brute_force_oracle(4, backend="numpy").raw_solutions == [identity_table(4)]


@needs_numba
@pytest.mark.parametrize("cons", ORDER4_SUBSETS + [tuple(core.CONSTRAINTS)], ids=lambda c: "+".join(c))
def test_backends_agree_order4(cons):
    a = csp.enumerate_tables(4, cons, backend="numba")
    b = csp.enumerate_tables(4, cons, backend="numpy")
    assert a.raw_solutions == b.raw_solutions
    assert a.search_stats == b.search_stats


@needs_numba
@pytest.mark.slow
def test_backends_agree_order6(order6):
    b = csp.enumerate_tables(6, backend="numpy")
    assert b.raw_solutions == order6.raw_solutions
    assert b.search_stats == order6.search_stats


def test_backend_env_flag(monkeypatch):
    from otundo import _accel
    monkeypatch.setenv("OTUNDO_BACKEND", "numpy")
    assert _accel.default_backend() == "numpy"
    assert csp._search_impl(None) is kernels_np
    monkeypatch.setenv("OTUNDO_BACKEND", "fortran")
    with pytest.raises(ValueError):
        _accel.default_backend()
    with pytest.raises(ValueError):
        csp.enumerate_tables(2, backend="fortran")


def test_order6_search_stats(order6):
    stats = order6.search_stats
    assert stats["nodes"] == 13753905
    assert stats["prunes"] == {"TP2": 762982, "IP2": 7824965, "IP3": 513757, "C1": 2750781, "C2": 1901408}


def test_parallel_split_matches_serial(order6):
    par = csp.enumerate_tables(6, workers=4)
    assert par.raw_solutions == order6.raw_solutions
    assert par.search_stats == order6.search_stats


def test_checkpoint_resume(tmp_path, order6):
    ck = tmp_path / "run.jsonl"
    first = csp.enumerate_tables(6, checkpoint=ck)
    lines = ck.read_text().splitlines()
    assert first.raw_solutions == order6.raw_solutions
    assert len(lines) > 2
    # drop half the finished subtrees: they are redone, the rest are reused
    ck.write_text("\n".join(lines[: len(lines) // 2]) + "\n")
    again = csp.enumerate_tables(6, checkpoint=ck)
    assert again.raw_solutions == order6.raw_solutions
    assert again.search_stats == order6.search_stats
    with pytest.raises(ValueError):
        csp.enumerate_tables(6, ["TP2", "C1"], checkpoint=ck)


@pytest.mark.parametrize("backend", ["numba", "numpy"] if HAS_NUMBA else ["numpy"])
def test_node_budget_truncates(backend, monkeypatch):
    capped = csp.enumerate_tables(6, backend=backend, max_nodes=5000)
    assert capped.truncated
    assert capped.search_stats["nodes"] <= 5000
    monkeypatch.setenv("OTUNDO_MAX_NODES", "100")
    assert csp.enumerate_tables(4, backend=backend).truncated
    assert not csp.enumerate_tables(4, backend=backend, max_nodes=0).truncated


def test_exploratory_order8_runs_under_budget():
    capped = csp.enumerate_tables(8, max_nodes=20000)
    assert capped.truncated
    for t in capped.raw_solutions:
        assert core.satisfied(t.array)


@needs_numba
def test_prefix_kernels_agree_on_partial_tables():
    # first-row prefixes then completion equal a straight run, on both backends
    n, size = 4, 16
    mask = kernels.to_mask(core.CONSTRAINTS)
    for impl in (kernels, kernels_np):
        prefixes, _, _ = impl.dfs(np.full(size, -1, np.int8), 0, n, n, mask, 0, np.zeros(5, np.int64))
        rows = [impl.dfs(p, n, size, n, mask, 0, np.zeros(5, np.int64))[0] for p in prefixes]
        assert np.concatenate(rows).tolist() == [list(identity_table(4).array.ravel())]


def test_incremental_check_matches_total_check():
    # any complete table the compiled search accepts is accepted by the vector filter and vice versa
    rng = np.random.default_rng(0)
    n = 4
    mask = kernels.to_mask(core.CONSTRAINTS)
    for _ in range(300):
        t = rng.integers(0, n, size=(n, n)).astype(np.int8)
        flat = t.ravel()
        incremental = all(kernels.conflict(np.where(np.arange(16) <= q, flat, -1).astype(np.int8),
                                           n, q // n, q % n, mask) < 0 for q in range(16))
        c1_ok = not any(flat[q] == n - 1 - q // n for q in range(16))
        assert (incremental and c1_ok) == bool(core.satisfied(t))


# -- partial tables ------------------------------------------------------------


def test_partial_table():
    s = OpSet(4)
    p = csp.PartialTable(s)
    assert p.unassigned == 16
    with pytest.raises(ValueError):
        csp.PartialTable(s, [[4, None, None, None]] + [[None] * 4] * 3)
    full = csp.PartialTable.from_array(s, identity_table(4).array.ravel())
    assert full.unassigned == 0 and full.to_table() == identity_table(4)
    with pytest.raises(ValueError):
        p.to_table()
    assert (p.to_array() == -1).all()


# -- symmetry ------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_permutation_group(n):
    perms = list(csp.inverse_preserving_permutations(n))
    assert len(perms) == 2 ** (n // 2) * math.factorial(n // 2)
    assert len(set(map(tuple, perms))) == len(perms)
    for p in perms:
        for i in range(1, n + 1):
            assert p[n - i] == n + 1 - p[i - 1]


def _naive_canonical(t):
    # all n! permutations, keep those commuting with the pairing, relabel by definition
    n, best = t.n, None
    for p in itertools.permutations(range(1, n + 1)):
        if any(p[n - i] != n + 1 - p[i - 1] for i in range(1, n + 1)):
            continue
        cells = [[0] * n for _ in range(n)]
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                cells[p[i - 1] - 1][p[j - 1] - 1] = p[t.it(i, j) - 1]
        flat = tuple(v for r in cells for v in r)
        best = flat if best is None or flat < best else best
    return best


small_tables = st.sampled_from([2, 4, 6]).flatmap(
    lambda n: st.lists(st.lists(st.integers(1, n), min_size=n, max_size=n), min_size=n, max_size=n)
).map(TransformTable)


@settings(max_examples=60, deadline=None)
@given(small_tables)
def test_canonicalize_matches_naive(t):
    assert csp.canonicalize(t).flat() == _naive_canonical(t)


@settings(max_examples=60, deadline=None)
@given(small_tables, st.randoms(use_true_random=False))
def test_relabeling_preserves_verdicts_and_class(t, rnd):
    perm = rnd.choice(list(csp.inverse_preserving_permutations(t.n)))
    moved = csp.relabel(t, perm)
    for name, check in core.CHECKERS.items():
        assert check(moved).holds == check(t).holds
    assert csp.canonicalize(moved) == csp.canonicalize(t)
    assert csp.canonicalize(csp.canonicalize(t)) == csp.canonicalize(t)


def test_relabel_rejects_non_permutation():
    with pytest.raises(ValueError):
        csp.relabel(identity_table(4), [1, 1, 2, 3])


def test_equivalent_rejects_mixed_orders():
    with pytest.raises(ValueError):
        csp.equivalent(identity_table(2), identity_table(4))


# -- patterns ------------------------------------------------------------------


def test_pattern_of_published_tables():
    same = csp.classify_pattern(SPLIT_SAME_6)
    assert same.kind == csp.SPLIT
    assert same.partition == ((2, 5), (1, 3, 4, 6))
    assert dict(((a, b), r) for a, b, r in same.inter_rule) == {(1, 2): csp.FIRST_ARG, (2, 1): csp.SAME}
    inv = csp.classify_pattern(SPLIT_INVERTED_6)
    assert dict(((a, b), r) for a, b, r in inv.inter_rule)[(2, 1)] == csp.INVERTED
    assert csp.classify_pattern(identity_table(6)).kind == csp.COMMUTATIVE


def test_pattern_needs_valid_table():
    with pytest.raises(ValueError):
        csp.classify_pattern(core.IT_BIN)


def test_commutative_pattern_iff_identity(order6):
    for rep, pat in zip((r for r, _ in order6.classes), order6.patterns):
        assert (pat.kind == csp.COMMUTATIVE) == core.is_commutative_table(rep)


def test_split_blocks_closed_and_internally_identity(order6):
    for rep, pat in zip((r for r, _ in order6.classes), order6.patterns):
        if pat.kind != csp.SPLIT:
            continue
        for block in pat.partition:
            assert {7 - o for o in block} == set(block)
            assert all(rep.it(x, y) == x for x in block for y in block)


def test_solution_set_round_trip(order6):
    doc = json.loads(json.dumps(order6.to_dict(raw=True)))
    back = csp.SolutionSet.from_dict(doc)
    assert back.raw_solutions == order6.raw_solutions
    assert back.classes == order6.classes
    assert back.patterns == order6.patterns
    assert back.search_stats == order6.search_stats
    assert "raw_solutions" not in order6.to_dict()
    assert "search_stats" not in order6.to_dict(stats=False)


def test_subset_search_skips_pattern_labels():
    sols = csp.enumerate_tables(4, ["TP2", "IP2", "C1"])
    assert len(sols.raw_solutions) == 9
    assert all(p is None for p in sols.patterns)
