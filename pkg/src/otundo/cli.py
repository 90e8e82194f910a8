"""Command-line entry point: ``otundo {enumerate,check,oracle,simulate}``.

Exit status is 0 when everything requested holds, 1 for a negative verdict
(violated property, oracle mismatch, divergence) and 2 for bad input.
Structured output is canonical JSON (sorted keys), so identical invocations
print identical bytes.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import core, csp, models, sim
from ._accel import BACKENDS
from .core import TransformTable

OK, VIOLATED, USAGE = 0, 1, 2


class InputError(Exception):
    pass


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def render_table(t: TransformTable) -> str:
    """Grid with an ``IT`` corner, ``op_j`` column headers and ``op_i`` row headers."""
    head = ["IT"] + [f"op_{j}" for j in t.opset.ops]
    rows = [[f"op_{i}"] + [f"op_{v}" for v in t.cells[i - 1]] for i in t.opset.ops]
    width = max(len(c) for c in head + [c for r in rows for c in r])
    line = "+" + "+".join("-" * (width + 2) for _ in head) + "+"
    fmt = lambda cells: "| " + " | ".join(c.ljust(width) for c in cells) + " |"
    out = [line, fmt(head), line]
    for r in rows:
        out += [fmt(r), line]
    return "\n".join(out)


def _describe_pattern(p) -> str:
    if p is None:
        return "unclassified"
    if p.kind != csp.SPLIT:
        return p.kind
    blocks = " | ".join("{" + ", ".join(f"op_{o}" for o in b) + "}" for b in p.partition)
    rules = ", ".join(f"{a}x{b}={r}" for a, b, r in p.inter_rule)
    return f"SPLIT {blocks} ({rules})"


def _read_table(ref: str) -> TransformTable:
    path = Path(ref)
    if path.exists():
        try:
            return TransformTable.loads(path.read_text())
        except OSError as exc:
            raise InputError(f"cannot read {ref}: {exc}") from exc
    try:
        return core.named_table(ref)
    except (KeyError, ValueError):
        raise InputError(f"{ref!r} is neither a table file nor a built-in table name") from None


# -- commands --------------------------------------------------------------------


def cmd_enumerate(args) -> int:
    sols = csp.enumerate_tables(args.n, args.constraints, backend=args.backend, workers=args.workers,
                                max_nodes=args.max_nodes, checkpoint=args.checkpoint)
    if args.format == "structured":
        _emit(sols.to_dict(raw=args.raw, stats=not args.no_stats))
        return OK
    stats = sols.search_stats
    print(f"order {sols.order}, constraints {','.join(sols.constraints)}: "
          f"{len(sols.raw_solutions)} solutions in {len(sols.classes)} classes")
    if not args.no_stats:
        prunes = ", ".join(f"{k}={v}" for k, v in stats["prunes"].items())
        print(f"nodes {stats['nodes']}; prunes {prunes}")
    if sols.truncated:
        print("search truncated by the node budget; lists are incomplete")
    for k, (rep, count) in enumerate(sols.classes, start=1):
        pat = sols.patterns[k - 1] if sols.patterns else None
        print(f"\nSolution {k} ({count} raw members, {_describe_pattern(pat)})")
        print(render_table(rep))
    if args.raw:
        for k, t in enumerate(sols.raw_solutions, start=1):
            print(f"\nRaw {k}")
            print(render_table(t))
    return OK


def cmd_check(args) -> int:
    t = _read_table(args.table)
    reports = core.check_all(t)
    doc = {"table": t.to_dict(), "undoable": core.is_undoable(t),
           "commutative_table": core.is_commutative_table(t)}
    if args.model:
        try:
            m = models.get_model(args.model)
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
        if m.opset != t.opset:
            raise InputError(f"model {m.name} has order {m.opset.n}, table has order {t.n}")
        reports += [models.check_tp1(m, t), models.check_ip1(m)]
        commut = models.check_commutativity(m)
        doc["model"] = m.name
        doc["commutativity"] = commut.to_dict()
    doc["properties"] = [r.to_dict() for r in reports]
    status = OK if all(r.holds for r in reports) else VIOLATED
    doc["verdict"] = "holds" if status == OK else "violated"
    if args.format == "structured":
        _emit(doc)
    else:
        print(render_table(t))
        for r in reports:
            shown = ", ".join(str(w) for w in r.witnesses[:8])
            more = f" (+{len(r.witnesses) - 8} more)" if len(r.witnesses) > 8 else ""
            note = f" [{r.note}]" if r.note else ""
            print(f"{r.property:<5} {'holds' if r.holds else 'FAILS'}{note}"
                  + (f": {shown}{more}" if r.witnesses else ""))
        if args.model:
            print(f"commutativity: {'holds' if commut.holds else 'fails'} (informational)")
    return status


def cmd_oracle(args) -> int:
    if args.n not in csp.ORACLE_ORDERS:
        raise InputError(f"the oracle only covers orders {csp.ORACLE_ORDERS}; order {args.n} is infeasible")
    fast = csp.enumerate_tables(args.n, args.constraints, backend=args.backend)
    slow = csp.brute_force_oracle(args.n, args.constraints, backend=args.backend)
    a, b = set(fast.raw_solutions), set(slow.raw_solutions)
    same = fast.raw_solutions == slow.raw_solutions
    doc = {"order": args.n, "constraints": list(fast.constraints), "identical": same,
           "search": len(a), "oracle": len(b), "candidates": slow.search_stats["candidates"],
           "only_search": [t.to_dict() for t in sorted(a - b)],
           "only_oracle": [t.to_dict() for t in sorted(b - a)]}
    if args.format == "structured":
        _emit(doc)
    else:
        print(f"search {len(a)} solutions, oracle {len(b)} solutions "
              f"({doc['candidates']} candidates): {'identical' if same else 'MISMATCH'}")
        for label, key in (("only in search", "only_search"), ("only in oracle", "only_oracle")):
            for t in doc[key]:
                print(f"{label}: {t['cells']}")
    return OK if same else VIOLATED


def cmd_simulate(args) -> int:
    rep = sim.run_scenario(sim.load_scenario(args.scenario))
    if args.format == "structured":
        _emit(rep.to_dict())
    else:
        print(f"scenario {rep.name}: states {list(rep.states)}; "
              f"{'converged' if rep.converged else 'DIVERGED'}")
        for u in rep.undos:
            flag = " (target has causal dependents)" if u.depends else ""
            print(f"undo {u.target} at site {u.site}: inverse op_{u.inverse}, "
                  f"equivalence {'holds' if u.equivalent else 'FAILS'}{flag}")
    return OK if rep.ok else VIOLATED


# -- parser ----------------------------------------------------------------------


def _constraints(text):
    try:
        return tuple(sorted(core.parse_constraints(text)))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="otundo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt(sp, default):
        sp.add_argument("--format", choices=("table", "structured"), default=default)

    def cons(sp):
        sp.add_argument("--constraints", type=_constraints, default=None,
                        help="comma-separated subset of TP2,IP2,IP3,C1,C2 (default: all)")
        sp.add_argument("--backend", choices=BACKENDS, default=None,
                        help="search kernels (default: OTUNDO_BACKEND or numba)")

    e = sub.add_parser("enumerate", help="all tables of an order satisfying the constraints")
    e.add_argument("--n", type=int, required=True)
    cons(e)
    e.add_argument("--raw", action="store_true", help="also list every raw solution")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--max-nodes", type=int, default=None,
                   help="node budget (default: OTUNDO_MAX_NODES, 0 = unlimited)")
    e.add_argument("--checkpoint", default=None, help="JSONL file recording finished subtrees")
    e.add_argument("--no-stats", action="store_true", help="omit search counters")
    fmt(e, "table")
    e.set_defaults(func=cmd_enumerate)

    c = sub.add_parser("check", help="property battery for a table file or built-in name")
    c.add_argument("table")
    c.add_argument("--model", default=None, help="also check TP1, IP1 and commutativity on a fixture")
    fmt(c, "structured")
    c.set_defaults(func=cmd_check)

    o = sub.add_parser("oracle", help="compare the search with the exhaustive scan (orders 2, 4)")
    o.add_argument("--n", type=int, required=True)
    cons(o)
    fmt(o, "structured")
    o.set_defaults(func=cmd_oracle)

    s = sub.add_parser("simulate", help="run a scenario file or a bundled scenario name")
    s.add_argument("scenario")
    fmt(s, "structured")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ValueError, KeyError, IndexError) as exc:
        # ScenarioError, FixtureError and TableFormatError are ValueErrors
        msg = exc.args[0] if exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
