"""Deterministic multi-site replica simulator with selective undo.

Sites exchange generated operations under vector-clock causality.  A remote
operation is integrated by transforming it against the executed forms of the
concurrent entries already in the local log, in log order.  Undone entries
and the inverses that neutralise them are skipped during that fold.

Undo is replayed per site: an ``undo`` event names the generated event to
undo and the site runs the inverse/suffix-transform/exclusion scheme on its
own log.  Undo entries do not advance clocks, so clocks count generations.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import core
from .core import TransformTable
from .models import StateModel, get_model, sequences_equivalent


class ScenarioError(ValueError):
    pass


# -- clocks --------------------------------------------------------------------

def _leq(a, b) -> bool:
    if len(a) != len(b):
        raise ValueError(f"clock lengths differ: {len(a)} vs {len(b)}")
    return all(x <= y for x, y in zip(a, b))


def happened_before(a, b) -> bool:
    return _leq(a, b) and tuple(a) != tuple(b)


def concurrent(a, b) -> bool:
    """Neither clock dominates the other."""
    return not _leq(a, b) and not _leq(b, a)


# -- log entries ---------------------------------------------------------------


@dataclass
class TimedOp:
    event: str
    op: int                       # original form, as generated
    executed: int                 # form executed at this site
    origin: int                   # 1-based site id
    clock: tuple
    undone: bool = False
    undo_of: str | None = None    # set on inverse entries produced by an undo

    @property
    def neutral(self) -> bool:
        """Skipped by later transforms: an undone entry or the inverse cancelling one."""
        return self.undone or self.undo_of is not None

    def to_dict(self) -> dict:
        return {"event": self.event, "op": self.op, "executed": self.executed,
                "origin": self.origin, "clock": list(self.clock),
                "undone": self.undone, "undo_of": self.undo_of}

    @classmethod
    def from_dict(cls, doc) -> "TimedOp":
        return cls(doc["event"], doc["op"], doc["executed"], doc["origin"],
                   tuple(doc["clock"]), doc["undone"], doc["undo_of"])


@dataclass
class Site:
    id: int
    state: object
    clock: list
    log: list = field(default_factory=list)

    def entry(self, event: str) -> int:
        for k, e in enumerate(self.log):
            if e.event == event and e.undo_of is None:
                return k
        raise ScenarioError(f"site {self.id} has not executed event {event!r}")

    def has(self, event: str) -> bool:
        return any(e.event == event and e.undo_of is None for e in self.log)

    def executed(self) -> list[int]:
        return [e.executed for e in self.log]


def deliverable(site: Site, op: TimedOp) -> bool:
    """Causal delivery: next from its origin, everything else it saw already here."""
    for k, (v, mine) in enumerate(zip(op.clock, site.clock)):
        if k == op.origin - 1:
            if v != mine + 1:
                return False
        elif v > mine:
            return False
    return True


def integrate_remote(site: Site, incoming: TimedOp, table: TransformTable,
                     model: StateModel, transform: bool = True) -> int:
    """Transform ``incoming`` against concurrent log entries, execute and append it."""
    if not deliverable(site, incoming):
        raise ScenarioError(f"event {incoming.event!r} is not causally deliverable at site {site.id}")
    op = incoming.op
    if transform:
        against = [e.executed for e in site.log
                   if not e.neutral and concurrent(e.clock, incoming.clock)]
        op = core.transform_seq(table, op, against)
    site.state = model.apply(site.state, op)
    site.log.append(TimedOp(incoming.event, incoming.op, op, incoming.origin, incoming.clock))
    site.clock = [max(a, b) for a, b in zip(site.clock, incoming.clock)]
    return op


def selective_undo(site: Site, target: int, table: TransformTable, model: StateModel,
                   event: str | None = None) -> int:
    """Undo the log entry at position ``target``; returns the executed inverse.

    The inverse of the entry's executed form is folded through the active
    suffix; each suffix entry is rewritten to the form it would have had
    without the target (the exclusion loop).  The inverse is executed and
    appended, linked to the target.
    """
    if not 0 <= target < len(site.log):
        raise ScenarioError(f"site {site.id} has no log position {target}")
    victim = site.log[target]
    if victim.undo_of is not None:
        raise ScenarioError("cannot undo an undo entry")
    if victim.undone:
        raise ScenarioError(f"event {victim.event!r} is already undone at site {site.id}")
    victim.undone = True
    op = model.opset.inverse(victim.executed)
    for e in site.log[target + 1:]:
        if e.neutral:
            continue
        e.executed, op = table.it(e.executed, op), table.it(op, e.executed)
    site.state = model.apply(site.state, op)
    site.log.append(TimedOp(event or f"undo:{victim.event}", model.opset.inverse(victim.op), op,
                            site.id, tuple(site.clock), undo_of=victim.event))
    return op


def _ideal_without(log: list, target: str, table: TransformTable, transform: bool) -> list[int]:
    """Executed sequence the site would hold had ``target`` never been generated.

    Every other active entry is re-integrated in the same order against the
    rebuilt log; earlier do/undo pairs are dropped on both sides.
    """
    kept: list[TimedOp] = []
    for e in log:
        if e.event == target or e.neutral:
            continue
        op = e.op
        if transform:
            op = core.transform_seq(table, op, [k.executed for k in kept if concurrent(k.clock, e.clock)])
        kept.append(TimedOp(e.event, e.op, op, e.origin, e.clock))
    return [k.executed for k in kept]


# -- scenarios -------------------------------------------------------------------


EVENT_TYPES = ("generate", "deliver", "undo")


@dataclass
class Scenario:
    name: str
    model: StateModel
    table: TransformTable
    sites: int
    initial_state: object
    events: list                # dicts: generate{id,site,op} deliver{site,event} undo{site,event}
    transform: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        try:
            model = get_model(doc["model"])
            ref = doc.get("table")
            if ref is None:
                table = model.table
            elif isinstance(ref, dict):
                table = TransformTable.from_dict(ref)
            else:
                table = core.named_table(ref, model.opset.n)
            if table.opset != model.opset:
                raise ScenarioError(f"table order {table.n} does not match model {model.name}")
            sites = int(doc["sites"])
            if sites < 1:
                raise ScenarioError("a scenario needs at least one site")
            events = []
            for k, ev in enumerate(doc["events"]):
                kind = ev["type"]
                if kind not in EVENT_TYPES:
                    raise ScenarioError(f"event {k}: unknown type {kind!r}")
                site = int(ev["site"])
                if not 1 <= site <= sites:
                    raise ScenarioError(f"event {k}: site {site} out of range 1..{sites}")
                if kind == "generate":
                    events.append({"type": kind, "id": str(ev.get("id", f"e{k + 1}")),
                                   "site": site, "op": model.op_id(ev["op"])})
                else:
                    events.append({"type": kind, "site": site, "event": str(ev["event"])})
            return cls(name=doc.get("name", ""), model=model, table=table, sites=sites,
                       initial_state=model.decode_state(doc["initial_state"]),
                       events=events, transform=bool(doc.get("transform", True)))
        except ScenarioError:
            raise
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc

    def to_dict(self) -> dict:
        return {"name": self.name, "model": self.model.name, "table": self.table.to_dict(),
                "sites": self.sites, "initial_state": self.model.encode_state(self.initial_state),
                "transform": self.transform, "events": [dict(e) for e in self.events]}


def load_scenario(path) -> Scenario:
    """Read a scenario file; a bare bundled name such as ``fig4b`` also works."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("otundo").joinpath("scenarios", p.stem + ".json")
        if p.parent == Path(".") or p.parent.name == "scenarios":
            if bundled.is_file():
                return Scenario.from_dict(json.loads(bundled.read_text()))
        raise ScenarioError(f"no such scenario file: {path}")
    try:
        doc = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return Scenario.from_dict(doc)


def bundled_scenarios() -> list[str]:
    folder = resources.files("otundo").joinpath("scenarios")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


@dataclass(frozen=True)
class UndoVerdict:
    site: int
    target: str
    inverse: int          # executed inverse op̄′
    equivalent: bool      # L·op̄′ ≡ L′ on the model's states
    depends: bool         # a later active entry causally depends on the target

    def to_dict(self) -> dict:
        return {"site": self.site, "target": self.target, "inverse": self.inverse,
                "equivalent": self.equivalent, "depends": self.depends}


@dataclass(frozen=True)
class SimulationReport:
    name: str
    states: tuple
    logs: tuple
    converged: bool
    undos: tuple = ()

    @property
    def undo_ok(self) -> bool:
        return all(u.equivalent for u in self.undos)

    @property
    def ok(self) -> bool:
        return self.converged and self.undo_ok

    def to_dict(self) -> dict:
        return {"name": self.name, "states": list(self.states),
                "converged": self.converged, "undo_equivalent": self.undo_ok,
                "undos": [u.to_dict() for u in self.undos],
                "logs": [[e.to_dict() for e in log] for log in self.logs]}

    @classmethod
    def from_dict(cls, doc) -> "SimulationReport":
        return cls(doc["name"], tuple(doc["states"]),
                   tuple(tuple(TimedOp.from_dict(e) for e in log) for log in doc["logs"]),
                   doc["converged"], tuple(UndoVerdict(**u) for u in doc["undos"]))


def _converged(sites: list[Site]) -> bool:
    groups: dict = {}
    for s in sites:
        key = (frozenset(e.event for e in s.log if e.undo_of is None),
               frozenset(e.event for e in s.log if e.undone))
        groups.setdefault(key, []).append(s.state)
    return all(all(st == states[0] for st in states) for states in groups.values())


def run_scenario(sc: Scenario) -> SimulationReport:
    model, table = sc.model, sc.table
    sites = [Site(k + 1, sc.initial_state, [0] * sc.sites) for k in range(sc.sites)]
    generated: dict[str, TimedOp] = {}
    undos = []
    for k, ev in enumerate(sc.events):
        site = sites[ev["site"] - 1]
        if ev["type"] == "generate":
            if ev["id"] in generated:
                raise ScenarioError(f"event {k}: duplicate id {ev['id']!r}")
            site.clock[site.id - 1] += 1
            op = TimedOp(ev["id"], ev["op"], ev["op"], site.id, tuple(site.clock))
            generated[ev["id"]] = op
            site.state = model.apply(site.state, op.op)
            site.log.append(TimedOp(op.event, op.op, op.op, op.origin, op.clock))
        elif ev["type"] == "deliver":
            src = generated.get(ev["event"])
            if src is None:
                raise ScenarioError(f"event {k}: {ev['event']!r} delivered before it was generated")
            if site.has(src.event):
                raise ScenarioError(f"event {k}: {src.event!r} already executed at site {site.id}")
            integrate_remote(site, src, table, model, sc.transform)
        else:
            pos = site.entry(ev["event"])
            before = [TimedOp(**vars(e)) for e in site.log]   # the undo rewrites entries in place
            target = before[pos]
            depends = any(not e.neutral and happened_before(target.clock, e.clock) for e in before[pos + 1:])
            inv = selective_undo(site, pos, table, model)
            if depends:
                # no target-free history exists; compare against the rewritten log
                reference = [e.executed for e in site.log[:-1] if e.event != target.event]
            else:
                reference = _ideal_without(before, target.event, table, sc.transform)
            ok = sequences_equivalent(model, [e.executed for e in before] + [inv], reference)
            undos.append(UndoVerdict(site.id, target.event, inv, ok, depends))
    return SimulationReport(
        name=sc.name, states=tuple(model.encode_state(s.state) for s in sites),
        logs=tuple(tuple(s.log) for s in sites), converged=_converged(sites), undos=tuple(undos))


def replay_log(model: StateModel, initial, log) -> object:
    """State from executing the log's active entries (do/undo pairs skipped) from ``initial``.

    Matches the site state whenever the undo is sound, i.e. for undoable tables.
    """
    return model.run(initial, [e.executed for e in log if not e.neutral])


# -- random scenarios ----------------------------------------------------------


def random_scenario(rng: random.Random, model: StateModel, table: TransformTable | None = None,
                    sites: int = 2, ops: int = 6, undo: bool = True, name: str = "random") -> Scenario:
    """A causally valid random script: ``ops`` generations at random sites,
    random deliveries in between, full delivery at the end, then one
    generated event undone at every site.
    """
    table = model.table if table is None else table
    clocks = [[0] * sites for _ in range(sites)]
    pending = [[] for _ in range(sites)]          # per site: (id, origin, clock) not yet delivered
    events = []
    made = 0

    def ready(s):
        return [p for p in pending[s] if _deliverable_clock(clocks[s], p[1], p[2])]

    while made < ops or any(pending):
        can_deliver = [s for s in range(sites) if ready(s)]
        if made < ops and (not can_deliver or rng.random() < 0.5):
            s = rng.randrange(sites)
            clocks[s][s] += 1
            made += 1
            eid = f"e{made}"
            events.append({"type": "generate", "id": eid, "site": s + 1,
                           "op": rng.randint(1, model.opset.n)})
            for other in range(sites):
                if other != s:
                    pending[other].append((eid, s, tuple(clocks[s])))
        else:
            s = rng.choice(can_deliver)
            p = rng.choice(ready(s))
            pending[s].remove(p)
            clocks[s] = [max(a, b) for a, b in zip(clocks[s], p[2])]
            events.append({"type": "deliver", "site": s + 1, "event": p[0]})
    if undo and made:
        target = f"e{rng.randint(1, made)}"
        for s in range(sites):
            events.append({"type": "undo", "site": s + 1, "event": target})
    return Scenario(name=name, model=model, table=table, sites=sites,
                    initial_state=rng.choice(model.states), events=events)


def _deliverable_clock(clock, origin, vc) -> bool:
    return all((v == clock[k] + 1) if k == origin else v <= clock[k] for k, v in enumerate(vc))
