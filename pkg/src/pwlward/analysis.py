"""Static analysis of rule sets: predicate graph, levels, affected positions,
variable classes, wards, and the fragment checks built on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from .core import CQ, TGD, Atom, Program, Variable


@dataclass(frozen=True, order=True)
class Position:
    predicate: str
    index: int  # 1-based

    def __str__(self):
        return f"{self.predicate}[{self.index}]"


@dataclass
class PredicateGraph:
    nodes: frozenset
    edges: frozenset
    scc_id: dict
    cyclic_sccs: frozenset  # ids of SCCs that contain a cycle
    order: list  # SCC ids in topological order

    def successors(self, p: str) -> set:
        return {r for (a, r) in self.edges if a == p}

    def predecessors(self, p: str) -> set:
        return {a for (a, r) in self.edges if r == p}

    def rec(self, p: str) -> frozenset:
        """Predicates mutually recursive with ``p`` (empty if ``p`` is on no cycle)."""
        sid = self.scc_id.get(p)
        if sid is None or sid not in self.cyclic_sccs:
            return frozenset()
        return frozenset(q for q, s in self.scc_id.items() if s == sid)

    def to_dict(self) -> dict:
        return {
            "nodes": sorted(self.nodes),
            "edges": sorted([a, b] for a, b in self.edges),
            "scc_id": dict(sorted(self.scc_id.items())),
        }


def predicate_graph(program: Program) -> PredicateGraph:
    g = nx.DiGraph()
    g.add_nodes_from(sorted(program.schema))
    for r in program:
        for b in r.body:
            for h in r.head:
                g.add_edge(b.predicate, h.predicate)
    cond = nx.condensation(g)
    # number SCCs in a deterministic topological order
    order = list(nx.lexicographical_topological_sort(
        cond, key=lambda n: min(cond.nodes[n]["members"])))
    renumber = {old: i for i, old in enumerate(order)}
    scc_id = {p: renumber[c] for p, c in cond.graph["mapping"].items()}
    cyclic = set()
    for old in order:
        members = cond.nodes[old]["members"]
        if len(members) > 1 or any(g.has_edge(m, m) for m in members):
            cyclic.add(renumber[old])
    return PredicateGraph(
        nodes=frozenset(g.nodes),
        edges=frozenset(g.edges),
        scc_id=scc_id,
        cyclic_sccs=frozenset(cyclic),
        order=list(range(len(order))),
    )


def mutually_recursive(g: PredicateGraph, p: str, r: str) -> bool:
    sid = g.scc_id.get(p)
    return sid is not None and sid == g.scc_id.get(r) and sid in g.cyclic_sccs


def levels(program: Program, graph: PredicateGraph | None = None) -> dict:
    """Predicate levels: one more than the deepest predecessor outside ``rec(P)``."""
    g = graph or predicate_graph(program)
    preds = {p: set() for p in g.nodes}
    for a, b in g.edges:
        preds[b].add(a)
    by_scc: dict = {}
    for p, s in g.scc_id.items():
        by_scc.setdefault(s, []).append(p)
    out: dict = {}
    for s in g.order:
        for p in sorted(by_scc[s]):
            rec = g.rec(p)
            out[p] = 1 + max((out[r] for r in preds[p] if r not in rec), default=0)
    return out


def check_levels(program: Program, lv: dict, graph: PredicateGraph | None = None) -> bool:
    g = graph or predicate_graph(program)
    for p in g.nodes:
        rec = g.rec(p)
        expect = 1 + max((lv[r] for r in g.predecessors(p) if r not in rec), default=0)
        if lv.get(p) != expect:
            return False
    return True


def stratum_levels(program: Program, graph: PredicateGraph | None = None) -> dict:
    """SCC-uniform levels: 1 + the deepest predecessor SCC, shared by all members."""
    g = graph or predicate_graph(program)
    preds: dict = {}
    for a, b in g.edges:
        sa, sb = g.scc_id[a], g.scc_id[b]
        if sa != sb:
            preds.setdefault(sb, set()).add(sa)
    lvl: dict = {}
    for s in g.order:
        lvl[s] = 1 + max((lvl[t] for t in preds.get(s, ())), default=0)
    return {p: lvl[s] for p, s in g.scc_id.items()}


def affected_positions(program: Program) -> frozenset:
    affected = set()
    for r in program:
        ex = set(r.existentials)
        for h in r.head:
            for i, t in enumerate(h.args, 1):
                if t in ex:
                    affected.add(Position(h.predicate, i))
    changed = True
    while changed:
        changed = False
        for r in program:
            for v in r.frontier:
                occ = [Position(b.predicate, i) for b in r.body
                       for i, t in enumerate(b.args, 1) if t is v]
                if not all(o in affected for o in occ):
                    continue
                for h in r.head:
                    for i, t in enumerate(h.args, 1):
                        pos = Position(h.predicate, i)
                        if t is v and pos not in affected:
                            affected.add(pos)
                            changed = True
    return frozenset(affected)


@dataclass
class VariableClasses:
    harmless: frozenset
    harmful: frozenset
    dangerous: frozenset


def classify_variables(program: Program, rule: TGD, affected: frozenset | None = None) -> VariableClasses:
    if affected is None:
        affected = affected_positions(program)
    harmless, harmful = set(), set()
    for v in rule.body_variables:
        occ = (Position(b.predicate, i) for b in rule.body
               for i, t in enumerate(b.args, 1) if t is v)
        if any(o not in affected for o in occ):
            harmless.add(v)
        else:
            harmful.add(v)
    dangerous = harmful & rule.frontier
    return VariableClasses(frozenset(harmless), frozenset(harmful), frozenset(dangerous))


@dataclass
class RuleAnalysis:
    rule: TGD
    harmless: frozenset
    harmful: frozenset
    dangerous: frozenset
    ward: int | None = None  # index into rule.body
    violation: str | None = None
    recursive_body_atoms: int = 0

    @property
    def ward_atom(self) -> Atom | None:
        return None if self.ward is None else self.rule.body[self.ward]

    @property
    def warded(self) -> bool:
        return not self.dangerous or self.ward is not None

    def to_dict(self) -> dict:
        names = lambda vs: sorted(v.name for v in vs)
        return {
            "rule": str(self.rule),
            "harmless": names(self.harmless),
            "harmful": names(self.harmful),
            "dangerous": names(self.dangerous),
            "ward": None if self.ward is None else str(self.ward_atom),
            "violation": self.violation,
            "recursive_body_atoms": self.recursive_body_atoms,
        }


def find_ward(rule: TGD, classes: VariableClasses) -> tuple:
    """Return ``(body index, None)`` for the first ward, or ``(None, explanation)``."""
    if not classes.dangerous:
        return None, None
    reasons = []
    for i, a in enumerate(rule.body):
        vs = a.variables()
        missing = classes.dangerous - vs
        if missing:
            reasons.append(f"{a} misses dangerous {', '.join(sorted(v.name for v in missing))}")
            continue
        rest = {t for j, b in enumerate(rule.body) if j != i for t in b.args if isinstance(t, Variable)}
        bad = (vs & rest) & classes.harmful
        if bad:
            reasons.append(f"{a} shares harmful {', '.join(sorted(v.name for v in bad))} with the rest of the body")
            continue
        return i, None
    if not any(classes.dangerous <= b.variables() for b in rule.body):
        ds = sorted(classes.dangerous, key=lambda v: v.name)
        witness = None
        for x in ds:
            for y in ds:
                if x is not y and not any({x, y} <= b.variables() for b in rule.body):
                    witness = (x, y)
                    break
            if witness:
                break
        if witness:
            return None, f"dangerous variables {witness[0]} and {witness[1]} never occur in one body atom"
    return None, "; ".join(reasons)


def rule_analysis(program: Program, affected: frozenset | None = None,
                  graph: PredicateGraph | None = None) -> list[RuleAnalysis]:
    if affected is None:
        affected = affected_positions(program)
    g = graph or predicate_graph(program)
    out = []
    for r in program:
        c = classify_variables(program, r, affected)
        ward, violation = find_ward(r, c)
        heads = {h.predicate for h in r.head}
        nrec = sum(1 for b in r.body if any(mutually_recursive(g, b.predicate, h) for h in heads))
        out.append(RuleAnalysis(r, c.harmless, c.harmful, c.dangerous, ward, violation, nrec))
    return out


def is_warded(program: Program) -> bool:
    return all(ra.warded for ra in rule_analysis(program))


def is_pwl(program: Program) -> bool:
    return all(ra.recursive_body_atoms <= 1 for ra in rule_analysis(program))


def is_intensionally_linear(program: Program) -> bool:
    idb = program.intensional
    return all(sum(b.predicate in idb for b in r.body) <= 1 for r in program)


def is_full_datalog(program: Program) -> bool:
    """No existential variables and a single head atom per rule."""
    return all(r.is_full and len(r.head) == 1 for r in program)


@dataclass
class ClassificationReport:
    warded: bool
    pwl: bool
    intensionally_linear: bool
    full_datalog: bool
    single_head: bool
    affected: frozenset
    levels: dict
    per_rule: list = field(default_factory=list)
    graph: PredicateGraph | None = None

    def to_dict(self) -> dict:
        return {
            "warded": self.warded,
            "pwl": self.pwl,
            "intensionally_linear": self.intensionally_linear,
            "full_datalog": self.full_datalog,
            "single_head": self.single_head,
            "affected": [str(p) for p in sorted(self.affected)],
            "levels": dict(sorted(self.levels.items())),
            "max_level": max(self.levels.values(), default=0),
            "per_rule": [ra.to_dict() for ra in self.per_rule],
            "predicate_graph": self.graph.to_dict() if self.graph else None,
        }


def classify(program: Program) -> ClassificationReport:
    g = predicate_graph(program)
    aff = affected_positions(program)
    per_rule = rule_analysis(program, aff, g)
    return ClassificationReport(
        warded=all(ra.warded for ra in per_rule),
        pwl=all(ra.recursive_body_atoms <= 1 for ra in per_rule),
        intensionally_linear=is_intensionally_linear(program),
        full_datalog=is_full_datalog(program),
        single_head=all(len(r.head) == 1 for r in program),
        affected=aff,
        levels=levels(program, g),
        per_rule=per_rule,
        graph=g,
    )


WARD_PWL = "WARD_PWL"
WARD = "WARD"


def node_width_bound(q: CQ, program: Program, fragment: str) -> int:
    """Maximum atom count of a goal the proof search may hold.

    Query predicates outside the program have level 1, and an empty program
    counts as max body size 1, so the bound is always positive.
    """
    max_body = max(program.max_body_size, 1)
    if fragment == WARD_PWL:
        lv = levels(program)
        top = max([lv.get(a.predicate, 1) for a in q.body] + list(lv.values()) + [1])
        return (len(q.body) + 1) * top * max_body
    if fragment == WARD:
        return 2 * max(len(q.body), max_body)
    raise ValueError(f"unknown fragment {fragment!r}")
