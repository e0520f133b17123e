"""The restricted chase with budgets, semi-naive Datalog evaluation, and
chase-graph export."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field

from .core import CQ, TGD, Atom, Instance, Null, Program, evaluate_cq, find_homomorphisms, has_homomorphism
from .core import _match


class ChaseError(ValueError):
    pass


class NullCounter:
    """Hands out ⊥1, ⊥2, ... in order; one counter per chase run."""

    def __init__(self, start: int = 0):
        self._it = itertools.count(start + 1)

    def fresh(self) -> Null:
        return Null(next(self._it))


def _head_image(rule: TGD, h: dict, counter: NullCounter) -> list[Atom]:
    ext = {v: h[v] for v in rule.frontier}
    for z in rule.existentials:
        ext[z] = counter.fresh()
    get = ext.get
    return [Atom(a.predicate, tuple(get(t, t) for t in a.args)) for a in rule.head]


def chase_step(instance: Instance, rule: TGD, h: dict, counter: NullCounter) -> Instance:
    """Apply ``rule`` with trigger ``h``; existentials get fresh nulls from ``counter``."""
    body = [Atom(a.predicate, tuple(h.get(t, t) for t in a.args)) for a in rule.body]
    if any(v not in h for v in rule.body_variables) or not all(b in instance for b in body):
        raise ChaseError(f"trigger {h} is not applicable for {rule}")
    out = instance.copy()
    out.update(_head_image(rule, h, counter))
    return out


@dataclass
class ChaseStep:
    rule_index: int
    rule: TGD
    trigger: dict
    image: tuple
    new_atoms: tuple


@dataclass
class ChaseResult:
    instance: Instance
    steps: list
    terminated: bool
    budget_spent: int
    depth: dict = field(default_factory=dict)
    database: frozenset = frozenset()

    def to_dict(self) -> dict:
        return {
            "terminated": self.terminated,
            "budget_spent": self.budget_spent,
            "atoms": sorted(str(a) for a in self.instance),
            "steps": [
                {
                    "rule": s.rule_index,
                    "trigger": {str(k): str(v) for k, v in sorted(s.trigger.items(), key=lambda kv: kv[0].name)},
                    "new_atoms": [str(a) for a in s.new_atoms],
                }
                for s in self.steps
            ],
        }


def _as_program(program) -> Program:
    return program if isinstance(program, Program) else Program(tuple(program))


def _triggers_from(atom: Atom, rules, instance: Instance):
    """Body homomorphisms of every rule that use ``atom`` for some body atom."""
    for ri, r in enumerate(rules):
        for i, b in enumerate(r.body):
            if b.predicate != atom.predicate:
                continue
            binding: dict = {}
            if _match(b, atom, binding) is None:
                continue
            rest = r.body[:i] + r.body[i + 1:]
            for h in find_homomorphisms(rest, instance, binding):
                yield ri, h


def _key(rule: TGD, h: dict) -> tuple:
    return tuple(h[v] for v in rule.body_variables)


def _satisfied(rule: TGD, h: dict, instance: Instance) -> bool:
    fixed = {v: h[v] for v in rule.frontier}
    return has_homomorphism(rule.head, instance, fixed)


def bounded_chase(database, program, max_steps: int | None = 100_000,
                  max_depth: int | None = None, oblivious: bool = False) -> ChaseResult:
    """Fire triggers in FIFO order until none is active or a budget runs out.

    Under the default restricted policy a trigger fires only when its head is
    not yet satisfied. A trigger that would exceed ``max_depth`` is held
    back; the run still counts as terminated if every held-back trigger is
    satisfied at the end.
    """
    program = _as_program(program)
    rules = program.rules
    instance = Instance(database)
    db_atoms = instance.atoms()
    depth = {a: 1 for a in instance}
    counter = NullCounter()
    queue: deque = deque()
    seen: set = set()
    steps: list = []
    deferred: list = []

    def discover(a: Atom):
        for ri, h in _triggers_from(a, rules, instance):
            k = (ri, _key(rules[ri], h))
            if k not in seen:
                seen.add(k)
                queue.append((ri, h))

    for a in list(instance):
        discover(a)

    exhausted = False
    while queue:
        ri, h = queue.popleft()
        r = rules[ri]
        if not oblivious and _satisfied(r, h, instance):
            continue
        image = tuple(dict.fromkeys(Atom(b.predicate, tuple(h.get(t, t) for t in b.args)) for b in r.body))
        d = 1 + max(depth[b] for b in image)
        if max_depth is not None and d > max_depth:
            deferred.append((ri, h))
            continue
        if max_steps is not None and len(steps) >= max_steps:
            queue.appendleft((ri, h))
            exhausted = True
            break
        new = []
        for a in _head_image(r, h, counter):
            if instance.add(a):
                depth[a] = d
                new.append(a)
        steps.append(ChaseStep(ri, r, dict(h), image, tuple(new)))
        for a in new:
            discover(a)

    pending = list(queue) + deferred if exhausted else deferred
    if oblivious:
        terminated = not pending
    else:
        terminated = all(_satisfied(rules[ri], h, instance) for ri, h in pending)
    return ChaseResult(instance, steps, terminated, len(steps), depth, db_atoms)


def certain_answers_via_chase(database, program, q: CQ, max_steps: int | None = 100_000,
                              max_depth: int | None = None) -> tuple[set, bool]:
    """Answers of ``q`` over the (possibly truncated) chase and whether it finished."""
    res = bounded_chase(database, program, max_steps=max_steps, max_depth=max_depth)
    return evaluate_cq(q, res.instance), res.terminated


def seminaive_eval(program, database) -> Instance:
    """Least model of a full Datalog program over ``database``."""
    program = _as_program(program)
    for r in program:
        if r.existentials:
            raise ChaseError(f"existential variable in {r}; seminaive_eval needs full Datalog")
    instance = Instance(database)
    delta = list(instance)
    while delta:
        by_pred: dict = {}
        for a in delta:
            by_pred.setdefault(a.predicate, []).append(a)
        fresh: list = []
        for r in program:
            for i, b in enumerate(r.body):
                for a in by_pred.get(b.predicate, ()):
                    binding: dict = {}
                    if _match(b, a, binding) is None:
                        continue
                    rest = r.body[:i] + r.body[i + 1:]
                    for h in find_homomorphisms(rest, instance, binding):
                        for head in r.head:
                            fresh.append(Atom(head.predicate, tuple(h.get(t, t) for t in head.args)))
        delta = instance.update(fresh)
    return instance


def naive_eval(program, database) -> Instance:
    """Plain fixpoint iteration; slow but obviously correct."""
    program = _as_program(program)
    instance = Instance(database)
    while True:
        new = []
        for r in program:
            for h in find_homomorphisms(r.body, instance):
                new.extend(Atom(a.predicate, tuple(h.get(t, t) for t in a.args)) for a in r.head)
        if not instance.update(new):
            return instance


@dataclass
class ChaseGraph:
    nodes: list
    edges: list  # (source atom, target atom, rule index, trigger)
    database: frozenset = frozenset()

    def successors(self, a: Atom) -> list:
        return [t for s, t, _, _ in self.edges if s == a]

    def is_acyclic(self) -> bool:
        import networkx as nx

        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from((s, t) for s, t, _, _ in self.edges)
        return nx.is_directed_acyclic_graph(g)

    def to_dict(self) -> dict:
        return {
            "nodes": [str(a) for a in self.nodes],
            "database": sorted(str(a) for a in self.database),
            "edges": [
                {"source": str(s), "target": str(t), "rule": ri,
                 "trigger": {str(k): str(v) for k, v in sorted(h.items(), key=lambda kv: kv[0].name)}}
                for s, t, ri, h in self.edges
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def to_dot(self) -> str:
        ids = {a: f"n{i}" for i, a in enumerate(self.nodes)}
        lines = ["digraph chase {", "  rankdir=LR;"]
        for a in self.nodes:
            shape = "box" if a in self.database else "ellipse"
            label = str(a).replace('"', '\\"')
            lines.append(f'  {ids[a]} [label="{label}", shape={shape}];')
        for s, t, ri, h in self.edges:
            binding = ", ".join(f"{k}↦{v}" for k, v in sorted(h.items(), key=lambda kv: kv[0].name))
            label = f"σ{ri} {{{binding}}}".replace('"', '\\"')
            lines.append(f'  {ids[s]} -> {ids[t]} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def export_chase_graph(result: ChaseResult) -> ChaseGraph:
    nodes = list(result.instance)
    edges = []
    for s in result.steps:
        for b in s.image:
            for a in s.new_atoms:
                edges.append((b, a, s.rule_index, s.trigger))
    return ChaseGraph(nodes, edges, result.database)
