"""Independent reference implementations used by the tests."""

import itertools
import random

from pwlward.analysis import Position
from pwlward.core import CQ, Atom, Variable
from pwlward.resolution import GoalQuery, goal


def apply(s, atoms):
    return {Atom(t.predicate, tuple(s.get(u, u) for u in t.args)) for t in atoms}


def affected_oracle(program):
    """Naive least fixpoint, written out separately from the library."""
    aff = set()
    while True:
        new = set(aff)
        for r in program:
            for h in r.head:
                for i, t in enumerate(h.args, 1):
                    if t in r.existentials:
                        new.add(Position(h.predicate, i))
                    elif t in r.frontier:
                        occ = [Position(b.predicate, j) for b in r.body for j, u in enumerate(b.args, 1) if u is t]
                        if all(o in aff for o in occ):
                            new.add(Position(h.predicate, i))
        if new == aff:
            return aff
        aff = new


def reach(program):
    edges = {(b.predicate, h.predicate) for r in program for b in r.body for h in r.head}
    nodes = {p for e in edges for p in e} | set(program.schema)
    closure = set(edges)
    changed = True
    while changed:
        changed = False
        for (u, v) in list(closure):
            for (v2, w) in list(closure):
                if v == v2 and (u, w) not in closure:
                    closure.add((u, w))
                    changed = True
    return nodes, edges, closure


def levels_hold(program, lv):
    nodes, edges, closure = reach(program)
    for p in nodes:
        preds = [r for (r, q) in edges if q == p and not ((r, p) in closure and (p, r) in closure)]
        if lv[p] != 1 + max((lv[r] for r in preds), default=0):
            return False
    return True


def shuffled_renaming(q: CQ, rng: random.Random):
    vs = sorted({t for at in q.body for t in at.args if isinstance(t, Variable)}, key=lambda v: v.name)
    names = [Variable(f"w{i}") for i in range(len(vs))]
    rng.shuffle(names)
    s = dict(zip(vs, names))
    body = [Atom(at.predicate, tuple(s.get(t, t) for t in at.args)) for at in q.body]
    rng.shuffle(body)
    return goal(*body)


def isomorphic(g1: GoalQuery, g2: GoalQuery) -> bool:
    v1 = sorted(g1.variables, key=lambda v: v.name)
    v2 = sorted(g2.variables, key=lambda v: v.name)
    if len(v1) != len(v2) or len(g1.atoms) != len(g2.atoms):
        return False
    target = set(g2.atoms)
    for perm in itertools.permutations(v2):
        s = dict(zip(v1, perm))
        if apply(s, g1.atoms) == target:
            return True
    return False
