"""Unification, chunk-based resolution, decomposition, specialization and
canonical renaming of goal queries.

A goal is a set of atoms over constants and variables. Variables listed in
``GoalQuery.outputs`` are frozen: they keep their names, are never mapped to
a constant or to another output, and may be split across decomposed parts.
The solver instantiates outputs to constants up front, so its goals have no
outputs at all; the rewriter keeps them symbolic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .core import TGD, Atom, Constant, Variable


@dataclass(frozen=True)
class GoalQuery:
    atoms: tuple
    outputs: tuple = ()

    def __len__(self):
        return len(self.atoms)

    @property
    def variables(self) -> set:
        return {t for a in self.atoms for t in a.args if isinstance(t, Variable)}

    @property
    def is_empty(self) -> bool:
        return not self.atoms

    def __str__(self):
        head = "Q"
        if self.outputs:
            head += f"({','.join(map(str, self.outputs))})"
        return f"{head} :- {', '.join(map(str, self.atoms))}" if self.atoms else f"{head} :- ⊤"


def goal(*atoms: Atom, outputs=()) -> GoalQuery:
    return GoalQuery(tuple(atoms), tuple(outputs))


# ----------------------------------------------------------------- unifiers


class _UnionFind:
    """Classes of terms; a class holds at most one constant."""

    def __init__(self, rank):
        self.parent: dict = {}
        self.rank = rank  # term -> priority for being the representative

    def find(self, t):
        parent = self.parent
        root = t
        while parent.get(root, root) is not root:
            root = parent[root]
        while t is not root:
            nxt = parent.get(t, t)
            parent[t] = root
            t = nxt
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra is rb:
            return True
        if isinstance(ra, Constant) and isinstance(rb, Constant):
            return False
        if self.rank(rb) > self.rank(ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def copy(self) -> "_UnionFind":
        uf = _UnionFind(self.rank)
        uf.parent = dict(self.parent)
        return uf

    def substitution(self) -> dict:
        return {t: self.find(t) for t in list(self.parent) if self.find(t) is not t}


def _default_rank(t) -> int:
    return 3 if isinstance(t, Constant) else 1


def _unify_args(uf: _UnionFind, a: Atom, b: Atom) -> bool:
    if a.predicate != b.predicate or len(a.args) != len(b.args):
        return False
    return all(uf.union(s, t) for s, t in zip(a.args, b.args))


def _apply(s: dict, atoms) -> set:
    return {Atom(a.predicate, tuple(s.get(t, t) for t in a.args)) for a in atoms}


def more_general(g1: dict, g2: dict, terms) -> bool:
    """True if ``g2 = s ∘ g1`` on ``terms`` for some substitution ``s``."""
    s: dict = {}
    for t in terms:
        a, b = g1.get(t, t), g2.get(t, t)
        if isinstance(a, Constant):
            if a is not b:
                return False
            continue
        if s.setdefault(a, b) is not b:
            return False
    return True


def mgu(A, B) -> dict | None:
    """A most general unifier with ``γ(A) = γ(B)`` as sets, or None.

    Every pairing that covers both sides is tried; among the resulting
    unifiers one that factors all others is returned when it exists,
    otherwise one with the fewest merged terms.
    """
    A, B = list(dict.fromkeys(A)), list(dict.fromkeys(B))
    if not A or not B:
        return None
    terms = {t for a in A + B for t in a.args}
    found = []
    options_a = [[b for b in B if b.predicate == a.predicate and b.arity == a.arity] for a in A]
    options_b = [[a for a in A if a.predicate == b.predicate and a.arity == b.arity] for b in B]
    if any(not o for o in options_a + options_b):
        return None
    seen = set()
    for pa in itertools.product(*options_a):
        for pb in itertools.product(*options_b):
            uf = _UnionFind(_default_rank)
            ok = all(_unify_args(uf, a, b) for a, b in zip(A, pa))
            ok = ok and all(_unify_args(uf, b, a) for b, a in zip(B, pb))
            if not ok:
                continue
            s = uf.substitution()
            key = frozenset(s.items())
            if key not in seen:
                seen.add(key)
                found.append(s)
    if not found:
        return None
    for g in found:
        if all(more_general(g, h, terms) for h in found):
            return g
    return min(found, key=len)


# ----------------------------------------------------------- chunk unifiers


@dataclass(frozen=True)
class ChunkUnifier:
    s1: tuple
    s2: tuple
    gamma: dict = field(hash=False, compare=False)


def rename_rule(rule: TGD, prefix: str = "r") -> TGD:
    """Rename rule variables to ``r1, r2, ...`` (disjoint from goal names)."""
    names = {}
    for v in list(rule.body_variables) + list(rule.existentials):
        names[v] = Variable(f"{prefix}{len(names) + 1}")
    body = tuple(Atom(a.predicate, tuple(names.get(t, t) for t in a.args)) for a in rule.body)
    head = tuple(Atom(a.predicate, tuple(names.get(t, t) for t in a.args)) for a in rule.head)
    return TGD(body, head, label=rule.label)


def _rule_rank(outputs: frozenset, rule_vars: frozenset):
    def rank(t):
        if isinstance(t, Constant):
            return 3
        if t in outputs:
            return 2
        if t in rule_vars:
            return 0
        return 1
    return rank


def enumerate_mgcus(q: GoalQuery, rule: TGD) -> list[ChunkUnifier]:
    """All most general chunk unifiers of ``q`` with single-head ``rule``.

    ``rule`` must not share variables with ``q``. Subsets of goal atoms are
    grown one atom at a time and abandoned as soon as they stop unifying.
    """
    if len(rule.head) != 1:
        raise ValueError("chunk unifiers are computed against single-atom heads")
    head = rule.head[0]
    atoms = q.atoms
    outputs = frozenset(q.outputs)
    rule_vars = frozenset(rule.body_variables) | frozenset(rule.existentials)
    existentials = rule.existentials
    cands = [i for i, a in enumerate(atoms) if a.predicate == head.predicate and a.arity == head.arity]
    if not cands:
        return []
    rank = _rule_rank(outputs, rule_vars)
    occurrences: dict = {}
    for i, a in enumerate(atoms):
        for t in a.args:
            if isinstance(t, Variable):
                occurrences.setdefault(t, set()).add(i)
    out: list = []

    def check(chosen: tuple, uf: _UnionFind) -> ChunkUnifier | None:
        chosen_set = set(chosen)
        # IDO: outputs stay fixed and distinct
        for o in outputs:
            r = uf.find(o)
            if r is not o:
                return None
        s1_vars = {t for i in chosen for t in atoms[i].args if isinstance(t, Variable)}
        shared = {v for v in s1_vars if v in outputs or occurrences[v] - chosen_set}
        if existentials:
            classes: dict = {}
            for t in s1_vars | set(rule_vars) | {t for t in head.args}:
                classes.setdefault(uf.find(t), set()).add(t)
            for x in existentials:
                if x not in head.args:
                    continue
                rep = uf.find(x)
                if isinstance(rep, Constant):
                    return None
                for y in classes.get(rep, ()):
                    if y is x:
                        continue
                    if isinstance(y, Constant) or y in rule_vars or y not in s1_vars or y in shared:
                        return None
        gamma = uf.substitution()
        return ChunkUnifier(tuple(atoms[i] for i in chosen), (head,), gamma)

    def grow(start: int, chosen: tuple, uf: _UnionFind):
        for k in range(start, len(cands)):
            i = cands[k]
            uf2 = uf.copy()
            if not _unify_args(uf2, atoms[i], head):
                continue
            nxt = chosen + (i,)
            u = check(nxt, uf2)
            if u is not None:
                out.append(u)
            grow(k + 1, nxt, uf2)

    grow(0, (), _UnionFind(rank))
    return out


def is_chunk_unifier(q: GoalQuery, rule: TGD, u: ChunkUnifier) -> bool:
    """Check both chunk conditions and ``γ(S1) = γ(S2)`` directly."""
    g = u.gamma
    if _apply(g, u.s1) != _apply(g, u.s2):
        return False
    rest = [a for a in q.atoms if a not in u.s1]
    s1_vars = {t for a in u.s1 for t in a.args if isinstance(t, Variable)}
    rest_vars = {t for a in rest for t in a.args if isinstance(t, Variable)}
    shared = {v for v in s1_vars if v in q.outputs or v in rest_vars}
    q_vars = {t for a in q.atoms for t in a.args if isinstance(t, Variable)}
    for x in rule.existentials:
        if not any(x in a.args for a in u.s2):
            continue
        gx = g.get(x, x)
        if isinstance(gx, Constant):
            return False
        for y in q_vars:
            if g.get(y, y) is gx and (y not in s1_vars or y in shared):
                return False
    return all(g.get(o, o) is o for o in q.outputs)


def resolvent_atoms(q: GoalQuery, rule: TGD, u: ChunkUnifier) -> list[Atom]:
    g = u.gamma
    s1 = set(u.s1)
    rest = [a for a in q.atoms if a not in s1]
    return list(dict.fromkeys(
        Atom(a.predicate, tuple(g.get(t, t) for t in a.args)) for a in rest + list(rule.body)
    ))


def resolvent(q: GoalQuery, rule: TGD, u: ChunkUnifier) -> GoalQuery:
    """``γ((atoms(q) \\ S1) ∪ body(σ))``, canonicalized."""
    return canonicalize(GoalQuery(tuple(resolvent_atoms(q, rule, u)), q.outputs))


# --------------------------------------------- specialization, decomposition


def specialize(q: GoalQuery, var: Variable, value) -> GoalQuery:
    if var in q.outputs:
        raise ValueError(f"output variable {var} cannot be specialized")
    atoms = tuple(Atom(a.predicate, tuple(value if t is var else t for t in a.args)) for a in q.atoms)
    return canonicalize(GoalQuery(atoms, q.outputs))


def components(atoms, frozen=frozenset()) -> list[list[Atom]]:
    """Connected components linking atoms that share a non-frozen variable."""
    atoms = list(dict.fromkeys(atoms))
    parent = list(range(len(atoms)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    first: dict = {}
    for i, a in enumerate(atoms):
        for t in a.args:
            if isinstance(t, Variable) and t not in frozen:
                j = first.setdefault(t, i)
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict = {}
    for i, a in enumerate(atoms):
        groups.setdefault(find(i), []).append(a)
    return [groups[k] for k in sorted(groups)]


def decompose(q: GoalQuery) -> list[GoalQuery]:
    """The finest decomposition; outputs and constants may be shared."""
    frozen = frozenset(q.outputs)
    parts = []
    for comp in components(q.atoms, frozen):
        vs = {t for a in comp for t in a.args}
        outs = tuple(o for o in q.outputs if o in vs)
        parts.append(canonicalize(GoalQuery(tuple(comp), outs)))
    return parts


def strip_db_atoms(q: GoalQuery, database) -> GoalQuery:
    """Drop the ground atoms of ``q`` that are facts of ``database``."""
    kept = tuple(a for a in q.atoms if not (a.is_ground() and a in database))
    if len(kept) == len(q.atoms):
        return q
    return canonicalize(GoalQuery(kept, q.outputs))


# --------------------------------------------------------- canonical naming


def _encode(a: Atom, mapping: dict, outputs: frozenset, nxt: int):
    """Token tuple of ``a`` under ``mapping``; unmapped variables numbered from ``nxt``."""
    toks = []
    local: dict = {}
    for t in a.args:
        if isinstance(t, Constant):
            toks.append((0, t.name))
        elif t in outputs:
            toks.append((1, t.name))
        else:
            n = mapping.get(t)
            if n is None:
                n = local.get(t)
                if n is None:
                    n = nxt + len(local)
                    local[t] = n
            toks.append((2, n))
    return (a.predicate, tuple(toks)), local


def _canon_component(atoms: list, outputs: frozenset) -> tuple:
    """Lexicographically least encoding over all atom orders (branch and bound)."""
    best: list = [None]
    occurs: dict = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Variable) and t not in outputs:
                occurs[t] = occurs.get(t, 0) + 1

    def private(a: Atom, remaining_count: dict, mapping: dict) -> bool:
        return all(
            not isinstance(t, Variable) or t in outputs or t in mapping
            or remaining_count[t] == a.args.count(t)
            for t in a.args
        )

    def rec(remaining: list, mapping: dict, prefix: list, counts: dict):
        if not remaining:
            if best[0] is None or prefix < best[0]:
                best[0] = list(prefix)
            return
        nxt = len(mapping) + 1
        scored = []
        for i, a in enumerate(remaining):
            enc, local = _encode(a, mapping, outputs, nxt)
            scored.append((enc, i, local))
        low = min(s[0] for s in scored)
        depth = len(prefix)
        if best[0] is not None:
            cur = prefix + [low]
            if cur > best[0][: depth + 1]:
                return
        tied = [s for s in scored if s[0] == low]
        # tied atoms whose fresh variables occur nowhere else are interchangeable
        easy = [s for s in tied if private(remaining[s[1]], counts, mapping)]
        if len(easy) > 1:
            tied = [s for s in tied if s not in easy] + easy[:1]
        for enc, i, local in tied:
            a = remaining[i]
            m2 = dict(mapping)
            m2.update(local)
            c2 = dict(counts)
            for t in a.args:
                if t in c2:
                    c2[t] -= 1
            rec(remaining[:i] + remaining[i + 1:], m2, prefix + [enc], c2)

    rec(list(atoms), {}, [], occurs)
    return tuple(best[0])


def canonical_key(atoms, outputs=()) -> tuple:
    """Renaming-invariant key: sorted canonical encodings of the components."""
    outs = frozenset(outputs)
    comps = components(atoms, outs)
    return tuple(sorted(_canon_component(c, outs) for c in comps))


def canonicalize(q: GoalQuery) -> GoalQuery:
    """Representative of ``q`` up to renaming of non-output variables.

    Each connected component is encoded as its least atom sequence (variables
    numbered by first occurrence), components are sorted, and variables are
    then renumbered ``v1, v2, ...`` left to right.
    """
    key = canonical_key(q.atoms, q.outputs)
    atoms = []
    offset = 0
    for comp in key:
        top = 0
        for pred, toks in comp:
            args = []
            for kind, val in toks:
                if kind == 0:
                    args.append(Constant(val))
                elif kind == 1:
                    args.append(Variable(val))
                else:
                    args.append(Variable(f"v{val + offset}"))
                    top = max(top, val)
            atoms.append(Atom(pred, tuple(args)))
        offset += top
    return GoalQuery(tuple(atoms), tuple(q.outputs))


def is_canonical(q: GoalQuery) -> bool:
    return canonicalize(q) == q


def canonical_with_outputs(atoms, outputs) -> tuple:
    """Canonical form that also renames outputs, to ``o1, o2, ...``.

    Returns ``(atoms, order)`` where ``order`` lists the original output
    variables in the order of their new names. Nulls-like variables become
    ``v1, v2, ...``.
    """
    atoms = list(dict.fromkeys(atoms))
    outs = frozenset(outputs)
    best: list = [None, None]
    counts: dict = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Variable):
                counts[t] = counts.get(t, 0) + 1

    def encode(a, omap, vmap):
        toks, lo, lv = [], {}, {}
        for t in a.args:
            if isinstance(t, Constant):
                toks.append((0, t.name))
            elif t in outs:
                n = omap.get(t) or lo.get(t)
                if n is None:
                    n = lo[t] = len(omap) + len(lo) + 1
                toks.append((1, n))
            else:
                n = vmap.get(t) or lv.get(t)
                if n is None:
                    n = lv[t] = len(vmap) + len(lv) + 1
                toks.append((2, n))
        return (a.predicate, tuple(toks)), lo, lv

    def private(a, cnt, omap, vmap):
        return all(not isinstance(t, Variable) or t in omap or t in vmap or cnt[t] == a.args.count(t)
                   for t in a.args)

    def rec(remaining, omap, vmap, prefix, cnt):
        if not remaining:
            if best[0] is None or prefix < best[0]:
                best[0], best[1] = list(prefix), dict(omap)
            return
        scored = []
        for i, a in enumerate(remaining):
            enc, lo, lv = encode(a, omap, vmap)
            scored.append((enc, i, lo, lv))
        low = min(s[0] for s in scored)
        if best[0] is not None and prefix + [low] > best[0][: len(prefix) + 1]:
            return
        tied = [s for s in scored if s[0] == low]
        easy = [s for s in tied if private(remaining[s[1]], cnt, omap, vmap)]
        if len(easy) > 1:
            tied = [s for s in tied if s not in easy] + easy[:1]
        for enc, i, lo, lv in tied:
            a = remaining[i]
            o2 = dict(omap); o2.update(lo)
            v2 = dict(vmap); v2.update(lv)
            c2 = dict(cnt)
            for t in a.args:
                if t in c2:
                    c2[t] -= 1
            rec(remaining[:i] + remaining[i + 1:], o2, v2, prefix + [enc], c2)

    rec(atoms, {}, {}, [], counts)
    enc, omap = best[0] or [], best[1] or {}
    out = []
    for pred, toks in enc:
        args = []
        for kind, val in toks:
            if kind == 0:
                args.append(Constant(val))
            elif kind == 1:
                args.append(Variable(f"o{val}"))
            else:
                args.append(Variable(f"v{val}"))
        out.append(Atom(pred, tuple(args)))
    order = [o for o, _ in sorted(omap.items(), key=lambda kv: kv[1])]
    return tuple(out), order
