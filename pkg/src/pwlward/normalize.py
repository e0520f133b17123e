"""Answer-preserving rewrites of a rule set: single-atom heads and the
level-wise normal form used by the proof-tree solver."""

from __future__ import annotations

from dataclasses import dataclass, field

from .analysis import classify, levels, predicate_graph, stratum_levels
from .core import TGD, Atom, Program, Variable


class NormalizationError(ValueError):
    pass


@dataclass
class NormalizationTrace:
    introduced_predicates: list = field(default_factory=list)  # [{"fresh", "origin"}]
    rule_map: dict = field(default_factory=dict)  # new rule index -> original rule index

    def to_dict(self) -> dict:
        return {
            "introduced_predicates": list(self.introduced_predicates),
            "rule_map": {str(k): v for k, v in sorted(self.rule_map.items())},
        }

    @property
    def fresh(self) -> set:
        return {d["fresh"] for d in self.introduced_predicates}


def _fresh_name(base: str, used: set) -> str:
    name, n = base, 1
    while name in used:
        n += 1
        name = f"{base}_{n}"
    used.add(name)
    return name


def to_single_head(program: Program) -> tuple[Program, NormalizationTrace]:
    """Split each multi-atom head through a fresh collector predicate."""
    trace = NormalizationTrace()
    used = set(program.schema)
    rules = []
    for ri, r in enumerate(program):
        if len(r.head) == 1:
            trace.rule_map[len(rules)] = ri
            rules.append(r)
            continue
        frontier = [v for v in r.head_variables if v in r.frontier]
        args = tuple(frontier) + r.existentials
        name = _fresh_name(f"{r.head[0].predicate}__h{ri}", used)
        trace.introduced_predicates.append({"fresh": name, "origin": f"head of rule {ri}: {r}"})
        collector = Atom(name, args)
        trace.rule_map[len(rules)] = ri
        rules.append(TGD(r.body, (collector,), label=r.label))
        for h in r.head:
            trace.rule_map[len(rules)] = ri
            rules.append(TGD((collector,), (h,), label=r.label))
    if not trace.introduced_predicates:
        return program, NormalizationTrace()
    return Program(tuple(rules)), trace


def body_level_violations(program: Program, lv: dict | None = None) -> list:
    """Rules (index, body atom) whose body level is neither k nor k-1 for head level k."""
    if lv is None:
        lv = stratum_levels(program)
    bad = []
    for ri, r in enumerate(program):
        for h in r.head:
            k = lv[h.predicate]
            for b in r.body:
                if lv[b.predicate] not in (k, k - 1):
                    bad.append((ri, b))
    return bad


def to_levelwise_nf(program: Program) -> tuple[Program, NormalizationTrace]:
    """Pad shallow body atoms with copy chains until every rule is level-wise.

    Levels here are per strongly connected component (one more than the
    deepest predecessor component), so all mutually recursive predicates
    share a level. A body atom of predicate R at level j < k-1 under a head
    at level k is replaced by the end of a chain ``R -> R__lvl1_i -> ...``
    whose last link sits at level k-1.
    """
    report = classify(program)
    if not report.pwl:
        raise NormalizationError("level-wise normal form requires a piece-wise linear program")
    if not report.single_head:
        raise NormalizationError("level-wise normal form requires single-atom heads")
    trace = NormalizationTrace()
    used = set(program.schema)
    origin = list(range(len(program)))
    current = program
    while True:
        lv = stratum_levels(current)
        g = predicate_graph(current)
        rules, new_origin, changed = [], [], False
        chains: dict = {}  # (predicate, rule index, depth) -> fresh predicate
        extra: list = []
        for ri, r in enumerate(current):
            head = r.head[0]
            k = lv[head.predicate]
            body = []
            for b in r.body:
                j = lv[b.predicate]
                if g.scc_id[b.predicate] == g.scc_id[head.predicate] or j >= k - 1:
                    body.append(b)
                    continue
                changed = True
                xs = tuple(Variable(f"x{i}") for i in range(1, b.arity + 1))
                prev = b.predicate
                for step in range(1, k - j):
                    key = (b.predicate, origin[ri], step)
                    if key not in chains:
                        name = _fresh_name(f"{b.predicate}__lvl{step}_{origin[ri]}", used)
                        chains[key] = name
                        trace.introduced_predicates.append({
                            "fresh": name,
                            "origin": f"copy {step} of {b.predicate} for rule {origin[ri]}",
                        })
                        extra.append((TGD((Atom(prev, xs),), (Atom(name, xs),)), origin[ri]))
                    prev = chains[key]
                body.append(Atom(prev, b.args))
            rules.append(TGD(tuple(body), r.head, label=r.label))
            new_origin.append(origin[ri])
        for rule, o in extra:
            rules.append(rule)
            new_origin.append(o)
        if not changed:
            break
        current = Program(tuple(rules))
        origin = new_origin
    bad = body_level_violations(current)
    assert not bad, f"level-wise normal form post-condition failed: {bad}"
    if current is program:
        return program, trace
    trace.rule_map = dict(enumerate(origin))
    return current, trace


def literal_level_violations(program: Program) -> list:
    """Same check as ``body_level_violations`` but with per-predicate levels."""
    return body_level_violations(program, levels(program))


def normalize(program: Program, level_nf: bool = True) -> tuple[Program, NormalizationTrace]:
    """Single-head normalization followed (optionally) by the level-wise form."""
    p1, t1 = to_single_head(program)
    if not level_nf:
        return p1, t1
    p2, t2 = to_levelwise_nf(p1)
    trace = NormalizationTrace(
        introduced_predicates=t1.introduced_predicates + t2.introduced_predicates,
        rule_map={k: t1.rule_map.get(v, v) for k, v in t2.rule_map.items()},
    )
    return p2, trace
