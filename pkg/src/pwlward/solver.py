"""Certain-answer decision by proof-tree search.

Two engines share one search context:

* ``decide_pwl_warded`` looks for a linear proof tree (one non-leaf child per
  node) by depth-first reachability over canonical goals;
* ``decide_warded`` runs a memoized AND-OR recursion where decomposition
  yields AND nodes.

Goals are Boolean: the query's outputs are replaced by the candidate tuple
first. Resolvents whose atom count exceeds the fragment's node-width bound
are discarded.

Specialization comes in two flavours. ``"full"`` offers, at every goal,
every single-variable substitution into the active domain. ``"eager"``
decides each variable once, when it first appears: it either becomes a
constant or stays a variable for good, in which case it stands for a null.
Eager goals can then be checked against the abstract model (the least model
of the rules with every existential replaced by one shared null ⋆): the
image of every goal atom, with its variables sent to ⋆, must be there.
"""

from __future__ import annotations

import itertools
import sys
import threading
from dataclasses import dataclass

from .analysis import WARD, WARD_PWL, classify, node_width_bound
from .chase import seminaive_eval
from .core import CQ, TGD, Atom, Constant, Instance, Null, Program, Variable
from .core import evaluate_cq, find_homomorphisms, has_homomorphism
from .normalize import normalize
from .resolution import (
    GoalQuery,
    canonicalize,
    components,
    enumerate_mgcus,
    rename_rule,
    resolvent_atoms,
    strip_db_atoms,
)

STAR = Null(0)


class PreconditionError(ValueError):
    """The rule set is outside the fragment an engine requires."""


@dataclass
class SearchStats:
    expanded: int = 0
    memo_hits: int = 0
    max_frontier: int = 0
    bound: int = 0
    max_width: int = 0
    pruned_width: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Decision:
    value: bool
    stats: SearchStats
    trace: list | None = None

    def __bool__(self):
        return self.value


def abstract_model(program: Program, database) -> Instance:
    """Least model of ``program`` with each existential variable replaced by ⋆."""
    rules = []
    for r in program:
        if r.existentials:
            s = {z: STAR for z in r.existentials}
            head = tuple(Atom(a.predicate, tuple(s.get(t, t) for t in a.args)) for a in r.head)
            rules.append(TGD(r.body, head))
        else:
            rules.append(r)
    return seminaive_eval(Program(tuple(rules)), database)


def _starred(atoms) -> list:
    return [Atom(a.predicate, tuple(STAR if isinstance(t, Variable) else t for t in a.args)) for a in atoms]


def _constants_of(atoms) -> set:
    return {t for a in atoms for t in a.args if isinstance(t, Constant)}


def _run_deep(fn):
    """Run ``fn`` on a thread with a large stack so deep recursion is safe."""
    box: dict = {}

    def target():
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 200_000))
        try:
            box["value"] = fn()
        except BaseException as e:  # re-raised in the caller
            box["error"] = e
        finally:
            sys.setrecursionlimit(old)

    old_size = threading.stack_size()
    threading.stack_size(512 * 1024 * 1024)
    try:
        t = threading.Thread(target=target)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
    if "error" in box:
        raise box["error"]
    return box["value"]


class ProofSearch:
    """Search context for one (database, rules, query) triple.

    Caches the normalized and renamed rules, the active domain, the width
    bound and the abstract model, plus verdicts on Boolean goals, so that
    ``all_answers`` can reuse work across candidate tuples.
    """

    def __init__(self, database, program: Program, q: CQ, engine: str = "prooftree",
                 auto_normalize: bool = True, specialization: str = "eager",
                 prune: bool = True, spec_filter: bool = False, check: bool = True):
        if engine not in ("prooftree", "andor"):
            raise ValueError(f"unknown engine {engine!r}")
        if specialization not in ("eager", "full"):
            raise ValueError(f"unknown specialization mode {specialization!r}")
        self.engine = engine
        self.specialization = specialization
        self.prune = prune
        self.spec_filter = spec_filter
        self.database = database if isinstance(database, Instance) else Instance(database)
        self.original = program
        self.q = q
        if check:
            report = classify(program)
            if not report.warded:
                raise PreconditionError("the rule set is not warded")
            if engine == "prooftree" and not report.pwl:
                raise PreconditionError("the rule set is not piece-wise linear; use the andor engine")
        # The width bound is taken on the level-wise form, but the search runs
        # over the single-head rules: dropping the copy links from a proof
        # tree over the padded rules never makes a node wider.
        leveled = None
        if auto_normalize:
            program, _ = normalize(program, level_nf=False)
            if engine == "prooftree":
                leveled, _ = normalize(program)
        elif any(len(r.head) != 1 for r in program):
            raise PreconditionError("proof-tree search needs single-atom heads")
        self.program = program
        self.leveled = leveled if leveled is not None else program
        self.rules = [rename_rule(r) for r in program]
        fragment = WARD_PWL if engine == "prooftree" else WARD
        self.bound = node_width_bound(q, self.leveled, fragment)
        self.adom = [t for t in self.database.adom() if isinstance(t, Constant)]
        extra = _constants_of(a for r in program for a in (*r.body, *r.head)) | _constants_of(q.body)
        extra |= {t for t in q.output if isinstance(t, Constant)}
        self.constants = sorted(set(self.adom) | extra, key=lambda t: t.sort_key)
        self.model = abstract_model(program, self.database)
        self.known_true: set = set()
        self.known_false: set = set()

    # -------------------------------------------------------------- helpers

    def _plausible(self, atoms) -> bool:
        """Pruning test against the abstract model."""
        if not self.prune:
            return True
        if self.specialization == "eager":
            return all(a in self.model for a in _starred(atoms))
        return has_homomorphism(atoms, self.model)

    def _key(self, atoms) -> tuple:
        return canonicalize(GoalQuery(tuple(atoms))).atoms

    def _eager_instances(self, atoms, fresh) -> list:
        """All ways to decide the ``fresh`` variables of ``atoms``."""
        atoms = list(dict.fromkeys(atoms))
        fresh = [v for v in dict.fromkeys(fresh)]
        old = {t for a in atoms for t in a.args if isinstance(t, Variable)} - set(fresh)
        out = []
        seen = set()
        if self.prune:
            fixed = {v: STAR for v in old}
            for h in find_homomorphisms(atoms, self.model, fixed):
                s = {v: h[v] for v in fresh if h[v] is not STAR}
                k = tuple(s.get(v) for v in fresh)
                if k in seen:
                    continue
                seen.add(k)
                out.append([Atom(a.predicate, tuple(s.get(t, t) for t in a.args)) for a in atoms])
        else:
            for choice in itertools.product([None] + self.constants, repeat=len(fresh)):
                s = {v: c for v, c in zip(fresh, choice) if c is not None}
                out.append([Atom(a.predicate, tuple(s.get(t, t) for t in a.args)) for a in atoms])
        return out

    def initial_goals(self, answer: tuple) -> list:
        atoms = self.q.instantiate(tuple(answer))
        if atoms is None:
            return []
        if self.specialization == "eager":
            fresh = [t for a in atoms for t in a.args if isinstance(t, Variable)]
            starts = self._eager_instances(atoms, fresh)
        else:
            starts = [atoms] if self._plausible(atoms) else []
        keys = []
        for s in starts:
            k = self._key(s)
            if k not in keys:
                keys.append(k)
        return keys

    def _resolvents(self, g: tuple, stats: SearchStats):
        q = GoalQuery(g)
        old = q.variables
        for ri, rule in enumerate(self.rules):
            for u in enumerate_mgcus(q, rule):
                raw = resolvent_atoms(q, rule, u)
                if len(raw) > self.bound:
                    stats.pruned_width += 1
                    continue
                stats.max_width = max(stats.max_width, len(raw))
                if self.specialization == "eager":
                    fresh = [t for a in raw for t in a.args if isinstance(t, Variable) and t not in old]
                    for inst in self._eager_instances(raw, fresh):
                        yield ("r", ri), self._key(inst)
                elif self._plausible(raw):
                    yield ("r", ri), self._key(raw)

    def _specializations(self, g: tuple):
        q = GoalQuery(g)
        for v in sorted(q.variables, key=lambda t: t.name):
            for c in self._spec_candidates(g, v):
                atoms = [Atom(a.predicate, tuple(c if t is v else t for t in a.args)) for a in g]
                if self._plausible(atoms):
                    yield ("s", v.name, c.name), self._key(atoms)

    def _spec_candidates(self, g: tuple, v: Variable) -> list:
        if not self.spec_filter:
            return self.adom
        allowed = None
        for a in g:
            for i, t in enumerate(a.args):
                if t is v:
                    vals = {b.args[i] for b in self.model.with_predicate(a.predicate)}
                    allowed = vals if allowed is None else allowed & vals
        return [c for c in self.adom if allowed is None or c in allowed]

    def _strip(self, g: tuple) -> tuple:
        return strip_db_atoms(GoalQuery(g), self.database).atoms

    def _in_db(self, g: tuple) -> bool:
        return all(a.is_ground() and a in self.database for a in g)

    # --------------------------------------------------- linear proof trees

    def linear_successors(self, g: tuple, stats: SearchStats):
        """Successors in the order strip, specialize, resolve."""
        stripped = self._strip(g)
        if stripped != g:
            yield ("d",), stripped
            if self.specialization == "eager":
                return  # an eager goal's database atoms are leaves
        if self.specialization == "full":
            yield from self._specializations(g)
        yield from self._resolvents(g, stats)

    def search_linear(self, answer: tuple, want_trace: bool = False) -> Decision:
        stats = SearchStats(bound=self.bound)
        starts = self.initial_goals(answer)
        parent: dict = {}
        visited: set = set()
        found = None
        for s in starts:
            stats.max_width = max(stats.max_width, len(s))
            if s in self.known_true:
                found = s
                stats.memo_hits += 1
                break
            if s in visited or s in self.known_false:
                stats.memo_hits += 1
                continue
            visited.add(s)
            parent[s] = (None, ("start",))
            stack = [(s, self.linear_successors(s, stats))]
            stats.expanded += 1
            if not s:
                found = s
                break
            while stack and found is None:
                stats.max_frontier = max(stats.max_frontier, len(stack))
                node, it = stack[-1]
                step = next(it, None)
                if step is None:
                    stack.pop()
                    continue
                op, child = step
                if child in self.known_true:
                    parent.setdefault(child, (node, op))
                    found = child
                    stats.memo_hits += 1
                    break
                if child in visited or child in self.known_false:
                    stats.memo_hits += 1
                    continue
                visited.add(child)
                parent[child] = (node, op)
                stats.expanded += 1
                stats.max_width = max(stats.max_width, len(child))
                if not child:
                    found = child
                    break
                stack.append((child, self.linear_successors(child, stats)))
            if found is not None:
                break
        if found is None:
            self.known_false |= visited
            return Decision(False, stats, [] if want_trace else None)
        path = []
        node = found
        while node is not None and node in parent:
            prev, op = parent[node]
            path.append((op, node))
            self.known_true.add(node)
            node = prev
        path.reverse()
        trace = [{"op": _op_text(op), "goal": _goal_text(g)} for op, g in path] if want_trace else None
        return Decision(True, stats, trace)

    # ------------------------------------------------------- AND-OR search

    def andor_alternatives(self, g: tuple, stats: SearchStats):
        """OR-list of AND-lists of subgoals."""
        if self.specialization == "eager":
            stripped = self._strip(g)
            if stripped != g:
                yield ("d",), [stripped]
                return
        parts = components(g)
        if len(parts) > 1:
            yield ("split",), [self._key(p) for p in parts]
        if self.specialization == "full":
            for op, s in self._specializations(g):
                yield op, [s]
        for op, s in self._resolvents(g, stats):
            yield op, [s]

    def search_andor(self, answer: tuple, want_trace: bool = False) -> Decision:
        stats = SearchStats(bound=self.bound)
        starts = self.initial_goals(answer)
        path_index: dict = {}
        justification: dict = {}
        INF = float("inf")

        def solve(g: tuple):
            """Return (value, low, pending)."""
            if not g:
                return True, INF, []
            if g in self.known_true:
                stats.memo_hits += 1
                return True, INF, []
            if g in self.known_false:
                stats.memo_hits += 1
                return False, INF, []
            if g in path_index:
                return False, path_index[g], []
            if self.specialization == "full" and self._in_db(g):
                self.known_true.add(g)
                return True, INF, []
            idx = len(path_index)
            path_index[g] = idx
            stats.expanded += 1
            stats.max_frontier = max(stats.max_frontier, len(path_index))
            stats.max_width = max(stats.max_width, len(g))
            low = INF
            pending: list = []
            value = False
            for op, subgoals in self.andor_alternatives(g, stats):
                ok = True
                for sg in subgoals:
                    stats.max_width = max(stats.max_width, len(sg))
                    v, l, p = solve(sg)
                    low = min(low, l)
                    if v:
                        continue
                    pending.extend(p)
                    ok = False
                    break
                if ok:
                    value = True
                    justification[g] = (op, subgoals)
                    break
            del path_index[g]
            if value:
                self.known_true.add(g)
                return True, INF, []
            if low >= idx:
                self.known_false.add(g)
                self.known_false.update(pending)
                return False, INF, []
            return False, low, pending + [g]

        def run():
            for s in starts:
                v, _, _ = solve(s)
                if v:
                    return s
            return None

        root = _run_deep(run)
        if root is None:
            return Decision(False, stats, [] if want_trace else None)
        trace = None
        if want_trace:
            trace = _tree_trace(root, justification)
        return Decision(True, stats, trace)

    def decide(self, answer: tuple = (), want_trace: bool = False) -> Decision:
        answer = tuple(answer)
        if any(not isinstance(c, Constant) for c in answer):
            raise ValueError("answer tuples consist of constants")
        if self.engine == "prooftree":
            return self.search_linear(answer, want_trace)
        return self.search_andor(answer, want_trace)

    def candidate_answers(self) -> list:
        """Tuples worth deciding: answers of the query over the abstract model."""
        if not self.prune:
            return list(itertools.product(self.constants, repeat=len(self.q.output)))
        cands = [t for t in evaluate_cq(self.q, self.model) if all(c in self.constants for c in t)]
        return sorted(cands, key=lambda t: [c.sort_key for c in t])

    def all_answers(self) -> set:
        return {t for t in self.candidate_answers() if self.decide(t).value}


def _op_text(op) -> str:
    if op[0] == "r":
        return f"resolve with rule {op[1]}"
    if op[0] == "s":
        return f"specialize {op[1]} to {op[2]}"
    if op[0] == "d":
        return "drop database atoms"
    if op[0] == "split":
        return "decompose"
    return op[0]


def _goal_text(g: tuple) -> str:
    return ", ".join(map(str, g)) if g else "⊤"


def _tree_trace(root, justification) -> dict:
    def build(g, seen):
        if not g or g not in justification or g in seen:
            return {"goal": _goal_text(g)}
        op, subs = justification[g]
        return {"goal": _goal_text(g), "op": _op_text(op),
                "children": [build(s, seen | {g}) for s in subs]}
    return build(root, frozenset())


# ------------------------------------------------------------ entry points


def decide_pwl_warded(database, program: Program, q: CQ, answer: tuple = (), **options) -> Decision:
    """Decide whether ``answer`` is a certain answer via linear proof trees."""
    want_trace = options.pop("trace", False)
    return ProofSearch(database, program, q, "prooftree", **options).decide(answer, want_trace)


def decide_warded(database, program: Program, q: CQ, answer: tuple = (), **options) -> Decision:
    """Decide certain-answer membership via AND-OR proof-tree search."""
    want_trace = options.pop("trace", False)
    return ProofSearch(database, program, q, "andor", **options).decide(answer, want_trace)


def all_answers(database, program: Program, q: CQ, engine: str = "prooftree", **options) -> set:
    """Every certain answer of ``q``; ``engine`` is prooftree, andor or chase."""
    if engine == "chase":
        from .chase import certain_answers_via_chase

        answers, _ = certain_answers_via_chase(database, program, q, **options)
        return answers
    return ProofSearch(database, program, q, engine, **options).all_answers()
