"""Compile a warded, piece-wise linear rule set and a CQ into an equivalent
piece-wise linear full Datalog program.

Each explored goal ``p`` gets a predicate ``C_[p]`` whose arguments are the
goal's output variables (in canonical order). Goals are explored breadth
first, mirroring the linear proof-tree search of the solver with constants
replaced by symbolic outputs:

* a goal whose atoms fall into several components (sharing only outputs),
  or that contains extensional atoms, becomes one rule whose body holds the
  extensional atoms and one ``C_`` atom per intensional component;
* a goal with only intensional atoms resolves against every rule; each
  fresh variable of the resolvent is then decided to be an existing output,
  a new output, a constant, or a null (a variable that stays non-output).

Every resolution step becomes one rule ``C_[child](...) -> C_[parent](...)``.
A split rule may have several ``C_`` atoms, but at most one of them can be
mutually recursive with the head: a descendant of a component never holds
more atoms of the goal's topmost recursive component than that component did,
because each resolution step keeps at most one atom of the resolved atom's
component. So the output stays piece-wise linear.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field

from .analysis import WARD, WARD_PWL, affected_positions, classify, node_width_bound
from .analysis import Position
from .chase import seminaive_eval
from .core import CQ, TGD, Atom, Constant, Instance, Program, Variable, evaluate_cq
from .normalize import normalize, to_single_head
from .resolution import GoalQuery, canonical_with_outputs, components, enumerate_mgcus, rename_rule
from .resolution import resolvent_atoms
from .solver import PreconditionError


@dataclass
class RewriteResult:
    program: Program
    query: CQ
    table: dict = field(default_factory=dict)  # canonical goal text -> predicate
    states: int = 0
    bound: int = 0


def _set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


class _Compiler:
    def __init__(self, program: Program, q: CQ, check: bool = True, auto_normalize: bool = True,
                 max_states: int | None = 200_000):
        if check:
            report = classify(program)
            if not (report.warded and report.pwl):
                raise PreconditionError("rewriting needs a warded, piece-wise linear rule set")
        # stored facts of a derived predicate R enter through R__db(x̄) -> R(x̄);
        # R__db is renamed back to R in the output
        used = set(program.schema) | {a.predicate for a in q.body}
        self.stored: dict = {}
        copies = []
        for pred in sorted(program.intensional):
            name, k = f"{pred}__db", 1
            while name in used:
                k += 1
                name = f"{pred}__db{k}"
            used.add(name)
            self.stored[name] = pred
            xs = tuple(Variable(f"x{i}") for i in range(1, program.arities[pred] + 1))
            copies.append(TGD((Atom(name, xs),), (Atom(pred, xs),)))
        program = Program(tuple(program) + tuple(copies))
        single, _ = to_single_head(program)
        leveled = normalize(program)[0] if auto_normalize else single
        self.program = single
        self.q = q
        self.rules = [rename_rule(r) for r in single]
        self.bound = max(node_width_bound(q, leveled, WARD_PWL), node_width_bound(q, single, WARD))
        self.extensional = program.extensional | ({a.predicate for a in q.body} - program.schema)
        self.affected = affected_positions(program)
        consts = {t for r in program for a in (*r.body, *r.head) for t in a.args if isinstance(t, Constant)}
        consts |= {t for a in q.body for t in a.args if isinstance(t, Constant)}
        consts |= {t for t in q.output if isinstance(t, Constant)}
        self.constants = sorted(consts, key=lambda t: t.sort_key)
        self.used_names = used | set(program.schema) | {q.head_predicate}
        self.names: dict = {}
        self.arity: dict = {}
        self.queue: deque = deque()
        self.out_rules: list = []
        self.max_states = max_states

    # --------------------------------------------------------------- naming

    def predicate_for(self, state: tuple, n_outputs: int) -> str:
        name = self.names.get(state)
        if name is not None:
            return name
        text = ", ".join(map(str, state))
        digest = hashlib.sha1(text.encode("utf-8")).hexdigest()
        preds = "_".join(dict.fromkeys(self.stored.get(a.predicate, a.predicate) for a in state))[:24]
        base = f"C_{preds}_{digest[:8]}"
        name, k = base, 8
        while name in self.used_names:
            k += 2
            name = f"C_{preds}_{digest[:k]}"
        self.used_names.add(name)
        self.names[state] = name
        self.arity[name] = n_outputs
        if self.max_states is not None and len(self.names) > self.max_states:
            raise RuntimeError(f"rewriting exceeded {self.max_states} goal states")
        self.queue.append(state)
        return name

    def canon(self, atoms, outputs) -> tuple:
        """Return (state, predicate, argument tuple in parent names)."""
        state, order = canonical_with_outputs(atoms, outputs)
        pred = self.predicate_for(state, len(order))
        return state, pred, tuple(order)

    # ------------------------------------------------------------ deciding

    def _dead(self, atoms, outputs: set) -> bool:
        """A non-output variable stands for a null, so it needs an affected position."""
        for a in atoms:
            for i, t in enumerate(a.args, 1):
                if isinstance(t, Variable) and t not in outputs:
                    if a.predicate in self.extensional or Position(a.predicate, i) not in self.affected:
                        return True
        return False

    def decide(self, atoms: list, fresh: list, outputs: list):
        """Yield (atoms, outputs) for every way of settling the fresh variables."""
        fresh = list(dict.fromkeys(fresh))

        def rec(i, s, outs):
            if i == len(fresh):
                inst = [Atom(a.predicate, tuple(s.get(t, t) for t in a.args)) for a in atoms]
                if not self._dead(inst, set(outs)):
                    yield inst, outs
                return
            v = fresh[i]
            yield from rec(i + 1, s, outs)  # stays a null
            for o in outs:
                yield from rec(i + 1, {**s, v: o}, outs)
            for c in self.constants:
                yield from rec(i + 1, {**s, v: c}, outs)
            yield from rec(i + 1, s, outs + [v])  # becomes a new output

        yield from rec(0, {}, list(outputs))

    # ---------------------------------------------------------- expansion

    def expand(self, state: tuple):
        outs = sorted({t for a in state for t in a.args if isinstance(t, Variable) and t.name.startswith("o")},
                      key=lambda t: int(t.name[1:]))
        head = Atom(self.names[state], tuple(outs))
        parts = components(state, frozenset(outs))
        ext = [a for a in state if a.predicate in self.extensional]
        if len(parts) > 1 or ext:
            body = []
            for part in parts:
                if all(a.predicate in self.extensional for a in part):
                    body.extend(part)
                    continue
                part_outs = [o for o in outs if any(o in a.args for a in part)]
                _, pred, args = self.canon(part, part_outs)
                body.append(Atom(pred, args))
            self.out_rules.append(TGD(tuple(body), (head,)))
            return
        q = GoalQuery(state, tuple(outs))
        old = q.variables
        for rule in self.rules:
            for u in enumerate_mgcus(q, rule):
                raw = resolvent_atoms(q, rule, u)
                if len(raw) > self.bound:
                    continue
                fresh = [t for a in raw for t in a.args if isinstance(t, Variable) and t not in old]
                for inst, new_outs in self.decide(raw, fresh, outs):
                    present = [o for o in new_outs if any(o in a.args for a in inst)]
                    _, pred, args = self.canon(inst, present)
                    self.out_rules.append(TGD((Atom(pred, args),), (head,)))

    def roots(self):
        qvars = list(dict.fromkeys(t for t in self.q.output if isinstance(t, Variable)))
        ans = self._answer_predicate()
        for part in _set_partitions(qvars):
            # each block is either kept as one output or fixed to a constant
            for fix in self._block_choices(len(part)):
                s = {}
                reps = []
                for block, c in zip(part, fix):
                    target = c if c is not None else block[0]
                    for v in block:
                        s[v] = target
                    if c is None:
                        reps.append(block[0])
                atoms = [Atom(a.predicate, tuple(s.get(t, t) for t in a.args)) for a in self.q.body]
                fresh = [t for a in atoms for t in a.args if isinstance(t, Variable) and t not in reps]
                ans_head = Atom(ans, tuple(s.get(v, v) for v in qvars))
                for inst, outs in self.decide(atoms, fresh, reps):
                    present = [o for o in outs if any(o in a.args for a in inst)]
                    _, pred, args = self.canon(inst, present)
                    self.out_rules.append(TGD((Atom(pred, args),), (ans_head,)))
        return ans, qvars

    def _block_choices(self, n: int):
        import itertools

        return itertools.product([None] + self.constants, repeat=n)

    def _answer_predicate(self) -> str:
        name, k = "Ans", 1
        while name in self.used_names:
            k += 1
            name = f"Ans{k}"
        self.used_names.add(name)
        return name

    def run(self) -> RewriteResult:
        ans, qvars = self.roots()
        seen = set()
        while self.queue:
            state = self.queue.popleft()
            if state in seen:
                continue
            seen.add(state)
            self.expand(state)
        rules = _productive(self.out_rules, set(self.names.values()) | {ans})
        back = self.stored
        rules = [TGD(tuple(Atom(back.get(b.predicate, b.predicate), b.args) for b in r.body), r.head)
                 for r in rules]
        rules = list(dict.fromkeys(rules))
        out_q = CQ(self.q.head_predicate, self.q.output, (Atom(ans, tuple(qvars)),))
        table = {", ".join(map(str, s)): p for s, p in self.names.items()}
        return RewriteResult(Program(tuple(rules)), out_q, table, len(seen), self.bound)


def _productive(rules: list, derived: set) -> list:
    """Keep rules whose derived body predicates can all be derived."""
    good: set = set()
    changed = True
    while changed:
        changed = False
        for r in rules:
            h = r.head[0].predicate
            if h in good:
                continue
            if all(b.predicate not in derived or b.predicate in good for b in r.body):
                good.add(h)
                changed = True
    return [r for r in rules if all(b.predicate not in derived or b.predicate in good for b in r.body)]


def rewrite_to_pwl_datalog(program: Program, q: CQ, **options) -> tuple[Program, CQ]:
    """A full Datalog program and query with the same answers on every database
    over the extensional predicates."""
    res = _Compiler(program, q, **options).run()
    return res.program, res.query


def rewrite(program: Program, q: CQ, **options) -> RewriteResult:
    return _Compiler(program, q, **options).run()


def evaluate_rewriting(datalog: Program, q: CQ, database) -> set:
    return evaluate_cq(q, seminaive_eval(datalog, database))


def verify_rewriting(program: Program, q: CQ, databases, engine: str = "prooftree",
                     rewriting: tuple | None = None) -> dict:
    """Compare the rewriting's answers with the direct solver on each database."""
    from .solver import all_answers

    if rewriting is None:
        rewriting = rewrite_to_pwl_datalog(program, q)
    datalog, out_q = rewriting
    rows = []
    for i, db in enumerate(databases):
        db = db if isinstance(db, Instance) else Instance(db)
        got = evaluate_rewriting(datalog, out_q, db)
        expected = all_answers(db, program, q, engine=engine)
        rows.append({
            "database": i,
            "expected": sorted([str(c) for c in t] for t in expected),
            "rewriting": sorted([str(c) for c in t] for t in got),
            "match": got == expected,
        })
    report = classify(datalog)
    return {
        "databases": len(rows),
        "mismatches": [r for r in rows if not r["match"]],
        "results": rows,
        "output_full_datalog": report.full_datalog,
        "output_pwl": report.pwl,
        "rules": len(datalog),
    }
