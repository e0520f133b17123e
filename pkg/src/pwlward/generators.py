"""Seeded random programs, databases and queries for test corpora.

Programs are drawn blindly and kept only if they land in the requested
fragment and their restricted chase finishes within a step budget, so the
chase can serve as an oracle.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .analysis import classify
from .chase import bounded_chase
from .core import CQ, TGD, Atom, Constant, Instance, Program, Variable

EXT = {"E": 2, "F": 1, "G": 3}
INT = {"P": 1, "R": 2, "S": 2, "T": 3}
CONSTANTS = ("a", "b", "c")


@dataclass
class Case:
    program: Program
    database: Instance
    query: CQ
    seed: int
    chase_steps: int = 0


def _args(rng: random.Random, arity: int, pool: list) -> tuple:
    return tuple(rng.choice(pool) for _ in range(arity))


def random_rule(rng: random.Random, preds: dict, heads: dict, max_body: int = 3,
                p_exist: float = 0.35, p_const: float = 0.05) -> TGD:
    names = sorted(preds)
    pool = [Variable(f"x{i}") for i in range(1, 4)]
    body = []
    for _ in range(rng.randint(1, max_body)):
        p = rng.choice(names)
        body.append(Atom(p, _args(rng, preds[p], pool)))
    body_vars = list(dict.fromkeys(t for a in body for t in a.args))
    h = rng.choice(sorted(heads))
    head_args = []
    z = Variable("z")
    for _ in range(heads[h]):
        roll = rng.random()
        if roll < p_exist:
            head_args.append(z)
        elif roll < p_exist + p_const:
            head_args.append(Constant(rng.choice(CONSTANTS)))
        else:
            head_args.append(rng.choice(body_vars))
    return TGD(tuple(body), (Atom(h, tuple(head_args)),))


def random_program(rng: random.Random, max_rules: int = 6) -> Program:
    preds = {**EXT, **INT}
    rules = [random_rule(rng, preds, INT) for _ in range(rng.randint(1, max_rules))]
    return Program(tuple(rules))


def random_database(rng: random.Random, program: Program, max_facts: int = 12,
                    p_intensional: float = 0.15) -> Instance:
    used = {a.predicate for r in program for a in r.body}
    preds = {p: k for p, k in EXT.items() if p in used} or dict(EXT)
    for p in sorted(program.intensional):
        if rng.random() < p_intensional:
            preds[p] = program.arities[p]
    names = sorted(preds)
    consts = [Constant(c) for c in CONSTANTS]
    atoms = []
    for _ in range(rng.randint(min(4, max_facts), max_facts)):
        p = rng.choice(names)
        atoms.append(Atom(p, _args(rng, preds[p], consts)))
    return Instance(atoms)


def random_query(rng: random.Random, program: Program, max_atoms: int = 2) -> CQ:
    preds = dict(program.arities)
    names = sorted(preds)
    derived = sorted(program.intensional)
    pool = [Variable(f"y{i}") for i in range(1, 4)]
    body = []
    for i in range(rng.randint(1, max_atoms)):
        p = rng.choice(derived if i == 0 or rng.random() < 0.5 else names)
        args = tuple(Constant(rng.choice(CONSTANTS)) if rng.random() < 0.1 else rng.choice(pool)
                     for _ in range(preds[p]))
        body.append(Atom(p, args))
    vs = list(dict.fromkeys(t for a in body for t in a.args if isinstance(t, Variable)))
    k = rng.randint(0, min(2, len(vs)))
    return CQ("Q", tuple(rng.sample(vs, k)), tuple(body))


def query_from_instance(rng: random.Random, instance: Instance, max_atoms: int = 2) -> CQ | None:
    """Generalize one or two chase atoms sharing a term into a CQ.

    Nulls always become variables, constants usually do; such queries tend
    to have answers, unlike blind draws.
    """
    atoms = sorted(instance, key=str)
    derived = [a for a in atoms if any(not isinstance(t, Constant) for t in a.args)] or atoms
    if not atoms:
        return None
    picked = [rng.choice(derived)]
    if max_atoms > 1 and rng.random() < 0.5:
        linked = [b for b in atoms if b != picked[0] and set(b.args) & set(picked[0].args)]
        if linked:
            picked.append(rng.choice(linked))
    names: dict = {}
    body = []
    for a in picked:
        args = []
        for t in a.args:
            if isinstance(t, Constant) and rng.random() < 0.2:
                args.append(t)
            else:
                args.append(names.setdefault(t, Variable(f"y{len(names) + 1}")))
        body.append(Atom(a.predicate, tuple(args)))
    vs = list(dict.fromkeys(t for a in body for t in a.args if isinstance(t, Variable)))
    k = rng.randint(0, min(2, len(vs)))
    return CQ("Q", tuple(rng.sample(vs, k)), tuple(body))


def random_case(seed: int, fragment: str = "ward_pwl", max_rules: int = 6, max_facts: int = 12,
                chase_budget: int = 2000, max_tries: int = 10_000) -> Case:
    """First draw (from ``seed``) in the fragment whose chase terminates.

    ``fragment`` is ``"ward_pwl"`` (warded and piece-wise linear),
    ``"ward"`` (warded but not piece-wise linear) or ``"any"``.
    """
    rng = random.Random(seed)
    for _ in range(max_tries):
        prog = random_program(rng, max_rules)
        rep = classify(prog)
        if fragment == "ward_pwl" and not (rep.warded and rep.pwl):
            continue
        if fragment == "ward" and not (rep.warded and not rep.pwl):
            continue
        db = random_database(rng, prog, max_facts)
        res = bounded_chase(db, prog, max_steps=chase_budget)
        if not res.terminated:
            continue
        if not res.steps and rng.random() < 0.9:
            continue
        q = query_from_instance(rng, res.instance) if rng.random() < 0.5 else None
        if q is None:
            q = random_query(rng, prog)
        return Case(prog, db, q, seed, res.budget_spent)
    raise RuntimeError(f"no {fragment} case found from seed {seed}")


def random_cq(rng: random.Random, max_atoms: int = 4, n_vars: int = 4, p_const: float = 0.1) -> CQ:
    preds = {**EXT, **INT}
    names = sorted(preds)
    pool = [Variable(f"u{i}") for i in range(1, n_vars + 1)]
    body = []
    for _ in range(rng.randint(1, max_atoms)):
        p = rng.choice(names)
        body.append(Atom(p, tuple(Constant(rng.choice(CONSTANTS)) if rng.random() < p_const
                                  else rng.choice(pool) for _ in range(preds[p]))))
    vs = list(dict.fromkeys(t for a in body for t in a.args if isinstance(t, Variable)))
    k = rng.randint(0, min(2, len(vs)))
    return CQ("Q", tuple(rng.sample(vs, k)), tuple(body))


def random_digraph(rng: random.Random, max_nodes: int = 8, p_edge: float = 0.25) -> Instance:
    n = rng.randint(1, max_nodes)
    nodes = [Constant(f"n{i}") for i in range(n)]
    return Instance(Atom("E", (u, v)) for u in nodes for v in nodes if rng.random() < p_edge)
