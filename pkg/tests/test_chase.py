import random

import pytest

from pwlward.chase import (
    ChaseError,
    NullCounter,
    bounded_chase,
    certain_answers_via_chase,
    chase_step,
    export_chase_graph,
    naive_eval,
    seminaive_eval,
)
from pwlward.core import Atom, Constant, Instance, Null, Variable, find_homomorphisms
from pwlward.generators import random_case, random_digraph
from pwlward.textio import parse_database, parse_program, parse_query

P62 = parse_program("P(x) -> exists y: R(x,y).")
D62 = parse_database("P(c).")
TC = parse_program("E(x,y) -> T(x,y). E(x,y), T(y,z) -> T(x,z).")
TC_SQ = parse_program("E(x,y) -> T(x,y). T(x,y), T(y,z) -> T(x,z).")
CHAIN = parse_database("E(a,b). E(b,c). E(c,d).")
x = Variable("x")


def closure(edges):
    reach = set(edges)
    while True:
        new = {(u, w) for (u, v) in reach for (v2, w) in reach if v == v2} - reach
        if not new:
            return reach
        reach |= new


def t_pairs(inst):
    return {(a.args[0].name, a.args[1].name) for a in inst if a.predicate == "T"}


def test_chase_step_invents_a_null():
    out = chase_step(Instance([Atom("P", (Constant("a"),))]), P62[0], {x: Constant("a")}, NullCounter())
    assert {str(a) for a in out} == {"P(a)", "R(a,⊥1)"}


def test_chase_step_full_rule():
    out = chase_step(parse_database("E(a,b)."), TC[0], {x: Constant("a"), Variable("y"): Constant("b")},
                     NullCounter())
    assert {str(a) for a in out} == {"E(a,b)", "T(a,b)"}


def test_chase_step_rejects_inapplicable_trigger():
    with pytest.raises(ChaseError):
        chase_step(Instance(), P62[0], {x: Constant("a")}, NullCounter())


def test_repeated_trigger_gets_a_new_null():
    counter = NullCounter()
    i1 = chase_step(D62, P62[0], {x: Constant("c")}, counter)
    i2 = chase_step(i1, P62[0], {x: Constant("c")}, counter)
    assert Atom("R", (Constant("c"), Null(2))) in i2


def test_restricted_chase_on_the_counterexample():
    res = bounded_chase(D62, P62)
    assert res.terminated and {str(a) for a in res.instance} == {"P(c)", "R(c,⊥1)"}


def test_oblivious_flag_still_terminates_here():
    res = bounded_chase(D62, P62, oblivious=True)
    assert res.terminated and len(res.instance) == 2


def test_restricted_skips_satisfied_triggers():
    p = parse_program("P(x) -> exists y: R(x,y).")
    res = bounded_chase(parse_database("P(c). R(c,d)."), p)
    assert not res.steps and res.terminated


def test_tc_on_chain():
    res = bounded_chase(CHAIN, TC)
    assert res.terminated
    assert t_pairs(res.instance) == closure({("a", "b"), ("b", "c"), ("c", "d")})
    assert len(t_pairs(res.instance)) == 6


def test_non_terminating_chase_is_truncated():
    p = parse_program("R(x,y) -> exists z: R(y,z).")
    res = bounded_chase(parse_database("R(a,b)."), p, max_depth=3)
    assert not res.terminated
    res = bounded_chase(parse_database("R(a,b)."), p, max_steps=10)
    assert not res.terminated and res.budget_spent == 10


def test_certain_answers_counterexample():
    q1, q2 = parse_query("Q :- R(x,y)."), parse_query("Q :- R(x,y), P(y).")
    assert certain_answers_via_chase(D62, P62, q1) == ({()}, True)
    assert certain_answers_via_chase(D62, P62, q2) == (set(), True)


def test_certain_answers_flag_incomplete():
    p = parse_program("R(x,y) -> exists z: R(y,z).")
    ans, done = certain_answers_via_chase(parse_database("R(a,b)."), p, parse_query("Q(x) :- R(x,y)."),
                                          max_steps=5)
    assert not done and ans == {(Constant("a"),), (Constant("b"),)}


def test_seminaive_examples():
    assert t_pairs(seminaive_eval(TC, CHAIN)) == t_pairs(bounded_chase(CHAIN, TC).instance)
    assert set(seminaive_eval(parse_program(""), CHAIN)) == set(CHAIN)
    with pytest.raises(ChaseError):
        seminaive_eval(P62, D62)


def test_linear_and_square_tc_agree_on_random_digraphs():
    rng = random.Random(2)
    for _ in range(20):
        db = random_digraph(rng)
        edges = {(a.args[0].name, a.args[1].name) for a in db}
        lin, sq = seminaive_eval(TC, db), seminaive_eval(TC_SQ, db)
        assert t_pairs(lin) == t_pairs(sq) == closure(edges)


def test_seminaive_chase_and_naive_agree_on_full_programs():
    for seed in range(40):
        case = random_case(seed, "any")
        full = type(case.program)(tuple(r for r in case.program if r.is_full))
        a = set(seminaive_eval(full, case.database))
        assert a == set(naive_eval(full, case.database))
        assert a == set(bounded_chase(case.database, full, max_steps=None).instance)


def _replay(res):
    inst = Instance(res.database)
    for s in res.steps:
        body = [Atom(b.predicate, tuple(s.trigger.get(t, t) for t in b.args)) for b in s.rule.body]
        assert all(b in inst for b in body)
        inst.update(s.new_atoms)
    return inst


def _models(inst, program):
    for r in program:
        for h in find_homomorphisms(r.body, inst):
            fixed = {v: h[v] for v in r.frontier}
            if not any(True for _ in find_homomorphisms(r.head, inst, fixed)):
                return False
    return True


def test_replay_soundness_and_model_property():
    for seed in range(60):
        case = random_case(seed, "ward_pwl")
        res = bounded_chase(case.database, case.program, max_steps=None)
        assert set(_replay(res)) == set(res.instance)
        assert set(case.database) <= set(res.instance)
        assert res.terminated and _models(res.instance, case.program)
        assert export_chase_graph(res).is_acyclic()


def test_chase_graph_one_step():
    g = export_chase_graph(bounded_chase(D62, P62))
    assert [(str(s), str(t), ri) for s, t, ri, _ in g.edges] == [("P(c)", "R(c,⊥1)", 0)]
    assert 'label="σ0 {x↦c}"' in g.to_dot()
    assert g.to_dot() == export_chase_graph(bounded_chase(D62, P62)).to_dot()


def test_chase_graph_database_only():
    g = export_chase_graph(bounded_chase(CHAIN, parse_program("")))
    assert g.edges == [] and len(g.nodes) == 3


def test_chase_graph_tc_reachability():
    res = bounded_chase(CHAIN, TC)
    g = export_chase_graph(res)
    import networkx as nx

    dg = nx.DiGraph([(s, t) for s, t, _, _ in g.edges])
    for a in res.instance:
        if a.predicate == "T":
            sources = {b for b in nx.ancestors(dg, a) if dg.in_degree(b) == 0}
            assert sources and all(b.predicate == "E" for b in sources)
    assert all(t not in res.database for _, t, _, _ in g.edges)
