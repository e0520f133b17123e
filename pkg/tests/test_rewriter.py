import random

import pytest

from helpers import ONTOLOGY_TEXT
from pwlward.analysis import classify
from pwlward.core import Instance, Program
from pwlward.generators import random_case, random_database, random_digraph
from pwlward.rewriter import evaluate_rewriting, rewrite, rewrite_to_pwl_datalog, verify_rewriting
from pwlward.solver import PreconditionError, all_answers
from pwlward.textio import parse_database, parse_program, parse_query, serialize_program

P62 = parse_program("P(x) -> exists y: R(x,y).")
D62 = parse_database("P(c).")
TC = parse_program("E(x,y) -> T(x,y). E(x,y), T(y,z) -> T(x,z).")


def closure(edges):
    reach = set(edges)
    while True:
        new = {(u, w) for (u, v) in reach for (v2, w) in reach if v == v2} - reach
        if not new:
            return reach
        reach |= new


def test_counterexample_rewriting():
    q1, q2 = parse_query("Q :- R(x,y)."), parse_query("Q :- R(x,y), P(y).")
    dl, oq = rewrite_to_pwl_datalog(P62, q1)
    assert oq.body[0].predicate in dl.schema
    assert any(a.predicate == "P" for r in dl for a in r.body)
    assert evaluate_rewriting(dl, oq, D62) == {()}
    dl2, oq2 = rewrite_to_pwl_datalog(P62, q2)
    assert evaluate_rewriting(dl2, oq2, D62) == set()
    report = verify_rewriting(P62, q1, [D62])
    assert not report["mismatches"] and report["results"][0]["expected"] == [[]]


def test_tc_rewriting_computes_the_closure():
    q = parse_query("Q(x,y) :- T(x,y).")
    dl, oq = rewrite_to_pwl_datalog(TC, q)
    rng = random.Random(8)
    for _ in range(20):
        db = random_digraph(rng)
        edges = {(a.args[0].name, a.args[1].name) for a in db}
        got = {(s.name, t.name) for s, t in evaluate_rewriting(dl, oq, db)}
        assert got == closure(edges)


def test_empty_rule_set_reduces_to_cq_evaluation():
    q = parse_query("Q(x) :- E(x,y), E(y,x).")
    dl, oq = rewrite_to_pwl_datalog(Program(()), q)
    db = parse_database("E(a,b). E(b,a). E(b,c).")
    assert {t[0].name for t in evaluate_rewriting(dl, oq, db)} == {"a", "b"}
    assert all(r.is_full for r in dl)


def test_stored_facts_of_derived_predicates_count():
    dl, oq = rewrite_to_pwl_datalog(TC, parse_query("Q(x,y) :- T(x,y)."))
    db = parse_database("T(a,b). E(b,c).")
    assert {(s.name, t.name) for s, t in evaluate_rewriting(dl, oq, db)} == {("a", "b"), ("b", "c")}
    assert not any("__db" in a.predicate for r in dl for a in (*r.body, *r.head))


def test_rewriting_is_deterministic():
    q = parse_query("Q(x,y) :- Type(x,y).")
    p = parse_program(ONTOLOGY_TEXT)
    a, b = rewrite(p, q), rewrite(p, q)
    assert serialize_program(a.program) == serialize_program(b.program)
    assert a.query == b.query and a.table == b.table


def test_outputs_are_full_pwl_datalog():
    p = parse_program(ONTOLOGY_TEXT)
    for text in ("Q(x,y) :- Type(x,y).", "Q(y) :- Type(x,y).", "Q :- Triple(x,y,z), Type(z,w)."):
        dl, _ = rewrite_to_pwl_datalog(p, parse_query(text))
        rep = classify(dl)
        assert rep.full_datalog and rep.pwl


def test_ontology_rewriting_matches_solver():
    p = parse_program(ONTOLOGY_TEXT)
    dbs = [
        parse_database("Type(o,A). Restriction(A,p). Inverse(p,pbar). Restriction(B,pbar)."),
        parse_database("SubClass(A,B). SubClass(B,C). Type(o,A)."),
        Instance(),
    ]
    for text in ("Q(x,y) :- Type(x,y).", "Q(y) :- Type(x,y)."):
        assert not verify_rewriting(p, parse_query(text), dbs)["mismatches"]


def test_precondition():
    with pytest.raises(PreconditionError):
        rewrite_to_pwl_datalog(parse_program("E(x,y) -> T(x,y). T(x,y), T(y,z) -> T(x,z)."),
                               parse_query("Q :- T(x,y)."))


def test_verify_on_empty_corpus():
    report = verify_rewriting(P62, parse_query("Q :- R(x,y)."), [])
    assert report["databases"] == 0 and report["results"] == [] and report["mismatches"] == []


def test_random_rewritings_match_the_solver():
    rng = random.Random(12)
    for seed in range(15):
        c = random_case(seed, "ward_pwl")
        dbs = [c.database] + [random_database(rng, c.program) for _ in range(2)]
        report = verify_rewriting(c.program, c.query, dbs)
        assert not report["mismatches"], seed
        assert report["output_full_datalog"] and report["output_pwl"]
        assert all_answers(c.database, c.program, c.query) == evaluate_rewriting(
            *rewrite_to_pwl_datalog(c.program, c.query), c.database)
