import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ONTOLOGY_TEXT
from pwlward.analysis import classify
from pwlward.core import TGD, Atom, Constant, Program, Variable
from pwlward.textio import (
    ParseError,
    parse_database,
    parse_program,
    parse_query,
    serialize_database,
    serialize_program,
    serialize_query,
    serialize_report,
)

ONTOLOGY = ONTOLOGY_TEXT


def test_existential_rule():
    (r,) = parse_program("P(x) -> exists z: R(x,z).")
    assert r.frontier == {Variable("x")}
    assert r.existentials == (Variable("z"),)


def test_two_full_rules():
    p = parse_program("E(x,y) -> T(x,y). E(x,y), T(y,z) -> T(x,z).")
    assert len(p) == 2 and all(r.is_full for r in p)


def test_arity_mismatch():
    with pytest.raises(ParseError, match="arity"):
        parse_program("R(x,y) -> R(x).")


def test_error_carries_span():
    with pytest.raises(ParseError) as e:
        parse_program("P(x) -> R(x).\nP(x) -> R(x) Q(x).")
    assert e.value.span.line == 2
    assert e.value.span.column > 1


def test_undeclared_head_variable_is_an_error_in_strict_mode():
    with pytest.raises(ParseError, match="exists"):
        parse_program("P(x) -> R(x,y).")
    (r,) = parse_program("P(x) -> R(x,y).", strict=False)
    assert r.existentials == (Variable("y"),)


def test_existential_in_body_rejected():
    with pytest.raises(ParseError, match="body"):
        parse_program("P(x), S(z) -> exists z: R(x,z).")


def test_comments_and_quoted_constants():
    p = parse_program("% leading comment\nP(x, 'a b') -> R(x). % trailing\n")
    assert p[0].body[0].args[1] == Constant("a b")


def test_exists_can_be_a_predicate_name():
    p = parse_program("P(x) -> exists(x).")
    assert p[0].head[0].predicate == "exists"


def test_anonymous_variables_never_collide():
    (r,) = parse_program("R(_, x, _), S(_1) -> P(x).")
    names = [t.name for t in r.body[0].args]
    assert names[0] != names[2]
    assert len({t for a in r.body for t in a.args}) == 4


def test_anonymous_in_head_rejected():
    with pytest.raises(ParseError):
        parse_program("P(x) -> R(x,_).")


def test_parse_database():
    assert set(map(str, parse_database("P(c)."))) == {"P(c)"}
    assert len(parse_database("")) == 0
    assert len(parse_database("Edge(a,b). Edge(b,a).")) == 2


def test_database_rejects_variables():
    with pytest.raises(ParseError, match="variable"):
        parse_database("P(_).")


def test_parse_query():
    q = parse_query("Q(x) :- CTiling(x,y), Finish(y).")
    assert q.output == (Variable("x"),)
    assert parse_query("Q :- R(x,y).").output == ()
    with pytest.raises(ParseError, match="output variable"):
        parse_query("Q(z) :- R(x,y).")


def test_query_head_must_not_clash():
    p = parse_program("P(x) -> Q(x).")
    with pytest.raises(ParseError, match="occurs in the program"):
        parse_query("Q(x) :- P(x).", p)


def test_round_trips():
    src = "P(x) -> exists z: R(x,z)."
    assert parse_program(serialize_program(parse_program(src))) == parse_program(src)
    assert serialize_database(parse_database("")) == ""
    p = parse_program(ONTOLOGY)
    again = parse_program(serialize_program(p))
    assert again == p
    assert classify(again).to_dict() == classify(p).to_dict()


def test_query_round_trip():
    q = parse_query("Q(x, 'A') :- R(x,y), S(y, 'A').")
    assert parse_query(serialize_query(q)) == q


def test_report_json_is_stable():
    text = serialize_report({"b": 1, "a": [1, 2]})
    assert text == json.dumps({"a": [1, 2], "b": 1}, indent=2) + "\n"


# ------------------------------------------------------------ properties

PREDS = {"A": 1, "B": 2, "C": 3, "D": 4, "E": 2}
VARS = [Variable(n) for n in ("x", "y", "z", "w")]
CONSTS = [Constant(n) for n in ("K", "M", "lower case")]


@st.composite
def rules(draw):
    def atoms(terms, lo, hi):
        out = []
        for _ in range(draw(st.integers(lo, hi))):
            p = draw(st.sampled_from(sorted(PREDS)))
            out.append(Atom(p, tuple(draw(st.sampled_from(terms)) for _ in range(PREDS[p]))))
        return out

    body = atoms(VARS + CONSTS, 1, 3)
    ex = [Variable("u"), Variable("v")]
    head = atoms([t for a in body for t in a.args] + ex, 1, 2)
    return TGD(tuple(body), tuple(head))


@settings(max_examples=500, deadline=None)
@given(st.lists(rules(), min_size=0, max_size=8))
def test_program_round_trip(rs):
    p = Program(tuple(rs))
    assert parse_program(serialize_program(p)) == p
