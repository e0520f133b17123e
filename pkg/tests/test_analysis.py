import random

from helpers import ONTOLOGY_TEXT
from pwlward.analysis import (
    WARD,
    WARD_PWL,
    Position,
    affected_positions,
    check_levels,
    classify,
    classify_variables,
    is_full_datalog,
    is_intensionally_linear,
    is_pwl,
    is_warded,
    levels,
    mutually_recursive,
    node_width_bound,
    predicate_graph,
    stratum_levels,
)
from pwlward.core import Program, Variable
from pwlward.generators import random_program
from pwlward.textio import parse_program, parse_query
from oracles import affected_oracle, levels_hold
from pwlward.tiling import tiling_program

ONTOLOGY = parse_program(ONTOLOGY_TEXT)
TC_LINEAR = parse_program("E(x,y) -> T(x,y). E(x,y), T(y,z) -> T(x,z).")
TC_SQUARE = parse_program("E(x,y) -> T(x,y). T(x,y), T(y,z) -> T(x,z).")
V = Variable


def pos(s):
    pred, i = s.rstrip("]").split("[")
    return Position(pred, int(i))


def test_predicate_graph_tc():
    g = predicate_graph(TC_LINEAR)
    assert g.edges == {("E", "T"), ("T", "T")}
    assert mutually_recursive(g, "T", "T")
    assert not mutually_recursive(g, "E", "T")
    assert not mutually_recursive(g, "E", "E")


def test_predicate_graph_single_rule_has_no_cycle():
    g = predicate_graph(parse_program("P(x) -> exists z: R(x,z)."))
    assert g.edges == {("P", "R")}
    assert not mutually_recursive(g, "R", "R")


def test_ontology_scc():
    g = predicate_graph(ONTOLOGY)
    assert mutually_recursive(g, "Type", "Triple")
    assert g.scc_id["Type"] == g.scc_id["Triple"]


def test_affected_examples():
    p = parse_program("P(x) -> exists z: R(x,z). R(x,y) -> P(y).")
    assert affected_positions(p) == {pos("R[2]"), pos("P[1]"), pos("R[1]")}
    assert affected_positions(TC_LINEAR) == frozenset()
    assert affected_positions(ONTOLOGY) == {pos("Triple[3]"), pos("Triple[1]"), pos("Type[1]")}


def test_classify_variables_examples():
    p = parse_program("P(x) -> exists z: R(x,z). R(x,y) -> P(y).")
    c = classify_variables(p, p[1])
    assert c.dangerous == {V("y")}
    assert V("x") in c.harmful and V("x") not in c.dangerous
    c = classify_variables(TC_LINEAR, TC_LINEAR[1])
    assert c.harmless == {V("x"), V("y"), V("z")}
    c = classify_variables(ONTOLOGY, ONTOLOGY[4])
    assert c.dangerous == {V("x"), V("z")}


def test_ontology_wards():
    rep = classify(ONTOLOGY)
    assert rep.warded and rep.pwl
    wards = [ra.ward_atom for ra in rep.per_rule]
    assert wards[:2] == [None, None]
    assert [str(w) for w in wards[2:]] == ["Type(x,y)", "Type(x,y)", "Triple(x,y,z)", "Triple(x,y,z)"]


def test_tiling_program_not_warded_but_pwl():
    rep = classify(tiling_program())
    assert not rep.warded and rep.pwl
    bad = [ra for ra in rep.per_rule if not ra.warded]
    assert any(str(ra.rule.head[0]).startswith("Comp(y") for ra in bad)
    assert all(ra.violation for ra in bad)
    assert not is_intensionally_linear(tiling_program())
    assert not is_full_datalog(tiling_program())


def test_violation_names_a_witness_pair():
    rep = classify(tiling_program())
    comp = next(ra for ra in rep.per_rule if str(ra.rule.head[0]) == "Comp(y,y2)")
    assert "y" in comp.violation and "y2" in comp.violation


def test_empty_program():
    assert is_warded(Program(())) and is_pwl(Program(()))


def test_pwl_examples():
    assert is_pwl(TC_LINEAR)
    assert not is_pwl(TC_SQUARE)
    assert is_pwl(ONTOLOGY)


def test_levels_examples():
    assert levels(TC_LINEAR) == {"E": 1, "T": 2}
    lv = levels(ONTOLOGY)
    assert (lv["SubClass"], lv["SubClassStar"], lv["Triple"], lv["Type"]) == (1, 2, 2, 3)
    assert check_levels(ONTOLOGY, lv)
    st = stratum_levels(ONTOLOGY)
    assert st["Type"] == st["Triple"]


def test_linear_and_full():
    assert is_intensionally_linear(TC_LINEAR) and is_full_datalog(TC_LINEAR)
    p = parse_program("P(x) -> exists z: R(x,z).")
    assert is_intensionally_linear(p) and not is_full_datalog(p)


def test_node_width_bound_examples():
    q = parse_query("Q :- T(x,y).")
    assert node_width_bound(q, TC_LINEAR, WARD_PWL) == 8
    assert node_width_bound(q, TC_LINEAR, WARD) == 4
    q3 = parse_query("Q :- A(x), B(x), C(x).")
    assert node_width_bound(q3, parse_program("A(x) -> B(x)."), WARD_PWL) == 8
    assert node_width_bound(q3, parse_program("P(x) -> P(x)."), WARD_PWL) == 4


def test_report_json_shape():
    d = classify(ONTOLOGY).to_dict()
    assert d["warded"] is True and d["pwl"] is True
    assert d["affected"] == ["Triple[1]", "Triple[3]", "Type[1]"]
    assert len(d["per_rule"]) == 6


def test_full_datalog_is_warded_on_random_programs():
    rng = random.Random(3)
    for _ in range(200):
        p = random_program(rng)
        full = Program(tuple(r for r in p if r.is_full))
        if len(full):
            assert is_warded(full)


def test_affected_and_levels_against_oracles_on_random_programs():
    rng = random.Random(11)
    for _ in range(200):
        p = random_program(rng)
        assert affected_positions(p) == affected_oracle(p)
        assert levels_hold(p, levels(p))
