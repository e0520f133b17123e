import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from pwlward.core import (
    CQ,
    Atom,
    Constant,
    Instance,
    Null,
    Variable,
    apply_substitution,
    atom,
    compose,
    evaluate_cq,
    fact,
    find_homomorphisms,
)

x, y, z = Variable("x"), Variable("y"), Variable("z")
a, b, c = Constant("a"), Constant("b"), Constant("c")


def test_terms_are_interned_and_kinds_disjoint():
    assert Constant("a") is Constant("a")
    assert Variable("a") is not Constant("a")
    assert Null(1) is Null(1)
    assert Null(1) != Constant("1")


def test_atom_helper_reads_case():
    assert atom("R", "x", "B") == Atom("R", (x, Constant("B")))
    assert fact("R", "x") == Atom("R", (Constant("x"),))


def test_apply_substitution_examples():
    assert apply_substitution({x: a}, [atom("R", "x", "y")]) == [Atom("R", (a, y))]
    assert apply_substitution({}, [atom("R", "x", "y")]) == [atom("R", "x", "y")]
    assert apply_substitution({x: z, y: z}, [atom("R", "x", "y"), atom("S", "y")]) == [
        Atom("R", (z, z)), Atom("S", (z,))]


def test_substitution_leaves_constants_alone():
    assert apply_substitution({x: b}, [Atom("R", (a, x))]) == [Atom("R", (a, b))]


def test_find_homomorphisms_examples():
    inst = Instance([fact("R", "a", "b"), fact("R", "a", "c")])
    found = {tuple(sorted((k.name, v.name) for k, v in h.items()))
             for h in find_homomorphisms([atom("R", "x", "y")], inst)}
    assert found == {(("x", "a"), ("y", "b")), (("x", "a"), ("y", "c"))}

    assert list(find_homomorphisms([atom("R", "x", "x")], Instance([fact("R", "a", "b")]))) == []

    n1 = Null(1)
    inst = Instance([Atom("R", (a, n1)), Atom("S", (n1,))])
    hs = list(find_homomorphisms([atom("R", "x", "y"), atom("S", "y")], inst))
    assert hs == [{x: a, y: n1}]


def test_find_homomorphisms_respects_fixed():
    inst = Instance([fact("R", "a", "b"), fact("R", "b", "c")])
    hs = list(find_homomorphisms([atom("R", "x", "y")], inst, {x: b}))
    assert hs == [{x: b, y: c}]


def test_evaluate_cq_examples():
    q = CQ("Q", (x,), (atom("R", "x", "y"),))
    assert evaluate_cq(q, Instance([fact("R", "a", "b")])) == {(a,)}

    n1 = Null(1)
    chased = Instance([fact("P", "c"), Atom("R", (c, n1))])
    q2 = CQ("Q", (), (atom("R", "x", "y"), atom("P", "y")))
    assert evaluate_cq(q2, chased) == set()
    q1 = CQ("Q", (), (atom("R", "x", "y"),))
    assert evaluate_cq(q1, chased) == {()}


def test_evaluate_cq_drops_null_tuples_unless_asked():
    n1 = Null(1)
    inst = Instance([Atom("R", (a, n1))])
    q = CQ("Q", (x, y), (atom("R", "x", "y"),))
    assert evaluate_cq(q, inst) == set()
    assert evaluate_cq(q, inst, keep_nulls=True) == {(a, n1)}


def test_adom_is_sorted_constants_then_nulls():
    inst = Instance([Atom("R", (Null(2), b)), Atom("R", (a, Null(1)))])
    assert inst.adom() == [a, b, Null(1), Null(2)]


# ------------------------------------------------------------ properties

DOM = [Constant("a"), Constant("b"), Null(1), Null(2)]
VARS = [Variable("x"), Variable("y"), Variable("z")]
PREDS = {"R": 2, "S": 1}


def _atoms(terms, max_size):
    return st.lists(
        st.sampled_from(sorted(PREDS)).flatmap(
            lambda p: st.tuples(*[st.sampled_from(terms)] * PREDS[p]).map(lambda args, p=p: Atom(p, args))
        ),
        min_size=1, max_size=max_size,
    )


def _brute_force(q: CQ, inst: Instance) -> set:
    vs = sorted({t for at in q.body for t in at.args if isinstance(t, Variable)}, key=lambda v: v.name)
    dom = inst.adom()
    out = set()
    for values in itertools.product(dom, repeat=len(vs)):
        s = dict(zip(vs, values))
        if all(at in inst for at in apply_substitution(s, q.body)):
            row = tuple(s.get(t, t) for t in q.output)
            if all(isinstance(t, Constant) for t in row):
                out.add(row)
    return out


@settings(max_examples=200, deadline=None)
@given(_atoms(DOM, 6), _atoms(VARS + [Constant("a")], 3), st.integers(0, 2))
def test_evaluate_cq_matches_brute_force(facts, body, k):
    inst = Instance(facts)
    vs = list(dict.fromkeys(t for at in body for t in at.args if isinstance(t, Variable)))
    q = CQ("Q", tuple(vs[:k]), tuple(body))
    assert evaluate_cq(q, inst) == _brute_force(q, inst)


@settings(max_examples=200, deadline=None)
@given(_atoms(VARS, 3), st.dictionaries(st.sampled_from(VARS), st.sampled_from(VARS + DOM[:2])),
       st.dictionaries(st.sampled_from(VARS), st.sampled_from(VARS + DOM[:2])))
def test_apply_substitution_is_functorial(atoms, s1, s2):
    lhs = apply_substitution(s2, apply_substitution(s1, atoms))
    assert lhs == apply_substitution(compose(s2, s1), atoms)


@settings(max_examples=100, deadline=None)
@given(_atoms(VARS, 3), _atoms(DOM, 6))
def test_homomorphisms_compose(pattern, facts):
    # a homomorphism h: pattern -> B followed by g: B -> C (a renaming of B's nulls) is one into C
    target = Instance(facts)
    g = {Null(1): Constant("c"), Null(2): Constant("d")}
    image = Instance(apply_substitution(g, facts))
    for h in find_homomorphisms(pattern, target):
        gh = {v: g.get(t, t) for v, t in h.items()}
        assert all(at in image for at in apply_substitution(gh, pattern))
