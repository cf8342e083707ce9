"""Quantifier-free sentences over label constants."""
from itertools import permutations, product

import pytest
from hypothesis import given, strategies as st

from fraisse import formulas as f
from fraisse import topology as T
from fraisse.core import ContractViolation
from fraisse.registry import make_class
from fraisse.relational import rado_oracle

from oracles import field_mul, rado_edges


@pytest.fixture(scope="module")
def G():
    return make_class("graph")


# -- parsing ----------------------------------------------------------------------------------


def test_parse_atom(G):
    assert f.parse_sentence("(E 0 1)", G) == f.Rel("E", (0, 1))


def test_parse_conjunction(G):
    phi = f.parse_sentence("(and (E 0 1) (not (E 0 2)))", G)
    assert phi == f.And((f.Rel("E", (0, 1)), f.Not(f.Rel("E", (0, 2)))))
    assert f.to_text(phi) == "(and (E 0 1) (not (E 0 2)))"


@pytest.mark.parametrize("text,fragment", [
    ("(E 0)", "takes 2 arguments"),
    ("(E 0 1", "unexpected end of input"),
    ("(F 0 1)", "unknown symbol"),
    ("(E 0 x)", "a label"),
    ("(E 0 1) (E 1 2)", "trailing token"),
    ("", "unexpected end of input"),
])
def test_parse_errors(G, text, fragment):
    with pytest.raises(f.FormulaError) as info:
        f.parse_sentence(text, G)
    assert fragment in str(info.value)


def test_error_reports_position(G):
    text = "(and (E 0 1) (E 0 q))"
    with pytest.raises(f.FormulaError) as info:
        f.parse_sentence(text, G)
    assert info.value.pos == text.index("q")


def test_symbols_follow_the_class():
    assert f.parse_sentence("(< 0 1)", make_class("order")) == f.Rel("<", (0, 1))
    M = make_class("qmetric_q2_d2")
    assert f.parse_sentence("(d_3/2 0 1)", M) == f.Rel("d_3/2", (0, 1))
    with pytest.raises(f.FormulaError):
        f.parse_sentence("(d_5/2 0 1)", M)
    with pytest.raises(f.FormulaError):
        f.parse_sentence("(= (* 1 1) 1)", make_class("abelian"))


# -- evaluation -----------------------------------------------------------------------------------


def test_eval_on_rado_fragment(G):
    S = rado_oracle(3)
    assert rado_edges(3) == {(0, 1), (1, 2)}
    assert f.eval_sentence(G, S, f.parse_sentence("(and (E 0 1) (not (E 0 2)))", G))


def test_eval_loop_atom_false(G):
    assert not f.eval_sentence(G, rado_oracle(3), f.parse_sentence("(E 0 0)", G))


def test_eval_outside_domain(G):
    with pytest.raises(ContractViolation):
        f.eval_sentence(G, rado_oracle(3), f.parse_sentence("(E 0 9)", G))


def test_eval_field_equations():
    F = make_class("field_p3")
    F9 = F.make(2)
    poly = F9.payload.poly
    for x, y in product(range(9), repeat=2):
        phi = f.parse_sentence(f"(= (* {x} {y}) {field_mul(x, y, 3, poly)})", F)
        assert f.eval_sentence(F, F9, phi)


def test_eval_group_equations():
    A = make_class("abelian")
    Z4 = A.cyclic(4)
    assert f.eval_sentence(A, Z4, f.parse_sentence("(= (+ 1 (+ 1 1)) (- 1))", A))
    assert not f.eval_sentence(A, Z4, f.parse_sentence("(= (+ 1 1) 0)", A))


sentences = st.recursive(
    st.builds(lambda a, b: f"(E {a} {b})", st.integers(0, 3), st.integers(0, 3))
    | st.sampled_from(["true", "false"]),
    lambda inner: st.builds(lambda x: f"(not {x})", inner)
    | st.builds(lambda xs: "(and " + " ".join(xs) + ")", st.lists(inner, max_size=3))
    | st.builds(lambda xs: "(or " + " ".join(xs) + ")", st.lists(inner, max_size=3)),
    max_leaves=8)


@given(sentences, st.integers(0, 63))
def test_negation_is_complement(text, mask):
    G = make_class("graph")
    pairs = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    S = G.graph(range(4), [p for i, p in enumerate(pairs) if mask >> i & 1])
    phi = f.parse_sentence(text, G)
    assert f.parse_sentence(f.to_text(phi), G) == phi
    assert f.eval_sentence(G, S, f.Not(phi)) != f.eval_sentence(G, S, phi)


# -- translation -------------------------------------------------------------------------------------


def test_open_from_structure_examples(G):
    assert f.to_text(f.open_from_structure(G, G.graph([3, 5], [(3, 5)]))) == "(E 3 5)"
    assert f.to_text(f.open_from_structure(G, G.graph([3, 5], []))) == "(not (E 3 5))"
    P = G.graph([0, 1, 2], [(0, 1), (1, 2)])
    assert f.to_text(f.open_from_structure(G, P)) == "(and (E 0 1) (E 1 2) (not (E 0 2)))"


def test_open_from_structure_algebraic_unsupported():
    F = make_class("field")
    with pytest.raises(ContractViolation):
        f.open_from_structure(F, F.make(2))


@pytest.mark.parametrize("name", ["graph", "order", "qmetric_q1_d2", "k3free"])
def test_round_trip_with_basic_opens(name):
    cls = make_class(name)
    for B in cls.enumerate_class(3):
        phi = f.open_from_structure(cls, B)
        O = T.basic_open(cls, B)
        for S in cls.enumerate_class(4):
            if S.size < B.size:
                continue
            # relabel S so that B's labels are its first elements, in every order
            for perm in _orders(S.domain, B.domain):
                S2 = cls.relabel(S, perm)
                assert f.eval_sentence(cls, S2, phi) == T.member_basic(cls, S2, O)


def _orders(domain, labels):
    rest = [100 + i for i in range(len(domain) - len(labels))]
    for p in permutations(domain):
        yield dict(zip(p, list(labels) + rest))


def test_structure_from_open(G):
    P = G.graph([0, 1, 2], [(0, 1), (1, 2)])
    B = f.structure_from_open(G, f.parse_sentence("(E 0 1)", G), P)
    assert B.domain == (0, 1) and B.payload == frozenset({(0, 1)})
    B = f.structure_from_open(G, f.parse_sentence("(or (E 0 1) (E 1 2))", G), P)
    assert B.domain == (0, 1, 2)
    with pytest.raises(ContractViolation):
        f.structure_from_open(G, f.parse_sentence("true", G), P)
    with pytest.raises(ContractViolation):
        f.structure_from_open(G, f.parse_sentence("(E 0 2)", G), P)


def test_containment(G):
    S = G.graph([0, 1, 2], [(0, 1)])
    phi = f.parse_sentence("(or (E 0 1) (E 1 2))", G)
    B = f.structure_from_open(G, phi, S)
    for mask in range(8):
        S2 = G.graph([0, 1, 2, 3], list(B.payload) + [(x, 3) for x in range(3) if mask >> x & 1])
        assert f.eval_sentence(G, S2, phi)
