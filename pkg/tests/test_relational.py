"""Graphs, K_n-free graphs, linear orders, bounded-menu rational metric spaces, Rado fragments."""
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from fraisse.core import Embedding
from fraisse.registry import make_class
from fraisse.relational import alice_restaurant_check, rado_oracle

from oracles import has_clique_brute, rado_edges, shortest_path_cross, triangle_ok


def _ident(A, B):
    return Embedding(A, B, {x: x for x in A.domain})


# -- graphs --------------------------------------------------------------------------------


def test_k3free_amalgam_of_paths_is_triangle_free():
    K = make_class("k3free")
    A = K.graph([0, 1], [(0, 1)])
    B1 = K.graph([0, 1, 2], [(0, 1), (1, 2)])
    B2 = K.graph([0, 1, 3], [(0, 1), (0, 3)])
    C, g1, g2 = K.amalgamate(A, _ident(A, B1), _ident(A, B2))
    assert C.size == 4
    assert not has_clique_brute(4, [(C.domain.index(a), C.domain.index(b)) for a, b in C.payload], 3)
    assert K.is_member(C)


def test_amalgam_idempotent(graph_cls):
    P = graph_cls.graph([0, 1, 2], [(0, 1), (1, 2)])
    C, g1, g2 = graph_cls.amalgamate(P, _ident(P, P), _ident(P, P))
    assert graph_cls.same(C, P) and g1.as_dict() == g2.as_dict()


@given(st.integers(4, 5), st.data())
def test_free_amalgam_adds_no_clique(n, data):
    K = make_class("graph")
    pairs = list(combinations(range(n), 2))
    e1 = data.draw(st.sets(st.sampled_from(pairs)))
    e2 = data.draw(st.sets(st.sampled_from(pairs)))
    B1, B2 = K.graph(range(n), e1), K.graph(range(n), e2)
    A = K.substructure_generated(B1, [0])
    A2 = K.substructure_generated(B2, [0])
    if not K.same(A, A2):
        return
    C, _, _ = K.amalgamate(A, _ident(A, B1), _ident(A, B2))
    biggest = max(k for k in range(1, n + 1)
                  if has_clique_brute(n, e1, k) or has_clique_brute(n, e2, k) or k == 1)
    idx = {x: i for i, x in enumerate(C.domain)}
    assert not has_clique_brute(C.size, [(idx[a], idx[b]) for a, b in C.payload], biggest + 1)


def test_knfree_parameter():
    K4 = make_class("k4free")
    tri = K4.graph([0, 1, 2], [(0, 1), (1, 2), (0, 2)])
    assert K4.is_member(tri)
    assert not K4.is_member(K4.graph(range(4), combinations(range(4), 2)))


# -- orders --------------------------------------------------------------------------------


def test_order_tie_break_first_side_first():
    O = make_class("order")
    A = O.chain([0])
    B1, B2 = O.chain([0, 1]), O.chain([0, 2])
    C, g1, g2 = O.amalgamate(A, _ident(A, B1), _ident(A, B2))
    assert O.value(C, g1(0), g1(1)) and O.value(C, g1(1), g2(2))


def test_order_gap_interleaving():
    O = make_class("order")
    A = O.chain([0, 1])
    B1, B2 = O.chain([0, 2, 1]), O.chain([0, 3, 1])
    C, g1, g2 = O.amalgamate(A, _ident(A, B1), _ident(A, B2))
    assert C.payload == (g1(0), g1(2), g2(3), g1(1))


@given(st.permutations(range(5)), st.permutations(range(5)))
def test_order_amalgam_restricts_to_inputs(p1, p2):
    O = make_class("order")
    B1 = O.chain(p1)
    B2 = O.chain([x + 10 if x > 1 else x for x in p2])
    A1 = O.substructure_generated(B1, [0, 1])
    A2 = O.substructure_generated(B2, [0, 1])
    if not O.same(A1, A2):
        return
    C, g1, g2 = O.amalgamate(A1, _ident(A1, B1), _ident(A1, B2))
    assert O.is_embedding(g1) and O.is_embedding(g2)


# -- metric spaces -------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def M():
    return make_class("qmetric_q1_d8")


def test_single_path_distance(M):
    A = M.space([0], {})
    B1, B2 = M.space([0, 1], {(0, 1): 1}), M.space([0, 2], {(0, 2): 2})
    C, _, _ = M.amalgamate(A, _ident(A, B1), _ident(A, B2))
    assert M.dist(C, 1, 2) == 3


def test_two_point_base_takes_minimum(M):
    A = M.space([0, 1], {(0, 1): 3})
    B1 = M.space([0, 1, 2], {(0, 1): 3, (0, 2): 1, (1, 2): 2})
    B2 = M.space([0, 1, 3], {(0, 1): 3, (0, 3): 5, (1, 3): 4})
    C, _, _ = M.amalgamate(A, _ident(A, B1), _ident(A, B2))
    expect = shortest_path_cross({}, {0: 1, 1: 2}, {0: 5, 1: 4}, [0, 1], 8)
    assert M.dist(C, 2, 3) == expect == 6
    assert triangle_ok(C.domain, lambda x, y: M.dist(C, x, y) if x != y else 0)


def test_clamped_distance(M):
    A = M.space([0], {})
    B1, B2 = M.space([0, 1], {(0, 1): 4}), M.space([0, 2], {(0, 2): 5})
    C, _, _ = M.amalgamate(A, _ident(A, B1), _ident(A, B2))
    assert M.dist(C, 1, 2) == 8
    assert triangle_ok(C.domain, lambda x, y: M.dist(C, x, y) if x != y else 0)


def test_metric_membership(M):
    assert not M.is_member(M.space([0, 1, 2], {(0, 1): 1, (1, 2): 1, (0, 2): 3}))
    half = make_class("qmetric_q2_d2")
    assert half.dist(half.space([0, 1], {(0, 1): Fraction(1, 2)}), 0, 1) == Fraction(1, 2)
    assert not M.is_member(M.space([0, 1], {(0, 1): Fraction(1, 2)}))


@given(st.data())
def test_metric_amalgam_satisfies_triangles(data):
    M = make_class("qmetric_q2_d3")
    menu = list(M.menu)
    d01 = data.draw(st.sampled_from(menu))
    side = []
    for _ in range(2):
        x = data.draw(st.sampled_from(menu))
        y = data.draw(st.sampled_from(menu))
        side.append((x, y))
    B1 = M.space([0, 1, 2], {(0, 1): d01, (0, 2): side[0][0], (1, 2): side[0][1]})
    B2 = M.space([0, 1, 3], {(0, 1): d01, (0, 3): side[1][0], (1, 3): side[1][1]})
    if not (M.is_member(B1) and M.is_member(B2)):
        return
    A = M.space([0, 1], {(0, 1): d01})
    C, _, _ = M.amalgamate(A, _ident(A, B1), _ident(A, B2))
    assert triangle_ok(C.domain, lambda x, y: M.dist(C, x, y) if x != y else 0)
    for a in (0, 1):
        assert M.dist(C, 2, 3) >= abs(M.dist(C, 2, a) - M.dist(C, a, 3))


def test_metric_jep_uses_max_distance(M):
    D, gA, gB = M.joint_embed(M.space([0], {}), M.space([0], {}))
    assert M.dist(D, gA(0), gB(0)) == 8


# -- Rado fragments ----------------------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 4, 9])
def test_rado_oracle_matches_bit_predicate(k):
    R = rado_oracle(k)
    assert tuple(R.domain) == tuple(range(k))
    assert set(R.payload) == rado_edges(k)


def test_rado_k4_edges():
    assert set(rado_oracle(4).payload) == {(0, 1), (0, 3), (1, 2), (1, 3)}


def test_alice_restaurant():
    R = rado_oracle(8)
    edges = rado_edges(8)
    adj = lambda x, y: (min(x, y), max(x, y)) in edges
    brute = next(v for v in range(8) if v not in (0, 1) and adj(v, 0) and not adj(v, 1))
    assert alice_restaurant_check(R, [0], [1]) == brute
    assert alice_restaurant_check(R, [], []) in R
    G = make_class("graph")
    assert alice_restaurant_check(G.graph([0, 1], [(0, 1)]), [0, 1], []) is None


def test_rado_extension_property_small_sets():
    R = rado_oracle(64)
    for U_mask in range(16):
        for V_mask in range(16):
            if U_mask & V_mask:
                continue
            U = [i for i in range(4) if U_mask >> i & 1]
            V = [i for i in range(4) if V_mask >> i & 1]
            assert alice_restaurant_check(R, U, V) is not None
