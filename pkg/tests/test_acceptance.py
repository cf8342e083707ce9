"""Acceptance criteria 1-10.

Each criterion is a function returning ``(ok, detail)``. Under pytest every
criterion is one test that also records a ``criterion N: PASS|FAIL`` line,
echoed in the terminal summary. Running this file directly prints the same
ten lines.
"""
from __future__ import annotations

import math
import random
import sys
import time
from collections import defaultdict
from dataclasses import replace
from itertools import combinations, product

import pytest

import oracles
from fraisse import builder, formulas, topology
from fraisse.abelian import AbelianGroupClass
from fraisse.builder import ExtensionTask
from fraisse.core import Embedding, Structure
from fraisse.fields import FiniteFieldClass, arithmetic, degree, element_of, label_of
from fraisse.registry import make_class
from fraisse.relational import alice_restaurant_check, rado_oracle
from fraisse.snf import det, matmul, smith_normal_form

try:  # the conftest module is importable once pytest has loaded it
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover - direct execution
    ACCEPTANCE_LINES = {}


# ---------------------------------------------------------------------------
# 1. amalgamation squares


def _squares(cls, types, amalg_bound=None) -> tuple[int, int]:
    by_size = defaultdict(list)
    for T in types:
        by_size[cls.size(T)].append(T)
    sizes = sorted(by_size)
    count = bad = 0
    for A in types:
        a = cls.size(A)

        def embeddings(s):
            # a same-size target is isomorphic to A, hence A itself among the types
            targets = [A] if s == a else by_size[s]
            return [h for B in targets for h in cls.all_embeddings(A, B)]

        for s1, s2 in product(sizes, repeat=2):
            if s1 < a or s2 < a or (amalg_bound and s1 + s2 - a > amalg_bound):
                continue
            L1 = embeddings(s1)
            L2 = L1 if s1 == s2 else embeddings(s2)
            for h1, h2 in product(L1, L2):
                C, g1, g2 = cls.amalgamate(A, h1, h2)
                count += 1
                if not (cls.is_embedding(g1) and cls.is_embedding(g2)
                        and all(g1(h1(x)) == g2(h2(x)) for x in A.domain)):
                    bad += 1
    return count, bad


def criterion_1():
    t0 = time.time()
    parts = []
    for name, bound, amalg in (("graph", 4, None), ("k3free", 4, None), ("order", 4, None),
                               ("qmetric_q1_d8", 4, 4), ("abelian", 8, None)):
        cls = make_class(name)
        parts.append((name, *_squares(cls, list(cls.enumerate_class(bound)), amalg)))
    for p in (2, 3):
        cls = FiniteFieldClass(p, size_cap=p ** 12)
        parts.append((f"field_p{p}", *_squares(cls, [cls.make(n) for n in range(1, 5)])))
    elapsed = time.time() - t0
    ok = all(bad == 0 and n > 0 for _, n, bad in parts) and elapsed < 300
    detail = ", ".join(f"{name}: {n} squares, {bad} bad" for name, n, bad in parts)
    return ok, f"{detail}; {elapsed:.0f}s"


# ---------------------------------------------------------------------------
# 2. random graph genericity


def _graph_run(seed: Structure, steps: int):
    G = make_class("graph")
    return builder.run(builder.new_builder(G, seed), steps)


def criterion_2():
    G = make_class("graph")
    X = _graph_run(G.graph([0, 1], [(0, 1)]), 500)
    Y = _graph_run(G.graph([0], []), 500)
    R = builder.new_builder(G, rado_oracle(512))
    xy = builder.back_and_forth(G, X, Y, 20)
    xr = builder.back_and_forth(G, X, R, 20)
    rado_grew = len(xr.Y.stages) > 1
    # extension property over the first 8 absorbed labels
    state, demanded, missing = X, 0, []
    first8 = list(range(8))
    for assign in product((0, 1, 2), repeat=8):
        U = [x for x, s in zip(first8, assign) if s == 1]
        V = [x for x, s in zip(first8, assign) if s == 2]
        if alice_restaurant_check(state.top, U, V) is None:
            base = sorted(U + V) or [0]
            A1 = G.substructure_generated(state.top, base)
            z = max(base) + 1 + max(state.top.domain)
            A2 = G.graph(base + [z], list(A1.payload) + [(u, z) for u in U])
            task = ExtensionTask(A1, A2, Embedding(A1, A2, {x: x for x in base}),
                                 tuple(base), tuple(base))
            state, status, _ = builder.demand(state, task)
            demanded += 1
            if alice_restaurant_check(state.top, U, V) is None:
                missing.append((U, V))
    ok = xy.ok and xr.ok and not missing
    return ok, (f"runs vs each other: {xy.ok}; vs Rado(512): {xr.ok} "
                f"(Rado side extended: {rado_grew}); 6561 (U,V) pairs, "
                f"{demanded} needed extra demands, {len(missing)} unmet")


# ---------------------------------------------------------------------------
# 3. fairness and saturation


def criterion_3():
    details, ok = [], True
    for name in ("graph", "order", "k3free", "qmetric_q1_d2"):
        cls = make_class(name)
        state = builder.new_builder(cls, topology.age_type(cls, 0))
        for code in range(200):
            state = builder.run(state, builder.fairness_bound(code) - state.steps)
            e = state.entry(code)
            if e is None or e.status not in (builder.REALIZED, builder.VACUOUS):
                ok = False
                details.append(f"{name} code {code}: {e}")
                break
        realized = confirmed = 0
        for code in range(200):
            e = state.entry(code)
            if e.status != builder.REALIZED:
                continue
            realized += 1
            task = builder.task_for_code(cls, code)
            rep = builder.verify_saturation(state, task)
            if (rep.status == builder.REALIZED and rep.stage <= e.stage
                    and cls.is_embedding(rep.witness)):
                confirmed += 1
        ok = ok and confirmed == realized
        details.append(f"{name}: {realized} realized / {200 - realized} vacuous, "
                       f"{confirmed} witnesses confirmed")
    return ok, "; ".join(details)


# ---------------------------------------------------------------------------
# 4. homogeneity


def criterion_4():
    G, L = make_class("graph"), make_class("order")
    gs = builder.run(builder.new_builder(G, G.graph([0, 1], [(0, 1)])), 300)
    ls = builder.run(builder.new_builder(L, L.chain([0])), 300)
    rg = builder.verify_homogeneity(gs, 3, 10)
    rl = builder.verify_homogeneity(ls, 3, 10)
    ok = rg.ok and rl.ok and rg.checked > 0 and rl.checked > 0
    return ok, (f"graph: {rg.checked} extensions, {len(rg.failures)} failures; "
                f"order: {rl.checked} extensions, {len(rl.failures)} failures")


# ---------------------------------------------------------------------------
# 5. metric invariants


def _int_metric_ok(points, dist, q: int, menu_max: int) -> bool:
    idx = {x: i for i, x in enumerate(points)}
    n = len(points)
    M = [[0] * n for _ in range(n)]
    for (x, y), v in dist.items():
        k = v * q
        if k.denominator != 1 or not 1 <= k <= menu_max:
            return False
        M[idx[x]][idx[y]] = M[idx[y]][idx[x]] = int(k)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dij = M[i][j]
            for k in range(n):
                if k != i and k != j and dij > M[i][k] + M[k][j]:
                    return False
    return True


def criterion_5():
    cls = make_class("qmetric_q2_d8")
    state = builder.run(builder.new_builder(cls, topology.age_type(cls, 0)), 200)
    top = state.top
    # the triangle inequality is hereditary, so the exhaustive scan of the top
    # covers every stage once each stage is shown to be a restriction of it
    top_ok = _int_metric_ok(list(top.domain), dict(top.payload), 2, 16)
    bad = []
    for k in range(len(state.stages)):
        S = state.stage(k)
        coherent = topology.member_basic(cls, top, topology.BasicOpen(S))
        on_menu = all((2 * v).denominator == 1 and 1 <= 2 * v <= 16 for _, v in S.payload)
        if not (coherent and on_menu and cls.is_member(S)):
            bad.append(k)
    ok = top_ok and not bad
    return ok, (f"{len(state.stages)} stages, top has {len(top.domain)} points; exhaustive "
                f"triangle scan of the top {top_ok}; {len(bad)} stages off-menu or incoherent")


# ---------------------------------------------------------------------------
# 6. abelian divisibility and universality


def criterion_6():
    small = AbelianGroupClass(size_cap=50000)
    state = builder.run(builder.new_builder(small, small.group(())), 200)
    stream_top = small.canonicalize(state.top).decode()
    big = AbelianGroupClass(size_cap=10 ** 6)
    state = replace(state, cls=big, _cache={})
    pending = []
    for x in range(10):
        for m in (2, 3, 5):
            pending.append((x, m))
    unmet = []
    for x, m in pending:
        top = state.top
        if any(big.mul(top, m, y) == x for y in top.domain):
            continue
        k = big.order_of(top, x)
        A1 = big.cyclic(k)
        A2 = big.cyclic(m * k)
        e = Embedding(A1, A2, {A1.domain[i]: A2.domain[m * i] for i in range(k)})
        gen = big.generators(A1)
        task = ExtensionTask(A1, A2, e, gen, (x,))
        state, status, _ = builder.demand(state, task)
        top = state.top
        if not any(big.mul(top, m, y) == x for y in top.domain):
            unmet.append((x, m, status))
    types = list(big.enumerate_class(8))
    embedded = sum(1 for T in types
                   if any(big.find_extension(T, {}, state.stage(k)) is not None
                          for k in range(len(state.stages))))
    ok = not unmet and embedded == 11 == len(types)
    return ok, (f"stream top {stream_top}; final {big.canonicalize(state.top).decode()}; "
                f"{30 - len(unmet)}/30 divisibility pairs met; {embedded}/11 types embed")


# ---------------------------------------------------------------------------
# 7. field tower


def _frobenius_ok(S, rng) -> bool:
    p, n, poly = S.payload.p, degree(S), S.payload.poly
    size = p ** n
    K = arithmetic(S)
    if size <= 4096:
        xs = list(range(size))
        pairs = [(x, y) for x in xs for y in xs[:: max(1, size // 64)]]
    else:
        xs = [rng.randrange(size) for _ in range(200)]
        pairs = list(zip(xs, reversed(xs)))
    for x, y in pairs:
        fx, fy = oracles.field_pow(x, p, p, poly), oracles.field_pow(y, p, p, poly)
        if K.frob(x) != fx:
            return False
        if oracles.field_pow(K.add(x, y), p, p, poly) != K.add(fx, fy):
            return False
        if oracles.field_pow(K.mul(x, y), p, p, poly) != K.mul(fx, fy):
            return False
    # bijective: frob^n is the identity and frob has trivial kernel
    for x in xs[:50]:
        z = x
        for _ in range(n):
            z = oracles.field_pow(z, p, p, poly)
        if z != x or (x != 0 and K.frob(x) == 0):
            return False
    return True


def _fixed_count(S, d: int) -> int:
    """Number of x with x^(p^d) = x, counted exhaustively or as p^(kernel dimension)."""
    p, n, poly = S.payload.p, degree(S), S.payload.poly
    if p ** n <= 4096:
        return sum(1 for x in range(p ** n) if oracles.field_pow(x, p ** d, p, poly) == x)
    rows = []
    for i in range(n):
        img = oracles.decode(oracles.field_pow(p ** i, p ** d, p, poly), p, n)
        rows.append([(img[j] - (1 if i == j else 0)) % p for j in range(n)])
    return p ** (n - oracles.rank_mod_p(rows, p))


def criterion_7():
    cls = FiniteFieldClass(2, size_cap=2 ** 60)
    state = builder.run(builder.new_builder(cls, cls.make(1)), 200)
    degrees = [degree(state.stage(k)) for k in range(len(state.stages))]
    chain_ok = all(b % a == 0 for a, b in zip(degrees, degrees[1:]))
    distinct = sorted(set(degrees))
    covers = all(any(n % d == 0 for n in distinct) for d in range(1, 7))
    rng = random.Random(7)
    frob_ok = all(_frobenius_ok(state.stage(k), rng) for k in range(len(state.stages)))
    counts_ok = True
    for n in distinct:
        S = next(state.stage(k) for k in range(len(state.stages)) if degree(state.stage(k)) == n)
        for d in range(1, n + 1):
            if n % d == 0 and _fixed_count(S, d) != 2 ** d:
                counts_ok = False
    ok = chain_ok and covers and frob_ok and counts_ok
    return ok, (f"degrees {distinct}; divisibility chain {chain_ok}; every d<=6 divides a "
                f"degree {covers}; frobenius {frob_ok}; subfield counts {counts_ok}")


# ---------------------------------------------------------------------------
# 8. topology equivalence


_TYPES: dict[tuple[str, int], list] = {}


def _types(cls, n):
    key = (cls.class_id, n)
    if key not in _TYPES:
        _TYPES[key] = cls.types_of_size(n)
    return _TYPES[key]


def _random_member(cls, labels, rng):
    """A random member of the class on exactly ``labels``."""
    T = rng.choice(_types(cls, len(labels)))
    perm = list(labels)
    rng.shuffle(perm)
    return cls.relabel(T, dict(zip(T.domain, perm)))


def _random_extension(cls, base, rng):
    """Grow ``base`` by one to three random amalgamation or joint-embedding steps."""
    S = base
    for _ in range(rng.randint(1, 3)):
        if rng.random() < 0.5:
            S = cls.strict_extend(S)
            continue
        k = rng.randint(1, min(2, len(S.domain)))
        b = tuple(sorted(rng.sample(list(S.domain), k)))
        A1 = cls.substructure_generated(S, b)
        size = len(A1.domain) + 1
        for A2 in rng.sample(_types(cls, size), len(_types(cls, size))):
            embs = cls.all_embeddings(A1, A2)
            if embs:
                e = rng.choice(embs)
                task = ExtensionTask(A1, A2, e, tuple(A1.domain), tuple(A1.domain))
                status, C, _ = builder.realize(cls, S, task)
                if C is not None:
                    S = C
                break
    return S


def criterion_8():
    rng = random.Random(8)
    names = ("graph", "k3free", "order", "qmetric_q1_d2")
    anchors = checks = disagreements = containment_checks = containment_bad = 0
    for i in range(1000):
        cls = make_class(names[i % len(names)])
        n = rng.randint(1, 5)
        labels = sorted(rng.sample(range(12), n))
        B = _random_member(cls, labels, rng)
        phi = formulas.open_from_structure(cls, B)
        O = topology.BasicOpen(B)
        anchors += 1
        for j in range(100):
            base = B if j % 2 == 0 else _random_member(cls, labels, rng)
            S = _random_extension(cls, base, rng) if j % 4 < 2 else base
            checks += 1
            truth = formulas.eval_sentence(cls, S, phi)
            if truth != topology.member_basic(cls, S, O):
                disagreements += 1
            if truth and formulas.constants(phi):
                gen = formulas.structure_from_open(cls, phi, S)
                containment_checks += 1
                # every structure agreeing with ``gen`` on its domain satisfies phi
                if not topology.member_basic(cls, S, topology.BasicOpen(gen)) or not cls.same(gen, B):
                    containment_bad += 1
    ok = disagreements == 0 and containment_bad == 0
    return ok, (f"{anchors} anchors, {checks} extensions, {disagreements} discrepancies; "
                f"{containment_checks} containment checks, {containment_bad} failures")


# ---------------------------------------------------------------------------
# 9. Baire intersections and games


def criterion_9():
    details, ok = [], True
    for name in ("graph", "order", "k3free", "qmetric_q1_d2"):
        cls = make_class(name)
        seed = topology.age_type(cls, 0)
        chain = topology.baire_intersect(cls, topology.BasicOpen(seed),
                                         topology.descriptor_stream(cls), 30)
        visited = [chain.stage(k) for k in range(len(chain.stages))]
        nested = all(topology.member_basic(cls, visited[j], topology.BasicOpen(visited[i]))
                     for i in range(len(visited)) for j in range(i, len(visited)))
        t1 = topology.play_banach_mazur(cls, seed, topology.adversary_random(cls, 1), 30)
        t2 = topology.play_banach_mazur(cls, seed, topology.adversary_random(cls, 2), 30)
        bf = builder.back_and_forth(cls, t1.final, t2.final, 15)
        verdicts = topology.certify_transcript(t1) + topology.certify_transcript(t2)
        certified = sum(1 for _, v in verdicts if v)
        good = nested and bf.ok and certified == len(verdicts)
        ok = ok and good
        details.append(f"{name}: nested {nested}, back-and-forth(15) {bf.ok}, "
                       f"{certified}/{len(verdicts)} descriptors certified")
    return ok, "; ".join(details)


# ---------------------------------------------------------------------------
# 10. Smith normal form against the minors oracle


def criterion_10():
    rng = random.Random(10)
    bad = []
    for trial in range(1000):
        M = [[rng.randint(-5, 5) for _ in range(3)] for _ in range(3)]
        S, U, V = smith_normal_form(M)
        diag = [S[i][i] for i in range(3)]
        off = any(S[i][j] for i in range(3) for j in range(3) if i != j)
        expect = oracles.minors_divisors(M)
        chain = all(diag[i + 1] % diag[i] == 0 if diag[i] else diag[i + 1] == 0
                    for i in range(2))
        if (off or [abs(d) for d in diag] != expect or not chain
                or abs(oracles.det_leibniz(U)) != 1 or abs(oracles.det_leibniz(V)) != 1
                or oracles.matmul(oracles.matmul(U, M), V) != S):
            bad.append(M)
    return not bad, f"1000 matrices, {len(bad)} mismatches"


# ---------------------------------------------------------------------------

CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


def _report(n: int) -> tuple[bool, str]:
    ok, detail = CRITERIA[n]()
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return ok, line


@pytest.mark.acceptance
@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    ok, line = _report(n)
    assert ok, line


if __name__ == "__main__":
    results = [_report(n)[0] for n in (map(int, sys.argv[1:]) if sys.argv[1:] else CRITERIA)]
    sys.exit(0 if all(results) else 1)
