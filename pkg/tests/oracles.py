"""Brute-force reference computations used to derive expected values.

Nothing here imports the package's algorithms; the helpers work on plain
Python data (edge sets, distance tables, coefficient lists, integer matrices).
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Iterable, Sequence


# -- graphs -------------------------------------------------------------------------


def graph_key(n: int, edges: Iterable[tuple[int, int]]) -> tuple:
    """Smallest sorted edge list over all relabelings of {0..n-1}."""
    E = [tuple(e) for e in edges]
    best = None
    for perm in permutations(range(n)):
        key = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in E))
        if best is None or key < best:
            best = key
    return (n, best)


def graph_types(n: int, forbid_clique: int | None = None) -> set[tuple]:
    pairs = list(combinations(range(n), 2))
    out = set()
    for mask in range(1 << len(pairs)):
        E = [p for i, p in enumerate(pairs) if mask >> i & 1]
        if forbid_clique and has_clique_brute(n, E, forbid_clique):
            continue
        out.add(graph_key(n, E))
    return out


def has_clique_brute(n: int, edges, k: int) -> bool:
    E = {frozenset(e) for e in edges}
    return any(all(frozenset(p) in E for p in combinations(c, 2))
               for c in combinations(range(n), k))


def rado_edges(k: int) -> set[tuple[int, int]]:
    """i < j adjacent iff the i-th binary digit of j is 1."""
    return {(i, j) for j in range(k) for i in range(j) if format(j, "b")[::-1].ljust(k, "0")[i] == "1"}


# -- metric spaces -------------------------------------------------------------------


def triangle_ok(points: Sequence[int], d) -> bool:
    for x, y, z in permutations(points, 3):
        if Fraction(d(x, z)) > Fraction(d(x, y)) + Fraction(d(y, z)):
            return False
    return True


def shortest_path_cross(dA: dict, left: dict, right: dict, glue: Sequence, dmax) -> Fraction:
    """min over a in glue of left[a] + right[a], clamped at dmax."""
    return min(min(Fraction(left[a]) + Fraction(right[a]) for a in glue), Fraction(dmax))


# -- polynomials over F_p -----------------------------------------------------------------


def poly_mod(a: list[int], m: list[int], p: int) -> list[int]:
    """Remainder of a by monic m; coefficient lists are lowest degree first."""
    a = [c % p for c in a]
    while len(a) >= len(m):
        c = a[-1]
        if c:
            shift = len(a) - len(m)
            for i, mc in enumerate(m):
                a[shift + i] = (a[shift + i] - c * mc) % p
        a.pop()
    return a


def poly_mul(a: list[int], b: list[int], p: int) -> list[int]:
    out = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % p
    return out


def irreducible_brute(p: int, poly: Sequence[int]) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2."""
    n = len(poly) - 1
    for d in range(1, n // 2 + 1):
        for low in product(range(p), repeat=d):
            divisor = list(low) + [1]
            r = poly_mod(list(poly), divisor, p)
            if not any(r):
                return False
    return True


def lex_smallest_irreducible(p: int, n: int) -> tuple[int, ...]:
    """Monic degree-n irreducible, lex-smallest on coefficients read from x^(n-1) down to x^0."""
    if n == 1:
        return (0, 1)
    best = None
    for low in product(range(p), repeat=n):
        poly = list(low) + [1]
        if poly[0] == 0:
            continue
        if irreducible_brute(p, poly):
            if best is None or poly[::-1] < list(best)[::-1]:
                best = tuple(poly)
    return best


def decode(z: int, p: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        out.append(z % p)
        z //= p
    return out


def encode(c: Sequence[int], p: int) -> int:
    z = 0
    for x in reversed(list(c)):
        z = z * p + x
    return z


def field_mul(x: int, y: int, p: int, poly: Sequence[int]) -> int:
    n = len(poly) - 1
    r = poly_mod(poly_mul(decode(x, p, n), decode(y, p, n), p), list(poly), p)
    return encode(r + [0] * (n - len(r)), p)


def field_pow(x: int, e: int, p: int, poly: Sequence[int]) -> int:
    result, base = 1, x
    while e:
        if e & 1:
            result = field_mul(result, base, p, poly)
        base = field_mul(base, base, p, poly)
        e >>= 1
    return result


def rank_mod_p(rows: list[list[int]], p: int) -> int:
    rows = [[x % p for x in r] for r in rows]
    rank, col = 0, 0
    ncols = len(rows[0]) if rows else 0
    while rank < len(rows) and col < ncols:
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        rows[rank] = [x * inv % p for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col]:
                f = rows[i][col]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank


# -- abelian groups ---------------------------------------------------------------------


def quotient_order_profile(moduli: Sequence[int], relations: Sequence[Sequence[int]]) -> tuple:
    """Sorted element orders of Z/m1 x ... x Z/mk modulo the subgroup spanned by relations."""
    elems = list(product(*[range(m) for m in moduli]))

    def add(u, v):
        return tuple((a + b) % m for a, b, m in zip(u, v, moduli))

    sub = {tuple(0 for _ in moduli)}
    frontier = list(sub)
    gens = [tuple(r % m for r, m in zip(rel, moduli)) for rel in relations]
    while frontier:
        nxt = []
        for s in frontier:
            for g in gens:
                t = add(s, g)
                if t not in sub:
                    sub.add(t)
                    nxt.append(t)
        frontier = nxt
    cosets = {}
    for x in elems:
        rep = min(add(x, s) for s in sub)
        cosets[rep] = True
    reps = sorted(cosets)

    def canon(x):
        return min(add(x, s) for s in sub)

    zero = canon(tuple(0 for _ in moduli))
    orders = []
    for r in reps:
        k, cur = 1, r
        while cur != zero:
            cur = canon(add(cur, r))
            k += 1
        orders.append(k)
    return tuple(sorted(orders))


def cyclic_profile(factors: Sequence[int]) -> tuple:
    return quotient_order_profile(factors, [])


def abelian_type_count(n_max: int) -> int:
    """Number of abelian groups of order <= n_max, via partitions of prime exponents."""
    def partitions(k: int) -> int:
        p = [1] + [0] * k
        for part in range(1, k + 1):
            for s in range(part, k + 1):
                p[s] += p[s - part]
        return p[k]

    total = 0
    for n in range(1, n_max + 1):
        count, m, q = 1, n, 2
        while m > 1:
            e = 0
            while m % q == 0:
                m //= q
                e += 1
            if e:
                count *= partitions(e)
            q += 1
        total += count
    return total


# -- integer matrices -------------------------------------------------------------------------


def det_leibniz(M: Sequence[Sequence[int]]) -> int:
    n = len(M)
    total = 0
    for perm in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1
        for i in range(n):
            prod *= M[i][perm[i]]
        total += -prod if inv % 2 else prod
    return total


def minors_divisors(M: Sequence[Sequence[int]]) -> list[int]:
    """Invariant factors from gcds of k x k minors: s_k = d_k / d_{k-1}, zeros after rank."""
    rows, cols = len(M), len(M[0])
    d = [1]
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for R in combinations(range(rows), k):
            for C in combinations(range(cols), k):
                g = math.gcd(g, det_leibniz([[M[r][c] for c in C] for r in R]))
        d.append(g)
    out = []
    for k in range(1, len(d)):
        out.append(0 if d[k] == 0 else d[k] // d[k - 1])
    return out


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
            for i in range(len(A))]
