"""Finite abelian groups as a Fraisse class.

A group is stored by its invariant factors d_1 | d_2 | ... | d_k (all >= 2)
and a labeling of the coordinate vectors in Z/d_1 x ... x Z/d_k. Pushouts
are computed from a relation matrix in Smith normal form.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .core import ContractViolation, Embedding, FraisseClass, Structure, fresh_labels
from .relational import memo
from .snf import smith_normal_form

Coords = tuple[int, ...]


@dataclass(frozen=True)
class GroupPayload:
    factors: tuple[int, ...]
    elements: tuple[tuple[int, Coords], ...]  # (label, coords) sorted by label


def _box(factors: Sequence[int]) -> Iterator[Coords]:
    return itertools.product(*(range(d) for d in factors))


def invariant_factor_lists(n: int) -> list[tuple[int, ...]]:
    """All invariant factor sequences with product n: fewest factors first, then ascending."""
    out = []

    def rec(rest: int, prefix: tuple[int, ...]):
        if rest == 1:
            out.append(prefix)
            return
        # next factor must be a multiple of the previous one and divide what is left
        lo = prefix[-1] if prefix else 2
        for d in range(lo, rest + 1):
            if rest % d == 0 and (not prefix or d % prefix[-1] == 0):
                remaining = rest // d
                # every later factor is a multiple of d
                if remaining == 1 or remaining % d == 0:
                    rec(remaining, prefix + (d,))

    rec(n, ())
    return sorted(out, key=lambda f: (len(f), f))


class _Tables:
    def __init__(self, S: Structure):
        pay: GroupPayload = S.payload
        self.factors = pay.factors
        self.l2c = dict(pay.elements)
        self.c2l = {c: l for l, c in pay.elements}

    def add(self, x: Coords, y: Coords) -> Coords:
        return tuple((a + b) % d for a, b, d in zip(x, y, self.factors))

    def combo(self, coeffs: Sequence[int], vecs: Sequence[Coords]) -> Coords:
        out = [0] * len(self.factors)
        for c, v in zip(coeffs, vecs):
            if c:
                for i, vi in enumerate(v):
                    out[i] += c * vi
        return tuple(o % d for o, d in zip(out, self.factors))

    def order(self, x: Coords) -> int:
        o = 1
        for a, d in zip(x, self.factors):
            o = math.lcm(o, d // math.gcd(a, d))
        return o


def tables(S: Structure) -> _Tables:
    return memo(S, "_tables", lambda: _Tables(S))


def _decompose(vectors: Sequence[Sequence[int]], moduli: Sequence[int], count: int
               ) -> tuple[tuple[int, ...], list[list[int]]]:
    """Quotient of Z^count by relations.

    ``vectors`` are the relation columns (each of length ``count``). Returns
    the invariant factors and the row transform U: an integer vector x maps to
    coordinates (U x)_i mod factor_i over the kept rows.
    """
    del moduli
    M = [[v[i] for v in vectors] for i in range(count)]
    if not vectors:
        raise ContractViolation("infinite group")
    S, U, _ = smith_normal_form(M)
    diag = [S[i][i] if i < len(S[0]) else 0 for i in range(count)]
    if any(d == 0 for d in diag):
        raise ContractViolation("infinite group")
    keep = [i for i, d in enumerate(diag) if d != 1]
    return tuple(diag[i] for i in keep), [U[i] for i in keep]


class AbelianGroupClass(FraisseClass):
    """Finite abelian groups; size is the group order."""

    class_id = "abelian"

    def __init__(self, size_cap: int = 256):
        self.size_cap = size_cap

    def params(self):
        return {"size_cap": self.size_cap}

    # -- construction -------------------------------------------------------------
    def group(self, factors: Sequence[int], labels: Sequence[int] | None = None) -> Structure:
        """Z/d_1 x ... x Z/d_k with elements labeled in lexicographic coordinate order."""
        factors = tuple(factors)
        self._check_factors(factors)
        coords = list(_box(factors))
        labels = list(range(len(coords))) if labels is None else list(labels)
        if len(labels) != len(coords):
            raise ContractViolation("wrong number of labels")
        pairs = tuple(sorted(zip(labels, coords)))
        return Structure(self.class_id, tuple(l for l, _ in pairs), GroupPayload(factors, pairs))

    def cyclic(self, n: int) -> Structure:
        return self.group(() if n == 1 else (n,))

    @staticmethod
    def _check_factors(factors: Sequence[int]) -> None:
        if any(d < 2 for d in factors):
            raise ContractViolation("invariant factors must be at least 2")
        if any(b % a for a, b in zip(factors, factors[1:])):
            raise ContractViolation("invariant factors must form a divisibility chain")

    def _from_quotient(self, factors, coords_of: Mapping[int, Coords]) -> Structure:
        pairs = tuple(sorted(coords_of.items()))
        return Structure(self.class_id, tuple(l for l, _ in pairs), GroupPayload(factors, pairs))

    # -- element helpers ------------------------------------------------------------
    def zero(self, S: Structure) -> int:
        T = tables(S)
        return T.c2l[(0,) * len(T.factors)]

    def add(self, S: Structure, x: int, y: int) -> int:
        T = tables(S)
        return T.c2l[T.add(T.l2c[x], T.l2c[y])]

    def neg(self, S: Structure, x: int) -> int:
        return self.mul(S, -1, x)

    def mul(self, S: Structure, m: int, x: int) -> int:
        T = tables(S)
        return T.c2l[T.combo([m], [T.l2c[x]])]

    def order_of(self, S: Structure, x: int) -> int:
        T = tables(S)
        return T.order(T.l2c[x])

    def order(self, S: Structure) -> int:
        return math.prod(S.payload.factors)

    # -- contract ---------------------------------------------------------------------
    def is_member(self, S):
        self.check(S)
        pay = S.payload
        if not isinstance(pay, GroupPayload):
            return False
        try:
            self._check_factors(pay.factors)
        except ContractViolation:
            return False
        labels = [l for l, _ in pay.elements]
        coords = sorted(c for _, c in pay.elements)
        return labels == list(S.domain) and coords == list(_box(pay.factors))

    def size(self, S):
        return len(S.domain)

    def base_substructure(self, S):
        return self.substructure_generated(S, [])

    def generators(self, S):
        T = tables(S)
        k = len(T.factors)
        if k == 0:
            return (self.zero(S),)
        return tuple(T.c2l[tuple(int(i == j) for j in range(k))] for i in range(k))

    def _span(self, S: Structure, labels: Iterable[int]) -> dict[Coords, list[int]]:
        """Subgroup generated by labels: element -> coefficients on the generators."""
        T = tables(S)
        gens = [T.l2c[x] for x in labels]
        zero = (0,) * len(T.factors)
        seen = {zero: [0] * len(gens)}
        frontier = [zero]
        while frontier:
            nxt = []
            for v in frontier:
                for j, g in enumerate(gens):
                    w = T.add(v, g)
                    if w not in seen:
                        c = list(seen[v])
                        c[j] += 1
                        seen[w] = c
                        nxt.append(w)
            frontier = nxt
        return seen

    def substructure_generated(self, S, subset):
        self.check(S)
        subset = list(subset)
        for x in subset:
            if x not in S:
                raise ContractViolation(f"label {x} not in domain")
        T = tables(S)
        gens = [T.l2c[x] for x in subset]
        span = self._span(S, subset)
        r = len(gens)
        if r == 0 or len(span) == 1:
            z = self.zero(S)
            return self._from_quotient((), {z: ()})
        # relations among the generators: integer kernel of c -> sum c_j g_j
        k = len(T.factors)
        cols = [list(g) for g in gens] + [[T.factors[i] * int(i == j) for j in range(k)]
                                          for i in range(k)]
        M = [[c[i] for c in cols] for i in range(k)]  # k x (r + k)
        Sm, _, V = smith_normal_form(M)
        rank = sum(1 for i in range(min(k, r + k)) if Sm[i][i] != 0)
        kernel = [[V[row][col] for row in range(r)] for col in range(rank, r + k)]
        factors, U = _decompose(kernel, (), r)
        coords_of = {}
        for elem, c in span.items():
            q = tuple(sum(u * ci for u, ci in zip(row, c)) % d for row, d in zip(U, factors))
            coords_of[T.c2l[elem]] = q
        return self._from_quotient(factors, coords_of)

    def same(self, S, T):
        if S.class_id != T.class_id or S.domain != T.domain:
            return False
        if S == T:
            return True
        return self.is_embedding(Embedding(S, T, {x: x for x in S.domain}))

    def is_embedding(self, e):
        A, B = e.source, e.target
        if A.class_id != self.class_id or B.class_id != self.class_id:
            return False
        TA, TB = tables(A), tables(B)
        try:
            gens = self.generators(A)
            imgs = [TB.l2c[e.map[g]] for g in gens]
            if TA.factors:
                if any(TB.order(v) != d for v, d in zip(imgs, TA.factors)):
                    return False
            seen = set()
            for x in A.domain:
                y = e.map[x]
                want = TB.combo(TA.l2c[x], imgs) if TA.factors else TB.combo([], [])
                if TB.l2c[y] != want or y in seen:
                    return False
                seen.add(y)
        except KeyError:
            return False
        return True

    def _by_order(self, S: Structure) -> dict[int, list[int]]:
        def compute():
            T = tables(S)
            out: dict[int, list[int]] = {}
            for l in S.domain:
                out.setdefault(T.order(T.l2c[l]), []).append(l)
            return out
        return memo(S, "_by_order", compute)

    def _assignments(self, A: Structure, S: Structure, partial: Mapping[int, int]
                     ) -> Iterator[dict[int, int]]:
        """Injective homomorphisms A -> S agreeing with partial, as label maps."""
        TA, TS = tables(A), tables(S)
        k = len(TA.factors)
        if k == 0:
            m = {self.zero(A): self.zero(S)}
            if all(m.get(x) == y for x, y in partial.items()):
                yield m
            return
        # constraint x -> y applies once the basis images it uses are fixed
        cons = []
        for x, y in partial.items():
            if x not in A or y not in S:
                return
            c = TA.l2c[x]
            last = max((i for i, ci in enumerate(c) if ci), default=-1)
            cons.append((last, c, TS.l2c[y]))
        by_order = self._by_order(S)
        imgs: list[Coords] = []

        def ok_at(i: int) -> bool:
            for last, c, want in cons:
                if last == i and TS.combo(c[: i + 1], imgs) != want:
                    return False
            return True

        if not all(want == (0,) * len(TS.factors) for last, c, want in cons if last == -1):
            return

        def rec(i: int):
            if i == k:
                m = {}
                for x in A.domain:
                    m[x] = TS.c2l[TS.combo(TA.l2c[x], imgs)]
                if len(set(m.values())) == len(m):
                    yield m
                return
            for cand in by_order.get(TA.factors[i], ()):
                imgs.append(TS.l2c[cand])
                if ok_at(i):
                    yield from rec(i + 1)
                imgs.pop()

        yield from rec(0)

    def all_embeddings(self, A, B):
        self.check(A, B)
        src = list(A.domain)
        maps = sorted(self._assignments(A, B, {}), key=lambda m: [m[x] for x in src])
        return [Embedding(A, B, m) for m in maps]

    def find_extension(self, A, partial, S):
        self.check(A, S)
        for m in self._assignments(A, S, partial):
            return Embedding(A, S, m)
        return None

    def extend_generators(self, A, a, S, b):
        self.check(A, S)
        if tuple(a) != self.generators(A) or len(b) != len(a):
            return super().extend_generators(A, a, S, b)
        if any(y not in S for y in b):
            return None
        TA, TS = tables(A), tables(S)
        if not TA.factors:
            return Embedding(A, S, {a[0]: b[0]}) if b[0] == self.zero(S) else None
        imgs = [TS.l2c[y] for y in b]
        if any(TS.order(v) != d for v, d in zip(imgs, TA.factors)):
            return None
        m = {x: TS.c2l[TS.combo(TA.l2c[x], imgs)] for x in A.domain}
        if len(set(m.values())) != len(m):
            return None
        return Embedding(A, S, m)

    def canonicalize(self, S):
        self.check(S)
        return ("abelian|" + ",".join(map(str, S.payload.factors))).encode()

    def amalgam_size(self, A, B1, B2):
        return len(B1.domain) * len(B2.domain) // len(A.domain)

    def _pushout(self, A: Structure, B1: Structure, B2: Structure,
                 m1: Mapping[int, int], m2: Mapping[int, int]):
        T1, T2 = tables(B1), tables(B2)
        k1, k2 = len(T1.factors), len(T2.factors)
        k = k1 + k2
        rels = []
        for i, d in enumerate(T1.factors + T2.factors):
            rels.append([d * int(i == j) for j in range(k)])
        for g in self.generators(A):
            rels.append(list(T1.l2c[m1[g]]) + [-c for c in T2.l2c[m2[g]]])
        if k == 0:
            factors, U = (), []
        else:
            factors, U = _decompose(rels, (), k)

        def proj(v: Sequence[int]) -> Coords:
            return tuple(sum(u * x for u, x in zip(row, v)) % d for row, d in zip(U, factors))

        zero2 = (0,) * k2
        zero1 = (0,) * k1
        c1 = {l: proj(list(c) + list(zero2)) for l, c in T1.l2c.items()}
        c2 = {l: proj(list(zero1) + list(c)) for l, c in T2.l2c.items()}
        return factors, c1, c2

    def amalgamate(self, A, h1, h2):
        B1, B2 = h1.target, h2.target
        self.check(A, B1, B2)
        if h1.source != A or h2.source != A:
            raise ContractViolation("h1 and h2 must start at A")
        if not (self.is_embedding(h1) and self.is_embedding(h2)):
            raise ContractViolation("h1 and h2 must be embeddings")
        if self.amalgam_size(A, B1, B2) > self.size_cap:
            raise ContractViolation("amalgam exceeds the size cap")
        factors, c1, c2 = self._pushout(A, B1, B2, h1.map, h2.map)
        return self._label_amalgam(A, B1, B2, factors, c1, c2)

    def _label_amalgam(self, A, B1, B2, factors, c1, c2):
        owner: dict[Coords, int] = {v: l for l, v in c1.items()}
        used = set(B1.domain)
        g2: dict[int, int] = {}
        pending = []
        for l in sorted(c2):
            v = c2[l]
            if v in owner:
                g2[l] = owner[v]
            elif l not in used:
                owner[v] = l
                used.add(l)
                g2[l] = l
            else:
                pending.append(l)
        total = math.prod(factors)
        rest = [v for v in _box(factors) if v not in owner]
        need = len(rest) + len(pending)
        fresh = iter(fresh_labels(need, A.domain, B1.domain, B2.domain, sorted(used)))
        for l in pending:
            lab = next(fresh)
            owner[c2[l]] = lab
            g2[l] = lab
        for v in rest:
            if v not in owner:
                owner[v] = next(fresh)
        assert len(owner) == total
        C = self._from_quotient(factors, {l: v for v, l in owner.items()})
        return C, Embedding(B1, C, {x: x for x in B1.domain}), Embedding(B2, C, g2)

    def joint_embed(self, A, B, _capped: bool = True):
        self.require_member(A, B)
        if _capped and len(A.domain) * len(B.domain) > self.size_cap:
            raise ContractViolation("joint embedding exceeds the size cap")
        O = self.group((), [self.zero(A)])
        factors, c1, c2 = self._pushout(O, A, B, {self.zero(A): self.zero(A)},
                                        {self.zero(A): self.zero(B)})
        return self._label_amalgam(O, A, B, factors, c1, c2)

    def strict_extend(self, C):
        Z2 = self.group((2,), [self.zero(C), fresh_labels(1, C.domain)[0]])
        # absorption must always succeed, so the cap does not apply here
        D, _, _ = self.joint_embed(C, Z2, _capped=False)
        return D

    def enumerate_class(self, size_bound):
        for n in range(1, size_bound + 1):
            for f in invariant_factor_lists(n):
                yield self.group(f)

    def types_of_size(self, n):
        return [self.group(f) for f in invariant_factor_lists(n)]

    def relabel(self, S, mapping):
        pay: GroupPayload = S.payload
        new = {mapping[l]: c for l, c in pay.elements}
        if len(new) != len(pay.elements):
            raise ContractViolation("relabeling must be injective")
        return self._from_quotient(pay.factors, new)

    def payload_to_json(self, S):
        pay: GroupPayload = S.payload
        return {"factors": list(pay.factors), "elements": [[l, list(c)] for l, c in pay.elements]}

    def payload_from_json(self, domain, data):
        return GroupPayload(tuple(data["factors"]),
                            tuple((l, tuple(c)) for l, c in data["elements"]))
