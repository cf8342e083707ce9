"""Relational Fraisse classes: graphs, K_n-free graphs, linear orders, Q-metric spaces.

All four languages are binary, so a structure is determined by one value per
pair of distinct labels (edge bit, order bit, or distance). The shared base
class implements embeddings, canonical forms and enumeration once against
that pair-value view.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product
from operator import add
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

from .core import (ContractViolation, Embedding, FraisseClass, Structure, as_domain,
                   fresh_labels)


def memo(S: Structure, key: str, fn: Callable[[], Any]) -> Any:
    """Cache a derived value on an (immutable) structure."""
    d = S.__dict__
    if key not in d:
        object.__setattr__(S, key, fn())
    return d[key]


class BinaryRelationalClass(FraisseClass):
    """Common machinery for classes whose structures are pair-value tables."""

    symmetric = True

    # -- to be supplied by subclasses ------------------------------------------
    def value(self, S: Structure, x: int, y: int) -> Any:
        """Value of the ordered pair (x, y), x != y."""
        raise NotImplementedError

    def build(self, domain: Sequence[int], value: Callable[[int, int], Any]) -> Structure:
        """Structure on ``domain`` with pair values read from ``value(x, y)`` for x < y."""
        raise NotImplementedError

    def value_choices(self) -> Sequence[Any]:
        raise NotImplementedError

    def cross_values(self, C_values: dict, left: Sequence[int], right: Sequence[int],
                     glue: Sequence[tuple[int, int]]) -> None:
        """Fill ``C_values`` for pairs (x in left, y in right) of an amalgam."""
        raise NotImplementedError

    def jep_value(self) -> Any:
        raise NotImplementedError

    # -- generic operations ---------------------------------------------------
    def _val(self, S: Structure, x: int, y: int) -> Any:
        if x < y or self.symmetric:
            return self.value(S, x, y)
        return self.flip(self.value(S, y, x))

    def flip(self, v: Any) -> Any:
        return v

    def substructure_generated(self, S, subset):
        self.check(S)
        subset = list(subset)
        if not subset:
            raise ContractViolation("empty generating set")
        for x in subset:
            if x not in S:
                raise ContractViolation(f"label {x} not in domain")
        return self.build(as_domain(subset), lambda x, y: self.value(S, x, y))

    def restrict(self, S, labels):
        return self.substructure_generated(S, labels)

    def relabel(self, S, mapping):
        inv = {mapping[x]: x for x in S.domain}
        if len(inv) != len(S.domain):
            raise ContractViolation("relabeling must be injective")
        return self.build(as_domain(inv), lambda u, v: self._val(S, inv[u], inv[v]))

    def is_embedding(self, e: Embedding) -> bool:
        A, B = e.source, e.target
        if A.class_id != self.class_id or B.class_id != self.class_id:
            return False
        try:
            img = [e.map[x] for x in A.domain]
        except KeyError:
            return False
        if len(set(img)) != len(img) or any(y not in B for y in img):
            return False
        dom = A.domain
        for i in range(len(dom)):
            for j in range(i + 1, len(dom)):
                if self.value(A, dom[i], dom[j]) != self._val(B, img[i], img[j]):
                    return False
        return True

    def candidates(self, A: Structure, S: Structure, x: int,
                   mapped: dict[int, int], used: set[int]) -> Iterable[int]:
        """Labels of ``S`` that ``x`` may map to given the current partial map."""
        for y in S.domain:
            if y in used:
                continue
            if all(self._val(A, x, u) == self._val(S, y, v) for u, v in mapped.items()):
                yield y

    def _search(self, A: Structure, S: Structure, partial: Mapping[int, int],
                first_only: bool) -> list[dict[int, int]]:
        mapped = dict(partial)
        used = set(mapped.values())
        if len(used) != len(mapped):
            return []
        for u, v in mapped.items():
            if u not in A or v not in S:
                return []
        items = list(mapped.items())
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                (u1, v1), (u2, v2) = items[i], items[j]
                if self._val(A, u1, u2) != self._val(S, v1, v2):
                    return []
        todo = [x for x in A.domain if x not in mapped]
        found: list[dict[int, int]] = []

        def rec(k: int) -> bool:
            if k == len(todo):
                found.append(dict(mapped))
                return first_only
            x = todo[k]
            for y in self.candidates(A, S, x, mapped, used):
                mapped[x] = y
                used.add(y)
                stop = rec(k + 1)
                del mapped[x]
                used.discard(y)
                if stop:
                    return True
            return False

        rec(0)
        return found

    def all_embeddings(self, A, B):
        self.check(A, B)
        return [Embedding(A, B, m) for m in self._search(A, B, {}, first_only=False)]

    def find_extension(self, A, partial, S):
        self.check(A, S)
        res = self._search(A, S, partial, first_only=True)
        return Embedding(A, S, res[0]) if res else None

    # -- canonical forms --------------------------------------------------------
    def code_key(self, v: Any) -> Any:
        """Totally ordered key for pair values in canonical codes."""
        return v

    def canonical_code(self, S: Structure) -> tuple[tuple, tuple[int, ...]]:
        """Lexicographically largest pair code over all orderings of the domain.

        Returns (code, ordering). The code lists values of position pairs
        (0,1), (0,2), (1,2), (0,3), ... so every prefix is fixed once the
        leading positions are placed, which lets the search prune.
        """
        def compute():
            dom = list(S.domain)
            n = len(dom)
            best: list = [None, None]
            order: list[int] = []
            code: list = []

            def rec():
                if len(order) == n:
                    if best[0] is None or code > best[0]:
                        best[0], best[1] = list(code), list(order)
                    return
                for x in dom:
                    if x in order:
                        continue
                    added = [self.code_key(self._val(S, u, x)) for u in order]
                    code.extend(added)
                    keep = True
                    if best[0] is not None:
                        pref = best[0][:len(code)]
                        if code < pref:
                            keep = False
                    if keep:
                        order.append(x)
                        rec()
                        order.pop()
                    del code[len(code) - len(added):]

            rec()
            return tuple(best[0]), tuple(best[1])
        return memo(S, "_canon", compute)

    def canonicalize(self, S):
        self.check(S)
        code, _ = self.canonical_code(S)
        body = ",".join(self.code_text(v) for v in code)
        return f"{self.class_id}|{len(S.domain)}|{body}".encode()

    def code_text(self, v: Any) -> str:
        return str(v)

    def canonical_structure(self, S: Structure) -> Structure:
        """Copy of ``S`` relabeled onto 0..n-1 along its canonical ordering."""
        _, order = self.canonical_code(S)
        return self.relabel(S, {x: i for i, x in enumerate(order)})

    # -- enumeration ------------------------------------------------------------
    def _types_of_size(self, n: int) -> list[Structure]:
        cache = self.__dict__.setdefault("_enum_cache", {})
        if n in cache:
            return cache[n]
        if n == 1:
            reps = [self.build((0,), lambda x, y: None)]
        else:
            seen: dict[tuple, Structure] = {}
            for T in self._types_of_size(n - 1):
                base = {(x, y): self.value(T, x, y)
                        for x, y in combinations(range(n - 1), 2)}
                for vals in product(self.value_choices(), repeat=n - 1):
                    table = dict(base)
                    for i, v in enumerate(vals):
                        table[(i, n - 1)] = v
                    S = self.build(tuple(range(n)), lambda x, y: table[(x, y)])
                    if not self.is_member(S):
                        continue
                    code, _ = self.canonical_code(S)
                    if code not in seen:
                        seen[code] = self.canonical_structure(S)
            reps = [seen[c] for c in sorted(seen, reverse=True)]
        cache[n] = reps
        return reps

    def enumerate_class(self, size_bound):
        for n in range(1, size_bound + 1):
            yield from self._types_of_size(n)

    def types_of_size(self, n):
        return self._types_of_size(n)

    # -- amalgamation -------------------------------------------------------------
    def _check_span(self, A: Structure, h1: Embedding, h2: Embedding) -> None:
        self.check(A, h1.source, h2.source, h1.target, h2.target)
        if not (self.same(h1.source, A) and self.same(h2.source, A)):
            raise ContractViolation("h1 and h2 must share the source A")
        if not (self.is_embedding(h1) and self.is_embedding(h2)):
            raise ContractViolation("h1 and h2 must be embeddings")

    def _place_second(self, A: Structure, B1: Structure, B2: Structure,
                      h1: Embedding, h2: Embedding) -> dict[int, int]:
        """Label map g2 on B2: glued points follow h1, others keep their label if free."""
        g2: dict[int, int] = {}
        for a in A.domain:
            g2[h2.map[a]] = h1.map[a]
        rest = [y for y in B2.domain if y not in g2]
        clash = [y for y in rest if y in B1]
        fresh = iter(fresh_labels(len(clash), A.domain, B1.domain, B2.domain))
        for y in rest:
            g2[y] = y if y not in B1 else next(fresh)
        return g2

    def amalgamate(self, A, h1, h2):
        self._check_span(A, h1, h2)
        B1, B2 = h1.target, h2.target
        g2 = self._place_second(A, B1, B2, h1, h2)
        glued = {h1.map[a] for a in A.domain}
        left = [x for x in B1.domain if x not in glued]
        right = [g2[y] for y in B2.domain if g2[y] not in glued]
        inv2 = {v: k for k, v in g2.items()}
        table: dict[tuple[int, int], Any] = {}

        def put(x, y, v):
            table[(x, y) if x < y else (y, x)] = v if x < y or self.symmetric else self.flip(v)

        for x, y in combinations(B1.domain, 2):
            put(x, y, self.value(B1, x, y))
        for x, y in combinations(B2.domain, 2):
            put(g2[x], g2[y], self.value(B2, x, y))
        cross: dict[tuple[int, int], Any] = {}
        self.cross_values(cross, left, right,
                          [(h1.map[a], a) for a in A.domain], B1=B1, B2=B2, inv2=inv2, h2=h2)
        for (x, y), v in cross.items():
            put(x, y, v)
        C = self.build(as_domain(list(B1.domain) + right), lambda x, y: table[(x, y)])
        g1 = Embedding(B1, C, {x: x for x in B1.domain})
        return C, g1, Embedding(B2, C, g2)

    def joint_embed(self, A, B):
        self.check(A, B)
        gB: dict[int, int] = {}
        clash = [y for y in B.domain if y in A]
        fresh = iter(fresh_labels(len(clash), A.domain, B.domain))
        for y in B.domain:
            gB[y] = y if y not in A else next(fresh)
        table: dict[tuple[int, int], Any] = {}
        for x, y in combinations(A.domain, 2):
            table[(x, y)] = self.value(A, x, y)
        for x, y in combinations(B.domain, 2):
            u, v = gB[x], gB[y]
            val = self.value(B, x, y)
            table[(u, v) if u < v else (v, u)] = val if u < v or self.symmetric else self.flip(val)
        for x in A.domain:
            for y in B.domain:
                u, v = x, gB[y]
                val = self.jep_value()
                table[(u, v) if u < v else (v, u)] = val if u < v or self.symmetric else self.flip(val)
        D = self.build(as_domain(list(A.domain) + list(gB.values())), lambda x, y: table[(x, y)])
        return D, Embedding(A, D, {x: x for x in A.domain}), Embedding(B, D, gB)

    def point(self) -> Structure:
        return self.build((0,), lambda x, y: None)

    def strict_extend(self, C):
        self.check(C)
        D, _, _ = self.joint_embed(C, self.point())
        return D


# ---------------------------------------------------------------------------
# graphs


class GraphClass(BinaryRelationalClass):
    """Finite simple graphs; payload is a frozenset of pairs (i, j) with i < j."""

    class_id = "graph"

    def value(self, S, x, y):
        return y in self.adjacency(S)[x]

    def adjacency(self, S: Structure) -> dict[int, frozenset[int]]:
        def compute():
            adj: dict[int, set[int]] = {x: set() for x in S.domain}
            for i, j in S.payload:
                adj[i].add(j)
                adj[j].add(i)
            return {x: frozenset(v) for x, v in adj.items()}
        return memo(S, "_adj", compute)

    def build(self, domain, value):
        edges = frozenset((x, y) for x, y in combinations(domain, 2) if value(x, y))
        return Structure(self.class_id, tuple(domain), edges)

    def graph(self, domain: Iterable[int], edges: Iterable[tuple[int, int]]) -> Structure:
        """Convenience constructor; does not validate (see ``is_member``)."""
        return Structure(self.class_id, as_domain(domain),
                         frozenset((min(a, b), max(a, b)) for a, b in edges))

    def value_choices(self):
        return (False, True)

    def code_key(self, v):
        return 1 if v else 0

    def substructure_generated(self, S, subset):
        self.check(S)
        keep = set(subset)
        if not keep:
            raise ContractViolation("empty generating set")
        for x in keep:
            if x not in S:
                raise ContractViolation(f"label {x} not in domain")
        if len(keep) == len(S.domain):
            return S
        return Structure(self.class_id, as_domain(keep),
                         frozenset(e for e in S.payload if e[0] in keep and e[1] in keep))

    def is_member(self, S):
        self.check(S)
        dom = set(S.domain)
        return all(isinstance(e, tuple) and len(e) == 2 and e[0] < e[1]
                   and e[0] in dom and e[1] in dom for e in S.payload)

    # edge-set versions of the generic constructions; they avoid touching every pair
    def _grow(self, B1: Structure, extra: Sequence[int], edges: Iterable[tuple[int, int]]
              ) -> Structure:
        new = frozenset((min(a, b), max(a, b)) for a, b in edges)
        C = Structure(self.class_id, as_domain(list(B1.domain) + list(extra)), B1.payload | new)
        adj = {x: set() for x in extra}
        for a, b in new:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        old = self.adjacency(B1)
        merged = dict(old)
        for x, nb in adj.items():
            merged[x] = old.get(x, frozenset()) | nb
        memo(C, "_adj", lambda: merged)
        return C

    def amalgamate(self, A, h1, h2):
        self._check_span(A, h1, h2)
        B1, B2 = h1.target, h2.target
        g2 = self._place_second(A, B1, B2, h1, h2)
        extra = [g2[y] for y in B2.domain if g2[y] not in B1]
        C = self._grow(B1, extra, [(g2[a], g2[b]) for a, b in B2.payload])
        if not self.is_member(C):  # only K_n-free subclasses can fail here
            raise AssertionError("free amalgam left the class")
        return C, Embedding(B1, C, {x: x for x in B1.domain}), Embedding(B2, C, g2)

    def joint_embed(self, A, B):
        self.check(A, B)
        clash = [y for y in B.domain if y in A]
        fresh = iter(fresh_labels(len(clash), A.domain, B.domain))
        gB = {y: (y if y not in A else next(fresh)) for y in B.domain}
        D = self._grow(A, list(gB.values()), [(gB[a], gB[b]) for a, b in B.payload])
        return D, Embedding(A, D, {x: x for x in A.domain}), Embedding(B, D, gB)

    def cross_values(self, table, left, right, glue, **_):
        # free amalgamation: no edges between the two new parts
        for x in left:
            for y in right:
                table[(x, y)] = False

    def jep_value(self):
        return False

    def candidates(self, A, S, x, mapped, used):
        adjA = self.adjacency(A)[x]
        adjS = self.adjacency(S)
        pos = [v for u, v in mapped.items() if u in adjA]
        neg = [v for u, v in mapped.items() if u not in adjA]
        if pos:
            pos.sort(key=lambda v: len(adjS[v]))
            pool = set(adjS[pos[0]])
            for v in pos[1:]:
                pool &= adjS[v]
            pool = sorted(pool)
        else:
            pool = S.domain
        for y in pool:
            if y in used:
                continue
            ny = adjS[y]
            if any(v in ny for v in neg):
                continue
            yield y

    def payload_to_json(self, S):
        return [list(e) for e in sorted(S.payload)]

    def payload_from_json(self, domain, data):
        return frozenset((min(a, b), max(a, b)) for a, b in data)

    def to_dot(self, S: Structure) -> str:
        lines = ["graph G {"]
        lines += [f"  {x};" for x in S.domain]
        lines += [f"  {a} -- {b};" for a, b in sorted(S.payload)]
        lines.append("}")
        return "\n".join(lines) + "\n"


def has_clique(adj: Mapping[int, frozenset[int]], k: int) -> bool:
    """Whether the graph with adjacency ``adj`` contains a k-clique."""
    def rec(cands: set[int], need: int) -> bool:
        if need == 0:
            return True
        if len(cands) < need:
            return False
        for v in sorted(cands):
            if rec(cands & adj[v], need - 1):
                return True
            cands = cands - {v}
            if len(cands) < need:
                return False
        return False
    return rec(set(adj), k)


class KnFreeGraphClass(GraphClass):
    """Finite graphs omitting the complete graph K_n (n >= 3)."""

    def __init__(self, n: int = 3):
        if n < 3:
            raise ContractViolation("K_n-free classes need n >= 3")
        self.n = n
        self.class_id = f"k{n}free"

    def params(self):
        return {"n": self.n}

    def is_member(self, S):
        return super().is_member(S) and not has_clique(self.adjacency(S), self.n)


# ---------------------------------------------------------------------------
# linear orders


class LinearOrderClass(BinaryRelationalClass):
    """Finite linear orders; payload is the domain listed in increasing order."""

    class_id = "order"
    symmetric = False

    def rank(self, S: Structure) -> dict[int, int]:
        return memo(S, "_rank", lambda: {x: i for i, x in enumerate(S.payload)})

    def value(self, S, x, y):
        r = self.rank(S)
        return r[x] < r[y]

    def flip(self, v):
        return not v

    def build(self, domain, value):
        import functools

        def cmp(x, y):
            if x == y:
                return 0
            lt = value(x, y) if x < y else not value(y, x)
            return -1 if lt else 1
        seq = tuple(sorted(domain, key=functools.cmp_to_key(cmp)))
        return Structure(self.class_id, tuple(domain), seq)

    def chain(self, seq: Sequence[int]) -> Structure:
        """The order ``seq[0] < seq[1] < ...``."""
        return Structure(self.class_id, as_domain(seq), tuple(seq))

    def value_choices(self):
        return (False, True)

    def code_key(self, v):
        return 1 if v else 0

    def is_member(self, S):
        self.check(S)
        return sorted(S.payload) == list(S.domain)

    def canonical_code(self, S):
        n = len(S.domain)
        return tuple([1] * (n * (n - 1) // 2)), tuple(S.payload)

    def _types_of_size(self, n):
        return [self.chain(range(n))]

    def candidates(self, A, S, x, mapped, used):
        rA, rS = self.rank(A), self.rank(S)
        lo, hi = -1, len(S.domain)
        for u, v in mapped.items():
            if rA[u] < rA[x]:
                lo = max(lo, rS[v])
            else:
                hi = min(hi, rS[v])
        for y in sorted(S.payload[lo + 1:hi]):
            if y not in used:
                yield y

    def amalgamate(self, A, h1, h2):
        self._check_span(A, h1, h2)
        B1, B2 = h1.target, h2.target
        g2 = self._place_second(A, B1, B2, h1, h2)
        glued1 = {h1.map[a] for a in A.domain}
        glued2 = {h2.map[a] for a in A.domain}

        def gaps(seq, glued, rename):
            out: list[list[int]] = [[]]
            anchors: list[int] = []
            for x in seq:
                if x in glued:
                    anchors.append(rename(x))
                    out.append([])
                else:
                    out[-1].append(rename(x))
            return anchors, out

        anc1, gaps1 = gaps(B1.payload, glued1, lambda x: x)
        anc2, gaps2 = gaps(B2.payload, glued2, lambda y: g2[y])
        if anc1 != anc2:
            raise ContractViolation("h1 and h2 disagree on the order of A")
        seq: list[int] = []
        for i, gap in enumerate(gaps1):
            seq += gap + gaps2[i]
            if i < len(anc1):
                seq.append(anc1[i])
        C = self.chain(seq)
        return C, Embedding(B1, C, {x: x for x in B1.domain}), Embedding(B2, C, g2)

    def joint_embed(self, A, B):
        self.require_member(A, B)
        clash = [y for y in B.domain if y in A]
        fresh = iter(fresh_labels(len(clash), A.domain, B.domain))
        gB = {y: (y if y not in A else next(fresh)) for y in B.domain}
        D = self.chain(list(A.payload) + [gB[y] for y in B.payload])
        return D, Embedding(A, D, {x: x for x in A.domain}), Embedding(B, D, gB)

    def payload_to_json(self, S):
        return list(S.payload)

    def payload_from_json(self, domain, data):
        return tuple(data)


# ---------------------------------------------------------------------------
# Q-metric spaces with a finite distance menu


class QMetricClass(BinaryRelationalClass):
    """Finite metric spaces with distances in {k/q : 1 <= k <= q*dmax}.

    Payload: tuple of ((x, y), Fraction) for x < y, sorted.
    """

    def __init__(self, q: int = 1, dmax: int | Fraction = 8):
        if q < 1 or dmax <= 0:
            raise ContractViolation("need q >= 1 and dmax > 0")
        self.q = int(q)
        self.dmax = Fraction(dmax)
        if (self.dmax * self.q).denominator != 1:
            raise ContractViolation("dmax must be a multiple of 1/q")
        self.menu = tuple(Fraction(k, self.q) for k in range(1, int(self.dmax * self.q) + 1))
        self._menu_set = frozenset(self.menu)
        self.class_id = f"qmetric_q{self.q}_d{self.dmax}"

    def params(self):
        return {"q": self.q, "dmax": str(self.dmax)}

    def dist_table(self, S: Structure) -> dict[tuple[int, int], Fraction]:
        return memo(S, "_dist", lambda: dict(S.payload))

    def value(self, S, x, y):
        return self.dist_table(S)[(x, y) if x < y else (y, x)]

    def dist(self, S: Structure, x: int, y: int) -> Fraction:
        return Fraction(0) if x == y else self.value(S, x, y)

    def build(self, domain, value):
        pay = tuple(((x, y), Fraction(value(x, y))) for x, y in combinations(domain, 2))
        return Structure(self.class_id, tuple(domain), pay)

    def space(self, domain: Iterable[int], dist: Mapping[tuple[int, int], Any]) -> Structure:
        """Convenience constructor from a {(x, y): distance} table (either order)."""
        dom = as_domain(domain)
        table = {(min(a, b), max(a, b)): Fraction(v) for (a, b), v in dist.items()}
        return self.build(dom, lambda x, y: table[(x, y)])

    def value_choices(self):
        return self.menu

    def code_key(self, v):
        # distances are multiples of 1/q; compare them as integers
        return v.numerator * (self.q // v.denominator)

    def code_text(self, v):
        d = Fraction(v, self.q)
        return f"{d.numerator}/{d.denominator}"

    def is_member(self, S):
        self.check(S)
        dom = list(S.domain)
        table = self.dist_table(S)
        if set(table) != set(combinations(dom, 2)):
            return False
        if any(v not in self._menu_set for v in table.values()):
            return False
        return self._triangles_ok(dom, table)

    def _triangles_ok(self, dom, table) -> bool:
        # integer matrix in units of 1/q; d(x, z) <= d(x, y) + d(y, z) for all y
        # iff the row-wise minimum of d(x, .) + d(., z) is d(x, z) itself
        idx = {x: i for i, x in enumerate(dom)}
        n = len(dom)
        M = [[0] * n for _ in range(n)]
        for (x, y), v in table.items():
            k = self.code_key(v)
            M[idx[x]][idx[y]] = M[idx[y]][idx[x]] = k
        for i in range(n):
            Mi = M[i]
            for k in range(i + 1, n):
                if min(map(add, Mi, M[k])) < Mi[k]:
                    return False
        return True

    def cross_values(self, table, left, right, glue, *, B1, B2, inv2, h2):
        for x in left:
            for y in right:
                yb = inv2[y]
                best = min(self.dist(B1, x, a1) + self.dist(B2, h2.map[a], yb)
                           for a1, a in glue)
                v = min(best, self.dmax)
                if v not in self._menu_set:
                    raise ContractViolation(
                        f"distance {v} between {x} and {y} is not on the menu")
                table[(x, y)] = v

    def jep_value(self):
        return self.dmax

    def candidates(self, A, S, x, mapped, used):
        dA, dS = self.dist_table(A), self.dist_table(S)
        for y in S.domain:
            if y in used:
                continue
            ok = True
            for u, v in mapped.items():
                if dA[(x, u) if x < u else (u, x)] != dS[(y, v) if y < v else (v, y)]:
                    ok = False
                    break
            if ok:
                yield y

    def _codes(self, S: Structure) -> dict[tuple[int, int], int]:
        return memo(S, "_icode", lambda: {k: self.code_key(v) for k, v in S.payload})

    def _search(self, A, S, partial, first_only):
        # forward checking with the most constrained label first; distances
        # are compared as integers in units of 1/q
        cA, cS = self._codes(A), self._codes(S)

        def d(c, x, y):
            return 0 if x == y else c[(x, y) if x < y else (y, x)]

        mapped = dict(partial)
        if len(set(mapped.values())) != len(mapped):
            return []
        if any(u not in A or v not in S for u, v in mapped.items()):
            return []
        items = list(mapped.items())
        for i, (u1, v1) in enumerate(items):
            for u2, v2 in items[i + 1:]:
                if d(cA, u1, u2) != d(cS, v1, v2):
                    return []
        used = set(mapped.values())
        cand = {x: [y for y in S.domain if y not in used
                    and all(d(cA, x, u) == d(cS, y, v) for u, v in items)]
                for x in A.domain if x not in mapped}
        found: list[dict[int, int]] = []

        def rec(cand: dict[int, list[int]]) -> bool:
            if not cand:
                found.append(dict(mapped))
                return first_only
            x = min(cand, key=lambda u: (len(cand[u]), u))
            for y in cand[x]:
                nxt = {}
                for u, lst in cand.items():
                    if u == x:
                        continue
                    duv = d(cA, u, x)
                    nl = [z for z in lst if z != y and d(cS, z, y) == duv]
                    if not nl:
                        break
                    nxt[u] = nl
                else:
                    mapped[x] = y
                    stop = rec(nxt)
                    del mapped[x]
                    if stop:
                        return True
            return False

        if all(cand.values()) or not cand:
            rec(cand)
        if not first_only:
            found.sort(key=lambda m: tuple(m[x] for x in A.domain))
        return found

    def payload_to_json(self, S):
        return [[x, y, f"{d.numerator}/{d.denominator}"] for (x, y), d in S.payload]

    def payload_from_json(self, domain, data):
        return tuple(sorted(((x, y), Fraction(s)) for x, y, s in data))


def triangle_violation(points: Sequence[int], d: Callable[[int, int], Fraction]
                       ) -> tuple[int, int, int] | None:
    """First triple (x, y, z) with d(x, z) > d(x, y) + d(y, z), if any."""
    for x, y, z in product(points, repeat=3):
        if len({x, y, z}) == 3 and d(x, z) > d(x, y) + d(y, z):
            return (x, y, z)
    return None


# ---------------------------------------------------------------------------
# the Rado graph and the extension property


def rado_adjacent(i: int, j: int) -> bool:
    """BIT predicate: for i < j, i ~ j iff bit i of j is set."""
    if i == j:
        return False
    if i > j:
        i, j = j, i
    return (j >> i) & 1 == 1


def rado_oracle(k: int) -> Structure:
    """The BIT-predicate graph on {0, ..., k-1}."""
    if k < 1:
        raise ContractViolation("k must be at least 1")
    edges = frozenset((i, j) for j in range(k) for i in range(j) if (j >> i) & 1)
    return Structure(GraphClass.class_id, tuple(range(k)), edges)


def alice_restaurant_check(G: Structure, U: Iterable[int], V: Iterable[int]) -> int | None:
    """Smallest vertex outside U and V adjacent to all of U and to none of V."""
    U, V = set(U), set(V)
    if U & V:
        raise ContractViolation("U and V must be disjoint")
    adj = GraphClass().adjacency(G)
    for z in G.domain:
        if z in U or z in V:
            continue
        if U <= adj[z] and not (V & adj[z]):
            return z
    return None
