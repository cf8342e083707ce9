"""Finite fields of a fixed characteristic as a Fraisse class.

Elements of F_{p^n} are residues mod the lexicographically smallest monic
irreducible of degree n, encoded as integers whose base-p digits are the
coefficients (digit i is the coefficient of alpha^i). Comparing encodings is
the lexicographic order used throughout.

Large fields are never materialized. A field built by extending a smaller
one labels the image of the smaller field with the smaller field's labels
and the remaining elements with fresh labels, in increasing element order;
label and element lookups go through linear algebra over F_p.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterator, Mapping, Sequence

from .core import (ContractViolation, Embedding, FraisseClass, LabelRanges, Structure,
                   fresh_labels)
from .relational import memo


def is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))


def prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# arithmetic


class GF:
    """Arithmetic in F_p[x]/(poly); a field when poly is irreducible."""

    def __init__(self, p: int, poly: Sequence[int]):
        self.p = p
        self.poly = tuple(poly)
        self.n = len(self.poly) - 1
        self.order = p ** self.n
        if p == 2:
            self._mod = sum(c << i for i, c in enumerate(self.poly))

    # conversions
    def vec(self, x: int) -> list[int]:
        p, out = self.p, []
        for _ in range(self.n):
            x, r = divmod(x, p)
            out.append(r)
        return out

    def num(self, v: Sequence[int]) -> int:
        x = 0
        for c in reversed(v):
            x = x * self.p + c % self.p
        return x

    # ring operations
    def add(self, x: int, y: int) -> int:
        if self.p == 2:
            return x ^ y
        return self.num([a + b for a, b in zip(self.vec(x), self.vec(y))])

    def neg(self, x: int) -> int:
        if self.p == 2:
            return x
        return self.num([-a for a in self.vec(x)])

    def sub(self, x: int, y: int) -> int:
        return self.add(x, self.neg(y))

    def scale(self, c: int, x: int) -> int:
        c %= self.p
        if self.p == 2:
            return x if c else 0
        return self.num([c * a for a in self.vec(x)])

    def mul(self, x: int, y: int) -> int:
        n = self.n
        if self.p == 2:
            r = 0
            while y:
                if y & 1:
                    r ^= x
                y >>= 1
                x <<= 1
            for b in range(r.bit_length() - 1, n - 1, -1):
                if (r >> b) & 1:
                    r ^= self._mod << (b - n)
            return r
        p = self.p
        a, b = self.vec(x), self.vec(y)
        prod = [0] * (2 * n)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    prod[i + j] += ai * bj
        for k in range(2 * n - 1, n - 1, -1):
            c = prod[k] % p
            if c:
                for i in range(n + 1):
                    prod[k - n + i] -= c * self.poly[i]
        return self.num(prod[:n])

    def pow(self, x: int, e: int) -> int:
        r = 1 if self.n >= 1 else 0
        while e:
            if e & 1:
                r = self.mul(r, x)
            x = self.mul(x, x)
            e >>= 1
        return r

    def inv(self, x: int) -> int:
        if x == 0:
            raise ZeroDivisionError("zero has no inverse")
        return self.pow(x, self.order - 2)

    def frob(self, x: int) -> int:
        return self.pow(x, self.p)

    def degree_of(self, x: int) -> int:
        """Degree over F_p of the subfield generated by x."""
        y, d = self.frob(x), 1
        while y != x:
            y, d = self.frob(y), d + 1
        return d

    def eval_fp_poly(self, coeffs: Sequence[int], r: int) -> int:
        """Evaluate a polynomial with F_p coefficients (low to high) at r."""
        acc = 0
        for c in reversed(coeffs):
            acc = self.add(self.mul(acc, r), c % self.p)
        return acc

    def powers(self, r: int, k: int) -> list[int]:
        out, x = [], 1
        for _ in range(k):
            out.append(x)
            x = self.mul(x, r)
        return out


@lru_cache(maxsize=None)
def gf(p: int, poly: tuple[int, ...]) -> GF:
    return GF(p, poly)


def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _poly_trim([x % p for x in a]), _poly_trim([x % p for x in b])
    while b:
        inv = pow(b[-1], p - 2, p)
        while len(a) >= len(b):
            c = a[-1] * inv % p
            shift = len(a) - len(b)
            for i, bi in enumerate(b):
                a[shift + i] = (a[shift + i] - c * bi) % p
            _poly_trim(a)
            if not a:
                break
        a, b = b, a
    return a


def is_irreducible(p: int, poly: Sequence[int]) -> bool:
    """Rabin's test for a monic polynomial over F_p (coefficients low to high)."""
    n = len(poly) - 1
    if n < 1 or poly[-1] % p != 1:
        return False
    if n == 1:
        return True
    R = GF(p, poly)
    x = p  # the residue class of x

    def x_pow_p_pow(k: int) -> int:
        y = x
        for _ in range(k):
            y = R.frob(y)
        return y

    if x_pow_p_pow(n) != x:
        return False
    for r in prime_factors(n):
        h = R.vec(R.sub(x_pow_p_pow(n // r), x))
        if len(_poly_gcd(h, list(poly), p)) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def canonical_poly(p: int, n: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of degree n; ``x`` for n = 1."""
    if n == 1:
        return (0, 1)
    for low in range(p ** n):
        coeffs = [(low // p ** i) % p for i in range(n)]
        if coeffs[0] == 0:
            continue
        cand = tuple(coeffs) + (1,)
        if is_irreducible(p, cand):
            return cand
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


# ---------------------------------------------------------------------------
# linear algebra over F_p on digit vectors


class Subspace:
    """Span of vectors in F_p^n, kept in reduced echelon form keyed by top digit."""

    def __init__(self, p: int, n: int, vectors: Sequence[Sequence[int]]):
        self.p, self.n = p, n
        rows: list[tuple[list[int], list[int]]] = []  # (vector, combination of inputs)
        k = len(vectors)
        for j, v in enumerate(vectors):
            vec = [c % p for c in v]
            comb = [int(i == j) for i in range(k)]
            for piv, (rv, rc) in zip(self._pivots(rows), rows):
                c = vec[piv]
                if c:
                    vec = [(a - c * b) % p for a, b in zip(vec, rv)]
                    comb = [(a - c * b) % p for a, b in zip(comb, rc)]
            lead = max((i for i, c in enumerate(vec) if c), default=None)
            if lead is None:
                raise ContractViolation("vectors are linearly dependent")
            inv = pow(vec[lead], p - 2, p)
            vec = [a * inv % p for a in vec]
            comb = [a * inv % p for a in comb]
            new_rows = []
            for rv, rc in rows:
                c = rv[lead]
                if c:
                    rv = [(a - c * b) % p for a, b in zip(rv, vec)]
                    rc = [(a - c * b) % p for a, b in zip(rc, comb)]
                new_rows.append((rv, rc))
            rows = new_rows + [(vec, comb)]
        rows.sort(key=lambda r: -max(i for i, c in enumerate(r[0]) if c))
        self.rows = rows
        self.pivots = [max(i for i, c in enumerate(rv) if c) for rv, _ in rows]
        self.dim = len(rows)
        self._is_pivot = {pv: t for t, pv in enumerate(self.pivots)}
        self._below = [sum(1 for q in self.pivots if q < i) for i in range(n + 1)]

    @staticmethod
    def _pivots(rows):
        return [max(i for i, c in enumerate(rv) if c) for rv, _ in rows]

    def coordinates(self, v: Sequence[int]) -> list[int] | None:
        """Coefficients of v in terms of the input vectors, or None if v is outside."""
        p = self.p
        rest = [c % p for c in v]
        comb = [0] * (len(self.rows[0][1]) if self.rows else 0)
        for piv, (rv, rc) in zip(self.pivots, self.rows):
            c = rest[piv]
            if c:
                rest = [(a - c * b) % p for a, b in zip(rest, rv)]
                comb = [(a + c * b) % p for a, b in zip(comb, rc)]
        if any(rest):
            return None
        return comb

    def count_below(self, digits: Sequence[int]) -> int:
        """Number of subspace elements whose encoding is below the given one."""
        p, n = self.p, self.n
        acc = [0] * n
        count = 0
        for i in range(n - 1, -1, -1):
            t = self._is_pivot.get(i)
            free = p ** self._below[i]
            if t is not None:
                count += digits[i] * free
                c = digits[i]
                if c:
                    rv = self.rows[t][0]
                    acc = [(a + c * b) % p for a, b in zip(acc, rv)]
            else:
                d = acc[i]
                if d < digits[i]:
                    return count + free
                if d > digits[i]:
                    return count
        return count

    def _prefix_count(self, prefix: dict[int, int], acc: list[int], i: int) -> int:
        del prefix
        return self.p ** self._below[i]

    def unrank_outside(self, j: int) -> list[int]:
        """Digits of the j-th (0-based) vector outside the subspace, in encoding order."""
        p, n = self.p, self.n
        digits = [0] * n
        acc = [0] * n  # subspace partial sum following the chosen digits
        alive = True   # some subspace element still matches the chosen prefix
        for i in range(n - 1, -1, -1):
            t = self._is_pivot.get(i)
            for c in range(p):
                total = p ** i
                if alive and (t is not None or acc[i] == c):
                    inside = p ** self._below[i]
                else:
                    inside = 0
                outside = total - inside
                if j < outside:
                    digits[i] = c
                    if alive:
                        if t is not None:
                            if c:
                                rv = self.rows[t][0]
                                acc = [(a + c * b) % p for a, b in zip(acc, rv)]
                        elif acc[i] != c:
                            alive = False
                    break
                j -= outside
            else:
                raise IndexError("rank out of range")
        return digits


def nullspace(p: int, columns: Sequence[Sequence[int]]) -> list[list[int]]:
    """Basis of {c : sum_j c_j columns[j] = 0} over F_p."""
    k = len(columns)
    if k == 0:
        return []
    n = len(columns[0])
    # rows of the matrix whose j-th column is columns[j]
    M = [[columns[j][i] % p for j in range(k)] for i in range(n)]
    pivcols: list[int] = []
    r = 0
    for c in range(k):
        piv = next((i for i in range(r, n) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = pow(M[r][c], p - 2, p)
        M[r] = [a * inv % p for a in M[r]]
        for i in range(n):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[r])]
        pivcols.append(c)
        r += 1
    free = [c for c in range(k) if c not in pivcols]
    basis = []
    for fcol in free:
        v = [0] * k
        v[fcol] = 1
        for row, pc in enumerate(pivcols):
            v[pc] = (-M[row][fcol]) % p
        basis.append(v)
    return basis


# ---------------------------------------------------------------------------
# roots of F_p-polynomials inside a field


@lru_cache(maxsize=None)
def subfield_basis(p: int, poly: tuple[int, ...], d: int) -> tuple[int, ...]:
    """Basis (as elements) of the unique subfield of degree d."""
    K = gf(p, poly)
    cols = []
    for i in range(K.n):
        x = p ** i
        y = x
        for _ in range(d):
            y = K.frob(y)
        cols.append(K.vec(K.sub(y, x)))
    basis = []
    for c in nullspace(p, cols):
        basis.append(K.num(c))
    if len(basis) != d:
        raise ContractViolation(f"no subfield of degree {d} in a field of degree {K.n}")
    return tuple(basis)


@lru_cache(maxsize=None)
def roots_in(p: int, poly: tuple[int, ...], f: tuple[int, ...]) -> tuple[int, ...]:
    """Sorted roots in F_p[x]/(poly) of the irreducible F_p-polynomial f."""
    K = gf(p, poly)
    d = len(f) - 1
    if K.n % d:
        return ()
    if d == 1:
        return (K.num([(-f[0]) % p]),)
    basis = subfield_basis(p, poly, d)
    gamma = None
    for c in range(1, p ** d):
        z = 0
        for j, b in enumerate(basis):
            cj = (c // p ** j) % p
            if cj:
                z = K.add(z, K.scale(cj, b))
        if K.degree_of(z) == d:
            gamma = z
            break
    assert gamma is not None
    # minimal polynomial of gamma: prod (x - gamma^(p^i))
    conj = [gamma]
    for _ in range(d - 1):
        conj.append(K.frob(conj[-1]))
    g = [1]
    for r in conj:
        nr = K.neg(r)
        new = [0] * (len(g) + 1)
        for i, gi in enumerate(g):
            new[i + 1] = K.add(new[i + 1], gi)
            new[i] = K.add(new[i], K.mul(gi, nr))
        g = new
    gcoef = tuple(int(c) for c in g)
    if any(c >= p for c in gcoef):  # pragma: no cover - coefficients lie in F_p
        raise AssertionError("minimal polynomial not over F_p")
    L = GF(p, gcoef)
    gpow = K.powers(gamma, d)
    roots = []
    for z in range(L.order):
        if L.eval_fp_poly(f, z) == 0:
            w = 0
            for i, zi in enumerate(L.vec(z)):
                if zi:
                    w = K.add(w, K.scale(zi, gpow[i]))
            roots.append(w)
    return tuple(sorted(roots))


# ---------------------------------------------------------------------------
# labelings


@dataclass(frozen=True)
class CanonicalLabeling:
    """Label = integer encoding of the element; domain {0, ..., p^n - 1}."""


@dataclass(frozen=True)
class DictLabeling:
    """Explicit (label, element) pairs sorted by label."""

    pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ExtensionLabeling:
    """Labels inherited from ``base`` along the embedding generator -> ``root``.

    Elements outside the image take the labels of ``fresh`` in increasing
    element order, then ``perm`` (a finite label permutation) is applied.
    """

    base: Structure
    root: int
    fresh: LabelRanges
    perm: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class FieldPayload:
    p: int
    n: int
    poly: tuple[int, ...]
    labeling: Any


class _Labeler:
    def __init__(self, S: Structure):
        pay: FieldPayload = S.payload
        self.K = gf(pay.p, pay.poly)
        self.S = S
        lab = pay.labeling
        self.kind = type(lab).__name__
        self._l2e: dict[int, int] = {}
        self._e2l: dict[int, int] = {}
        if isinstance(lab, DictLabeling):
            self._l2e = dict(lab.pairs)
            self._e2l = {e: l for l, e in lab.pairs}
        elif isinstance(lab, ExtensionLabeling):
            self.base = lab.base
            self.blab = labeler(lab.base)
            Kb = self.blab.K
            self.base_powers = self.K.powers(lab.root, Kb.n) if Kb.n > 1 else [1]
            cols = [self.K.vec(x) for x in self.base_powers]
            self.space = Subspace(self.K.p, self.K.n, cols)
            self.fresh = lab.fresh
            self.perm = dict(lab.perm)
            self.perm_inv = {v: k for k, v in self.perm.items()}

    def embed_base(self, zb: int) -> int:
        K = self.K
        w = 0
        for i, c in enumerate(self.blab.K.vec(zb)):
            if c:
                w = K.add(w, K.scale(c, self.base_powers[i]))
        return w

    def elem(self, label: int) -> int:
        if self.kind == "CanonicalLabeling":
            if not 0 <= label < self.K.order:
                raise KeyError(label)
            return label
        if self.kind == "DictLabeling":
            return self._l2e[label]
        hit = self._l2e.get(label)
        if hit is not None:
            return hit
        lp = self.perm.get(label, label)
        if lp in self.base.domain:
            z = self.embed_base(self.blab.elem(lp))
        elif lp in self.fresh:
            j = self.fresh.index(lp)
            z = self.K.num(self.space.unrank_outside(j))
        else:
            raise KeyError(label)
        if len(self._l2e) < 1 << 16:
            self._l2e[label] = z
        return z

    def label(self, z: int) -> int:
        if self.kind == "CanonicalLabeling":
            return z
        if self.kind == "DictLabeling":
            return self._e2l[z]
        hit = self._e2l.get(z)
        if hit is not None:
            return hit
        vec = self.K.vec(z)
        coords = self.space.coordinates(vec)
        if coords is not None:
            lp = self.blab.label(self.blab.K.num(coords))
        else:
            below = self.space.count_below(vec)
            lp = self.fresh[z - below]
        out = self.perm_inv.get(lp, lp)
        if len(self._e2l) < 1 << 16:
            self._e2l[z] = out
        return out


def labeler(S: Structure) -> _Labeler:
    return memo(S, "_labeler", lambda: _Labeler(S))


def element_of(S: Structure, label: int) -> int:
    """Integer encoding of the element carrying ``label``."""
    return labeler(S).elem(label)


def label_of(S: Structure, z: int) -> int:
    return labeler(S).label(z)


def arithmetic(S: Structure) -> GF:
    return labeler(S).K


def degree(S: Structure) -> int:
    return S.payload.n


class FieldMap(Mapping[int, int]):
    """Lazy label map of the field embedding sending the source generator to ``root``."""

    def __init__(self, src: Structure, dst: Structure, root: int | None):
        self.src, self.dst, self.root = src, dst, root
        Ks = arithmetic(src)
        Kd = arithmetic(dst)
        self._pows = Kd.powers(root, Ks.n) if Ks.n > 1 else [1]
        self._cache: dict[int, int] = {}

    def image_element(self, zs: int) -> int:
        Ks, Kd = arithmetic(self.src), arithmetic(self.dst)
        w = 0
        for i, c in enumerate(Ks.vec(zs)):
            if c:
                w = Kd.add(w, Kd.scale(c, self._pows[i]))
        return w

    def __getitem__(self, label: int) -> int:
        hit = self._cache.get(label)
        if hit is None:
            if label not in self.src:
                raise KeyError(label)
            hit = label_of(self.dst, self.image_element(element_of(self.src, label)))
            if len(self._cache) < 1 << 16:
                self._cache[label] = hit
        return hit

    def __iter__(self) -> Iterator[int]:
        return iter(self.src.domain)

    def __len__(self) -> int:
        return len(self.src.domain)


class IdentityOn(Mapping[int, int]):
    """Identity label map restricted to a domain."""

    def __init__(self, domain: Sequence[int]):
        self.domain = domain

    def __getitem__(self, x: int) -> int:
        if x not in self.domain:
            raise KeyError(x)
        return x

    def __iter__(self) -> Iterator[int]:
        return iter(self.domain)

    def __len__(self) -> int:
        return len(self.domain)


# ---------------------------------------------------------------------------
# the class


class FiniteFieldClass(FraisseClass):
    """Finite fields of characteristic p.

    ``size_cap`` bounds p^n for every constructed field; ``explicit_cap``
    bounds the fields whose elements may be listed one by one.
    """

    def __init__(self, p: int = 2, size_cap: int = 2 ** 16, explicit_cap: int = 2 ** 16):
        if not is_prime(p):
            raise ContractViolation(f"{p} is not prime")
        self.p = p
        self.size_cap = size_cap
        self.explicit_cap = explicit_cap
        self.class_id = f"field_p{p}"

    def params(self):
        return {"p": self.p, "size_cap": self.size_cap}

    # -- construction ----------------------------------------------------------
    def make(self, n: int) -> Structure:
        if n < 1:
            raise ContractViolation("degree must be at least 1")
        if self.p ** n > self.size_cap:
            raise ContractViolation(f"field of size {self.p}^{n} exceeds the size cap")
        return Structure(self.class_id, LabelRanges([(0, self.p ** n)]),
                         FieldPayload(self.p, n, canonical_poly(self.p, n), CanonicalLabeling()))

    def _extension(self, base: Structure, n: int, root: int,
                   used: Sequence[Sequence[int]] = (), pins: Mapping[int, int] = {}
                   ) -> Structure:
        """Field of degree n containing ``base`` via generator -> root.

        ``pins`` forces chosen labels onto chosen elements outside the image.
        """
        p = self.p
        if p ** n > self.size_cap:
            raise ContractViolation(f"field of size {p}^{n} exceeds the size cap")
        nb = degree(base)
        count = p ** n - p ** nb
        pinned = set(pins)
        fresh = fresh_labels(count - len(pinned), base.domain, LabelRanges.from_labels(pinned),
                             *used)
        fresh = fresh.union(LabelRanges.from_labels(pinned))
        poly = canonical_poly(p, n)
        S = Structure(self.class_id, base.domain.union(fresh) if isinstance(base.domain, LabelRanges)
                      else LabelRanges.coerce(base.domain).union(fresh),
                      FieldPayload(p, n, poly, ExtensionLabeling(base, root, fresh)))
        if not pins:
            return S
        perm: dict[int, int] = {}
        lab = labeler(S)
        # apply transpositions one at a time so each pin lands exactly
        for want_label, z in sorted(pins.items()):
            cur = labeler(S).label(z)
            if cur == want_label:
                continue
            perm_full = dict(perm)
            a, b = perm_full.get(want_label, want_label), perm_full.get(cur, cur)
            perm_full[want_label], perm_full[cur] = b, a
            perm = {k: v for k, v in perm_full.items() if k != v}
            S = Structure(self.class_id, S.domain, FieldPayload(
                p, n, poly, ExtensionLabeling(base, root, fresh, tuple(sorted(perm.items())))))
        del lab
        for want_label, z in pins.items():
            if label_of(S, z) != want_label:  # pragma: no cover - construction invariant
                raise AssertionError("pinning failed")
        return S

    # -- contract -----------------------------------------------------------------
    def is_member(self, S):
        self.check(S)
        pay = S.payload
        if not isinstance(pay, FieldPayload) or pay.p != self.p:
            return False
        if pay.poly != canonical_poly(self.p, pay.n):
            return False
        if len(S.domain) != self.p ** pay.n:
            return False
        lab = pay.labeling
        if isinstance(lab, CanonicalLabeling):
            return S.domain == LabelRanges([(0, self.p ** pay.n)])
        if isinstance(lab, DictLabeling):
            labels = [l for l, _ in lab.pairs]
            elems = sorted(e for _, e in lab.pairs)
            return (labels == list(S.domain) and elems == list(range(self.p ** pay.n)))
        if isinstance(lab, ExtensionLabeling):
            base = lab.base
            if not self.is_member(base) or pay.n % degree(base):
                return False
            K = arithmetic(S)
            if degree(base) > 1 and K.eval_fp_poly(base.payload.poly, lab.root) != 0:
                return False
            return LabelRanges.coerce(base.domain).union(lab.fresh) == S.domain
        return False

    def size(self, S):
        return self.p ** degree(S)

    def generator_element(self, S: Structure) -> int:
        return self.p if degree(S) > 1 else 1

    def base_substructure(self, S):
        return self.prime_field_in(S)

    def generators(self, S):
        return (label_of(S, self.generator_element(S)),)

    def elements(self, S: Structure) -> Iterator[tuple[int, int]]:
        """(label, element) pairs; only for fields under the explicit cap."""
        if len(S.domain) > self.explicit_cap:
            raise ContractViolation("field too large to enumerate")
        for l in S.domain:
            yield l, element_of(S, l)

    def subfield(self, S: Structure, d: int) -> Structure:
        """The subfield of degree d, with S's labels."""
        n = degree(S)
        if n % d:
            raise ContractViolation(f"no subfield of degree {d} in degree {n}")
        if d == n:
            return S
        if self.p ** d > self.explicit_cap:
            raise ContractViolation("subfield too large to list")
        K = arithmetic(S)
        small = self.make(d)
        if d == 1:
            pairs = sorted((label_of(S, c), c) for c in range(self.p))
        else:
            r = roots_in(self.p, K.poly, small.payload.poly)[0]
            fm = FieldMap(small, S, r)
            pairs = sorted((fm[z], z) for z in range(self.p ** d))
        return Structure(self.class_id, LabelRanges.from_labels(l for l, _ in pairs),
                         FieldPayload(self.p, d, small.payload.poly, DictLabeling(tuple(pairs))))

    def substructure_generated(self, S, subset):
        self.check(S)
        subset = list(subset)
        if not subset:
            raise ContractViolation("empty generating set")
        K = arithmetic(S)
        d = 1
        for x in subset:
            if x not in S:
                raise ContractViolation(f"label {x} not in domain")
            d = math.lcm(d, K.degree_of(element_of(S, x)))
        return self.subfield(S, d)

    def restrict(self, S, labels):
        labels = LabelRanges.coerce(labels)
        if labels == S.domain:
            return S
        lab = S.payload.labeling
        while isinstance(lab, ExtensionLabeling) and not lab.perm:
            if lab.base.domain == labels:
                return lab.base
            lab = lab.base.payload.labeling
        n = len(labels)
        d = round(math.log(n, self.p))
        if self.p ** d != n:
            raise ContractViolation("label set is not a subfield")
        sub = self.subfield(S, d)
        if sub.domain != labels:
            raise ContractViolation("label set is not a subfield")
        return sub

    def same(self, S, T):
        if S.class_id != T.class_id or S.domain != T.domain or degree(S) != degree(T):
            return False
        if S == T:
            return True
        return self._is_hom(Embedding(S, T, IdentityOn(S.domain)))

    def _is_hom(self, e: Embedding) -> bool:
        """Whether e is a field embedding; checked on a basis for linear lazy maps."""
        A, B = e.source, e.target
        KA, KB = arithmetic(A), arithmetic(B)
        try:
            if degree(A) == 1:
                r = None
            else:
                r = element_of(B, e.map[label_of(A, self.p)])
                if KB.eval_fp_poly(A.payload.poly, r) != 0:
                    return False
            ref = FieldMap(A, B, r if r is not None else 0)
            if len(A.domain) <= self.explicit_cap:
                return all(e.map[l] == label_of(B, ref.image_element(element_of(A, l)))
                           for l in A.domain)
            # lazy maps: compare on the power basis and on the fresh-label boundary
            probes = [p_ for p_ in (KA.powers(self.p, KA.n))]
            return all(e.map[label_of(A, z)] == label_of(B, ref.image_element(z)) for z in probes)
        except KeyError:
            return False

    def is_embedding(self, e):
        A, B = e.source, e.target
        if A.class_id != self.class_id or B.class_id != self.class_id:
            return False
        if degree(B) % degree(A):
            return False
        if isinstance(e.map, FieldMap) and e.map.src is A and e.map.dst is B:
            if degree(A) == 1:
                return True
            return arithmetic(B).eval_fp_poly(A.payload.poly, e.map.root) == 0
        if isinstance(e.map, IdentityOn):
            return A.domain == B.domain and self.same(A, B) or self._identity_sub(A, B)
        return self._is_hom(e)

    def _identity_sub(self, A: Structure, B: Structure) -> bool:
        if not LabelRanges.coerce(A.domain).issubset(B.domain):
            return False
        return self._is_hom(Embedding(A, B, IdentityOn(A.domain)))

    def embeddings_roots(self, A: Structure, B: Structure) -> list[int]:
        if degree(B) % degree(A):
            return []
        if degree(A) == 1:
            return [0]
        return list(roots_in(self.p, B.payload.poly, A.payload.poly))

    def all_embeddings(self, A, B):
        self.check(A, B)
        maps = [FieldMap(A, B, r) for r in self.embeddings_roots(A, B)]
        if len(A.domain) <= self.explicit_cap:
            src = list(A.domain)
            maps.sort(key=lambda m: [m[x] for x in src])
        return [Embedding(A, B, m) for m in maps]

    def field_embed(self, small: Structure, big: Structure) -> Embedding:
        """Embedding sending the generator of ``small`` to the smallest root in ``big``."""
        self.check(small, big)
        if degree(big) % degree(small):
            raise ContractViolation(
                f"degree {degree(small)} does not divide degree {degree(big)}")
        roots = self.embeddings_roots(small, big)
        return Embedding(small, big, FieldMap(small, big, roots[0]))

    def extend_generators(self, A, a, S, b):
        self.check(A, S)
        if len(a) != 1 or len(b) != 1 or b[0] not in S:
            return None
        if a[0] != self.generators(A)[0]:
            return self.find_extension(A, {a[0]: b[0]}, S)
        z = element_of(S, b[0])
        K = arithmetic(S)
        if degree(S) % degree(A):
            return None
        if degree(A) == 1:
            if z != 1:
                return None
            return Embedding(A, S, FieldMap(A, S, 0))
        if K.eval_fp_poly(A.payload.poly, z) != 0:
            return None
        return Embedding(A, S, FieldMap(A, S, z))

    def find_extension(self, A, partial, S):
        self.check(A, S)
        for r in self.embeddings_roots(A, S):
            m = FieldMap(A, S, r)
            if all(m[x] == y for x, y in partial.items()):
                return Embedding(A, S, m)
        return None

    def canonicalize(self, S):
        self.check(S)
        return f"{self.class_id}|{degree(S)}".encode()

    def amalgam_size(self, A, B1, B2):
        return self.p ** math.lcm(degree(B1), degree(B2))

    def amalgamate(self, A, h1, h2, pins: Mapping[int, int] | None = None):
        B1, B2 = h1.target, h2.target
        self.check(A, B1, B2)
        if not (self.is_embedding(h1) and self.is_embedding(h2)):
            raise ContractViolation("h1 and h2 must be embeddings")
        p = self.p
        n1, n2 = degree(B1), degree(B2)
        N = math.lcm(n1, n2)
        if N == n1 and not pins:
            C = B1
        else:
            K = gf(p, canonical_poly(p, N))
            r1 = roots_in(p, K.poly, B1.payload.poly)[0] if n1 > 1 else 0
            C = self._extension(B1, N, r1,
                                pins=self._pin_elements(pins, B1, N, r1) if pins else {})
        g1 = Embedding(B1, C, IdentityOn(B1.domain))
        KC = arithmetic(C)
        # h1 as an element map: generator of A goes to this element of B1
        a_gen = label_of(A, self.generator_element(A))
        target = element_of(C, h1.map[a_gen])
        src_elem = element_of(B2, h2.map[a_gen])
        roots = self.embeddings_roots(B2, C)
        base = roots[0]
        for j in range(max(1, n2)):
            r = base
            for _ in range(j):
                r = KC.frob(r)
            m = FieldMap(B2, C, r)
            if n2 == 1 or m.image_element(src_elem) == target:
                return C, g1, Embedding(B2, C, m)
        raise AssertionError("no compatible Frobenius twist")  # pragma: no cover

    def _pin_elements(self, pins, B1, N, r1):
        # pins are given as {label: element of the amalgam}; nothing to translate
        return dict(pins)

    def joint_embed(self, A, B):
        self.require_member(A, B)
        P = self.prime_field_in(A)
        h1 = Embedding(P, A, IdentityOn(P.domain))
        h2 = Embedding(P, B, {label_of(P, c): label_of(B, c) for c in range(self.p)})
        return self.amalgamate(P, h1, h2)

    def prime_field_in(self, S: Structure) -> Structure:
        pairs = sorted((label_of(S, c), c) for c in range(self.p))
        return Structure(self.class_id, LabelRanges.from_labels(l for l, _ in pairs),
                         FieldPayload(self.p, 1, canonical_poly(self.p, 1),
                                      DictLabeling(tuple(pairs))))

    def strict_extend(self, C):
        self.require_member(C)
        n = 2 * degree(C)
        K = gf(self.p, canonical_poly(self.p, n))
        r = roots_in(self.p, K.poly, C.payload.poly)[0] if degree(C) > 1 else 0
        return self._extension(C, n, r)

    def enumerate_class(self, size_bound):
        n = 1
        while self.p ** n <= size_bound:
            yield self.make(n)
            n += 1

    @property
    def type_size_limit(self):
        return min(self.size_cap, self.explicit_cap)

    def types_of_size(self, n):
        d = round(math.log(n, self.p)) if n > 1 else 0
        if d >= 1 and self.p ** d == n and n <= self.type_size_limit:
            return [self.make(d)]
        return []

    def relabel(self, S, mapping):
        pairs = sorted((mapping[l], z) for l, z in self.elements(S))
        if len({l for l, _ in pairs}) != len(pairs):
            raise ContractViolation("relabeling must be injective")
        return Structure(self.class_id, LabelRanges.from_labels(l for l, _ in pairs),
                         FieldPayload(self.p, degree(S), S.payload.poly, DictLabeling(tuple(pairs))))

    def frobenius(self, S: Structure, label: int) -> int:
        K = arithmetic(S)
        return label_of(S, K.frob(element_of(S, label)))

    # -- serialization --------------------------------------------------------------
    def payload_to_json(self, S):
        pay: FieldPayload = S.payload
        return {"p": pay.p, "degree": pay.n, "poly": list(pay.poly),
                "labeling": self._labeling_to_json(pay)}

    def _labeling_to_json(self, pay: FieldPayload) -> Any:
        lab = pay.labeling
        K = gf(pay.p, pay.poly)
        if isinstance(lab, CanonicalLabeling):
            return {"kind": "canonical"}
        if isinstance(lab, DictLabeling):
            return {"kind": "explicit", "elements": [[l, K.vec(z)] for l, z in lab.pairs]}
        from .core import structure_to_json
        return {"kind": "extension", "base": structure_to_json(self, lab.base),
                "root": K.vec(lab.root), "fresh": [list(iv) for iv in lab.fresh.intervals],
                "perm": [list(x) for x in lab.perm]}

    def payload_from_json(self, domain, data):
        p, n, poly = data["p"], data["degree"], tuple(data["poly"])
        K = gf(p, poly)
        lab = data["labeling"]
        if lab["kind"] == "canonical":
            labeling: Any = CanonicalLabeling()
        elif lab["kind"] == "explicit":
            labeling = DictLabeling(tuple((l, K.num(v)) for l, v in lab["elements"]))
        else:
            from .core import structure_from_json
            labeling = ExtensionLabeling(structure_from_json(self, lab["base"]),
                                         K.num(lab["root"]),
                                         LabelRanges(tuple(iv) for iv in lab["fresh"]),
                                         tuple(tuple(x) for x in lab["perm"]))
        return FieldPayload(p, n, poly, labeling)


def field_make(p: int, n: int, size_cap: int = 2 ** 16) -> Structure:
    return FiniteFieldClass(p, size_cap=size_cap).make(n)


def field_embed(small: Structure, big: Structure) -> Embedding:
    return FiniteFieldClass(small.payload.p, size_cap=max(len(big.domain), 2)).field_embed(small, big)


def frobenius(F: Structure, label: int) -> int:
    return FiniteFieldClass(F.payload.p, size_cap=len(F.domain)).frobenius(F, label)
