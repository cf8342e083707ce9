"""Finite structures on natural-number labels, embeddings, and the class contract.

Every concrete Fraisse class (graphs, orders, metric spaces, abelian groups,
finite fields) subclasses :class:`FraisseClass` and supplies the operations
the limit builder and the topology engine rely on.
"""
from __future__ import annotations

import bisect
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import accumulate
from typing import Any, Iterable, Iterator, Mapping, Sequence


class FraisseError(Exception):
    """Base class for errors raised by this package."""


class ContractViolation(FraisseError, ValueError):
    """An operation was called outside its precondition."""


class LabelRanges(Sequence[int]):
    """An immutable sorted set of labels stored as disjoint half-open intervals.

    Used as the domain of structures too large to list label by label.
    """

    __slots__ = ("_starts", "_stops", "_offsets", "_hash")

    def __init__(self, intervals: Iterable[tuple[int, int]] = ()):
        merged: list[list[int]] = []
        for a, b in sorted((int(a), int(b)) for a, b in intervals if b > a):
            if a < 0:
                raise ContractViolation("labels must be non-negative")
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        self._starts = tuple(a for a, _ in merged)
        self._stops = tuple(b for _, b in merged)
        self._offsets = (0,) + tuple(accumulate(b - a for a, b in merged))
        self._hash = None

    @classmethod
    def from_labels(cls, labels: Iterable[int]) -> "LabelRanges":
        return cls((x, x + 1) for x in labels)

    @classmethod
    def coerce(cls, domain: Sequence[int]) -> "LabelRanges":
        if isinstance(domain, LabelRanges):
            return domain
        return cls.from_labels(domain)

    @property
    def intervals(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self._starts, self._stops))

    def __len__(self) -> int:
        return self._offsets[-1]

    def __iter__(self) -> Iterator[int]:
        for a, b in zip(self._starts, self._stops):
            yield from range(a, b)

    def __contains__(self, x: object) -> bool:
        if not isinstance(x, int):
            return False
        i = bisect.bisect_right(self._starts, x) - 1
        return i >= 0 and x < self._stops[i]

    def __getitem__(self, i):  # type: ignore[override]
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        k = bisect.bisect_right(self._offsets, i) - 1
        return self._starts[k] + (i - self._offsets[k])

    def index(self, x: int, start: int = 0, stop: int | None = None) -> int:
        i = bisect.bisect_right(self._starts, x) - 1
        if i < 0 or x >= self._stops[i]:
            raise ValueError(f"{x} not in label set")
        return self._offsets[i] + (x - self._starts[i])

    def union(self, *others: Sequence[int]) -> "LabelRanges":
        ivs = list(self.intervals)
        for o in others:
            ivs.extend(LabelRanges.coerce(o).intervals)
        return LabelRanges(ivs)

    def issubset(self, other: Sequence[int]) -> bool:
        other = LabelRanges.coerce(other)
        return all(other._covers(a, b) for a, b in self.intervals)

    def _covers(self, a: int, b: int) -> bool:
        i = bisect.bisect_right(self._starts, a) - 1
        return i >= 0 and b <= self._stops[i]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, LabelRanges):
            return self.intervals == other.intervals
        if isinstance(other, (tuple, list)):
            return len(other) == len(self) and all(a == b for a, b in zip(self, other))
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.intervals)
        return self._hash

    def __repr__(self) -> str:
        return f"LabelRanges({list(self.intervals)})"


def fresh_labels(count: int, *used: Sequence[int]) -> LabelRanges:
    """The ``count`` smallest naturals that appear in none of ``used``."""
    taken = LabelRanges().union(*used)
    out: list[tuple[int, int]] = []
    need, cursor = count, 0
    for a, b in taken.intervals:
        if need == 0:
            break
        if a > cursor:
            take = min(need, a - cursor)
            out.append((cursor, cursor + take))
            need -= take
        cursor = max(cursor, b)
    if need:
        out.append((cursor, cursor + need))
    return LabelRanges(out)


def as_domain(labels: Iterable[int]) -> tuple[int, ...]:
    dom = tuple(sorted(set(int(x) for x in labels)))
    if not dom:
        raise ContractViolation("structures must have a nonempty domain")
    if dom[0] < 0:
        raise ContractViolation("labels must be non-negative")
    return dom


@dataclass(frozen=True)
class Structure:
    """A finite structure of a given class living on a finite subset of the naturals.

    ``domain`` is a sorted tuple of labels, or a :class:`LabelRanges` for
    structures too large to enumerate. ``payload`` is class-specific and hashable.
    """

    class_id: str
    domain: Sequence[int]
    payload: Any

    def __post_init__(self) -> None:
        if len(self.domain) == 0:
            raise ContractViolation("structures must have a nonempty domain")

    @property
    def size(self) -> int:
        return len(self.domain)

    def __contains__(self, label: object) -> bool:
        return label in self._domain_set

    @property
    def _domain_set(self):
        d = self.__dict__.get("_dset")
        if d is None:
            d = self.domain if isinstance(self.domain, LabelRanges) else frozenset(self.domain)
            object.__setattr__(self, "_dset", d)
        return d


class Embedding:
    """A label map from ``source.domain`` into ``target.domain``.

    ``map`` is any mapping; explicit dicts for small sources, lazy mappings
    for large algebraic structures.
    """

    __slots__ = ("source", "target", "map")

    def __init__(self, source: Structure, target: Structure, map: Mapping[int, int]):
        self.source = source
        self.target = target
        self.map = map

    def __call__(self, label: int) -> int:
        return self.map[label]

    def images(self, labels: Iterable[int]) -> tuple[int, ...]:
        return tuple(self.map[x] for x in labels)

    def compose(self, inner: "Embedding") -> "Embedding":
        """``self ∘ inner``."""
        return Embedding(inner.source, self.target,
                         {x: self.map[inner.map[x]] for x in inner.source.domain})

    def as_dict(self) -> dict[int, int]:
        return {x: self.map[x] for x in self.source.domain}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return (self.source == other.source and self.target == other.target
                and all(self.map[x] == other.map[x] for x in self.source.domain))

    def __hash__(self) -> int:
        return hash((self.source, self.target))

    def __repr__(self) -> str:
        if len(self.source.domain) <= 16:
            return f"Embedding({self.as_dict()})"
        return f"Embedding(<{len(self.source.domain)} labels>)"


def identity_embedding(S: Structure) -> Embedding:
    return Embedding(S, S, _Identity())


class _Identity(Mapping[int, int]):
    def __getitem__(self, x: int) -> int:
        return x

    def __iter__(self):  # pragma: no cover - never enumerated
        raise TypeError("identity map is not enumerable")

    def __len__(self):  # pragma: no cover
        raise TypeError("identity map has no length")


class FraisseClass(ABC):
    """A Fraisse class: hereditary, with amalgamation and joint embedding.

    Subclasses implement the abstract operations; the remaining ones have
    generic defaults written against the abstract ones.
    """

    class_id: str

    # -- contract helpers ---------------------------------------------------
    def check(self, *structures: Structure) -> None:
        for S in structures:
            if S.class_id != self.class_id:
                raise ContractViolation(
                    f"structure of class {S.class_id!r} passed to {self.class_id!r}")

    def require_member(self, *structures: Structure) -> None:
        for S in structures:
            self.check(S)
            if not self.is_member(S):
                raise ContractViolation(f"not a member of {self.class_id}: {S!r}")

    # -- the contract ---------------------------------------------------------
    @abstractmethod
    def is_member(self, S: Structure) -> bool: ...

    @abstractmethod
    def substructure_generated(self, S: Structure, subset: Iterable[int]) -> Structure: ...

    @abstractmethod
    def is_embedding(self, e: Embedding) -> bool: ...

    @abstractmethod
    def all_embeddings(self, A: Structure, B: Structure) -> list[Embedding]: ...

    @abstractmethod
    def canonicalize(self, S: Structure) -> bytes: ...

    @abstractmethod
    def amalgamate(self, A: Structure, h1: Embedding, h2: Embedding
                   ) -> tuple[Structure, Embedding, Embedding]: ...

    @abstractmethod
    def joint_embed(self, A: Structure, B: Structure
                    ) -> tuple[Structure, Embedding, Embedding]: ...

    @abstractmethod
    def enumerate_class(self, size_bound: int) -> Iterator[Structure]: ...

    @abstractmethod
    def strict_extend(self, C: Structure) -> Structure: ...

    # -- operations used by the builder and topology -------------------------
    def size(self, S: Structure) -> int:
        """Size in the sense of ``enumerate_class`` bounds."""
        return len(S.domain)

    size_cap: int | None = None
    #: largest size for which ``types_of_size`` may be asked; None means unbounded
    type_size_limit: int | None = None

    def types_of_size(self, n: int) -> list[Structure]:
        """Enumerated representatives whose size is exactly ``n``."""
        return [S for S in self.enumerate_class(n) if self.size(S) == n]

    def amalgam_size(self, A: Structure, B1: Structure, B2: Structure) -> int:
        """Domain size of the amalgam of B1 and B2 over A, computed without building it."""
        return len(B1.domain) + len(B2.domain) - len(A.domain)

    def base_substructure(self, S: Structure) -> Structure | None:
        """The substructure generated by the empty set, or None when that is empty."""
        return None

    def generators(self, S: Structure) -> tuple[int, ...]:
        """A fixed generating tuple of ``S``."""
        return tuple(S.domain)

    def restrict(self, S: Structure, labels: Iterable[int]) -> Structure:
        """The substructure on exactly ``labels``; they must already be closed."""
        labels = list(labels)
        sub = self.substructure_generated(S, labels)
        if len(sub.domain) != len(set(labels)):
            raise ContractViolation("label set is not closed under the operations")
        return sub

    def same(self, S: Structure, T: Structure) -> bool:
        """Equality as labeled structures."""
        return S == T

    def extend_generators(self, A: Structure, a: Sequence[int], S: Structure,
                          b: Sequence[int]) -> Embedding | None:
        """The embedding of ``A`` into ``S`` sending ``a`` to ``b``, if there is one.

        ``a`` generates ``A``, so such an embedding is unique when it exists.
        """
        for x in b:
            if x not in S:
                return None
        return self.find_extension(A, dict(zip(a, b)), S)

    def find_extension(self, A: Structure, partial: Mapping[int, int],
                       S: Structure) -> Embedding | None:
        """Some embedding of ``A`` into ``S`` agreeing with ``partial``, or None."""
        for e in self.all_embeddings(A, S):
            if all(e.map[x] == y for x, y in partial.items()):
                return e
        return None

    def is_isomorphic(self, S: Structure, T: Structure) -> bool:
        return self.canonicalize(S) == self.canonicalize(T)

    def canonical_representative(self, S: Structure) -> Structure:
        """The enumerated representative isomorphic to ``S``."""
        key = self.canonicalize(S)
        for R in self.enumerate_class(self.size(S)):
            if self.size(R) == self.size(S) and self.canonicalize(R) == key:
                return R
        raise ContractViolation("no enumerated representative found")

    @abstractmethod
    def relabel(self, S: Structure, mapping: Mapping[int, int]) -> Structure:
        """Copy of ``S`` with labels renamed injectively by ``mapping``."""

    # -- serialization ---------------------------------------------------------
    @abstractmethod
    def payload_to_json(self, S: Structure) -> Any: ...

    @abstractmethod
    def payload_from_json(self, domain: Sequence[int], data: Any) -> Any: ...

    def params(self) -> dict[str, Any]:
        return {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.class_id!r})"


def domain_to_json(domain: Sequence[int]) -> Any:
    if isinstance(domain, LabelRanges):
        return {"ranges": [list(iv) for iv in domain.intervals]}
    return list(domain)


def domain_from_json(data: Any) -> Sequence[int]:
    if isinstance(data, dict):
        return LabelRanges(tuple(iv) for iv in data["ranges"])
    return as_domain(data)


def structure_to_json(cls: FraisseClass, S: Structure) -> dict[str, Any]:
    cls.check(S)
    return {"class": S.class_id, "domain": domain_to_json(S.domain),
            "payload": cls.payload_to_json(S)}


def structure_from_json(cls: FraisseClass, data: Mapping[str, Any]) -> Structure:
    if data["class"] != cls.class_id:
        raise ContractViolation(f"expected class {cls.class_id!r}, got {data['class']!r}")
    domain = domain_from_json(data["domain"])
    return Structure(cls.class_id, domain, cls.payload_from_json(domain, data["payload"]))


def dumps(obj: Any) -> str:
    """Deterministic JSON text used for every file this package writes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
