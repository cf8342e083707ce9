"""Basic open sets of the space of structures on the naturals, dense-open refinement,
Baire intersections and a Banach-Mazur game engine.

A basic open set is given by a finite anchor B: it holds every structure whose
restriction to ``B.domain`` equals B. Everything here works on finite
approximations, so membership questions about labels outside a finite stage
raise :class:`ContractViolation` instead of guessing.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Iterator, Sequence

from .builder import (ChainState, ExtensionTask, _push, new_builder, pair_stream, realize,
                      task_code, task_for_code)
from .core import (ContractViolation, Embedding, FraisseClass, FraisseError, Structure,
                   fresh_labels, structure_from_json, structure_to_json)
from .fields import FiniteFieldClass, element_of

YES, UNKNOWN = "yes", "unknown"
EMBEDDING, VACUOUS = "embedding", "vacuous"


class InvalidMove(FraisseError):
    """An adversary move that is not a legal shrinking of the current basic open."""

    def __init__(self, round: int, reason: str):
        super().__init__(f"invalid move in round {round}: {reason}")
        self.round = round
        self.reason = reason


@dataclass(frozen=True)
class BasicOpen:
    anchor: Structure


@dataclass(frozen=True)
class AgeSet:
    """Structures containing a copy of ``A``."""

    A: Structure


@dataclass(frozen=True)
class ExtSet:
    """Structures in which the task is either refuted on its ``b`` labels or witnessed."""

    task: ExtensionTask


DenseSetDescriptor = AgeSet | ExtSet


@dataclass(frozen=True)
class Certificate:
    kind: str  # EMBEDDING or VACUOUS
    embedding: Embedding | None = None


@dataclass(frozen=True)
class Verdict:
    status: str  # YES or UNKNOWN
    certificate: Certificate | None = None

    def __bool__(self) -> bool:
        return self.status == YES


def basic_open(cls: FraisseClass, B: Structure) -> BasicOpen:
    cls.require_member(B)
    return BasicOpen(B)


# ---------------------------------------------------------------------------
# membership


def witness_nonempty(cls: FraisseClass, B: Structure, steps: int) -> ChainState:
    """A chain B = B_0 ⊊ B_1 ⊊ ... ⊊ B_steps, each stage a member of O_B."""
    state = new_builder(cls, B)
    for _ in range(steps):
        state = replace(state, stages=_push(state, cls.strict_extend(state.top)), _cache={})
    return state


def member_basic(cls: FraisseClass, S: Structure, O: BasicOpen) -> bool:
    cls.check(S, O.anchor)
    missing = [x for x in _labels(O.anchor) if x not in S]
    if missing:
        raise ContractViolation(f"label {missing[0]} of the anchor is outside the structure")
    try:
        sub = cls.restrict(S, O.anchor.domain)
    except ContractViolation:
        return False  # the anchor's labels are not closed in S
    return cls.same(sub, O.anchor)


def _labels(S: Structure) -> Sequence[int]:
    return S.domain


def member_dense_open(cls: FraisseClass, S: Structure, D: DenseSetDescriptor) -> Verdict:
    """``yes`` with a certificate when S already lies in D, ``unknown`` otherwise."""
    cls.check(S)
    if isinstance(D, AgeSet):
        e = cls.find_extension(D.A, {}, S)
        return Verdict(YES, Certificate(EMBEDDING, e)) if e else Verdict(UNKNOWN)
    t = D.task
    if any(y not in S for y in t.b):
        return Verdict(UNKNOWN)
    f = cls.extend_generators(t.A1, t.a, S, t.b)
    if f is None:
        return Verdict(YES, Certificate(VACUOUS))
    w = cls.find_extension(t.A2, t.partial(f), S)
    return Verdict(YES, Certificate(EMBEDDING, w)) if w else Verdict(UNKNOWN)


# ---------------------------------------------------------------------------
# refinement


def refine_into_age(cls: FraisseClass, O: BasicOpen, A: Structure
                    ) -> tuple[BasicOpen, Certificate]:
    cls.require_member(O.anchor, A)
    D, _, gA = cls.joint_embed(O.anchor, A)
    return BasicOpen(D), Certificate(EMBEDDING, gA)


def _check_task(cls: FraisseClass, task: ExtensionTask) -> None:
    cls.check(task.A1, task.A2)
    if task.e.source is not task.A1 and task.e.source != task.A1:
        raise ContractViolation("task embedding must start at A1")
    if task.e.target is not task.A2 and task.e.target != task.A2:
        raise ContractViolation("task embedding must end at A2")
    if any(x not in task.A1 for x in task.a):
        raise ContractViolation("a must list labels of A1")
    if len(set(task.a)) != len(task.a) or len(set(task.b)) != len(task.b):
        raise ContractViolation("a and b must be injective")
    if any(y < 0 for y in task.b):
        raise ContractViolation("b must consist of naturals")
    if not cls.is_embedding(task.e):
        raise ContractViolation("task map is not an embedding")


def refine_into_ext(cls: FraisseClass, O: BasicOpen, task: ExtensionTask
                    ) -> tuple[BasicOpen, Certificate]:
    """Shrink O into the dense set of the task.

    When the labels of ``b`` already in the anchor cannot carry the
    corresponding part of ``a`` the set O is returned with a vacuous
    certificate. Otherwise A2 is amalgamated with the anchor over the common
    part and the remaining ``b`` labels become the images of their ``a``
    elements.
    """
    _check_task(cls, task)
    B = O.anchor
    cls.require_member(B)
    vacuous = (O, Certificate(VACUOUS))
    res = [i for i, y in enumerate(task.b) if y in B]
    out = [i for i, y in enumerate(task.b) if y not in B]
    a_res = [task.a[i] for i in res]
    b_res = [task.b[i] for i in res]

    if a_res:
        A1r = cls.substructure_generated(task.A1, a_res)
        f = cls.extend_generators(A1r, a_res, B, b_res)
        Br = cls.substructure_generated(B, b_res)
    else:
        A1r = cls.base_substructure(task.A1)
        Br = cls.base_substructure(B)
        f = None if A1r is None else cls.find_extension(A1r, {}, Br)
        if A1r is not None and f is None:  # pragma: no cover - bases always match
            raise ContractViolation("base substructures do not match")
    if a_res and f is None:
        return vacuous
    if A1r is not None and any(task.a[j] in A1r for j in out):
        return vacuous  # the generated part already pins these images inside the anchor

    e = task.e.map
    mapping: dict[int, int] = {}
    if A1r is not None:
        for x in A1r.domain:
            mapping[e[x]] = f.map[x]
    for j in out:
        mapping[e[task.a[j]]] = task.b[j]
    rest = [y for y in task.A2.domain if y not in mapping]
    for y, z in zip(rest, fresh_labels(len(rest), B.domain, task.b)):
        mapping[y] = z
    A2p = cls.relabel(task.A2, mapping)

    if A1r is None:
        C, _, g2 = cls.joint_embed(B, A2p)
        amalg = None
    else:
        ident = {x: x for x in Br.domain}
        amalg = (Br, Embedding(Br, B, ident), Embedding(Br, A2p, ident))
        C, _, g2 = cls.amalgamate(*amalg)
    w = {x: g2.map[mapping[x]] for x in task.A2.domain}

    wanted = {task.b[j]: w[e[task.a[j]]] for j in out}
    if any(z in B for z in wanted.values()):
        return vacuous
    if any(lbl != z for lbl, z in wanted.items()):
        C, w = _place(cls, C, w, wanted, amalg, mapping, task.A2)
    witness = Embedding(task.A2, C, w)
    O2 = BasicOpen(C)
    if not member_basic(cls, C, O):  # pragma: no cover - amalgamation keeps the anchor
        raise AssertionError("refinement lost the anchor")
    return O2, Certificate(EMBEDDING, witness)


def _place(cls: FraisseClass, C: Structure, w: dict[int, int], wanted: dict[int, int],
           amalg, mapping: dict[int, int], A2: Structure) -> tuple[Structure, dict[int, int]]:
    """Move each prescribed label (a key of ``wanted``) onto its element."""
    if isinstance(cls, FiniteFieldClass) and amalg is not None:
        pins = {lbl: element_of(C, z) for lbl, z in wanted.items()}
        C2, _, g2 = cls.amalgamate(*amalg, pins=pins)
        return C2, {x: g2.map[mapping[x]] for x in A2.domain}
    full = {x: x for x in C.domain}
    holder = {x: x for x in C.domain}  # current label -> original label
    for lbl, orig in sorted(wanted.items()):
        now = full[orig]
        if now == lbl:
            continue
        other = holder.pop(lbl, None)
        full[orig] = lbl
        holder[lbl] = orig
        if other is None:
            del holder[now]
        else:
            full[other] = now
            holder[now] = other
    return cls.relabel(C, full), {x: full[z] for x, z in w.items()}


# ---------------------------------------------------------------------------
# oracles and descriptor stream


@dataclass(frozen=True)
class DenseOpenOracle:
    """Refinement into one dense open set, with a checkable certificate."""

    cls: FraisseClass
    descriptor: DenseSetDescriptor

    def __call__(self, O: BasicOpen) -> tuple[BasicOpen, Certificate]:
        if isinstance(self.descriptor, AgeSet):
            return refine_into_age(self.cls, O, self.descriptor.A)
        return refine_into_ext(self.cls, O, self.descriptor.task)


class _AgeTypes:
    def __init__(self, cls: FraisseClass):
        self.cls = cls
        self.items: list[Structure] = []
        self.size = 0

    def get(self, i: int) -> Structure:
        limit = self.cls.type_size_limit
        while len(self.items) <= i:
            self.size += 1
            if limit is not None and self.size > limit:
                raise ContractViolation("age enumeration exhausted below the size limit")
            self.items.extend(self.cls.types_of_size(self.size))
        return self.items[i]


def age_type(cls: FraisseClass, i: int) -> Structure:
    """The i-th enumerated isomorphism type, ordered by size."""
    cache = cls.__dict__.get("_age_types")
    if cache is None:
        cache = _AgeTypes(cls)
        cls.__dict__["_age_types"] = cache
    return cache.get(i)


def descriptor(cls: FraisseClass, k: int) -> DenseSetDescriptor:
    """Descriptor k of the strategy stream: age types and task codes alternate."""
    if k % 2 == 0:
        return AgeSet(age_type(cls, k // 2))
    return ExtSet(task_for_code(cls, k // 2))


def descriptor_stream(cls: FraisseClass) -> Iterator[DenseOpenOracle]:
    k = 0
    while True:
        yield DenseOpenOracle(cls, descriptor(cls, k))
        k += 1


def descriptor_to_json(cls: FraisseClass, D: DenseSetDescriptor) -> dict[str, Any]:
    if isinstance(D, AgeSet):
        return {"kind": "age", "A": structure_to_json(cls, D.A)}
    t = D.task
    code = task_code(cls, t)
    data: dict[str, Any] = {"kind": "ext", "a": list(t.a), "b": list(t.b)}
    if code is not None:
        data["code"] = code
    else:
        data.update(A1=structure_to_json(cls, t.A1), A2=structure_to_json(cls, t.A2),
                    e=[[x, t.e.map[x]] for x in t.A1.domain])
    return data


def descriptor_from_json(cls: FraisseClass, data: dict[str, Any]) -> DenseSetDescriptor:
    if data["kind"] == "age":
        return AgeSet(structure_from_json(cls, data["A"]))
    if "code" in data:
        return ExtSet(task_for_code(cls, data["code"]))
    A1 = structure_from_json(cls, data["A1"])
    A2 = structure_from_json(cls, data["A2"])
    e = Embedding(A1, A2, {x: y for x, y in data["e"]})
    return ExtSet(ExtensionTask(A1, A2, e, tuple(data["a"]), tuple(data["b"])))


# ---------------------------------------------------------------------------
# Baire intersections


def _checked_refine(cls: FraisseClass, O: BasicOpen, oracle: Callable, where: str
                    ) -> tuple[BasicOpen, Certificate]:
    O2, cert = oracle(O)
    cls.require_member(O2.anchor)
    if any(x not in O2.anchor for x in O.anchor.domain) or not member_basic(cls, O2.anchor, O):
        raise ContractViolation(f"{where}: refinement does not extend the anchor")
    if cert.kind == EMBEDDING:
        if cert.embedding is None or not cls.is_embedding(cert.embedding):
            raise ContractViolation(f"{where}: certificate is not an embedding")
        if cert.embedding.target != O2.anchor:
            raise ContractViolation(f"{where}: certificate does not land in the new anchor")
    elif cert.kind != VACUOUS:
        raise ContractViolation(f"{where}: unknown certificate kind {cert.kind!r}")
    D = getattr(oracle, "descriptor", None)
    if D is not None and cert.kind == EMBEDDING and not member_dense_open(cls, O2.anchor, D):
        raise ContractViolation(f"{where}: new anchor is not inside the dense set")
    return O2, cert


def _absorb_upto(cls: FraisseClass, B: Structure, n: int) -> Structure:
    for label in range(n + 1):
        while label not in B:
            B = cls.strict_extend(B)
    return B


def _chain(cls: FraisseClass, anchors: Sequence[Structure]) -> ChainState:
    state = new_builder(cls, anchors[0])
    for B in anchors[1:]:
        state = replace(state, stages=_push(state, B), _cache={})
    return state


def baire_intersect(cls: FraisseClass, seed: BasicOpen, oracles: Iterable[Callable],
                    rounds: int) -> ChainState:
    """Round n refines through the n-th oracle, then absorbs labels up to n.

    Stage n of the result is the anchor after round n.
    """
    cls.require_member(seed.anchor)
    anchors = [seed.anchor]
    O = seed
    it = iter(oracles)
    for n in range(1, rounds + 1):
        try:
            oracle = next(it)
        except StopIteration:
            raise ContractViolation(f"oracle stream ended before round {n}") from None
        O, _ = _checked_refine(cls, O, oracle, f"round {n}")
        O = BasicOpen(_absorb_upto(cls, O.anchor, n))
        anchors.append(O.anchor)
    return _chain(cls, anchors)


# ---------------------------------------------------------------------------
# Banach-Mazur games

Adversary = Callable[[Structure, int], Structure]


@dataclass(frozen=True)
class Move:
    player: str  # "adversary" or "builder"
    round: int
    anchor: Structure
    descriptor: DenseSetDescriptor | None = None
    certificate: Certificate | None = None


@dataclass
class GameTranscript:
    cls: FraisseClass
    seed: Structure
    moves: list[Move] = field(default_factory=list)
    final: ChainState | None = None

    @property
    def anchors(self) -> list[Structure]:
        return [self.seed] + [m.anchor for m in self.moves]

    def builder_anchors(self) -> list[Structure]:
        return [m.anchor for m in self.moves if m.player == "builder"]

    def annotated(self) -> list[DenseSetDescriptor]:
        return [m.descriptor for m in self.moves if m.descriptor is not None]


def identity_adversary(B: Structure, round: int) -> Structure:
    return B


def play_banach_mazur(cls: FraisseClass, seed: Structure, adversary: Adversary, rounds: int,
                      move_budget: int | None = 16,
                      oracles: Iterable[Callable] | None = None) -> GameTranscript:
    """Alternate adversary moves with the builder strategy for ``rounds`` rounds.

    ``move_budget`` bounds how many new labels one adversary move may add.
    The builder refines through the descriptor stream and then absorbs the
    labels up to the round number, exactly as :func:`baire_intersect` does.
    """
    cls.require_member(seed)
    tr = GameTranscript(cls, seed)
    O = BasicOpen(seed)
    it = iter(descriptor_stream(cls) if oracles is None else oracles)
    for n in range(1, rounds + 1):
        B = adversary(O.anchor, n)
        _validate_move(cls, O, B, n, move_budget)
        tr.moves.append(Move("adversary", n, B))
        O = BasicOpen(B)
        oracle = next(it)
        O, cert = _checked_refine(cls, O, oracle, f"round {n}")
        O = BasicOpen(_absorb_upto(cls, O.anchor, n))
        tr.moves.append(Move("builder", n, O.anchor, getattr(oracle, "descriptor", None), cert))
    tr.final = _chain(cls, tr.anchors)
    return tr


def _validate_move(cls: FraisseClass, O: BasicOpen, B: Structure, n: int,
                   budget: int | None) -> None:
    if not isinstance(B, Structure) or B.class_id != cls.class_id:
        raise InvalidMove(n, "move is not a structure of the class")
    if not cls.is_member(B):
        raise InvalidMove(n, "move is not a member of the class")
    if any(x not in B for x in O.anchor.domain):
        raise InvalidMove(n, "move drops labels of the current anchor")
    if not member_basic(cls, B, O):
        raise InvalidMove(n, "move changes the current anchor")
    if budget is not None and len(B.domain) - len(O.anchor.domain) > budget:
        raise InvalidMove(n, f"move adds more than {budget} labels")


class RandomAdversary:
    """Seeded adversary.

    Rule for round n: seed ``random.Random(f"{seed}:{n}")``. With probability
    1/2 play one strict extension. Otherwise pick a pair index uniformly from
    the first ``pairs`` entries of the pair stream, draw an injective tuple b
    uniformly from the first 32 labels of the anchor, and realize that task;
    when the task needs no growth fall back to a strict extension.
    """

    def __init__(self, cls: FraisseClass, seed: int, pairs: int = 8):
        self.cls = cls
        self.seed = seed
        self.pairs = pairs

    def __call__(self, B: Structure, round: int) -> Structure:
        cls = self.cls
        rng = random.Random(f"{self.seed}:{round}")
        if rng.random() < 0.5:
            return cls.strict_extend(B)
        ps = pair_stream(cls)
        available = [i for i in range(self.pairs) if ps.get(i) is not None]
        pair = ps.get(rng.choice(available))
        pool = B.domain[:32]
        if len(pool) < len(pair.a):
            return cls.strict_extend(B)
        b = tuple(rng.sample(list(pool), len(pair.a)))
        status, C, _ = realize(cls, B, ExtensionTask(pair.A1, pair.A2, pair.e, pair.a, b,
                                                     pair.index))
        return C if C is not None else cls.strict_extend(B)


def adversary_random(cls: FraisseClass, seed: int) -> RandomAdversary:
    return RandomAdversary(cls, seed)


def certify_transcript(tr: GameTranscript) -> list[tuple[DenseSetDescriptor, Verdict]]:
    """Check every annotated descriptor against the final stage of the game."""
    top = tr.final.top
    out = []
    for m in tr.moves:
        if m.descriptor is None:
            continue
        v = member_dense_open(tr.cls, top, m.descriptor)
        out.append((m.descriptor, v))
    return out


# ---------------------------------------------------------------------------
# serialization


def transcript_to_json(tr: GameTranscript) -> dict[str, Any]:
    cls = tr.cls
    rounds = []
    for m in tr.moves:
        ann = None
        if m.descriptor is not None:
            ann = {"descriptor": descriptor_to_json(cls, m.descriptor),
                   "certificate": m.certificate.kind if m.certificate else None}
            if m.certificate is not None and m.certificate.embedding is not None:
                ann["embedding"] = [[x, m.certificate.embedding.map[x]]
                                    for x in m.certificate.embedding.source.domain]
        rounds.append({"player": m.player, "round": m.round,
                       "anchor": structure_to_json(cls, m.anchor), "annotation": ann})
    return {"seed": structure_to_json(cls, tr.seed), "rounds": rounds}


def transcript_from_json(cls: FraisseClass, data: dict[str, Any]) -> GameTranscript:
    """Rebuild a transcript, checking nesting of every recorded anchor."""
    seed = structure_from_json(cls, data["seed"])
    tr = GameTranscript(cls, seed)
    O = BasicOpen(seed)
    for r in data["rounds"]:
        B = structure_from_json(cls, r["anchor"])
        if any(x not in B for x in O.anchor.domain) or not member_basic(cls, B, O):
            raise ContractViolation(f"round {r['round']}: anchor does not extend its predecessor")
        D = cert = None
        ann = r.get("annotation")
        if ann:
            D = descriptor_from_json(cls, ann["descriptor"])
            emb = None
            if "embedding" in ann:
                src = D.A if isinstance(D, AgeSet) else D.task.A2
                emb = Embedding(src, B, {x: y for x, y in ann["embedding"]})
            cert = Certificate(ann["certificate"], emb)
        tr.moves.append(Move(r["player"], r["round"], B, D, cert))
        O = BasicOpen(B)
    tr.final = _chain(cls, tr.anchors)
    return tr
