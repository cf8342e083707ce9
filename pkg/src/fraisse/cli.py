"""Command-line front end: ``fraisse {build,verify,game,iso,formula,enumerate}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 contract violation.
Every file written is deterministic JSON (sorted keys, no timestamps).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import builder, formulas, topology
from .core import ContractViolation, FraisseClass, FraisseError, dumps, structure_from_json, \
    structure_to_json
from .registry import make_class

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONTRACT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would call sys.exit(2) itself
        raise UsageError(message)


# -- helpers --------------------------------------------------------------------------


def _class_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--class", dest="cls", required=required,
                   help="graph, order, knfree, metric, abelian, field, or a full id "
                        "such as k3free, qmetric_q2_d8, field_p3")
    p.add_argument("--n", type=int, help="forbidden clique size for knfree")
    p.add_argument("--q", type=int, help="metric denominator bound")
    p.add_argument("--dmax", help="metric diameter bound")
    p.add_argument("--p", type=int, help="field characteristic")
    p.add_argument("--size-cap", type=int, help="size cap for algebraic classes")


def _make(args) -> FraisseClass:
    name = args.cls
    if name == "knfree":
        if args.n is None or args.n < 3:
            raise UsageError("knfree needs --n >= 3")
        name = f"k{args.n}free"
    for flag, ok in (("q", name == "metric"), ("dmax", name == "metric"),
                     ("p", name == "field")):
        if getattr(args, flag) is not None and not ok:
            raise UsageError(f"--{flag} does not apply to class {name!r}")
    if args.size_cap is not None and not name.startswith(("abelian", "field")):
        raise UsageError(f"--size-cap does not apply to class {name!r}")
    try:
        return make_class(name, q=args.q, dmax=args.dmax, p=args.p, size_cap=args.size_cap)
    except ContractViolation as exc:
        raise UsageError(str(exc)) from None


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None


def _seed(cls: FraisseClass, args) -> Any:
    if getattr(args, "seed_file", None):
        data = _read_json(args.seed_file)
    elif getattr(args, "seed_json", None):
        try:
            data = json.loads(args.seed_json)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--seed-json: invalid JSON ({exc.msg})") from None
    else:
        return topology.age_type(cls, 0)
    S = structure_from_json(cls, data)
    cls.require_member(S)
    return S


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def graph_dot(S) -> str:
    lines = ["graph G {"]
    lines += [f"  {x};" for x in S.domain]
    lines += [f"  {a} -- {b};" for a, b in sorted(S.payload)]
    lines.append("}")
    return "\n".join(lines)


# -- subcommands ------------------------------------------------------------------------


def cmd_build(args) -> int:
    cls = _make(args)
    if args.steps < 0:
        raise UsageError("--steps must be non-negative")
    state = builder.run(builder.new_builder(cls, _seed(cls, args)), args.steps)
    _emit(dumps(builder.state_to_json(state)), args.out)
    if args.dot:
        if not cls.class_id.startswith(("graph", "k")):
            raise UsageError("--dot is only available for graph classes")
        Path(args.dot).write_text(graph_dot(state.top) + "\n")
    return EXIT_OK


def _load_state(path: str) -> builder.ChainState:
    return builder.state_from_json(_read_json(path))


def cmd_verify(args) -> int:
    state = _load_state(args.state)
    cls = state.cls
    report: list[dict[str, Any]] = []
    suites = ["age", "saturation", "homogeneity"] if args.suite == "all" else [args.suite]
    window = range(args.window)
    if "age" in suites:
        r = builder.verify_age(state, args.gen_bound, window)
        report.append({"check": f"age gen_bound={args.gen_bound}",
                       "status": "pass" if r.ok else "fail",
                       "detail": {"checked": r.checked, "failures": [list(f) for f in r.failures]}})
    if "saturation" in suites:
        codes = min(args.codes, state.cursor)
        for c in range(codes):
            sr = builder.verify_saturation(state, builder.task_for_code(cls, c))
            status = {"realized": "pass", "vacuous": "pass", "capped": "skip"}.get(sr.status, "fail")
            report.append({"check": f"saturation code={c}", "status": status,
                           "detail": {"result": sr.status, "stage": sr.stage}})
    if "homogeneity" in suites:
        hr = builder.verify_homogeneity(state, args.size_bound, args.window)
        report.append({"check": f"homogeneity size_bound={args.size_bound} window={args.window}",
                       "status": "pass" if hr.ok else "fail",
                       "detail": {"checked": hr.checked,
                                  "failures": [[sorted(p.items()), x, why]
                                               for p, x, why in hr.failures]}})
    _emit(dumps(report), args.out)
    return EXIT_FAIL if any(r["status"] == "fail" for r in report) else EXIT_OK


def cmd_game(args) -> int:
    cls = _make(args)
    if args.adversary == "identity":
        adv = topology.identity_adversary
    else:
        adv = topology.adversary_random(cls, args.seed)
    try:
        tr = topology.play_banach_mazur(cls, _seed(cls, args), adv, args.rounds,
                                        move_budget=args.budget)
    except topology.InvalidMove as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_CONTRACT
    data = topology.transcript_to_json(tr)
    data["final"] = builder.state_to_json(tr.final)
    _emit(dumps(data), args.out)
    return EXIT_OK


def cmd_iso(args) -> int:
    X, Y = _load_state(args.a), _load_state(args.b)
    if X.cls.class_id != Y.cls.class_id:
        raise UsageError("the two states belong to different classes")
    res = builder.back_and_forth(X.cls, X, Y, args.depth)
    out = {"ok": res.ok, "rounds": res.rounds, "map": sorted(res.mapping.items()),
           "failure": res.failure}
    _emit(dumps(out), args.out)
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_formula(args) -> int:
    cls = _make(args)
    out: dict[str, Any] = {}
    S = None
    if args.structure:
        S = structure_from_json(cls, _read_json(args.structure))
    elif args.state:
        S = _load_state(args.state).top
    if args.from_structure:
        if S is None:
            raise UsageError("--from-structure needs --structure or --state")
        out["sentence"] = formulas.to_text(formulas.open_from_structure(cls, S))
    if args.text is not None:
        phi = formulas.parse_sentence(args.text, cls)
        out["sentence"] = formulas.to_text(phi)
        if S is not None:
            out["value"] = formulas.eval_sentence(cls, S, phi)
            if args.generated:
                out["generated"] = structure_to_json(cls, formulas.structure_from_open(cls, phi, S))
    if not out:
        raise UsageError("give --text or --from-structure")
    _emit(dumps(out), args.out)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    cls = _make(args)
    if args.bound < 1:
        raise UsageError("--bound must be positive")
    _emit(dumps([structure_to_json(cls, S) for S in cls.enumerate_class(args.bound)]), args.out)
    return EXIT_OK


# -- dispatch ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="fraisse", description="Fraisse limit construction toolkit.")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="run the builder and save the chain")
    _class_args(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed-file")
    p.add_argument("--seed-json")
    p.add_argument("--out")
    p.add_argument("--dot", help="also write the top stage as Graphviz DOT (graphs only)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="run verification suites on a saved state")
    p.add_argument("--state", required=True)
    p.add_argument("--suite", choices=["age", "saturation", "homogeneity", "all"], default="all")
    p.add_argument("--gen-bound", type=int, default=3)
    p.add_argument("--codes", type=int, default=50, help="saturation: check codes below this")
    p.add_argument("--size-bound", type=int, default=2)
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("game", help="play a Banach-Mazur game")
    _class_args(p)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--adversary", choices=["identity", "random"], default="random")
    p.add_argument("--seed", type=int, default=0, help="adversary seed")
    p.add_argument("--budget", type=int, default=16, help="labels one adversary move may add")
    p.add_argument("--seed-file")
    p.add_argument("--seed-json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("iso", help="back-and-forth between two saved states")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--depth", type=int, default=15)
    p.add_argument("--out")
    p.set_defaults(func=cmd_iso)

    p = sub.add_parser("formula", help="parse, evaluate or translate sentences")
    _class_args(p)
    p.add_argument("--text")
    p.add_argument("--structure", help="structure JSON file")
    p.add_argument("--state", help="saved state; its top stage is used")
    p.add_argument("--from-structure", action="store_true",
                   help="print the sentence of the basic open anchored at the structure")
    p.add_argument("--generated", action="store_true",
                   help="also print the substructure generated by the sentence's constants")
    p.add_argument("--out")
    p.set_defaults(func=cmd_formula)

    p = sub.add_parser("enumerate", help="list canonical structures up to a size bound")
    _class_args(p)
    p.add_argument("--bound", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)
    return top


def dispatch(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (ContractViolation, FraisseError) as exc:
        sys.stderr.write(f"contract violation: {exc}\n")
        return EXIT_CONTRACT


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
