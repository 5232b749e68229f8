"""Command-line front end.

Exit codes are the machine contract: 0 for success or a positive answer, 1
for a negative answer (UNSAT, a challenger win, a failed triple, an illegal
replay move), 2 for usage and parse errors, 3 for an exhausted budget. All
report text is human-oriented.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import formats
from .game import (
    BUDGET,
    EXISTS_WINS,
    FORALL_WINS,
    GameState,
    exists_responses,
    format_move,
    solve_game,
)
from .hoare import failing_run, partial_correct, stuck_state, total_correct
from .networks import Network, build_figure5_network
from .repsearch import SearchConfig, search
from .scripts_sn import forall_script_sn
from .sn import build_sn
from .structures import Signature, validate

OK, NEGATIVE, USAGE, EXHAUSTED = 0, 1, 2, 3


def _load_structure(args):
    if getattr(args, "sn", None) is not None:
        if args.struct is not None:
            raise formats.FormatError("give a structure file or --sn, not both")
        return build_sn(args.sn)
    if args.struct is None:
        raise formats.FormatError("need a structure file or --sn")
    return formats.parse_structure(Path(args.struct).read_text())


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _cmd_validate(args) -> int:
    report = validate(_load_structure(args))
    print(report)
    return OK if report.ok else NEGATIVE


def _cmd_game(args) -> int:
    struct = _load_structure(args)
    opening = None
    if args.opening:
        for name in args.opening:
            if name not in struct.elements:
                raise formats.FormatError(f"unknown element {name!r}")
        opening = tuple(struct.index(name) for name in args.opening)
    strategy = None
    if args.forall_script:
        if not hasattr(struct, "universe"):
            raise formats.FormatError(
                "--forall-script needs a generated closed-set structure (--sn)")
        strategy = forall_script_sn(struct)
        if opening is None:
            opening = strategy.opening()
    rep = solve_game(struct, args.rounds, opening=opening,
                     state_budget=args.node_budget,
                     forall_strategy=strategy)
    print(rep)
    if rep.winner == FORALL_WINS:
        for line, reply in zip(rep.trace, rep.replies):
            print(f"  {line} / {reply}")
        if args.trace:
            lines = [f"structure {struct.name}"]
            lines += [f"{s} / {k}" for s, k in zip(rep.trace, rep.replies)]
            _write(args.trace, "\n".join(lines) + "\n")
    return {EXISTS_WINS: OK, FORALL_WINS: NEGATIVE, BUDGET: EXHAUSTED}[rep.winner]


def _cmd_bruteforce(args) -> int:
    struct = _load_structure(args)
    sig = None
    if args.sig:
        words = args.sig.split(",")
        for w in words:
            if w not in ("join", "meet", "comp"):
                raise formats.FormatError(f"unknown signature word {w!r}")
        sig = Signature(has_join="join" in words, has_meet="meet" in words,
                        has_comp=True)
    cfg = SearchConfig(max_base=args.max_base, signature_filter=sig,
                       node_budget=args.node_budget,
                       time_budget=args.time_budget,
                       semantics=args.semantics)
    res = search(struct, cfg)
    for key, value in res.as_record().items():
        print(f"{key}: {value}")
    if res.rep is not None and args.out:
        _write(args.out, formats.print_repmap(res.rep))
    return {"SAT": OK, "UNSAT": NEGATIVE, "BUDGET": EXHAUSTED}[res.status]


def _cmd_gen_sn(args) -> int:
    _write(args.out, formats.print_structure(build_sn(args.n)))
    return OK


def _cmd_hoare(args) -> int:
    p, a, q = formats.parse_triple(Path(args.triple).read_text())
    pc = partial_correct(p, a, q)
    tc = total_correct(p, a, q)
    print(f"PARTIAL: {'yes' if pc else 'no'}")
    print(f"TOTAL: {'yes' if tc else 'no'}")
    if not pc:
        x, y = failing_run(p, a, q)
        print(f"witness: run {x} -> {y} leaves the postcondition")
    elif not tc:
        print(f"witness: no run from configuration {stuck_state(p, a)}")
    ok = pc if args.mode == "partial" else tc if args.mode == "total" \
        else pc and tc
    return OK if ok else NEGATIVE


def _cmd_export_dot(args) -> int:
    struct = _load_structure(args)
    if not hasattr(struct, "universe"):
        raise formats.FormatError(
            "the figure board needs a generated closed-set structure (--sn)")
    inet = build_figure5_network(struct)
    _write(args.out, formats.network_to_dot(inet, struct,
                                            name=f"figure_{struct.name}"))
    return OK


def _cmd_replay(args) -> int:
    struct = _load_structure(args)
    trace = formats.parse_trace(Path(args.trace).read_text(), struct)
    if trace.structure is not None and trace.structure != struct.name:
        raise formats.FormatError(
            f"trace is for {trace.structure!r}, structure is {struct.name!r}")
    st = GameState(Network(), "x0", "y0", -1, len(trace.steps) + 1)
    if not trace.steps:
        print("empty trace: no nodes, no winner")
        return OK
    for k, (move, reply) in enumerate(trace.steps, start=1):
        try:
            responses = exists_responses(st, struct, move)
        except ValueError as e:
            print(f"illegal move at round {k}: {e}")
            return NEGATIVE
        i = reply if reply is not None else 0
        if not 0 <= i < len(responses):
            print(f"illegal move at round {k}: reply {i} of "
                  f"{len(responses)} alternatives")
            return NEGATIVE
        st = responses[i]
        print(f"round {k}: {format_move(move, struct)} / {i}")
        if args.dot_dir:
            out = Path(args.dot_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"round{k}.dot").write_text(
                formats.network_to_dot(st.network, struct, name=f"round{k}"))
        if st.lost():
            break
    if st.lost():
        print(f"verdict: {FORALL_WINS} confirmed after {k} moves")
    else:
        print(f"verdict: responder survives {len(trace.steps)} moves")
    return OK


def _add_struct_source(p) -> None:
    p.add_argument("struct", nargs="?",
                   help="structure file (omit when --sn is given)")
    p.add_argument("--sn", type=int, metavar="N",
                   help="build the closed-set structure for universe size N")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="demrel",
        description="demonic relational calculus toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a structure's laws")
    _add_struct_source(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("game", help="solve the bounded representation game")
    _add_struct_source(p)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--opening", nargs=2, metavar=("A", "B"),
                   help="element names for the opening pair")
    p.add_argument("--forall-script", action="store_true",
                   help="restrict the challenger to the scripted strategy")
    p.add_argument("--node-budget", type=int, default=1_000_000,
                   help="visited-state budget")
    p.add_argument("--trace", metavar="FILE",
                   help="write the winning line as a replayable trace")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallelism hint (current engines are serial)")
    p.set_defaults(func=_cmd_game)

    p = sub.add_parser("bruteforce", help="search for a representation")
    _add_struct_source(p)
    p.add_argument("--sig", metavar="OPS",
                   help="comma-joined subset of join,meet,comp to preserve")
    p.add_argument("--max-base", type=int, required=True)
    p.add_argument("--semantics", choices=("demonic", "angelic"),
                   default="demonic")
    p.add_argument("--node-budget", type=int, default=10_000_000)
    p.add_argument("--time-budget", type=float, default=None,
                   help="seconds before giving up")
    p.add_argument("-o", "--out", metavar="FILE",
                   help="write a found representation here")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallelism hint (current engines are serial)")
    p.set_defaults(func=_cmd_bruteforce)

    p = sub.add_parser("gen-sn", help="write a closed-set structure file")
    p.add_argument("n", type=int)
    p.add_argument("-o", "--out", metavar="FILE")
    p.set_defaults(func=_cmd_gen_sn)

    p = sub.add_parser("hoare", help="check a Hoare triple file")
    p.add_argument("triple", help="triple file with pre/prog/post")
    p.add_argument("--mode", choices=("partial", "total", "both"),
                   default="both", help="which verdict drives the exit code")
    p.set_defaults(func=_cmd_hoare)

    p = sub.add_parser("export-dot", help="export the figure board as DOT")
    _add_struct_source(p)
    p.add_argument("-o", "--out", metavar="FILE")
    p.set_defaults(func=_cmd_export_dot)

    p = sub.add_parser("replay", help="re-validate a trace file")
    p.add_argument("trace", help="trace file")
    _add_struct_source(p)
    p.add_argument("--dot-dir", metavar="DIR",
                   help="write a DOT snapshot per round")
    p.set_defaults(func=_cmd_replay)

    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    try:
        return args.func(args)
    except (formats.FormatError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
