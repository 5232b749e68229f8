"""Text formats for relations, structures, representations, triples, traces.

Every format is line-oriented, takes # comments and blank lines anywhere,
and round-trips: parse(print(x)) gives x back. Printers emit canonical order
(base order for points, element order for tables) so diffs are stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .game import Choice, Composition, Init, Join, Move, Witness
from .relations import Base, Relation
from .repsearch import RepMap
from .structures import FiniteStructure, Signature


class FormatError(ValueError):
    """Raised on malformed input text, with a line number when known."""


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _token_check(name: str, what: str) -> str:
    if not name or any(c.isspace() for c in name) or "->" in name:
        raise FormatError(f"{what} {name!r} does not survive this format")
    return name


# -- relation literals --------------------------------------------------------


def _parse_base_line(no: int, line: str) -> Base:
    if not line.startswith("base:"):
        raise FormatError(f"line {no}: expected 'base:', got {line!r}")
    points, bottom = [], None
    for tok in line[len("base:"):].split():
        if tok.startswith("bottom="):
            bottom = tok[len("bottom="):]
        else:
            points.append(tok)
    try:
        return Base(points, bottom=bottom)
    except ValueError as e:
        raise FormatError(f"line {no}: {e}") from None


def _parse_pair(no: int, line: str, base: Base) -> Tuple[str, str]:
    left, sep, right = line.partition("->")
    if not sep:
        raise FormatError(f"line {no}: expected 'x -> y', got {line!r}")
    x, y = left.strip(), right.strip()
    for p in (x, y):
        if p not in base.points:
            raise FormatError(f"line {no}: unknown point {p!r}")
    return x, y


def parse_relation(text: str) -> Relation:
    base = None
    pairs = []
    for no, line in _lines(text):
        if base is None:
            base = _parse_base_line(no, line)
        else:
            pairs.append(_parse_pair(no, line, base))
    if base is None:
        raise FormatError("missing 'base:' line")
    return Relation.from_pairs(base, pairs)


def _print_base(base: Base) -> str:
    toks = [_token_check(p, "point") for p in base.points]
    if base.bottom is not None:
        toks.append(f"bottom={base.bottom}")
    return "base: " + " ".join(toks) if toks else "base:"


def print_relation(r: Relation) -> str:
    lines = [_print_base(r.base)]
    lines += [f"{x} -> {y}" for x, y in r.pairs()]
    return "\n".join(lines) + "\n"


# -- structure files -----------------------------------------------------------


def parse_structure(text: str) -> FiniteStructure:
    name = None
    sig_words: Optional[List[str]] = None
    elements: Optional[List[str]] = None
    tables: Dict[str, list] = {}
    current: Optional[list] = None
    for no, line in _lines(text):
        words = line.split()
        head = words[0]
        if head == "structure":
            if len(words) != 2:
                raise FormatError(f"line {no}: structure wants one name")
            name = words[1]
        elif head == "signature":
            sig_words = words[1:]
        elif head == "elements":
            elements = words[1:]
        elif head == "table":
            if len(words) != 2 or words[1] not in ("join", "meet", "comp"):
                raise FormatError(f"line {no}: table wants join|meet|comp")
            if elements is None:
                raise FormatError(f"line {no}: table before elements")
            current = tables.setdefault(words[1], [])
        elif current is not None:
            row_name, sep, rest = line.partition(":")
            if not sep:
                raise FormatError(f"line {no}: expected 'element: entries'")
            k = len(current)
            if k >= len(elements):
                raise FormatError(f"line {no}: too many table rows")
            if row_name.strip() != elements[k]:
                raise FormatError(
                    f"line {no}: row {row_name.strip()!r} out of order, "
                    f"expected {elements[k]!r}")
            idx = {e: i for i, e in enumerate(elements)}
            try:
                row = [idx[v] for v in rest.split()]
            except KeyError as e:
                raise FormatError(f"line {no}: unknown element {e}") from None
            if len(row) != len(elements):
                raise FormatError(f"line {no}: row wants {len(elements)} "
                                  f"entries, got {len(row)}")
            current.append(row)
        else:
            raise FormatError(f"line {no}: unexpected {line!r}")
    if name is None or sig_words is None or elements is None:
        raise FormatError("structure file needs structure, signature, "
                          "elements lines")
    for op in sig_words:
        if op not in ("join", "meet", "comp"):
            raise FormatError(f"unknown signature word {op!r}")
        if len(tables.get(op, ())) != len(elements):
            raise FormatError(f"{op} table missing or incomplete")
    for op in tables:
        if op not in sig_words:
            raise FormatError(f"{op} table not announced by the signature")
    try:
        sig = Signature(has_join="join" in sig_words,
                        has_meet="meet" in sig_words,
                        has_comp="comp" in sig_words)
    except ValueError as e:
        raise FormatError(str(e)) from None
    return FiniteStructure(name, elements, sig,
                           join_table=tables.get("join"),
                           meet_table=tables.get("meet"),
                           comp_table=tables.get("comp"))


def print_structure(struct) -> str:
    names = struct.elements
    for e in names:
        _token_check(e, "element")
    out = [f"structure {_token_check(struct.name, 'name')}",
           "signature " + " ".join(struct.signature.ops()),
           "elements " + " ".join(names)]
    tabs = struct.as_arrays()
    for op in struct.signature.ops():
        out.append(f"table {op}")
        tab = tabs[op]
        for i, e in enumerate(names):
            out.append(f"{e}: " + " ".join(names[int(v)] for v in tab[i]))
    return "\n".join(out) + "\n"


# -- representation files --------------------------------------------------------


def parse_repmap(text: str, struct) -> RepMap:
    base = None
    assignment: Dict[str, List[Tuple[str, str]]] = {}
    current = None
    for no, line in _lines(text):
        if base is None:
            base = _parse_base_line(no, line)
        elif line.startswith("elem ") and line.endswith(":"):
            name = line[len("elem "):-1].strip()
            if name not in struct.elements:
                raise FormatError(f"line {no}: unknown element {name!r}")
            if name in assignment:
                raise FormatError(f"line {no}: element {name!r} twice")
            current = assignment.setdefault(name, [])
        elif current is not None:
            current.append(_parse_pair(no, line, base))
        else:
            raise FormatError(f"line {no}: expected 'elem <name>:'")
    if base is None:
        raise FormatError("missing 'base:' line")
    missing = [e for e in struct.elements if e not in assignment]
    if missing:
        raise FormatError(f"no image for elements {missing}")
    return RepMap(struct, base, {
        name: Relation.from_pairs(base, pairs)
        for name, pairs in assignment.items()})


def print_repmap(rep: RepMap) -> str:
    lines = [_print_base(rep.base)]
    for e in rep.structure.elements:
        lines.append(f"elem {_token_check(e, 'element')}:")
        lines += [f"{x} -> {y}" for x, y in rep.assignment[e].pairs()]
    return "\n".join(lines) + "\n"


# -- triple files ------------------------------------------------------------------


TRIPLE_PARTS = ("pre", "prog", "post")


def parse_triple(text: str) -> Tuple[Relation, Relation, Relation]:
    base = None
    parts: Dict[str, List[Tuple[str, str]]] = {}
    current = None
    for no, line in _lines(text):
        if base is None:
            base = _parse_base_line(no, line)
        elif line.rstrip(":") in TRIPLE_PARTS and line.endswith(":"):
            name = line.rstrip(":")
            if name in parts:
                raise FormatError(f"line {no}: {name} given twice")
            current = parts.setdefault(name, [])
        elif current is not None:
            current.append(_parse_pair(no, line, base))
        else:
            raise FormatError(f"line {no}: expected pre:/prog:/post:")
    if base is None:
        raise FormatError("missing 'base:' line")
    missing = [p for p in TRIPLE_PARTS if p not in parts]
    if missing:
        raise FormatError(f"triple file missing {missing}")
    p, a, q = (Relation.from_pairs(base, parts[k]) for k in TRIPLE_PARTS)
    return p, a, q


def print_triple(p: Relation, a: Relation, q: Relation) -> str:
    lines = [_print_base(p.base)]
    for name, r in zip(TRIPLE_PARTS, (p, a, q)):
        lines.append(f"{name}:")
        lines += [f"{x} -> {y}" for x, y in r.pairs()]
    return "\n".join(lines) + "\n"


# -- trace files --------------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    structure: Optional[str]
    steps: Tuple[Tuple[Move, Optional[int]], ...]


_MOVE_ARITY = {"init": (Init, 0), "choice": (Choice, 2), "join": (Join, 2),
               "witness": (Witness, 2), "composition": (Composition, 3)}


def parse_trace(text: str, struct) -> Trace:
    index = {e: i for i, e in enumerate(struct.elements)}
    name = None
    steps = []
    for no, line in _lines(text):
        words = line.split()
        if words[0] == "structure":
            if steps or len(words) != 2:
                raise FormatError(f"line {no}: misplaced structure line")
            name = words[1]
            continue
        reply = None
        if len(words) >= 2 and words[-2] == "/":
            try:
                reply = int(words[-1])
            except ValueError:
                raise FormatError(f"line {no}: bad reply index") from None
            words = words[:-2]
        kind = _MOVE_ARITY.get(words[0])
        if kind is None:
            raise FormatError(f"line {no}: unknown move {words[0]!r}")
        cls, n_nodes = kind
        if len(words) != 1 + n_nodes + 2:
            raise FormatError(f"line {no}: {words[0]} wants {n_nodes} nodes "
                              f"and 2 elements")
        try:
            a, b = index[words[-2]], index[words[-1]]
        except KeyError as e:
            raise FormatError(f"line {no}: unknown element {e}") from None
        steps.append((cls(*words[1:1 + n_nodes], a, b), reply))
    return Trace(name, tuple(steps))


def print_trace(trace: Trace, struct) -> str:
    from .game import format_move
    lines = []
    if trace.structure is not None:
        lines.append(f"structure {trace.structure}")
    for move, reply in trace.steps:
        tail = f" / {reply}" if reply is not None else ""
        lines.append(format_move(move, struct) + tail)
    return "\n".join(lines) + "\n"


# -- DOT export -----------------------------------------------------------------------


def network_to_dot(net, struct, iota=None, name: str = "network",
                   label_cap: int = 5) -> str:
    """Graphviz digraph of a labelled network.

    Edge labels list the permitted elements, cut off past `label_cap` with a
    count of the rest; node labels carry the forbidden-set size and the point
    index when one is assigned.
    """
    if hasattr(net, "network"):
        net, iota = net.network, dict(net.iota) if iota is None else iota
    iota = iota or {}
    order = {z: k for k, z in enumerate(net.nodes)}
    out = [f"digraph {name} {{", "  rankdir=LR;"]
    for z in net.nodes:
        bits = bin(net.bot_mask(z)).count("1")
        tag = f"{z}\\nbot {bits}"
        if z in iota:
            tag += f" i{iota[z]}"
        out.append(f'  "{z}" [label="{tag}"];')
    for (x, y), mask in sorted(net.top.items(),
                               key=lambda kv: (order[kv[0][0]],
                                               order[kv[0][1]])):
        names = []
        m = mask
        while m and len(names) <= label_cap:
            i = (m & -m).bit_length() - 1
            names.append(struct.elements[i])
            m &= m - 1
        rest = bin(mask).count("1") - label_cap
        if rest > 0:
            names = names[:label_cap] + [f"+{rest} more"]
        label = " ".join(names).replace('"', '\\"')
        out.append(f'  "{x}" -> "{y}" [label="{label}"];')
    out.append("}")
    return "\n".join(out) + "\n"
