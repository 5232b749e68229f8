"""Finite abstract structures over signatures drawn from {join, meet, comp}.

A structure is a named element list plus total operation tables. Validation
is report-based: bad tables are describable (and searchable for
representations, where they simply come back UNSAT), not constructible
errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Signature:
    has_join: bool = False
    has_meet: bool = False
    has_comp: bool = True

    def __post_init__(self):
        if not self.has_comp:
            raise ValueError("composition is part of every signature here")
        if not (self.has_join or self.has_meet):
            raise ValueError("need at least one of join/meet")

    def ops(self) -> tuple:
        out = []
        if self.has_join:
            out.append("join")
        if self.has_meet:
            out.append("meet")
        out.append("comp")
        return tuple(out)


class FiniteStructure:
    """Table-backed structure; indices into `elements` everywhere."""

    def __init__(self, name: str, elements: Sequence[str], signature: Signature,
                 join_table=None, meet_table=None, comp_table=None):
        self.name = name
        self.elements = tuple(elements)
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("duplicate element names")
        self.signature = signature
        self._index = {e: i for i, e in enumerate(self.elements)}
        self._tables = {}
        for opname, tab in (("join", join_table), ("meet", meet_table),
                            ("comp", comp_table)):
            wanted = opname in signature.ops()
            if wanted != (tab is not None):
                raise ValueError(f"{opname} table presence does not match signature")
            if tab is not None:
                self._tables[opname] = self._coerce(tab)

    def _coerce(self, tab):
        n = len(self.elements)
        arr = np.asarray(tab, dtype=np.int32)
        if arr.shape != (n, n):
            raise ValueError(f"table shape {arr.shape}, want {(n, n)}")
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError("table entry outside element range")
        arr.setflags(write=False)
        return arr

    @property
    def size(self) -> int:
        return len(self.elements)

    def index(self, name: str) -> int:
        return self._index[name]

    def join(self, i: int, j: int) -> int:
        return int(self._tables["join"][i, j])

    def meet(self, i: int, j: int) -> int:
        return int(self._tables["meet"][i, j])

    def comp(self, i: int, j: int) -> int:
        return int(self._tables["comp"][i, j])

    def op(self, opname: str, i: int, j: int) -> int:
        return int(self._tables[opname][i, j])

    def as_arrays(self) -> dict:
        return dict(self._tables)

    def __repr__(self):
        return f"FiniteStructure({self.name!r}, {self.size} elements)"


@dataclass
class Violation:
    law: str
    witness: tuple

    def __str__(self):
        return f"{self.law} fails at {self.witness}"


@dataclass
class ValidationReport:
    structure: str
    checked: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        head = f"validate {self.structure}: " + ("OK" if self.ok else "FAIL")
        lines = [head, f"  checked: {', '.join(self.checked)}"]
        for v in self.violations[:20]:
            lines.append(f"  {v}")
        if len(self.violations) > 20:
            lines.append(f"  ... {len(self.violations) - 20} more")
        return "\n".join(lines)


def _first_bad(mask) -> Optional[tuple]:
    idx = np.argwhere(mask)
    return tuple(int(v) for v in idx[0]) if idx.size else None


def _check_assoc(report, names, tab, opname, limit=5):
    n = tab.shape[0]
    count = 0
    for a in range(n):
        left = tab[tab[a, :], :]          # (b,c) -> (a op b) op c
        right = tab[a, tab]               # (b,c) -> a op (b op c)
        bad = left != right
        if bad.any():
            for b, c in np.argwhere(bad)[: limit - count]:
                report.violations.append(Violation(
                    f"{opname} associativity",
                    (names[a], names[int(b)], names[int(c)])))
            count += int(bad.sum())
            if count >= limit:
                break
    report.checked.append(f"{opname} associativity")


def _check_semilattice(report, names, tab, opname):
    n = tab.shape[0]
    diag = tab[np.arange(n), np.arange(n)]
    bad = diag != np.arange(n)
    if bad.any():
        i = int(np.argwhere(bad)[0][0])
        report.violations.append(Violation(f"{opname} idempotence", (names[i],)))
    bad = tab != tab.T
    if bad.any():
        w = _first_bad(bad)
        report.violations.append(Violation(
            f"{opname} commutativity", tuple(names[i] for i in w)))
    report.checked.append(f"{opname} idempotence")
    report.checked.append(f"{opname} commutativity")
    _check_assoc(report, names, tab, opname)


def _check_monotone(report, names, order, comp, via):
    # right operand only: a<=b must give c.a <= c.b. The left-operand law is
    # not implied by the additive axioms (the join family violates it) and is
    # deliberately not a sanity check.
    n = comp.shape[0]
    hits = 0
    for c in range(n):
        row = comp[c, :]
        bad = order & ~order[row[:, None], row[None, :]]
        if bad.any() and hits < 5:
            a, b = _first_bad(bad)
            report.violations.append(Violation(
                f"comp right-operand monotone over {via}",
                (names[a], names[b], names[c])))
            hits += 1
    report.checked.append(f"comp right-operand monotone over {via}")


def validate(struct) -> ValidationReport:
    """Check the identities the rest of the toolkit leans on."""
    report = ValidationReport(getattr(struct, "name", "structure"))
    names = struct.elements
    tabs = struct.as_arrays()
    sig = struct.signature
    _check_assoc(report, names, tabs["comp"], "comp")
    if sig.has_join:
        _check_semilattice(report, names, tabs["join"], "join")
        order = tabs["join"] == np.arange(struct.size)[None, :]
        _check_monotone(report, names, order, tabs["comp"], "join order")
    if sig.has_meet:
        _check_semilattice(report, names, tabs["meet"], "meet")
        order = tabs["meet"] == np.arange(struct.size)[:, None]
        _check_monotone(report, names, order, tabs["comp"], "meet order")
    return report


def order_matrix(struct) -> np.ndarray:
    """a <= b from the join table (a+b=b) or, failing that, the meet table."""
    tabs = struct.as_arrays()
    n = struct.size
    if struct.signature.has_join:
        return tabs["join"] == np.arange(n)[None, :]
    return tabs["meet"] == np.arange(n)[:, None]
