"""Hoare-triple checking for relational programs.

A nondeterministic program over a configuration space is a relation whose
pairs are its terminating runs; a condition is a subidentity over the same
base. Partial correctness of a triple (P, A, Q) is the equation
P;A;Q = P;A. Total correctness additionally demands a terminating run from
every precondition state, and is checked on an extended space: adjoin a sink
configuration, give every halting state of the program an extra escape to
the sink, and the same equation shape against the negated postcondition
separates "no run violates Q" from "and every P-state has a run".
"""

from __future__ import annotations

from typing import Iterable, Optional, Tuple

from .relations import Base, BaseMismatch, Relation


class NotACondition(ValueError):
    """Raised when a relation expected to be a subidentity is not one."""


def _fresh_name(taken: Tuple[str, ...], stem: str = "bot") -> str:
    name = stem
    while name in taken:
        name += "_"
    return name


class ConfigSpace:
    """Finite configuration space plus its one-point sink extension."""

    __slots__ = ("configs", "bottom", "base", "primed")

    def __init__(self, configs: Iterable[str], bottom: Optional[str] = None):
        pts = tuple(configs)
        if bottom is None:
            bottom = _fresh_name(pts)
        elif bottom in pts:
            raise ValueError(f"sink {bottom!r} collides with a configuration")
        self.configs = pts
        self.bottom = bottom
        self.base = Base(pts)
        self.primed = Base(pts + (bottom,), bottom=bottom)

    def lift(self, r: Relation) -> Relation:
        """Reinterpret a relation over the configurations on the sink base."""
        if r.base == self.primed:
            return r
        if r.base != self.base:
            raise BaseMismatch(f"{r.base!r} does not belong to this space")
        n_old, n_new = len(self.base), len(self.primed)
        bits = 0
        m = r.bits
        while m:
            p = (m & -m).bit_length() - 1
            bits |= 1 << ((p // n_old) * n_new + p % n_old)
            m &= m - 1
        return Relation(self.primed, bits)

    def __repr__(self) -> str:
        return f"ConfigSpace({list(self.configs)!r}, bottom={self.bottom!r})"


def condition(base: Base, states: Iterable[str]) -> Relation:
    """Subidentity holding exactly on the given configurations."""
    return Relation.from_pairs(base, [(s, s) for s in states])


def is_condition(r: Relation) -> bool:
    return r.bits & ~Relation.identity(r.base).bits == 0


def _require_condition(r: Relation, what: str) -> None:
    if not is_condition(r):
        raise NotACondition(f"{what} must be a subidentity, got {r!r}")


def _require_shared_base(*rs: Relation) -> None:
    for other in rs[1:]:
        if other.base != rs[0].base:
            raise BaseMismatch(f"{rs[0].base!r} vs {other.base!r}")


def magic(cs: ConfigSpace) -> Relation:
    """The program that halts from every configuration, straight to the sink.

    Its domain is the whole unextended space, so the demon never gets to
    prefer an aborting run over it.
    """
    n = len(cs.primed)
    bits = 0
    for x in range(len(cs.configs)):
        bits |= 1 << (x * n + n - 1)
    return Relation(cs.primed, bits)


def prime_program(cs: ConfigSpace, a: Relation) -> Relation:
    """Give every halting state of the program an extra run to the sink.

    Equals the demonic join of the lifted program with magic: the union is
    already restricted to the program's own domain.
    """
    if a.base == cs.primed:
        raise ValueError("program is already primed")
    return cs.lift(a) | magic(cs).restrict(a.domain())


def prime_condition(cs: ConfigSpace, p: Relation) -> Relation:
    """Extend a condition to the sink, which satisfies everything."""
    _require_condition(p, "condition")
    lifted = cs.lift(p)
    n = len(cs.primed)
    return Relation(cs.primed, lifted.bits | 1 << ((n - 1) * n + n - 1))


def negate_condition(q: Relation, cs: ConfigSpace,
                     include_bottom: bool = False) -> Relation:
    """Complement a condition within the configuration diagonal.

    The sink pair stays out by default; with include_bottom the result is the
    sink-extended negation, the reading under which the extended-space
    equation in total_correct captures termination.
    """
    _require_condition(q, "negated condition")
    if q.base != cs.base and q.base != cs.primed:
        raise BaseMismatch(f"{q.base!r} does not belong to this space")
    states = [c for c in cs.configs if (c, c) not in q]
    if include_bottom:
        states.append(cs.bottom)
    target = cs.primed if include_bottom or q.base == cs.primed else cs.base
    return condition(target, states)


def partial_correct(p: Relation, a: Relation, q: Relation) -> bool:
    """Every terminating run from the precondition establishes Q."""
    _require_shared_base(p, a, q)
    _require_condition(p, "precondition")
    _require_condition(q, "postcondition")
    run = p.compose(a)
    return run.compose(q) == run


def total_correct(p: Relation, a: Relation, q: Relation) -> bool:
    """Partially correct, with a terminating run from every P-state.

    Checked as an equation on the sink extension: composing the primed
    precondition and program with the sink-extended negation of Q must give
    exactly the runs the magic program offers.
    """
    _require_shared_base(p, a, q)
    _require_condition(p, "precondition")
    _require_condition(q, "postcondition")
    cs = ConfigSpace(p.base.points)
    pp = prime_condition(cs, p)
    ap = prime_program(cs, a)
    nq = negate_condition(q, cs, include_bottom=True)
    return pp.compose(ap).compose(nq) == pp.compose(magic(cs))


def failing_run(p: Relation, a: Relation, q: Relation
                ) -> Optional[Tuple[str, str]]:
    """A run from the precondition landing outside the postcondition."""
    run = p.compose(a)
    bad = run - run.compose(q)
    return next(iter(bad.pairs()), None)


def stuck_state(p: Relation, a: Relation) -> Optional[str]:
    """A precondition state the program has no run from."""
    m = p.dom_mask() & ~a.dom_mask()
    if not m:
        return None
    return p.base.points[(m & -m).bit_length() - 1]
