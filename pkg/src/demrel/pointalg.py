"""The three-element meet/composition algebra of strict-order flavour.

Elements: z (bottom), e (diagonal-like), g (strict order). Its infinite
representation sends z to the everything-to-bottom map, e to the diagonal
plus that map, g to < plus that map; finite truncations of it are NOT
representations (no midpoints) and serve as negative fixtures.
"""

from __future__ import annotations

from .relations import Base, Relation
from .structures import FiniteStructure, Signature

_ELEMS = ("z", "e", "g")
_MEET = (
    ("z", "z", "z"),
    ("z", "e", "z"),
    ("z", "z", "g"),
)
_COMP = (
    ("z", "z", "z"),
    ("z", "e", "g"),
    ("z", "g", "g"),
)


def build_point_algebra() -> FiniteStructure:
    idx = {e: i for i, e in enumerate(_ELEMS)}
    meet = [[idx[v] for v in row] for row in _MEET]
    comp = [[idx[v] for v in row] for row in _COMP]
    return FiniteStructure("point", _ELEMS,
                           Signature(has_meet=True, has_comp=True),
                           meet_table=meet, comp_table=comp)


def point_algebra_theta(m: int):
    """Truncation of the rational representation to points q0..qm plus bottom."""
    if m < 0:
        raise ValueError("m must be >= 0")
    from .repsearch import RepMap

    pts = tuple(f"q{i}" for i in range(m + 1)) + ("bot",)
    base = Base(pts, bottom="bot")
    z = Relation.from_pairs(
        base, [(p, "bot") for p in pts[:-1]] + [("bot", "bot")])
    e = z | Relation.from_pairs(base, [(p, p) for p in pts[:-1]])
    g = z | Relation.from_pairs(
        base, [(pts[i], pts[j]) for i in range(m + 1) for j in range(i + 1, m + 1)])
    return RepMap(build_point_algebra(), base, {"z": z, "e": e, "g": g})
