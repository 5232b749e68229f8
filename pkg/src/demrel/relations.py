"""Binary relations over a finite base with the demonic operations.

A relation is stored as one Python int: pair (x, y) of point indices sits at
bit x*n + y. The demonic operations treat a relation as a nondeterministic
program whose domain is its halting region: join restricts the union to the
common domain, composition keeps only inputs that cannot stray outside the
second program's domain, and refinement allows shrinking nondeterminism while
growing the domain. The empty relation is the top of the refinement order.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Tuple


class BaseMismatch(ValueError):
    """Raised when two relations over different bases meet in one operation."""


class NoCommonRefinement(ValueError):
    """Raised by demonic_meet when the two relations have no lower bound."""


class MissingBottom(ValueError):
    """Raised by totalize on a base with no designated bottom point."""


class Base:
    """Ordered finite set of named points, optionally with a bottom point."""

    __slots__ = ("points", "bottom", "_index", "_rowmask", "_blocks")

    def __init__(self, points: Iterable[str], bottom: str | None = None):
        pts = tuple(points)
        if len(set(pts)) != len(pts):
            raise ValueError(f"duplicate points in base: {pts}")
        if bottom is not None and bottom not in pts:
            raise ValueError(f"bottom {bottom!r} not among points")
        self.points = pts
        self.bottom = bottom
        self._index = {p: i for i, p in enumerate(pts)}
        n = len(pts)
        self._rowmask = (1 << n) - 1
        self._blocks = tuple(self._rowmask << (x * n) for x in range(n))

    def __len__(self) -> int:
        return len(self.points)

    def index(self, point: str) -> int:
        return self._index[point]

    def __eq__(self, other) -> bool:
        return (isinstance(other, Base)
                and self.points == other.points
                and self.bottom == other.bottom)

    def __hash__(self) -> int:
        return hash((self.points, self.bottom))

    def __repr__(self) -> str:
        tail = f", bottom={self.bottom!r}" if self.bottom else ""
        return f"Base({list(self.points)!r}{tail})"


class Relation:
    """Immutable relation over a Base; all operations return new instances."""

    __slots__ = ("base", "bits")

    def __init__(self, base: Base, bits: int):
        self.base = base
        self.bits = bits

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls, base: Base) -> "Relation":
        return cls(base, 0)

    @classmethod
    def full(cls, base: Base) -> "Relation":
        n = len(base)
        return cls(base, (1 << (n * n)) - 1)

    @classmethod
    def identity(cls, base: Base) -> "Relation":
        n = len(base)
        bits = 0
        for x in range(n):
            bits |= 1 << (x * n + x)
        return cls(base, bits)

    @classmethod
    def from_pairs(cls, base: Base, pairs: Iterable[Tuple[str, str]]) -> "Relation":
        n = len(base)
        bits = 0
        for x, y in pairs:
            bits |= 1 << (base.index(x) * n + base.index(y))
        return cls(base, bits)

    # -- inspection --------------------------------------------------------

    def pairs(self) -> Iterator[Tuple[str, str]]:
        """Yield pairs as point names in index order."""
        n = len(self.base)
        pts = self.base.points
        m = self.bits
        while m:
            b = (m & -m).bit_length() - 1
            yield pts[b // n], pts[b % n]
            m &= m - 1

    def row(self, x: int) -> int:
        """Successor bitmask of point index x."""
        n = len(self.base)
        return (self.bits >> (x * n)) & self.base._rowmask

    def dom_mask(self) -> int:
        n = len(self.base)
        mask = 0
        for x in range(n):
            if (self.bits >> (x * n)) & self.base._rowmask:
                mask |= 1 << x
        return mask

    def domain(self) -> frozenset:
        """Points with at least one outgoing pair, as names."""
        pts = self.base.points
        m = self.dom_mask()
        out = []
        while m:
            x = (m & -m).bit_length() - 1
            out.append(pts[x])
            m &= m - 1
        return frozenset(out)

    def is_left_total(self) -> bool:
        return self.dom_mask() == self.base._rowmask

    def __contains__(self, pair: Tuple[str, str]) -> bool:
        x, y = pair
        n = len(self.base)
        return bool(self.bits >> (self.base.index(x) * n + self.base.index(y)) & 1)

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __eq__(self, other) -> bool:
        return (isinstance(other, Relation)
                and self.base == other.base and self.bits == other.bits)

    def __hash__(self) -> int:
        return hash((self.base, self.bits))

    def __repr__(self) -> str:
        return f"Relation({sorted(self.pairs())})"

    def _check(self, other: "Relation") -> None:
        if self.base is not other.base and self.base != other.base:
            raise BaseMismatch(f"{self.base!r} vs {other.base!r}")

    # -- set algebra -------------------------------------------------------

    def __or__(self, other: "Relation") -> "Relation":
        self._check(other)
        return Relation(self.base, self.bits | other.bits)

    def __and__(self, other: "Relation") -> "Relation":
        self._check(other)
        return Relation(self.base, self.bits & other.bits)

    def __sub__(self, other: "Relation") -> "Relation":
        self._check(other)
        return Relation(self.base, self.bits & ~other.bits)

    def __le__(self, other: "Relation") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def _restrict_mask(self, dmask: int) -> int:
        sel = 0
        blocks = self.base._blocks
        m = dmask
        while m:
            x = (m & -m).bit_length() - 1
            sel |= blocks[x]
            m &= m - 1
        return self.bits & sel

    def restrict(self, points: Iterable[str]) -> "Relation":
        """Keep only pairs whose source lies in the given point set."""
        dmask = 0
        for p in points:
            dmask |= 1 << self.base.index(p)
        return Relation(self.base, self._restrict_mask(dmask))

    # -- compositions ------------------------------------------------------

    def compose(self, other: "Relation") -> "Relation":
        """Ordinary relational composition."""
        self._check(other)
        n = len(self.base)
        rowmask = self.base._rowmask
        out = 0
        for x in range(n):
            row = (self.bits >> (x * n)) & rowmask
            acc = 0
            while row:
                y = (row & -row).bit_length() - 1
                acc |= (other.bits >> (y * n)) & rowmask
                row &= row - 1
            out |= acc << (x * n)
        return Relation(self.base, out)

    def demonic_compose(self, other: "Relation") -> "Relation":
        """Composition restricted to inputs that cannot escape other's domain."""
        self._check(other)
        n = len(self.base)
        rowmask = self.base._rowmask
        dmask = other.dom_mask()
        out = 0
        for x in range(n):
            row = (self.bits >> (x * n)) & rowmask
            if not row or row & ~dmask:
                continue
            acc = 0
            while row:
                y = (row & -row).bit_length() - 1
                acc |= (other.bits >> (y * n)) & rowmask
                row &= row - 1
            out |= acc << (x * n)
        return Relation(self.base, out)

    # -- demonic lattice operations ----------------------------------------

    def demonic_join(self, other: "Relation") -> "Relation":
        """Union restricted to the common domain."""
        self._check(other)
        u = Relation(self.base, self.bits | other.bits)
        return Relation(self.base, u._restrict_mask(self.dom_mask() & other.dom_mask()))

    def demonic_refines(self, other: "Relation") -> bool:
        """True when self is at least as defined and no more permissive."""
        self._check(other)
        odom = other.dom_mask()
        if odom & ~self.dom_mask():
            return False
        return self._restrict_mask(odom) & ~other.bits == 0

    def has_common_refinement(self, other: "Relation") -> bool:
        """Domain of the intersection must cover the intersection of domains."""
        self._check(other)
        both = Relation(self.base, self.bits & other.bits)
        return self.dom_mask() & other.dom_mask() == both.dom_mask()

    def demonic_meet(self, other: "Relation") -> "Relation":
        """Greatest common refinement; raises when none exists."""
        self._check(other)
        if not self.has_common_refinement(other):
            raise NoCommonRefinement(f"{self!r} and {other!r}")
        full = self.base._rowmask
        bits = (self.bits & other.bits
                | self._restrict_mask(full & ~other.dom_mask())
                | other._restrict_mask(full & ~self.dom_mask()))
        return Relation(self.base, bits)

    def totalize(self) -> "Relation":
        """Send every domain point to bottom as an extra outcome."""
        if self.base.bottom is None:
            raise MissingBottom(f"{self.base!r} has no bottom point")
        n = len(self.base)
        b = self.base.index(self.base.bottom)
        bits = self.bits
        m = self.dom_mask()
        while m:
            x = (m & -m).bit_length() - 1
            bits |= 1 << (x * n + b)
            m &= m - 1
        return Relation(self.base, bits)
