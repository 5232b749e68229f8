"""Bounded-base representation search plus angelic/demonic conversions.

A representation assigns each abstract element a concrete relation so that
every operation table is reproduced set-theoretically. The searcher decides
representability over bases of bounded size by branching on individual pair
memberships with unit propagation from the tables; a SAT answer always ships
an assignment that passed the full checker, an UNSAT answer means exhaustion
of all base sizes up to the bound (up to base-point symmetry).

Two op semantics are supported: "demonic" interprets join/meet as the
domain-restricted operations (meet must be defined on every element pair) and
"angelic" as plain union/intersection. Composition is ordinary composition in
both.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .relations import Base, Relation
from .structures import Signature, Violation

SEMANTICS = ("demonic", "angelic")


@dataclass
class RepMap:
    """Element-to-relation assignment over a shared base."""

    structure: object
    base: Base
    assignment: Dict[str, Relation]

    def relation(self, name: str) -> Relation:
        return self.assignment[name]

    def images(self) -> List[Relation]:
        return [self.assignment[e] for e in self.structure.elements]


@dataclass
class RepReport:
    target: str
    semantics: str
    checked: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        head = f"check {self.target} [{self.semantics}]: "
        head += "PASS" if self.ok else "FAIL"
        lines = [head, f"  checked: {', '.join(self.checked)}"]
        lines += [f"  {v}" for v in self.violations[:20]]
        if len(self.violations) > 20:
            lines.append(f"  ... {len(self.violations) - 20} more")
        return "\n".join(lines)


def _apply_op(op: str, semantics: str, r: Relation, s: Relation):
    """Concrete value of one table operation, or None when undefined."""
    if op == "comp":
        return r.compose(s)
    if semantics == "angelic":
        return (r | s) if op == "join" else (r & s)
    if op == "join":
        return r.demonic_join(s)
    if not r.has_common_refinement(s):
        return None
    return r.demonic_meet(s)


def check_representation(rep: RepMap, semantics: str = "demonic",
                         signature=None) -> RepReport:
    """Verify injectivity and table preservation for the requested ops.

    `signature` may be a Signature or a bare tuple of op names; the tuple
    form allows checking a single operation (a Signature always carries
    composition).
    """
    if semantics not in SEMANTICS:
        raise ValueError(f"unknown semantics {semantics!r}")
    struct = rep.structure
    sig = signature or struct.signature
    ops = sig.ops() if isinstance(sig, Signature) else tuple(sig)
    report = RepReport(getattr(struct, "name", "structure"), semantics)

    elems = struct.elements
    missing = [e for e in elems if e not in rep.assignment]
    if missing:
        report.violations.append(Violation("total assignment", tuple(missing)))
        return report
    for e in elems:
        if rep.assignment[e].base != rep.base:
            report.violations.append(Violation("shared base", (e,)))
            return report

    for i, a in enumerate(elems):
        for b in elems[i + 1:]:
            if rep.assignment[a].bits == rep.assignment[b].bits:
                report.violations.append(Violation("injectivity", (a, b)))
    report.checked.append("injectivity")

    for op in ops:
        for a in elems:
            for b in elems:
                want = rep.assignment[elems[struct.op(op, struct.index(a),
                                                      struct.index(b))]]
                got = _apply_op(op, semantics, rep.assignment[a],
                                rep.assignment[b])
                if got is None:
                    report.violations.append(Violation(
                        "meet defined (common refinement)", (a, b)))
                elif got.bits != want.bits:
                    report.violations.append(Violation(f"{op} image", (a, b)))
        report.checked.append(f"{op} table ({semantics})")
    return report


# -- search ------------------------------------------------------------------


@dataclass
class SearchConfig:
    max_base: int
    signature_filter: Optional[Signature] = None
    node_budget: int = 10_000_000
    time_budget: Optional[float] = None
    symmetry_breaking: bool = True
    semantics: str = "demonic"

    def __post_init__(self):
        if self.max_base < 1:
            raise ValueError("max_base must be >= 1")
        if self.semantics not in SEMANTICS:
            raise ValueError(f"unknown semantics {self.semantics!r}")


@dataclass
class SearchResult:
    status: str                 # SAT | UNSAT | BUDGET
    rep: Optional[RepMap]
    max_base: int
    nodes: int
    seconds: float

    def as_record(self) -> dict:
        return {"winner": self.status,
                "base_size": len(self.rep.base) if self.rep else self.max_base,
                "nodes": self.nodes,
                "seconds": round(self.seconds, 3)}


class _Budget:
    def __init__(self, nodes: int, seconds: Optional[float]):
        self.left = nodes
        self.deadline = None if seconds is None else time.perf_counter() + seconds
        self.hit = False

    def spend(self) -> bool:
        self.left -= 1
        if self.left < 0:
            self.hit = True
            return False
        if self.deadline is not None and self.left % 256 == 0 \
                and time.perf_counter() > self.deadline:
            self.hit = True
            return False
        return True


class _Solver:
    """One base size; three-valued pair assignment with table propagation."""

    def __init__(self, struct, k, sig, semantics, sym_break, budget):
        self.struct = struct
        self.k = k
        self.sig = sig
        self.semantics = semantics
        self.budget = budget
        self.ne = struct.size
        self.np2 = k * k
        self.full = (1 << self.np2) - 1
        self.kmask = (1 << k) - 1
        self.rowmask = [self.kmask << (i * k) for i in range(k)]
        self.touch = []
        for i in range(k):
            t = self.rowmask[i]
            for x in range(k):
                t |= 1 << (x * k + i)
            self.touch.append(t)
        tabs = struct.as_arrays()
        ops = sig.ops()
        self.jt = tabs["join"] if "join" in ops else None
        self.mt = tabs["meet"] if "meet" in ops else None
        self.ct = tabs["comp"] if "comp" in ops else None
        self.P = [0] * self.ne
        self.A = [0] * self.ne
        self.conflict = False
        self.perms = []
        if sym_break:
            for perm in itertools.permutations(range(k)):
                if perm == tuple(range(k)):
                    continue
                self.perms.append(tuple(perm[i] * k + perm[j]
                                        for i in range(k) for j in range(k)))

    # -- assignment primitives ---------------------------------------------

    def _setP(self, e, bits):
        add = bits & ~self.P[e]
        if not add:
            return False
        if add & self.A[e]:
            self.conflict = True
        self.P[e] |= add
        return True

    def _setA(self, e, bits):
        add = bits & ~self.A[e]
        if not add:
            return False
        if add & self.P[e]:
            self.conflict = True
        self.A[e] |= add
        return True

    def _dom_true(self, e, i):
        return bool(self.P[e] & self.rowmask[i])

    def _dom_false(self, e, i):
        return (self.A[e] & self.rowmask[i]) == self.rowmask[i]

    def _compose_bits(self, X, Y):
        k = self.k
        out = 0
        for i in range(k):
            row = (X >> (i * k)) & self.kmask
            acc = 0
            j = 0
            while row:
                if row & 1:
                    acc |= (Y >> (j * k)) & self.kmask
                row >>= 1
                j += 1
            out |= acc << (i * k)
        return out

    # -- propagation rules ---------------------------------------------------

    def _force_row_support(self, e, i):
        """Row i of e must be nonempty; unit-propagate a single candidate."""
        cand = ~self.A[e] & self.rowmask[i]
        if cand == 0:
            self.conflict = True
            return False
        if cand & (cand - 1) == 0 and not self.P[e] & self.rowmask[i]:
            return self._setP(e, cand)
        return False

    def _force_common_support(self, a, b, i):
        """Rows i of a and b must share a pair (Eq3 / comp witness shape)."""
        if self.P[a] & self.P[b] & self.rowmask[i]:
            return False
        cand = ~self.A[a] & ~self.A[b] & self.rowmask[i]
        if cand == 0:
            self.conflict = True
            return False
        if cand & (cand - 1) == 0:
            return self._setP(a, cand) | self._setP(b, cand)
        return False

    def _prop_comp(self, a, b, c):
        ch = self._setP(c, self._compose_bits(self.P[a], self.P[b]))
        poss = self._compose_bits(self.full & ~self.A[a],
                                  self.full & ~self.A[b])
        ch |= self._setA(c, self.full & ~poss)
        if self.conflict:
            return ch
        k = self.k
        # absent composite forbids completing either factor of a present one
        for i in range(k):
            arow = (self.P[a] >> (i * k)) & self.kmask
            crow = (self.A[c] >> (i * k)) & self.kmask
            if not crow:
                continue
            j = 0
            r = arow
            while r:
                if r & 1:
                    ch |= self._setA(b, crow << (j * k))
                r >>= 1
                j += 1
        for j in range(k):
            brow = (self.P[b] >> (j * k)) & self.kmask
            if not brow:
                continue
            for l in range(k):
                if not brow >> l & 1:
                    continue
                for i in range(k):
                    if self.A[c] >> (i * k + l) & 1:
                        ch |= self._setA(a, 1 << (i * k + j))
        # present composite with a single witness column forces the witness
        pc = self.P[c]
        for i in range(k):
            crow = (pc >> (i * k)) & self.kmask
            if not crow:
                continue
            for l in range(k):
                if not crow >> l & 1:
                    continue
                cand = ~self.A[a] & self.rowmask[i]
                js, cnt = -1, 0
                while cand:
                    j = (cand & -cand).bit_length() - 1 - i * k
                    if not self.A[b] >> (j * k + l) & 1:
                        witnessed = (self.P[a] >> (i * k + j) & 1
                                     and self.P[b] >> (j * k + l) & 1)
                        if witnessed:
                            cnt = 2
                            break
                        js, cnt = j, cnt + 1
                        if cnt > 1:
                            break
                    cand &= cand - 1
                if cnt == 0:
                    self.conflict = True
                    return ch
                if cnt == 1:
                    ch |= self._setP(a, 1 << (i * k + js))
                    ch |= self._setP(b, 1 << (js * k + l))
        return ch

    def _prop_join_demonic(self, a, b, c):
        ch = False
        for i in range(self.k):
            row = self.rowmask[i]
            da_t, db_t = self._dom_true(a, i), self._dom_true(b, i)
            da_f, db_f = self._dom_false(a, i), self._dom_false(b, i)
            if da_f or db_f:
                ch |= self._setA(c, row)
            if da_t and db_t:
                ch |= self._setP(c, (self.P[a] | self.P[b]) & row)
            ch |= self._setA(c, self.A[a] & self.A[b] & row)
            here = self.P[c] & row
            ch |= self._setP(b, here & self.A[a])
            ch |= self._setP(a, here & self.A[b])
            if self._dom_true(c, i):
                ch |= self._force_row_support(a, i)
                ch |= self._force_row_support(b, i)
            if self._dom_false(c, i):
                if da_t:
                    ch |= self._setA(b, row)
                if db_t:
                    ch |= self._setA(a, row)
            if self.conflict:
                return ch
        return ch

    def _prop_join_angelic(self, a, b, c):
        ch = self._setP(c, self.P[a] | self.P[b])
        ch |= self._setA(c, self.A[a] & self.A[b])
        ch |= self._setA(a, self.A[c])
        ch |= self._setA(b, self.A[c])
        ch |= self._setP(b, self.P[c] & self.A[a])
        ch |= self._setP(a, self.P[c] & self.A[b])
        return ch

    def _prop_meet_demonic(self, a, b, c):
        ch = False
        for i in range(self.k):
            row = self.rowmask[i]
            da_t, db_t = self._dom_true(a, i), self._dom_true(b, i)
            da_f, db_f = self._dom_false(a, i), self._dom_false(b, i)
            ch |= self._setA(c, self.A[a] & self.A[b] & row)
            if da_t and db_t:
                ch |= self._setP(c, self.P[a] & self.P[b] & row)
                ch |= self._setA(c, (self.A[a] | self.A[b]) & row)
                ch |= self._force_common_support(a, b, i)   # Eq. (3)
            if db_f:        # row b empty: row c mirrors row a
                ch |= self._setP(c, self.P[a] & row)
                ch |= self._setP(a, self.P[c] & row)
                ch |= self._setA(c, self.A[a] & row)
                ch |= self._setA(a, self.A[c] & row)
            if da_f:
                ch |= self._setP(c, self.P[b] & row)
                ch |= self._setP(b, self.P[c] & row)
                ch |= self._setA(c, self.A[b] & row)
                ch |= self._setA(b, self.A[c] & row)
            here = self.P[c] & row
            if here:
                if da_t:
                    ch |= self._setP(a, here)
                if db_t:
                    ch |= self._setP(b, here)
            if self._dom_false(c, i):
                ch |= self._setA(a, row)
                ch |= self._setA(b, row)
            if self.conflict:
                return ch
        return ch

    def _prop_meet_angelic(self, a, b, c):
        ch = self._setP(c, self.P[a] & self.P[b])
        ch |= self._setA(c, self.A[a] | self.A[b])
        ch |= self._setP(a, self.P[c])
        ch |= self._setP(b, self.P[c])
        ch |= self._setA(b, self.A[c] & self.P[a])
        ch |= self._setA(a, self.A[c] & self.P[b])
        return ch

    def _propagate(self) -> bool:
        demonic = self.semantics == "demonic"
        while True:
            changed = False
            for a in range(self.ne):
                for b in range(self.ne):
                    if self.ct is not None:
                        changed |= self._prop_comp(a, b, int(self.ct[a, b]))
                    if self.jt is not None:
                        if demonic:
                            changed |= self._prop_join_demonic(
                                a, b, int(self.jt[a, b]))
                        else:
                            changed |= self._prop_join_angelic(
                                a, b, int(self.jt[a, b]))
                    if self.mt is not None:
                        if demonic:
                            changed |= self._prop_meet_demonic(
                                a, b, int(self.mt[a, b]))
                        else:
                            changed |= self._prop_meet_angelic(
                                a, b, int(self.mt[a, b]))
                    if self.conflict:
                        return False
            for i in range(self.k):
                if all((self.A[e] & self.touch[i]) == self.touch[i]
                       for e in range(self.ne)):
                    return False    # point i unusable: a smaller base suffices
            for a in range(self.ne):
                for b in range(a + 1, self.ne):
                    if (self.P[a] == self.P[b] and self.A[a] == self.A[b]
                            and (self.P[a] | self.A[a]) == self.full):
                        return False
            if not changed:
                return True

    def _symmetry_ok(self) -> bool:
        P0, A0 = self.P[0], self.A[0]
        for pm in self.perms:
            for p in range(self.np2):
                cur = 1 if P0 >> p & 1 else (0 if A0 >> p & 1 else None)
                q = pm[p]
                img = 1 if P0 >> q & 1 else (0 if A0 >> q & 1 else None)
                if cur is None or img is None or cur < img:
                    break
                if cur > img:
                    return False
        return True

    def _pick_var(self):
        for e in range(self.ne):
            undec = self.full & ~(self.P[e] | self.A[e])
            if undec:
                return e, (undec & -undec).bit_length() - 1
        return None

    def _leaf_rep(self) -> Optional[RepMap]:
        base = Base(tuple(f"x{i}" for i in range(self.k)))
        assign = {name: Relation(base, self.P[e])
                  for e, name in enumerate(self.struct.elements)}
        rep = RepMap(self.struct, base, assign)
        report = check_representation(rep, self.semantics, self.sig)
        return rep if report.ok else None

    def solve(self) -> Optional[RepMap]:
        if not self.budget.spend():
            return None
        if not self._propagate() or self.conflict:
            return None
        if self.perms and not self._symmetry_ok():
            return None
        var = self._pick_var()
        if var is None:
            return self._leaf_rep()
        e, p = var
        saved_p, saved_a = self.P[:], self.A[:]
        for setter in (self._setP, self._setA):
            setter(e, 1 << p)
            got = self.solve()
            if got is not None or self.budget.hit:
                return got
            self.P, self.A = saved_p[:], saved_a[:]
            self.conflict = False
        return None


def search(struct, cfg: SearchConfig) -> SearchResult:
    """Decide representability over bases of size 1..max_base."""
    sig = cfg.signature_filter or struct.signature
    missing = set(sig.ops()) - set(struct.signature.ops())
    if missing:
        raise ValueError(f"structure has no table for {sorted(missing)}")
    start = time.perf_counter()
    budget = _Budget(cfg.node_budget, cfg.time_budget)
    nodes_before = budget.left
    for k in range(1, cfg.max_base + 1):
        solver = _Solver(struct, k, sig, cfg.semantics,
                         cfg.symmetry_breaking, budget)
        rep = solver.solve()
        elapsed = time.perf_counter() - start
        if rep is not None:
            return SearchResult("SAT", rep, cfg.max_base,
                                nodes_before - budget.left, elapsed)
        if budget.hit:
            return SearchResult("BUDGET", None, cfg.max_base,
                                nodes_before - budget.left, elapsed)
    return SearchResult("UNSAT", None, cfg.max_base,
                        nodes_before - budget.left,
                        time.perf_counter() - start)


# -- angelic/demonic conversion ----------------------------------------------


def lattice_zero(struct) -> int:
    """Index of the least element killed by right composition.

    Least in the order induced by whichever semilattice tables are present:
    join if available (z+a=a for all a), meet if available (z.a=z for all a).
    A meet-only structure such as the point algebra qualifies through its
    meet table alone.
    """
    sig = struct.signature
    if not (sig.has_join or sig.has_meet):
        raise ValueError("need a join or meet table to find a least element")
    n = struct.size
    zero = None
    for z in range(n):
        if sig.has_join and not all(struct.join(z, a) == a for a in range(n)):
            continue
        if sig.has_meet and not all(struct.meet(z, a) == z for a in range(n)):
            continue
        zero = z
        break
    if zero is None:
        raise ValueError("no least element")
    bad = [a for a in range(n) if struct.comp(a, zero) != zero]
    if bad:
        raise ValueError(
            f"composition does not absorb into the least element at "
            f"{[struct.elements[a] for a in bad]}")
    return zero


def _fresh_bottom_name(base: Base) -> str:
    name = "bot"
    while name in base.points:
        name += "_"
    return name


def angelic_to_demonic(rep: RepMap) -> RepMap:
    """Extend the base by a sink column, making every image left-total."""
    lattice_zero(rep.structure)
    report = check_representation(rep, "angelic")
    if not report.ok:
        raise ValueError(f"input is not an angelic representation:\n{report}")
    bot = _fresh_bottom_name(rep.base)
    pts = rep.base.points + (bot,)
    newbase = Base(pts, bottom=bot)
    n_old, n_new = len(rep.base), len(pts)
    column = 0
    for i in range(n_new):
        column |= 1 << (i * n_new + n_new - 1)
    out = {}
    for name, r in rep.assignment.items():
        bits = 0
        m = r.bits
        while m:
            p = (m & -m).bit_length() - 1
            bits |= 1 << ((p // n_old) * n_new + (p % n_old))
            m &= m - 1
        out[name] = Relation(newbase, bits | column)
    converted = RepMap(rep.structure, newbase, out)
    post = check_representation(converted, "demonic")
    if not post.ok:
        raise RuntimeError(f"conversion failed verification:\n{post}")
    return converted


def demonic_to_angelic(rep: RepMap) -> RepReport:
    """Check constant domains, then re-check the same map angelically."""
    lattice_zero(rep.structure)
    report = RepReport(getattr(rep.structure, "name", "structure"),
                       "demonic->angelic")
    elems = list(rep.structure.elements)
    doms = {e: rep.assignment[e].dom_mask() for e in elems if e in rep.assignment}
    for e in elems[1:]:
        if doms[e] != doms[elems[0]]:
            report.violations.append(
                Violation("domain constancy", (elems[0], e)))
    report.checked.append("domain constancy")
    if not report.ok:
        return report
    inner = check_representation(rep, "angelic")
    report.checked += inner.checked
    report.violations += inner.violations
    return report


# -- point-algebra chain certificate ------------------------------------------


@dataclass(frozen=True)
class ChainStep:
    rule: str
    fact: str


@dataclass
class ChainCertificate:
    k: int
    min_base: int
    points: tuple
    steps: tuple

    def __str__(self):
        lines = [f"any meet/comp representation needs >= {self.min_base} "
                 f"base points ({', '.join(self.points)}):"]
        lines += [f"  [{s.rule}] {s.fact}" for s in self.steps]
        return "\n".join(lines)


def _pa_indices():
    from .pointalg import build_point_algebra
    pa = build_point_algebra()
    z, e, g = (pa.index(x) for x in "zeg")
    return pa, z, e, g


def point_algebra_chain_lowerbound(k: int) -> ChainCertificate:
    """Replayable derivation that k+2 base points are forced.

    Each step quotes the table identity it uses; identities are re-checked
    against the actual tables so the certificate cannot drift from the
    structure definition.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    pa, z, e, g = _pa_indices()

    def need(fact: str, ok: bool):
        if not ok:
            raise AssertionError(f"table identity failed: {fact}")

    need("g.z=z and z.g=z", pa.meet(g, z) == z and pa.meet(z, g) == z)
    need("g*z=z and z*g=z", pa.comp(g, z) == z and pa.comp(z, g) == z)
    need("g*g=g", pa.comp(g, g) == g)
    need("e*g=g", pa.comp(e, g) == g)
    need("e.g=z", pa.meet(e, g) == z)

    steps = [
        ChainStep("dichotomy",
                  "z != g, so some pair lies in exactly one of their images"),
        ChainStep("zero-case",
                  "(x0,y0) in z-but-not-g is impossible: z=g*z puts x0 in "
                  "d(g), then z.g=z forces (x0,y0) into g"),
        ChainStep("seed", "(x0,y0) in g and not in z"),
        ChainStep("loop-free",
                  "(y0,y0) in g would give w with (y0,w) in e and g, but "
                  "e.g=z, and g*z*g=z would put (x0,y0) in z"),
    ]
    points = ["x0", "y0"]
    for i in range(1, k + 1):
        steps.append(ChainStep(
            "midpoint",
            f"g*g=g splits (x0,y{i - 1}) at a new y{i}: (x0,y{i}) in g and "
            f"(y{i},y{i - 1}) in g"))
        steps.append(ChainStep(
            "distinct",
            f"y{i} equal to an earlier point would give (y{i - 1},y{i - 1}) "
            f"in g via g*g=g, contradicting loop-free"))
        steps.append(ChainStep(
            "loop-free", f"(y{i},y{i}) not in g, as for y0"))
        points.append(f"y{i}")
    steps.append(ChainStep(
        "distinct",
        "x0 differs from every yi: (x0,yi) in g while (yi,yi) is not"))
    return ChainCertificate(k, k + 2, tuple(points), tuple(steps))


def replay_chain(cert: ChainCertificate, rep: RepMap) -> Dict[str, str]:
    """Find concrete base points realizing the certificate's chain.

    Works on any RepMap for the point algebra; raises when the base is too
    small, which is the expected outcome on truncations below k+2 points.
    The returned chain satisfies every certificate fact: (x0,yi) and (yj,yi)
    for i<j lie in the g image, no chain point has a g loop.
    """
    zr, gr = rep.assignment["z"], rep.assignment["g"]
    base = rep.base
    n = len(base)
    loop_free = [i for i in range(n) if not gr.bits >> (i * n + i) & 1]

    def g_has(i, j):
        return bool(gr.bits >> (i * n + j) & 1)

    def extend(x0, chain):
        if len(chain) == cert.k + 1:
            return chain
        for w in loop_free:
            if w == x0 or w in chain:
                continue
            if g_has(x0, w) and all(g_has(w, c) for c in chain):
                got = extend(x0, chain + [w])
                if got is not None:
                    return got
        return None

    m = gr.bits & ~zr.bits
    while m:
        p = (m & -m).bit_length() - 1
        x0, y0 = p // n, p % n
        if x0 != y0 and y0 in loop_free:
            got = extend(x0, [y0])
            if got is not None:
                names = {"x0": base.points[x0]}
                for idx, pt in enumerate(got):
                    names[f"y{idx}"] = base.points[pt]
                return names
        m &= m - 1
    raise ValueError(
        f"no chain of {cert.k + 1} points below a seed exists in this "
        f"model; base has {n} points, certificate needs {cert.min_base}")
