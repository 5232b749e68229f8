"""The non-representable join/composition family over closed generator sets.

Universe n has N = 2**n + 1 letter indices and 4N+7 generators in fixed bit
order: al, bl0..bl{N-1}, cl0..cl{N-1} | ar, br.., cr.. | p, pp | d1, d2, d3.
Elements of the structure are the closed subsets (bitmasks); the empty set
is the join-semilattice top. Partial products on generators: a left letter
against a right letter gives pp on the six clashing index patterns and p
otherwise, left*d2=d1, right*d3=d2, p*d3=pp*d3=d1, everything else
undefined. Join of nonempty elements is closure of the union; join with the
empty set is empty; composition is closure of the elementwise product set.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ._accel import maybe_njit, numba_enabled
from .structures import Signature

MAX_ELEMENTS = 20000


class SnUniverse:
    """Generator layout, bullet products and the closure operator."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        N = (1 << n) + 1
        self.N = N
        names = (["al"]
                 + [f"bl{i}" for i in range(N)] + [f"cl{i}" for i in range(N)]
                 + ["ar"]
                 + [f"br{i}" for i in range(N)] + [f"cr{i}" for i in range(N)]
                 + ["p", "pp", "d1", "d2", "d3"])
        self.generators = tuple(names)
        self.gen_index = {g: i for i, g in enumerate(names)}
        gi = self.gen_index
        self.AL = gi["al"]
        self.AR = gi["ar"]
        self.BL = [gi[f"bl{i}"] for i in range(N)]
        self.CL = [gi[f"cl{i}"] for i in range(N)]
        self.BR = [gi[f"br{i}"] for i in range(N)]
        self.CR = [gi[f"cr{i}"] for i in range(N)]
        self.P, self.PP = gi["p"], gi["pp"]
        self.D1, self.D2, self.D3 = gi["d1"], gi["d2"], gi["d3"]

        bit = lambda i: 1 << i
        self.L_mask = sum(bit(i) for i in [self.AL] + self.BL + self.CL)
        self.R_mask = sum(bit(i) for i in [self.AR] + self.BR + self.CR)
        self.P_mask = bit(self.P) | bit(self.PP)
        self.D_mask = bit(self.D1) | bit(self.D2) | bit(self.D3)
        self.LP_mask = self.L_mask | self.P_mask

        # pp-partners of each left generator among right generators
        self.pp_partner = [0] * len(names)
        for i in range(N):
            j = (i + 1) % N
            k = (i - 1) % N
            self.pp_partner[self.BL[i]] = bit(self.CR[i]) | bit(self.BR[j]) | bit(self.CR[k])
            self.pp_partner[self.CL[i]] = bit(self.BR[i]) | bit(self.CR[j]) | bit(self.BR[k])
        self.p_partner = [0] * len(names)
        for l in [self.AL] + self.BL + self.CL:
            self.p_partner[l] = self.R_mask & ~self.pp_partner[l]

    @property
    def size(self) -> int:
        return len(self.generators)

    def mask_of(self, gens: Iterable[str]) -> int:
        m = 0
        for g in gens:
            m |= 1 << self.gen_index[g]
        return m

    def names_of(self, mask: int) -> tuple:
        return tuple(g for i, g in enumerate(self.generators) if mask >> i & 1)

    def format_mask(self, mask: int) -> str:
        return "{" + ",".join(self.names_of(mask)) + "}"

    def closure_mask(self, mask: int) -> int:
        while True:
            if bin(mask & self.D_mask).count("1") > 1:
                return 0
            new = mask
            if mask & self.LP_mask:
                new |= 1 << self.D1
            if mask & self.R_mask:
                new |= 1 << self.D2
            for i in range(self.N):
                if new >> self.BL[i] & 1 and new >> self.CL[i] & 1:
                    new |= 1 << self.AL
                if new >> self.BR[i] & 1 and new >> self.CR[i] & 1:
                    new |= 1 << self.AR
            if new == mask:
                return mask
            mask = new

    def bullet_mask(self, ma: int, mb: int) -> int:
        """Set of defined generator products of the two member sets."""
        prod = 0
        la = ma & self.L_mask
        rb = mb & self.R_mask
        if la and rb:
            m = la
            while m:
                l = (m & -m).bit_length() - 1
                if rb & self.pp_partner[l]:
                    prod |= 1 << self.PP
                if rb & self.p_partner[l]:
                    prod |= 1 << self.P
                m &= m - 1
        if la and mb >> self.D2 & 1:
            prod |= 1 << self.D1
        if ma & self.R_mask and mb >> self.D3 & 1:
            prod |= 1 << self.D2
        if ma & self.P_mask and mb >> self.D3 & 1:
            prod |= 1 << self.D1
        return prod

    def delta_mask(self, mask: int) -> Optional[str]:
        if mask == 0:
            return None
        if mask >> self.D1 & 1:
            return "d1"
        if mask >> self.D2 & 1:
            return "d2"
        return "d3"


@dataclass(frozen=True)
class SnElement:
    universe: SnUniverse
    mask: int

    def members(self) -> tuple:
        return self.universe.names_of(self.mask)

    def __str__(self):
        return self.universe.format_mask(self.mask)


def sn_closure(universe: SnUniverse, gens) -> SnElement:
    """Close a generator subset (names or mask) under the completion rules."""
    mask = gens if isinstance(gens, int) else universe.mask_of(gens)
    return SnElement(universe, universe.closure_mask(mask))


def sn_delta(elem: SnElement) -> str:
    """The unique domain tag of a nonempty closed set."""
    tag = elem.universe.delta_mask(elem.mask)
    if tag is None:
        raise ValueError("delta is undefined on the empty (top) element")
    return tag


def _letter_patterns(universe: SnUniverse, b_idx: Sequence[int],
                     c_idx: Sequence[int], a_idx: int) -> List[int]:
    """All closed letter patterns of one side (a forced by any b/c pair)."""
    N = universe.N
    out = []

    def rec(i, mask, has_pair):
        if i == N:
            if has_pair:
                out.append(mask | 1 << a_idx)
            else:
                out.append(mask)
                out.append(mask | 1 << a_idx)
            return
        rec(i + 1, mask, has_pair)
        rec(i + 1, mask | 1 << b_idx[i], has_pair)
        rec(i + 1, mask | 1 << c_idx[i], has_pair)
        rec(i + 1, mask | 1 << b_idx[i] | 1 << c_idx[i], True)

    rec(0, 0, False)
    return out


def enumerate_closed_masks(universe: SnUniverse) -> List[int]:
    u = universe
    masks = [0, 1 << u.D3]
    right_letters = _letter_patterns(u, u.BR, u.CR, u.AR)
    for lm in right_letters:
        masks.append(lm | 1 << u.D2)
    left_letters = _letter_patterns(u, u.BL, u.CL, u.AL)
    for lm in left_letters:
        for pm in (0, 1 << u.P, 1 << u.PP, 1 << u.P | 1 << u.PP):
            masks.append(lm | pm | 1 << u.D1)
    masks.sort()
    return masks


class SnStructure:
    """Lazy structure over the closed sets; same duck interface as FiniteStructure."""

    def __init__(self, universe: SnUniverse, max_elements: int = MAX_ELEMENTS):
        self.universe = universe
        # 2 + 5*(3^N + 4^N): empty, {d3}, the right compartment, and four
        # P-decorated copies of it on the left
        predicted = 2 + 5 * (3 ** universe.N + 4 ** universe.N)
        if predicted > max_elements:
            raise ValueError(
                f"n={universe.n} yields {predicted} elements, over the "
                f"budget of {max_elements}")
        masks = enumerate_closed_masks(universe)
        assert len(masks) == predicted
        self.masks = masks
        self.mask_index = {m: i for i, m in enumerate(masks)}
        self.name = f"s{universe.n}"
        self.signature = Signature(has_join=True, has_comp=True)
        self._elements: Optional[tuple] = None
        self._join_memo = {}
        self._comp_memo = {}
        self._arrays = None
        self._lock = threading.Lock()

    @property
    def size(self) -> int:
        return len(self.masks)

    @property
    def elements(self) -> tuple:
        if self._elements is None:
            fmt = self.universe.format_mask
            self._elements = tuple(fmt(m) for m in self.masks)
        return self._elements

    def index(self, name: str) -> int:
        if not hasattr(self, "_names"):
            self._names = {e: i for i, e in enumerate(self.elements)}
        return self._names[name]

    def index_of_mask(self, mask: int) -> int:
        return self.mask_index[mask]

    def element_of(self, gens) -> int:
        """Index of the closure of the given generators."""
        e = sn_closure(self.universe, gens)
        return self.mask_index[e.mask]

    def join(self, i: int, j: int) -> int:
        if i == 0 or j == 0:
            return 0  # masks are sorted, so index 0 is the empty set
        key = (i, j) if i <= j else (j, i)
        with self._lock:
            got = self._join_memo.get(key)
        if got is not None:
            return got
        m = self.universe.closure_mask(self.masks[i] | self.masks[j])
        out = self.mask_index[m]
        with self._lock:
            self._join_memo[key] = out
        return out

    def comp(self, i: int, j: int) -> int:
        key = (i, j)
        with self._lock:
            got = self._comp_memo.get(key)
        if got is not None:
            return got
        u = self.universe
        m = u.closure_mask(u.bullet_mask(self.masks[i], self.masks[j]))
        out = self.mask_index[m]
        with self._lock:
            self._comp_memo[key] = out
        return out

    def op(self, opname: str, i: int, j: int) -> int:
        return self.join(i, j) if opname == "join" else self.comp(i, j)

    def delta(self, i: int) -> Optional[str]:
        return self.universe.delta_mask(self.masks[i])

    def as_arrays(self) -> dict:
        with self._lock:
            if self._arrays is None:
                self._arrays = materialize_tables(self)
        return self._arrays


# -- bulk table materialization ---------------------------------------------


def _closure_bulk(universe: SnUniverse, U: np.ndarray) -> np.ndarray:
    """Vectorized closure over an int64 mask array."""
    u = universe
    U = U.copy()
    d_bits = np.int64(u.D_mask)
    while True:
        dpart = U & d_bits
        mixed = (dpart & (dpart - 1)) != 0
        U[mixed] = 0
        new = U.copy()
        new[(U & u.LP_mask) != 0] |= np.int64(1 << u.D1)
        new[(U & u.R_mask) != 0] |= np.int64(1 << u.D2)
        for i in range(u.N):
            bl, cl = np.int64(1 << u.BL[i]), np.int64(1 << u.CL[i])
            both = (new & bl != 0) & (new & cl != 0)
            new[both] |= np.int64(1 << u.AL)
            br, cr = np.int64(1 << u.BR[i]), np.int64(1 << u.CR[i])
            both = (new & br != 0) & (new & cr != 0)
            new[both] |= np.int64(1 << u.AR)
        if np.array_equal(new, U):
            return U
        U = new


def _tables_numpy(struct: SnStructure):
    u = struct.universe
    masks = np.array(struct.masks, dtype=np.int64)
    s = masks.size

    U = masks[:, None] | masks[None, :]
    J = _closure_bulk(u, U.ravel()).reshape(s, s)
    nz = (masks != 0).astype(np.int64)
    J *= nz[:, None] * nz[None, :]  # join with top is top
    join = np.searchsorted(masks, J.ravel()).reshape(s, s).astype(np.int32)

    # composition: pp/p presence via per-left-pattern partner LUTs
    lbits = 2 * u.N + 1
    lpat = (masks & u.L_mask).astype(np.int64)  # low bits by layout
    rpat = ((masks & u.R_mask) >> lbits).astype(np.int64)
    pp_lut = np.zeros(1 << lbits, dtype=np.int64)
    p_lut = np.zeros(1 << lbits, dtype=np.int64)
    for l in [u.AL] + u.BL + u.CL:
        sel = (np.arange(1 << lbits) >> l) & 1 == 1
        pp_lut[sel] |= u.pp_partner[l] >> lbits
        p_lut[sel] |= u.p_partner[l] >> lbits
    has_pp = (rpat[None, :] & pp_lut[lpat][:, None]) != 0
    has_p = (rpat[None, :] & p_lut[lpat][:, None]) != 0
    a_d2 = (lpat != 0)[:, None] & ((masks >> u.D2 & 1) != 0)[None, :]
    a_d3r = ((masks & u.R_mask) != 0)[:, None] & ((masks >> u.D3 & 1) != 0)[None, :]
    a_d3p = ((masks & u.P_mask) != 0)[:, None] & ((masks >> u.D3 & 1) != 0)[None, :]
    prod = (has_pp.astype(np.int64) << u.PP) | (has_p.astype(np.int64) << u.P)
    prod |= (a_d2 | a_d3p).astype(np.int64) << u.D1
    prod |= a_d3r.astype(np.int64) << u.D2
    C = _closure_bulk(u, prod.ravel()).reshape(s, s)
    comp = np.searchsorted(masks, C.ravel()).reshape(s, s).astype(np.int32)
    return {"join": join, "comp": comp}


@maybe_njit
def _tables_numba_loop(masks, N, AL, AR, BLCL, BRCR, pp_partner, p_partner,
                       L_mask, R_mask, P_mask, LP_mask, D_mask,
                       P, PP, D1, D2, D3, join, comp):
    s = masks.size
    for i in range(s):
        mi = masks[i]
        for j in range(s):
            mj = masks[j]
            # join
            if mi == 0 or mj == 0:
                jm = 0
            else:
                jm = _closure_one(mi | mj, N, AL, AR, BLCL, BRCR,
                                  L_mask, R_mask, LP_mask, D_mask, D1, D2)
            join[i, j] = _find(masks, jm)
            # composition
            prod = 0
            la = mi & L_mask
            rb = mj & R_mask
            if la != 0 and rb != 0:
                m = la
                while m:
                    l = 0
                    mm = m & (-m)
                    while mm > 1:
                        mm >>= 1
                        l += 1
                    if rb & pp_partner[l]:
                        prod |= 1 << PP
                    if rb & p_partner[l]:
                        prod |= 1 << P
                    m &= m - 1
            if la != 0 and (mj >> D2) & 1:
                prod |= 1 << D1
            if (mi & R_mask) != 0 and (mj >> D3) & 1:
                prod |= 1 << D2
            if (mi & P_mask) != 0 and (mj >> D3) & 1:
                prod |= 1 << D1
            cm = _closure_one(prod, N, AL, AR, BLCL, BRCR,
                              L_mask, R_mask, LP_mask, D_mask, D1, D2)
            comp[i, j] = _find(masks, cm)


@maybe_njit
def _closure_one(mask, N, AL, AR, BLCL, BRCR,
                 L_mask, R_mask, LP_mask, D_mask, D1, D2):
    while True:
        d = mask & D_mask
        if d & (d - 1):
            return 0
        new = mask
        if mask & LP_mask:
            new |= 1 << D1
        if mask & R_mask:
            new |= 1 << D2
        for i in range(N):
            if (new >> BLCL[i, 0]) & 1 and (new >> BLCL[i, 1]) & 1:
                new |= 1 << AL
            if (new >> BRCR[i, 0]) & 1 and (new >> BRCR[i, 1]) & 1:
                new |= 1 << AR
        d = new & D_mask
        if d & (d - 1):
            return 0
        if new == mask:
            return mask
        mask = new


@maybe_njit
def _find(masks, value):
    lo, hi = 0, masks.size
    while lo < hi:
        mid = (lo + hi) // 2
        if masks[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _tables_numba(struct: SnStructure):
    u = struct.universe
    masks = np.array(struct.masks, dtype=np.int64)
    s = masks.size
    join = np.zeros((s, s), dtype=np.int32)
    comp = np.zeros((s, s), dtype=np.int32)
    BLCL = np.array([[u.BL[i], u.CL[i]] for i in range(u.N)], dtype=np.int64)
    BRCR = np.array([[u.BR[i], u.CR[i]] for i in range(u.N)], dtype=np.int64)
    _tables_numba_loop(masks, u.N, u.AL, u.AR, BLCL, BRCR,
                       np.array(u.pp_partner, dtype=np.int64),
                       np.array(u.p_partner, dtype=np.int64),
                       u.L_mask, u.R_mask, u.P_mask, u.LP_mask, u.D_mask,
                       u.P, u.PP, u.D1, u.D2, u.D3, join, comp)
    return {"join": join, "comp": comp}


def materialize_tables(struct: SnStructure, force: str | None = None):
    use_numba = numba_enabled() if force is None else force == "numba"
    return _tables_numba(struct) if use_numba else _tables_numpy(struct)


def build_sn(n: int, max_elements: int = MAX_ELEMENTS) -> SnStructure:
    """The closed-set join/composition structure for universe n."""
    return SnStructure(SnUniverse(n), max_elements)


# -- prime upward-closed sets ------------------------------------------------


@dataclass(frozen=True)
class PrimeSet:
    """Upward-closed element family, membership as a bitmask over elements."""
    name: str
    members: int
    src_role: int   # index the source node takes when this labels an edge
    dst_role: int   # 1, 2, 3, or 0 for the unindexed sink role

    def contains(self, elem_index: int) -> bool:
        return self.members >> elem_index & 1


def upset_mask(struct: SnStructure, gen_bit_mask: int) -> int:
    """Members bitmask of all nonempty elements containing the generators."""
    out = 0
    for i, m in enumerate(struct.masks):
        if m & gen_bit_mask == gen_bit_mask and m != 0:
            out |= 1 << i
    return out


def principal_upset(struct: SnStructure, element_index: int) -> int:
    """Members bitmask of the upset of one element (empty set never included)."""
    base = struct.masks[element_index]
    out = 0
    for i, m in enumerate(struct.masks):
        if m & base == base and m != 0:
            out |= 1 << i
    return out


def bl_prime_mask(struct: SnStructure, rho: Iterable[int]) -> int:
    u = struct.universe
    rho = set(rho)
    out = upset_mask(struct, 1 << u.AL)
    for i in range(u.N):
        bit = u.BL[i] if i in rho else u.CL[i]
        out |= upset_mask(struct, 1 << bit)
    return out


def br_prime_mask(struct: SnStructure, rho: Iterable[int]) -> int:
    u = struct.universe
    rho = set(rho)
    out = upset_mask(struct, 1 << u.AR)
    for i in range(u.N):
        bit = u.BR[i] if i in rho else u.CR[i]
        out |= upset_mask(struct, 1 << bit)
    return out


def is_upward_closed(struct: SnStructure, members: int) -> bool:
    for i in range(struct.size):
        if not members >> i & 1:
            continue
        base = struct.masks[i]
        for j in range(struct.size):
            if struct.masks[j] & base == base and struct.masks[j] != 0:
                if not members >> j & 1:
                    return False
    return True


def is_prime_set(struct: SnStructure, members: int) -> bool:
    """(A+B) in S implies A in S or B in S, checked over the join table."""
    tabs = struct.as_arrays()
    s = struct.size
    inset = np.zeros(s, dtype=bool)
    for i in range(s):
        inset[i] = bool(members >> i & 1)
    joined_in = inset[tabs["join"]]
    either = inset[:, None] | inset[None, :]
    return not bool((joined_in & ~either).any())


def sn_primes(struct: SnStructure) -> List[PrimeSet]:
    """The catalog of prime sets used by the winning-side strategies."""
    u = struct.universe
    out = []

    def add(name, members, src_role, dst_role):
        if not is_upward_closed(struct, members):
            raise AssertionError(f"{name} not upward closed")
        if not is_prime_set(struct, members):
            raise AssertionError(f"{name} not prime")
        out.append(PrimeSet(name, members, src_role, dst_role))

    for i in range(u.N):
        add(f"up_bl{i}", upset_mask(struct, 1 << u.BL[i]), 1, 2)
        add(f"up_cl{i}", upset_mask(struct, 1 << u.CL[i]), 1, 2)
        add(f"up_br{i}", upset_mask(struct, 1 << u.BR[i]), 2, 3)
        add(f"up_cr{i}", upset_mask(struct, 1 << u.CR[i]), 2, 3)
    add("up_p", upset_mask(struct, 1 << u.P), 1, 3)
    add("up_pp", upset_mask(struct, 1 << u.PP), 1, 3)
    add("up_d1", upset_mask(struct, 1 << u.D1), 1, 0)
    add("up_d2", upset_mask(struct, 1 << u.D2), 2, 0)
    add("up_d3", upset_mask(struct, 1 << u.D3), 3, 0)
    d2strict = upset_mask(struct, 1 << u.D2) & ~(
        1 << struct.mask_index[struct.universe.closure_mask(1 << u.D2)])
    add("upup_d2", d2strict, 2, 3)
    for rho_bits in range(1 << u.N):
        rho = [i for i in range(u.N) if rho_bits >> i & 1]
        tag = "".join(str(i) for i in rho)
        add(f"Bl_{tag}", bl_prime_mask(struct, rho), 1, 2)
        add(f"Br_{tag}", br_prime_mask(struct, rho), 2, 3)
    return out
