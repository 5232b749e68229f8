"""Scripted strategies for the game over the letter-pair family.

The challenger script drives the forcing line against any conservative
responder: open with the two decorated products, squeeze the forbidden label
into a refusal (then punish the refusal in two moves), or pin letter pairs
on both legs of a composition witness until some pinned pair multiplies to
the forbidden label. The responder script opens with the big saturated
network whenever one of its edges separates the named pair and a two-node
prime-labelled network otherwise, then answers moves without ever growing
the saturated board; on the prime board it tracks the letter-interval
bookkeeping that the hard witness branch requires.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .game import (Choice, Composition, GameState, Init, Join, Move, Witness,
                   fresh_node)
from .networks import Network, build_figure5_network
from .sn import PrimeSet, SnStructure, principal_upset, sn_primes


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# -- challenger ----------------------------------------------------------------


class ForallScriptSn:
    """Stateless move chooser reconstructing its stage from the board.

    Rule order: finish with a composition that lands the forbidden label or
    clashes a refusal; punish any refusal that sits above a played label;
    on the squeeze branch force the refusal; on the pinning branch run
    choice, witness, then the four join/choice pin pairs at letter indices
    0 and 1. Every conservative responder line dies within eleven moves
    after the opening.
    """

    def __init__(self, struct: SnStructure):
        self.struct = struct
        e = struct.element_of
        self.e_pd1 = e(["p", "d1"])
        self.e_ppd1 = e(["pp", "d1"])
        self.e_both = e(["p", "pp", "d1"])
        self.e_ald1 = e(["al", "d1"])
        self.e_ard2 = e(["ar", "d2"])
        self.e_d = {i: e([f"d{i}"]) for i in (1, 2, 3)}
        self.left_sum = [e([f"bl{i}", f"cl{i}", "al", "d1"]) for i in (0, 1)]
        self.left_pin = [(e([f"bl{i}", "d1"]), e([f"cl{i}", "d1"]))
                         for i in (0, 1)]
        self.right_sum = [e([f"br{i}", f"cr{i}", "ar", "d2"]) for i in (0, 1)]
        self.right_pin = [(e([f"br{i}", "d2"]), e([f"cr{i}", "d2"]))
                          for i in (0, 1)]

    def opening(self) -> Tuple[int, int]:
        return (self.e_ppd1, self.e_both)

    def __call__(self, st: GameState) -> Optional[Move]:
        return (self._kill(st) or self._punish(st) or self._squeeze(st)
                or self._pin(st))

    def _kill(self, st: GameState) -> Optional[Move]:
        """A composition move that loses for the responder outright."""
        net = st.network
        by_src: Dict[str, List[str]] = {}
        for (x, y) in net.top:
            by_src.setdefault(x, []).append(y)
        for (x, y), m1 in net.top.items():
            for z in by_src.get(y, ()):
                m2 = net.top[(y, z)]
                botm = net.bot_mask(x)
                for a in _bits(m1):
                    for b in _bits(m2):
                        c = self.struct.comp(a, b)
                        hits_bot = botm >> c & 1
                        lands_sbot = (x == st.x0 and z == st.y0
                                      and c == st.s_bot)
                        if hits_bot or lands_sbot:
                            return Composition(x, y, z, a, b)
        return None

    def _punish(self, st: GameState) -> Optional[Move]:
        """Two-move refutation of a refusal above a played label.

        With a nonempty S on an edge out of x and S below a refused T, a
        choice move for S plus its own tag lands the bare tag on some edge
        out of x, and then a witness for T against a later tag forces T onto
        an edge out of x, which clashes with the refusal.
        """
        struct, net = self.struct, st.network
        for x, botm in net.bot.items():
            outs = [(y, m) for (x2, y), m in net.top.items() if x2 == x]
            for t in _bits(botm):
                tm = struct.masks[t]
                for y, m in outs:
                    for s in _bits(m):
                        sm = struct.masks[s]
                        if sm == 0 or s == t or sm & tm != sm:
                            continue
                        tag = struct.delta(s)
                        i = int(tag[1])
                        for j in (2, 3):
                            if j <= i or struct.comp(t, self.e_d[j]) != self.e_d[i]:
                                continue
                            for w, wm in outs:
                                if wm >> self.e_d[i] & 1:
                                    return Witness(x, w, t, self.e_d[j])
                            return Choice(x, y, s, self.e_d[i])
        return None

    def _squeeze(self, st: GameState) -> Optional[Move]:
        if st.s_bot != self.e_both:
            return None
        net = st.network
        if net.bot_mask(st.x0) >> self.e_both & 1:
            return None  # refusal recorded; _punish takes over
        if net.top_mask(st.x0, st.y0) >> self.e_ppd1 & 1:
            return Join(st.x0, st.y0, self.e_ppd1, self.e_both)
        return None

    def _pin(self, st: GameState) -> Optional[Move]:
        if st.s_bot != self.e_ppd1:
            return None
        struct, net = self.struct, st.network
        top00 = net.top_mask(st.x0, st.y0)
        if not top00 >> self.e_pd1 & 1:
            return Choice(st.x0, st.y0, self.e_pd1, self.e_ppd1)
        mid = None
        for q in net.nodes:
            if (net.top_mask(st.x0, q) >> self.e_ald1 & 1
                    and net.top_mask(q, st.y0) >> self.e_ard2 & 1):
                mid = q
                break
        if mid is None:
            return Witness(st.x0, st.y0, self.e_ald1, self.e_ard2)
        legs = (((st.x0, mid), self.e_ald1, self.left_sum, self.left_pin),
                ((mid, st.y0), self.e_ard2, self.right_sum, self.right_pin))
        for i in (0, 1):
            for (x, y), base, sums, pins in legs:
                tm = net.top_mask(x, y)
                pb, pc = pins[i]
                if tm >> pb & 1 or tm >> pc & 1:
                    continue
                if tm >> sums[i] & 1:
                    return Choice(x, y, pb, pc)
                if not net.bot_mask(x) >> sums[i] & 1:
                    return Join(x, y, base, sums[i])
        return None


def forall_script_sn(struct: SnStructure) -> ForallScriptSn:
    return ForallScriptSn(struct)


# -- responder -----------------------------------------------------------------


@dataclass(frozen=True)
class ExistsStrategyState:
    """Letter-interval bookkeeping for the hard witness branch.

    delta is the contiguous block of letter indices already committed, split
    into the b-side and c-side picks; k bounds the rounds still to play. The
    survival invariant keeps more than 2**k letter indices uncommitted.
    """

    delta: FrozenSet[int]
    delta_b: FrozenSet[int]
    delta_c: FrozenSet[int]
    k: int

    def invariant_holds(self, letter_count: int) -> bool:
        return letter_count - len(self.delta) > (1 << max(self.k, 0))


def _successor_free(indices: FrozenSet[int]) -> bool:
    return all(i + 1 not in indices for i in indices)


def _contiguous_cover(old: FrozenSet[int], new: FrozenSet[int]) -> FrozenSet[int]:
    """Smallest contiguous index block containing both sets."""
    want = old | new
    if not want:
        return frozenset()
    return frozenset(range(min(want), max(want) + 1))


class ExistsScriptSn:
    """One game per instance: open(), then respond() to each move.

    The opening plays the saturated board when one of its edges separates
    the pair, else a two-node board labelled by a separating prime set from
    the catalog. Saturated boards never change: every move already has its
    witness inside. Prime boards answer joins by absorption or refusal,
    choices by the prime branch plus a fresh landing spot, witnesses by a
    fresh midpoint labelled with upward sets, and keep the letter-interval
    state when a witness splits the left/right decorated letters.
    """

    def __init__(self, struct: SnStructure, rounds: int,
                 primes: Optional[List[PrimeSet]] = None, board=None):
        if rounds < 0:
            raise ValueError("rounds must be nonnegative")
        self.struct = struct
        self.rounds = rounds
        self.mode: Optional[str] = None
        self.iota: Dict[str, int] = {}
        self.state: Optional[ExistsStrategyState] = None
        self.dance: Dict[Tuple[str, str], str] = {}
        # precomputed catalog and board may be shared across instances
        self._primes_cache = primes
        self._fig5_cache = board

    def _primes(self) -> List[PrimeSet]:
        if self._primes_cache is None:
            self._primes_cache = sn_primes(self.struct)
        return self._primes_cache

    def _fig5(self):
        if self._fig5_cache is None:
            self._fig5_cache = build_figure5_network(self.struct)
        return self._fig5_cache

    # -- opening --

    def open(self, a: int, b: int) -> GameState:
        if a == b:
            raise ValueError("opening needs two distinct elements")
        f5 = self._fig5()
        for (x, y), m in f5.network.labelled_edges():
            if (m >> a & 1) != (m >> b & 1):
                on, off = (a, b) if m >> a & 1 else (b, a)
                self.mode = "saturated"
                self.iota = dict(f5.iota)
                return GameState(f5.network, x, y, off, self.rounds)
        # only the saturated board survives unboundedly; the prime-board
        # play is guaranteed for as many rounds as the universe parameter
        guarantee = self.struct.universe.n
        if self.rounds > guarantee:
            raise ValueError(
                f"this opening is only guaranteed for {guarantee} "
                f"rounds, not {self.rounds}")
        pr = separating_prime(self.struct, a, b, self._primes())
        on, off = (a, b) if pr.contains(a) else (b, a)
        net = Network(("x0", "y0"), {("x0", "y0"): pr.members})
        self.mode = "prime"
        self.iota = {"x0": pr.src_role, "y0": pr.dst_role}
        return GameState(net, "x0", "y0", off, self.rounds)

    # -- responses --

    def respond(self, st: GameState, move: Move) -> GameState:
        if isinstance(move, Init):
            raise ValueError("opening moves go through open()")
        if self.mode is None:
            raise ValueError("no opening has been played")
        if self.mode == "saturated":
            return self._respond_saturated(st, move)
        return self._respond_prime(st, move)

    def _keep(self, st: GameState) -> GameState:
        return replace(st, rounds_left=st.rounds_left - 1)

    def _respond_saturated(self, st: GameState, move: Move) -> GameState:
        """Saturation means every move is already answered on the board."""
        struct, net = self.struct, st.network
        if isinstance(move, Join):
            j = struct.join(move.a, move.b)
            if net.top_mask(move.x, move.y) >> j & 1:
                return self._keep(st)
            if net.bot_mask(move.x) >> move.b & 1:
                return self._keep(st)
            raise RuntimeError("board is not closed under the join move")
        if isinstance(move, Choice):
            tm = net.top_mask(move.x, move.y)
            for first, second in ((move.a, move.b), (move.b, move.a)):
                if not tm >> first & 1:
                    continue
                if any(net.top_mask(move.x, w) >> second & 1
                       for w in net.nodes):
                    return self._keep(st)
            raise RuntimeError("board is not saturated for the choice move")
        if isinstance(move, Witness):
            for z in net.nodes:
                if (net.top_mask(move.x, z) >> move.a & 1
                        and net.top_mask(z, move.y) >> move.b & 1):
                    return self._keep(st)
            raise RuntimeError("board is not saturated for the witness move")
        if isinstance(move, Composition):
            c = struct.comp(move.a, move.b)
            if net.top_mask(move.x, move.z) >> c & 1:
                return self._keep(st)
            raise RuntimeError("board is not closed under composition")
        raise TypeError(f"not a move: {move!r}")

    def _respond_prime(self, st: GameState, move: Move) -> GameState:
        struct, net = self.struct, st.network
        nxt = st.rounds_left - 1

        def out(net2: Network) -> GameState:
            return GameState(net2, st.x0, st.y0, st.s_bot, nxt)

        if isinstance(move, Join):
            j = struct.join(move.a, move.b)
            if net.top_mask(move.x, move.y) >> j & 1:
                return self._keep(st)
            # letter-block labels are not upward closed, so same-class sums
            # must be taken on board; refusing one is punishable in two moves
            side = self.dance.get((move.x, move.y))
            if side is not None and j != 0:
                tag = "d1" if side == "left" else "d2"
                if struct.delta(move.b) == tag:
                    grown = out(net.with_top(move.x, move.y, 1 << j))
                    if not grown.lost():
                        return grown
            refused = out(net.with_bot(move.x, 1 << move.b))
            if not refused.lost():
                return refused
            grown = out(net.with_top(move.x, move.y, 1 << j))
            return grown if not grown.lost() else refused
        if isinstance(move, Choice):
            tm = net.top_mask(move.x, move.y)
            plans = []
            err = None
            for first, second in ((move.a, move.b), (move.b, move.a)):
                try:
                    ds = self._split_bookkeeping(move, first)
                except RuntimeError as e:
                    err = e
                    continue
                plans.append((not tm >> first & 1, first, second, ds))
            if not plans and err is not None:
                raise err
            plans.sort(key=lambda p: p[0])
            spots = [fresh_node(net)] + list(net.nodes)
            for _, first, second, ds in plans:
                for z in spots:
                    cand = out(net.with_top(move.x, move.y, 1 << first)
                               .with_top(move.x, z, 1 << second))
                    if not cand.lost():
                        if ds is not None:
                            self.state = ds
                        return cand
            # every landing loses; concede with the minimal one
            return out(net.with_top(move.x, move.y, 1 << move.a)
                       .with_top(move.x, spots[0], 1 << move.b))
        if isinstance(move, Witness):
            return self._respond_witness(st, move)
        if isinstance(move, Composition):
            c = struct.comp(move.a, move.b)
            return out(net.with_top(move.x, move.z, 1 << c))
        raise TypeError(f"not a move: {move!r}")

    def _split_bookkeeping(self, move: Choice,
                           first: int) -> Optional[ExistsStrategyState]:
        """Letter-interval state after taking `first`, or None off the dance.

        Raises when the pick would break the successor-free partition or
        commit too much of the index interval for the rounds left.
        """
        side = self.dance.get((move.x, move.y))
        if side is None or self.state is None:
            return None
        u = self.struct.universe
        letters = self.struct.masks[move.a] | self.struct.masks[move.b]
        source = u.BL if side == "left" else u.BR
        partner = u.CL if side == "left" else u.CR
        hit = [i for i in range(u.N)
               if letters >> source[i] & 1 and letters >> partner[i] & 1]
        if not hit:
            return None
        picked_b = bool(self.struct.masks[first]
                        & sum(1 << source[i] for i in hit))
        ds = self.state
        delta = _contiguous_cover(ds.delta, frozenset(hit))
        db, dc = set(ds.delta_b), set(ds.delta_c)
        for i in sorted(delta - ds.delta):
            if i in hit and picked_b:
                db.add(i)
            elif i in hit:
                dc.add(i)
            elif _successor_free(frozenset(db | {i})):
                db.add(i)
            else:
                dc.add(i)
        out = ExistsStrategyState(delta, frozenset(db), frozenset(dc),
                                  ds.k - 1)
        if not _successor_free(out.delta_b) or not _successor_free(out.delta_c):
            raise RuntimeError("letter picks are no longer successor-free")
        if not out.invariant_holds(u.N):
            raise RuntimeError("letter interval budget exhausted")
        return out

    def _irreducibles(self) -> List[int]:
        if not hasattr(self, "_irr_cache"):
            self._irr_cache = [i for i, m in enumerate(self.struct.masks)
                               if m and bin(m).count("1") <= 2]
        return self._irr_cache

    def _decompose(self, a: int, b: int, label: int) -> Tuple[int, int]:
        """Join-irreducible parts below a and b whose product hits the label.

        Primeness of the label guarantees such a pair exists; pairs avoiding
        the two non-prime connector doubletons are preferred.
        """
        struct = self.struct
        u = struct.universe
        am, bm = struct.masks[a], struct.masks[b]
        hard = {u.mask_of(["al", "d1"]), u.mask_of(["ar", "d2"])}
        best: Optional[Tuple[int, int, int]] = None
        for ia in self._irreducibles():
            if struct.masks[ia] & am != struct.masks[ia]:
                continue
            for ib in self._irreducibles():
                if struct.masks[ib] & bm != struct.masks[ib]:
                    continue
                if not label >> struct.comp(ia, ib) & 1:
                    continue
                score = ((struct.masks[ia] not in hard)
                         + (struct.masks[ib] not in hard))
                if best is None or score > best[0]:
                    best = (score, ia, ib)
                if best[0] == 2:
                    return best[1], best[2]
        if best is None:
            raise RuntimeError("no irreducible pair decomposes the witness")
        return best[1], best[2]

    def _respond_witness(self, st: GameState, move: Witness) -> GameState:
        struct, net = self.struct, st.network
        u = struct.universe
        label = net.top_mask(move.x, move.y)
        a0, b0 = self._decompose(move.a, move.b, label)
        hard_l = struct.masks[a0] == u.mask_of(["al", "d1"])
        hard_r = struct.masks[b0] == u.mask_of(["ar", "d2"])
        z = fresh_node(net)
        if hard_l and hard_r:
            left, right = self._dance_labels(move.a, move.b,
                                             st.rounds_left - 1)
            self.dance[(move.x, z)] = "left"
            self.dance[(z, move.y)] = "right"
        elif hard_l or hard_r:
            left, right, fellback = self._one_sided_labels(
                st, move, hard_l, b0 if hard_l else a0)
            if fellback:
                key = (move.x, z) if hard_l else (z, move.y)
                self.dance[key] = "left" if hard_l else "right"
        else:
            left = principal_upset(struct, a0)
            right = principal_upset(struct, b0)
        self.iota[z] = 2 if struct.delta(b0) == "d2" else 3
        net2 = (net.with_node(z).with_top(move.x, z, left)
                .with_top(z, move.y, right))
        return GameState(net2, st.x0, st.y0, st.s_bot, st.rounds_left - 1)

    def _dance_labels(self, a: int, b: int, k: int) -> Tuple[int, int]:
        """Both legs constrained to the committed letter block.

        The left leg may only carry sets inside the left connector, the tag
        and the committed decorated letters; the right leg mirrors it. That
        keeps every later composition inside the opening label.
        """
        struct = self.struct
        u = struct.universe
        am, bm = struct.masks[a], struct.masks[b]
        lhit = frozenset(i for i in range(u.N)
                         if am >> u.BL[i] & 1 or am >> u.CL[i] & 1)
        rhit = frozenset(i for i in range(u.N)
                         if bm >> u.BR[i] & 1 or bm >> u.CR[i] & 1)
        delta = _contiguous_cover(frozenset(), lhit | rhit)
        db = frozenset(i for i in delta if am >> u.BL[i] & 1
                       or bm >> u.BR[i] & 1)
        dc = delta - db
        ds = ExistsStrategyState(delta, db, dc, k)
        if not ds.invariant_holds(u.N):
            raise RuntimeError("letter interval budget exhausted")
        self.state = ds
        allowed_l = (1 << u.AL | 1 << u.D1
                     | sum(1 << u.BL[i] for i in db)
                     | sum(1 << u.CL[i] for i in dc) | am)
        allowed_r = (1 << u.AR | 1 << u.D2
                     | sum(1 << u.BR[i] for i in db)
                     | sum(1 << u.CR[i] for i in dc) | bm)
        left = right = 0
        for i, m in enumerate(struct.masks):
            if m and m & allowed_l == m:
                left |= 1 << i
            if m and m & allowed_r == m:
                right |= 1 << i
        return left, right

    def _one_sided_labels(self, st: GameState, move: Witness,
                          hard_left: bool,
                          soft_part: int) -> Tuple[int, int, bool]:
        """One leg needs a prime replacement for the connector upset.

        The catalog is searched for a prime set that contains the played
        element and whose products against the soft leg stay inside the
        edge label; the letter-block primes qualify whenever the soft part
        pins a decorated letter, which covers every legal move from a fresh
        opening. Off-script states may leave no qualifying prime, so the
        hard leg then falls back to the constrained letter-block label,
        which stays consistent at the cost of closure.
        """
        struct = self.struct
        edge_label = st.network.top_mask(move.x, move.y)
        soft = principal_upset(struct, soft_part)
        hard_elem = move.a if hard_left else move.b
        for pr in self._primes():
            if not pr.contains(hard_elem):
                continue
            pair = (pr.members, soft) if hard_left else (soft, pr.members)
            if _label_comp_within(struct, pair[0], pair[1], edge_label):
                return pair + (False,)
        dance_l, dance_r = self._dance_labels(move.a, move.b,
                                              st.rounds_left - 1)
        return ((dance_l, soft, True) if hard_left
                else (soft, dance_r, True))


def _label_comp_within(struct: SnStructure, left: int, right: int,
                       target: int) -> bool:
    """Every product of the two label sets stays inside the target label."""
    rows = np.fromiter(_bits(left), dtype=np.int64)
    cols = np.fromiter(_bits(right), dtype=np.int64)
    if rows.size == 0 or cols.size == 0:
        return True
    inside = np.zeros(struct.size, dtype=bool)
    inside[np.fromiter(_bits(target), dtype=np.int64)] = True
    sub = struct.as_arrays()["comp"][np.ix_(rows, cols)]
    return bool(inside[sub].all())


def separating_prime(struct: SnStructure, a: int, b: int,
                     primes: Optional[List[PrimeSet]] = None) -> PrimeSet:
    """First catalog prime containing exactly one of the two elements."""
    if primes is None:
        primes = sn_primes(struct)
    for pr in primes:
        if pr.contains(a) != pr.contains(b):
            return pr
    raise RuntimeError(f"catalog separates no pair for ({a}, {b})")


def exists_script_sn(struct: SnStructure, rounds: int) -> ExistsScriptSn:
    return ExistsScriptSn(struct, rounds)
