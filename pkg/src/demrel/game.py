"""The representation game: moves, conservative responses, bounded solving.

One player names algebraic facts (a join to split, a composition to witness),
the other must grow the network without tripping consistency or putting the
forbidden label on the initial edge. States are immutable values. The solver
is an exact minimax over the conservative response sets, memoized on a
relabelling-canonical form of the network; the memo only ever holds complete
entries, so sibling branches may fill it concurrently.

Round accounting: a game of `rounds` rounds allows the opening move plus
`rounds` follow-up moves; each challenger move costs one round.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .networks import Network, _bool_row, is_consistent

EXISTS_WINS = "EXISTS_WINS"
FORALL_WINS = "FORALL_WINS"
BUDGET = "BUDGET"


# -- states and moves ----------------------------------------------------------


@dataclass(frozen=True)
class GameState:
    """Board plus the initial edge, the forbidden label and rounds to go.

    The forbidden element is stored here, not in the network's node labels;
    opening networks carry no node labels at all. s_bot is an element index,
    or -1 before the opening move fixes it.
    """

    network: Network
    x0: str
    y0: str
    s_bot: int
    rounds_left: int

    def lost(self) -> bool:
        """Lost for the responder: forbidden label reached or inconsistent."""
        if self.s_bot >= 0 and (
                self.network.top_mask(self.x0, self.y0) >> self.s_bot & 1):
            return True
        return not is_consistent(self.network)


@dataclass(frozen=True)
class Init:
    a: int
    b: int


@dataclass(frozen=True)
class Choice:
    x: str
    y: str
    a: int
    b: int


@dataclass(frozen=True)
class Join:
    x: str
    y: str
    a: int
    b: int


@dataclass(frozen=True)
class Witness:
    x: str
    y: str
    a: int
    b: int


@dataclass(frozen=True)
class Composition:
    x: str
    y: str
    z: str
    a: int
    b: int


Move = Union[Init, Choice, Join, Witness, Composition]


def fresh_node(net: Network) -> str:
    """Deterministic name for the next node: n2, n3, ... in creation order."""
    return f"n{len(net.nodes)}"


def format_move(move: Move, struct) -> str:
    e = struct.elements
    if isinstance(move, Init):
        return f"init {e[move.a]} {e[move.b]}"
    if isinstance(move, Choice):
        return f"choice {move.x} {move.y} {e[move.a]} {e[move.b]}"
    if isinstance(move, Join):
        return f"join {move.x} {move.y} {e[move.a]} {e[move.b]}"
    if isinstance(move, Witness):
        return f"witness {move.x} {move.y} {e[move.a]} {e[move.b]}"
    return (f"composition {move.x} {move.y} {move.z} "
            f"{e[move.a]} {e[move.b]}")


# -- move enumeration ----------------------------------------------------------


def legal_moves(st: GameState, struct) -> List[Move]:
    """All challenger moves applicable to the current network, deduplicated.

    Choice moves are unordered in (a,b); the others are distinct as tuples.
    Before the opening move (empty network) the only moves are openings.
    """
    net = st.network
    if not net.nodes:
        n = struct.size
        return [Init(a, b) for a in range(n) for b in range(a + 1, n)]
    tabs = struct.as_arrays()
    jt, ct = tabs["join"], tabs["comp"]
    n = struct.size
    moves: List[Move] = []
    rows = {edge: _bool_row(m, n) for edge, m in net.top.items()}
    for (x, y), t in rows.items():
        joined = t[jt]
        ai, bi = np.nonzero(np.triu(joined))
        moves.extend(Choice(x, y, int(a), int(b)) for a, b in zip(ai, bi))
        for a in np.flatnonzero(t):
            moves.extend(Join(x, y, int(a), b) for b in range(n))
        ai, bi = np.nonzero(t[ct])
        moves.extend(Witness(x, y, int(a), int(b)) for a, b in zip(ai, bi))
    by_src: Dict[str, list] = {}
    for (x, y) in rows:
        by_src.setdefault(x, []).append(y)
    for (x, y), t1 in rows.items():
        for z in by_src.get(y, ()):
            t2 = rows[(y, z)]
            for a in np.flatnonzero(t1):
                moves.extend(Composition(x, y, z, int(a), int(b))
                             for b in np.flatnonzero(t2))
    return moves


def exists_responses(st: GameState, struct, move: Move) -> List[GameState]:
    """The conservative (minimal) responder alternatives for one move.

    Opening: the two orientations of the named pair. Choice: both branch
    orders, each with every existing node and one fresh node receiving the
    second element. Join: extend the edge with the sum, or forbid the new
    element at the source. Witness: every existing node and one fresh node
    as the midpoint. Composition: the single forced extension.
    """
    net = st.network
    nxt = st.rounds_left - 1
    if isinstance(move, Init):
        if net.nodes:
            raise ValueError("opening move on a started game")
        if move.a == move.b:
            raise ValueError("opening needs two distinct elements")
        out = []
        for on_edge, forbidden in ((move.a, move.b), (move.b, move.a)):
            fresh = Network(("x0", "y0"), {("x0", "y0"): 1 << on_edge})
            out.append(GameState(fresh, "x0", "y0", forbidden, nxt))
        return out
    if isinstance(move, Choice):
        if not net.top_mask(move.x, move.y) >> struct.join(move.a, move.b) & 1:
            raise ValueError("choice sum is not on the edge")
        out = []
        stop = fresh_node(net)
        for first, second in ((move.a, move.b), (move.b, move.a)):
            for z in net.nodes + (stop,):
                n2 = (net.with_top(move.x, move.y, 1 << first)
                      .with_top(move.x, z, 1 << second))
                out.append(GameState(n2, st.x0, st.y0, st.s_bot, nxt))
        return out
    if isinstance(move, Join):
        if not net.top_mask(move.x, move.y) >> move.a & 1:
            raise ValueError("join element is not on the edge")
        grown = net.with_top(move.x, move.y, 1 << struct.join(move.a, move.b))
        refused = net.with_bot(move.x, 1 << move.b)
        return [GameState(grown, st.x0, st.y0, st.s_bot, nxt),
                GameState(refused, st.x0, st.y0, st.s_bot, nxt)]
    if isinstance(move, Witness):
        if not net.top_mask(move.x, move.y) >> struct.comp(move.a, move.b) & 1:
            raise ValueError("witness composite is not on the edge")
        out = []
        stop = fresh_node(net)
        for z in net.nodes + (stop,):
            n2 = (net.with_top(move.x, z, 1 << move.a)
                  .with_top(z, move.y, 1 << move.b))
            out.append(GameState(n2, st.x0, st.y0, st.s_bot, nxt))
        return out
    if isinstance(move, Composition):
        if not net.top_mask(move.x, move.y) >> move.a & 1:
            raise ValueError("composition head is not on its edge")
        if not net.top_mask(move.y, move.z) >> move.b & 1:
            raise ValueError("composition tail is not on its edge")
        forced = net.with_top(move.x, move.z,
                              1 << struct.comp(move.a, move.b))
        return [GameState(forced, st.x0, st.y0, st.s_bot, nxt)]
    raise TypeError(f"not a move: {move!r}")


# -- canonical form -------------------------------------------------------------


def canonical_state_key(st: GameState):
    """Relabelling-canonical key: equal keys imply isomorphic states.

    The two initial nodes are pinned; the rest are ordered by an iterated
    neighbourhood signature, ties broken by original name (which may miss
    some isomorphisms but never merges distinct states).
    """
    net = st.network
    fixed = {}
    if st.x0 in net.nodes:
        fixed[st.x0] = "!0"
    if st.y0 in net.nodes:
        fixed.setdefault(st.y0, "!1")
    others = [q for q in net.nodes if q not in fixed]
    color: Dict[str, str] = {q: "" for q in others}

    def ref(q: str) -> str:
        return fixed.get(q) or color[q]

    for _ in range(3):
        nxt = {}
        for q in others:
            outs = sorted((ref(y), m) for (x, y), m in net.top.items()
                          if x == q)
            ins = sorted((ref(x), m) for (x, y), m in net.top.items()
                         if y == q)
            nxt[q] = repr((outs, ins, net.bot_mask(q)))
        color = nxt
    order = sorted(others, key=lambda q: (color[q], q))
    name = dict(fixed)
    name.update({q: f"c{i}" for i, q in enumerate(order)})
    top = tuple(sorted((name[x], name[y], m) for (x, y), m in net.top.items()))
    bot = tuple(sorted((name[x], m) for x, m in net.bot.items()))
    return (st.rounds_left, st.s_bot, top, bot)


# -- exact solving ---------------------------------------------------------------


@dataclass
class GameReport:
    winner: str
    trace: tuple
    states: int
    seconds: float
    # response index the trace's line follows at each step; parallel to
    # trace on FORALL_WINS, empty otherwise
    replies: tuple = ()

    def __str__(self):
        return (f"{self.winner} after {self.states} states "
                f"in {self.seconds:.2f} s")


class _OutOfBudget(Exception):
    pass


def solve_game(struct, rounds: int, opening: Optional[Tuple[int, int]] = None,
               state_budget: int = 1_000_000,
               forall_strategy: Optional[Callable[[GameState],
                                                  Optional[Move]]] = None,
               want_trace: bool = True) -> GameReport:
    """Exact winner of the bounded game, with a replayable trace.

    `rounds` counts the moves after the opening. With `forall_strategy` the
    challenger is restricted to the strategy's single move per state (None
    meaning it has nothing to play); otherwise every legal move is tried.
    Exceeding the state budget reports BUDGET rather than guessing a winner.
    Trace reconstruction re-walks the winning region; pass want_trace=False
    to skip it on large games.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    start = time.monotonic()
    pre = GameState(Network(), "x0", "y0", -1, rounds + 1)
    memo: Dict[object, Tuple[str, Optional[Move]]] = {}
    visited = 0

    def moves_of(st: GameState) -> List[Move]:
        if forall_strategy is not None and st.network.nodes:
            m = forall_strategy(st)
            return [] if m is None else [m]
        if not st.network.nodes and opening is not None:
            return [Init(*opening)]
        return legal_moves(st, struct)

    def value(st: GameState) -> Tuple[str, Optional[Move]]:
        nonlocal visited
        if st.lost():
            return FORALL_WINS, None
        if st.rounds_left == 0:
            return EXISTS_WINS, None
        key = canonical_state_key(st)
        got = memo.get(key)
        if got is not None:
            return got
        visited += 1
        if visited > state_budget:
            raise _OutOfBudget
        result: Tuple[str, Optional[Move]] = (EXISTS_WINS, None)
        for m in moves_of(st):
            if all(value(r)[0] == FORALL_WINS
                   for r in exists_responses(st, struct, m)):
                result = (FORALL_WINS, m)
                break
        memo[key] = result
        return result

    def forall_line(st: GameState) -> tuple:
        if st.lost() or st.rounds_left == 0:
            return ()
        _, m = memo[canonical_state_key(st)]
        if m is None:
            return ()
        responses = exists_responses(st, struct, m)
        # longest resistance makes the most instructive line
        best, best_line, best_i = None, (), 0
        for i, r in enumerate(responses):
            line = forall_line(r) if not r.lost() else ()
            if best is None or len(line) >= len(best_line):
                best, best_line, best_i = r, line, i
        return ((format_move(m, struct), best_i),) + best_line

    def exists_tree(st: GameState) -> tuple:
        if st.lost() or st.rounds_left == 0:
            return ()
        branches = []
        for m in moves_of(st):
            for i, r in enumerate(exists_responses(st, struct, m)):
                if value(r)[0] == EXISTS_WINS:
                    branches.append(
                        (format_move(m, struct), i, exists_tree(r)))
                    break
        return tuple(branches)

    try:
        winner, _ = value(pre)
        trace, replies = (), ()
        if want_trace:
            if winner == FORALL_WINS:
                line = forall_line(pre)
                trace = tuple(s for s, _ in line)
                replies = tuple(i for _, i in line)
            else:
                trace = exists_tree(pre)
    except _OutOfBudget:
        return GameReport(BUDGET, (), visited, time.monotonic() - start)
    return GameReport(winner, trace, visited, time.monotonic() - start,
                      replies)
