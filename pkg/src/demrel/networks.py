"""Labelled networks over a finite structure: closure, saturation, extraction.

A network carries a set of nodes, an edge labelling (x,y) -> set of element
names, and a node labelling x -> set of elements forbidden on edges leaving
x. Label sets are stored as bitmasks over element indices of the governing
structure; the structure itself is passed to whatever operation needs the
tables. Networks are value objects: all mutators return fresh instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .relations import Base, Relation
from .repsearch import RepMap
from .sn import SnStructure, bl_prime_mask, br_prime_mask, upset_mask


@dataclass(frozen=True)
class Network:
    nodes: tuple = ()
    top: Dict[Tuple[str, str], int] = field(default_factory=dict)
    bot: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise ValueError("duplicate node ids")
        for (x, y), m in self.top.items():
            if x not in known or y not in known:
                raise ValueError(f"edge ({x},{y}) uses an unknown node")
            if m == 0:
                raise ValueError("zero edge labels must be left out")
        for x, m in self.bot.items():
            if x not in known:
                raise ValueError(f"node label on unknown node {x}")

    # comparisons ignore dict insertion order, so nothing else to do

    def top_mask(self, x: str, y: str) -> int:
        return self.top.get((x, y), 0)

    def bot_mask(self, x: str) -> int:
        return self.bot.get(x, 0)

    def has_node(self, z: str) -> bool:
        return z in self.nodes

    def with_node(self, z: str) -> "Network":
        if z in self.nodes:
            return self
        return Network(self.nodes + (z,), dict(self.top), dict(self.bot))

    def with_top(self, x: str, y: str, mask: int) -> "Network":
        """Union mask into the (x,y) edge label, creating nodes as needed."""
        net = self.with_node(x).with_node(y)
        new = net.top_mask(x, y) | mask
        if new == net.top_mask(x, y):
            return net
        top = dict(net.top)
        top[(x, y)] = new
        return Network(net.nodes, top, dict(net.bot))

    def with_bot(self, x: str, mask: int) -> "Network":
        net = self.with_node(x)
        new = net.bot_mask(x) | mask
        if new == net.bot_mask(x):
            return net
        bot = dict(net.bot)
        bot[x] = new
        return Network(net.nodes, dict(net.top), bot)

    def extends(self, other: "Network") -> bool:
        if not set(other.nodes) <= set(self.nodes):
            return False
        if any(self.top_mask(x, y) & m != m for (x, y), m in other.top.items()):
            return False
        return all(self.bot_mask(x) & m == m for x, m in other.bot.items())

    def labelled_edges(self):
        return list(self.top.items())

    def top_names(self, x: str, y: str, struct) -> tuple:
        m = self.top_mask(x, y)
        return tuple(e for i, e in enumerate(struct.elements) if m >> i & 1)

    def __str__(self):
        return (f"network({len(self.nodes)} nodes, "
                f"{len(self.top)} labelled edges)")


@dataclass(frozen=True)
class IndexedNetwork:
    """Network plus a partial node index; the sink node stays unindexed."""

    network: Network
    iota: Dict[str, int]


def mask_of_elements(struct, names: Iterable[str]) -> int:
    m = 0
    for name in names:
        m |= 1 << struct.index(name)
    return m


def _bool_row(mask: int, width: int) -> np.ndarray:
    out = np.zeros(width, dtype=bool)
    while mask:
        b = (mask & -mask).bit_length() - 1
        out[b] = True
        mask &= mask - 1
    return out


def is_consistent(net: Network, state=None) -> bool:
    """No forbidden element labels an outgoing edge; optionally, the game
    state's forbidden label stays off the initial edge."""
    for (x, _y), m in net.top.items():
        if m & net.bot_mask(x):
            return False
    if state is not None:
        if net.top_mask(state.x0, state.y0) >> state.s_bot & 1:
            return False
    return True


def _edge_arrays(net: Network, width: int):
    return {edge: _bool_row(m, width) for edge, m in net.top.items()}


def _require_game_signature(struct):
    sig = struct.signature
    if not (sig.has_join and sig.has_comp):
        raise ValueError("networks need join and comp tables")


def is_closed(net: Network, struct) -> bool:
    """Labels absorb joins up to forbidden elements and compose along paths."""
    _require_game_signature(struct)
    tabs = struct.as_arrays()
    jt, ct = tabs["join"], tabs["comp"]
    ne = struct.size
    tarr = _edge_arrays(net, ne)
    for (x, y), t in tarr.items():
        rows = jt[np.flatnonzero(t), :]
        if not (t[rows] | _bool_row(net.bot_mask(x), ne)[None, :]).all():
            return False
    by_src: Dict[str, list] = {}
    for (x, y) in tarr:
        by_src.setdefault(x, []).append(y)
    for (x, y), t1 in tarr.items():
        i1 = np.flatnonzero(t1)
        for z in by_src.get(y, ()):
            i2 = np.flatnonzero(tarr[(y, z)])
            t3 = tarr.get((x, z))
            if t3 is None:
                return False
            if not t3[ct[np.ix_(i1, i2)]].all():
                return False
    return True


def is_saturated(net: Network, struct, state=None) -> bool:
    """Consistent, closed, and every label decomposes: joins split into a
    member present on the edge with both halves witnessed somewhere out of x,
    compositions split through an intermediate node."""
    if not is_consistent(net, state) or not is_closed(net, struct):
        return False
    tabs = struct.as_arrays()
    jt, ct = tabs["join"], tabs["comp"]
    ne = struct.size
    tarr = _edge_arrays(net, ne)
    out_any: Dict[str, np.ndarray] = {}
    for (x, _y), t in tarr.items():
        acc = out_any.get(x)
        out_any[x] = t.copy() if acc is None else acc | t
    for (x, y), t in tarr.items():
        joined = t[jt]
        if (joined & ~(t[:, None] | t[None, :])).any():
            return False
        o = out_any[x]
        if (joined & ~(o[:, None] & o[None, :])).any():
            return False
        composed = t[ct]
        if not composed.any():
            continue
        mids = [z for z in net.nodes
                if (x, z) in tarr and (z, y) in tarr]
        if not mids:
            return False
        heads = np.stack([tarr[(x, z)] for z in mids]).astype(np.float32)
        tails = np.stack([tarr[(z, y)] for z in mids]).astype(np.float32)
        witnessed = (heads.T @ tails) > 0.5
        if (composed & ~witnessed).any():
            return False
    return True


def is_indexed(inet: IndexedNetwork, struct) -> bool:
    """Every label on an edge out of a node with index i has domain tag d_i."""
    net = inet.network
    for (x, _y), m in net.top.items():
        i = inet.iota.get(x)
        if i is None:
            return False
        want = f"d{i}"
        while m:
            b = (m & -m).bit_length() - 1
            if struct.delta(b) != want:
                return False
            m &= m - 1
    return True


def extract_representation(net: Network, struct, check: bool = True) -> RepMap:
    """Read each element off as its set of carrying edges.

    On a saturated network this is a join/composition homomorphism; it need
    not be injective (a network may fail to discriminate some pair)."""
    if check and not is_saturated(net, struct):
        raise ValueError("network is not saturated")
    base = Base(tuple(net.nodes))
    pairs: Dict[int, list] = {}
    for (x, y), m in net.top.items():
        while m:
            b = (m & -m).bit_length() - 1
            pairs.setdefault(b, []).append((x, y))
            m &= m - 1
    assignment = {name: Relation.from_pairs(base, pairs.get(i, ()))
                  for i, name in enumerate(struct.elements)}
    return RepMap(struct, base, assignment)


# -- the hand-built saturated network ------------------------------------------


def _rho_tag(rho: Iterable[int]) -> str:
    return "".join(str(i) for i in sorted(rho)) or "e"


def fig5_w_name(left: str, right: str) -> str:
    return f"w_{left}_{right}"


def fig5_v_name(rho: Iterable[int], rho2: Iterable[int]) -> str:
    return f"v_{_rho_tag(rho)}_{_rho_tag(rho2)}"


def build_figure5_network(struct: SnStructure,
                          max_nodes: int = 128) -> IndexedNetwork:
    """The explicit saturated network over an S_n instance.

    Nodes: x, y, z, u, a sink, one w node per left/right letter pair whose
    product is pp, and one v node per pair of index subsets. Every edge label
    is a prime upward-closed set; the sink forbids everything, other nodes
    forbid the empty element and every element with the wrong domain tag.
    Discriminates all element pairs except {pp,d1} vs {p,pp,d1}.
    """
    u = struct.universe
    n_nodes = 5 + 6 * u.N + 4 ** u.N
    if n_nodes > max_nodes:
        raise ValueError(
            f"n={u.n} needs {n_nodes} nodes, over the budget of {max_nodes}")

    up = lambda gen: upset_mask(struct, 1 << gen)
    p_up, pp_up = up(u.P), up(u.PP)
    d1_up, d2_up, d3_up = up(u.D1), up(u.D2), up(u.D3)
    d2_strict = d2_up & ~(
        1 << struct.mask_index[u.closure_mask(1 << u.D2)])

    top: Dict[Tuple[str, str], int] = {
        ("x", "y"): pp_up,
        ("x", "z"): pp_up | p_up,
        ("x", "u"): pp_up | p_up,
        ("x", "sink"): d1_up,
        ("y", "sink"): d3_up,
        ("z", "sink"): d3_up,
        ("u", "sink"): d3_up,
    }
    nodes = ["x", "y", "z", "u", "sink"]
    iota = {"x": 1, "y": 3, "z": 3, "u": 3}

    for left in u.BL + u.CL:
        partners = u.pp_partner[left]
        while partners:
            right = (partners & -partners).bit_length() - 1
            w = fig5_w_name(u.generators[left], u.generators[right])
            nodes.append(w)
            iota[w] = 2
            top[("x", w)] = up(left)
            top[(w, "y")] = up(right)
            top[(w, "sink")] = d2_up
            top[(w, "u")] = d2_strict
            partners &= partners - 1

    subsets = [frozenset(i for i in range(u.N) if bits >> i & 1)
               for bits in range(1 << u.N)]
    for rho in subsets:
        left_label = bl_prime_mask(struct, rho)
        for rho2 in subsets:
            v = fig5_v_name(rho, rho2)
            nodes.append(v)
            iota[v] = 2
            top[("x", v)] = left_label
            top[(v, "z")] = br_prime_mask(struct, rho2)
            top[(v, "sink")] = d2_up
            top[(v, "u")] = d2_strict

    assert len(nodes) == n_nodes

    by_delta = {"d1": 0, "d2": 0, "d3": 0}
    for i in range(struct.size):
        tag = struct.delta(i)
        if tag is not None:
            by_delta[tag] |= 1 << i
    everything = (1 << struct.size) - 1
    bot = {"sink": everything}
    for q, i in iota.items():
        bot[q] = everything & ~by_delta[f"d{i}"]

    net = Network(tuple(nodes), top, bot)
    return IndexedNetwork(net, iota)


def discrimination_gaps(net: Network, struct) -> list:
    """Element pairs no edge tells apart, as index pairs (i < j)."""
    signature: Dict[int, list] = {i: [] for i in range(struct.size)}
    for edge_pos, ((_x, _y), m) in enumerate(sorted(net.top.items())):
        while m:
            b = (m & -m).bit_length() - 1
            signature[b].append(edge_pos)
            m &= m - 1
    seen: Dict[tuple, int] = {}
    gaps = []
    for i in range(struct.size):
        key = tuple(signature[i])
        if key in seen:
            gaps.append((seen[key], i))
        else:
            seen[key] = i
    return gaps
