"""Game engine: moves, conservative responses, bounded minimax.

Frozen regression constants: conservative response counts (Init 2, Join 2,
Composition 1, Witness k+1 and Choice 2(k+1) on a k-node board) follow the
move definitions; the lat2 outcomes below were computed by the exact solver
and checked by hand on the 2-element board.
"""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from demrel.game import (
    BUDGET,
    EXISTS_WINS,
    FORALL_WINS,
    Choice,
    Composition,
    GameState,
    Init,
    Join,
    Witness,
    canonical_state_key,
    exists_responses,
    format_move,
    fresh_node,
    legal_moves,
    solve_game,
)
from demrel.networks import Network
from demrel.sn import build_sn
from demrel.structures import FiniteStructure, Signature


def fin(name, elements, join=None, meet=None, comp=None):
    return FiniteStructure(
        name, elements,
        Signature(has_join=join is not None, has_meet=meet is not None),
        join_table=join, meet_table=meet, comp_table=comp)


ONE = fin("one", ["a"], join=[[0]], comp=[[0]])

# join-semilattice with 0 on top (demonic order: smaller domain wins)
LAT2 = fin("lat2", ["0", "a"], join=[[0, 0], [0, 1]], comp=[[0, 0], [0, 1]])


@pytest.fixture(scope="module")
def s1():
    return build_sn(1)


def opened(struct, a, b, rounds=3):
    """First orientation of the opening: a on the edge, b forbidden."""
    pre = GameState(Network(), "x0", "y0", -1, rounds + 1)
    return exists_responses(pre, struct, Init(a, b))[0]


# -- states and losing conditions -------------------------------------------


def test_lost_on_forbidden_label():
    net = Network(("x0", "y0"), {("x0", "y0"): 0b11})
    assert GameState(net, "x0", "y0", 0, 2).lost()
    assert not GameState(net, "x0", "y0", -1, 2).lost()


def test_lost_on_inconsistency():
    net = Network(("x0", "y0"), {("x0", "y0"): 0b01}, {"x0": 0b01})
    assert GameState(net, "x0", "y0", -1, 2).lost()


def test_fresh_node_names_follow_node_count():
    assert fresh_node(Network(("x0", "y0"))) == "n2"
    assert fresh_node(Network(("x0", "y0", "n2"))) == "n3"


# -- responses: counts and shapes -------------------------------------------


def test_init_has_two_orientations():
    pre = GameState(Network(), "x0", "y0", -1, 3)
    resp = exists_responses(pre, LAT2, Init(0, 1))
    assert len(resp) == 2
    assert {st.s_bot for st in resp} == {0, 1}
    for st in resp:
        on = 1 - st.s_bot
        assert st.network.top_mask("x0", "y0") == 1 << on
        assert st.rounds_left == 2


def test_join_has_two_responses():
    st = opened(LAT2, 0, 1)
    grown, refused = exists_responses(st, LAT2, Join("x0", "y0", 0, 1))
    assert grown.network.top_mask("x0", "y0") == 0b01  # 0+a = 0 absorbed
    assert refused.network.bot_mask("x0") == 0b10


def test_witness_offers_every_node_plus_fresh():
    st = opened(LAT2, 0, 1)
    resp = exists_responses(st, LAT2, Witness("x0", "y0", 0, 0))
    assert len(resp) == len(st.network.nodes) + 1
    mids = [r.network for r in resp]
    assert any(n.has_node("n2") for n in mids)
    for r in resp:
        assert r.network.extends(st.network)


def test_choice_offers_both_orders_times_landing_spots():
    st = opened(LAT2, 0, 1)
    resp = exists_responses(st, LAT2, Choice("x0", "y0", 0, 0))
    assert len(resp) == 2 * (len(st.network.nodes) + 1)


def test_composition_is_forced():
    st = opened(LAT2, 0, 1)
    st = exists_responses(st, LAT2, Witness("x0", "y0", 0, 0))[0]
    resp = exists_responses(st, LAT2, Composition("x0", "x0", "y0", 0, 0))
    assert len(resp) == 1
    assert resp[0].network.top_mask("x0", "y0") >> 0 & 1


def test_responses_decrement_rounds():
    st = opened(LAT2, 0, 1, rounds=5)
    for r in exists_responses(st, LAT2, Join("x0", "y0", 0, 1)):
        assert r.rounds_left == st.rounds_left - 1


# -- responses: legality errors ---------------------------------------------


def test_init_rejected_on_started_game():
    st = opened(LAT2, 0, 1)
    with pytest.raises(ValueError, match="started"):
        exists_responses(st, LAT2, Init(0, 1))


def test_init_needs_distinct_elements():
    pre = GameState(Network(), "x0", "y0", -1, 3)
    with pytest.raises(ValueError, match="distinct"):
        exists_responses(pre, LAT2, Init(1, 1))


def test_choice_sum_must_be_on_edge():
    st = opened(LAT2, 1, 0)  # edge carries only a
    with pytest.raises(ValueError, match="choice sum"):
        exists_responses(st, LAT2, Choice("x0", "y0", 0, 0))


def test_join_element_must_be_on_edge():
    st = opened(LAT2, 0, 1)
    with pytest.raises(ValueError, match="join element"):
        exists_responses(st, LAT2, Join("x0", "y0", 1, 0))


def test_witness_composite_must_be_on_edge():
    st = opened(LAT2, 1, 0)
    with pytest.raises(ValueError, match="witness composite"):
        exists_responses(st, LAT2, Witness("x0", "y0", 0, 0))


def test_composition_operands_must_sit_on_edges():
    st = opened(LAT2, 0, 1)
    with pytest.raises(ValueError, match="composition"):
        exists_responses(st, LAT2, Composition("x0", "y0", "y0", 0, 0))


# -- legal move generation ---------------------------------------------------


def test_empty_network_offers_only_openings():
    pre = GameState(Network(), "x0", "y0", -1, 3)
    moves = legal_moves(pre, LAT2)
    assert moves == [Init(0, 1)]


def test_opened_moves_touch_the_initial_edge():
    st = opened(LAT2, 0, 1)
    moves = legal_moves(st, LAT2)
    assert all(not isinstance(m, Init) for m in moves)
    # joins: one per (edge element, partner); choices need the sum on the
    # edge; with only 0 on the edge the a+b=0 splits are (0,0) and (0,a)
    joins = [m for m in moves if isinstance(m, Join)]
    assert {(m.a, m.b) for m in joins} == {(0, 0), (0, 1)}
    chs = [m for m in moves if isinstance(m, Choice)]
    assert {(m.a, m.b) for m in chs} == {(0, 0), (0, 1)}
    wits = [m for m in moves if isinstance(m, Witness)]
    assert {(m.a, m.b) for m in wits} == {(0, 0), (0, 1), (1, 0)}
    assert not [m for m in moves if isinstance(m, Composition)]


def test_moves_after_witness_include_compositions():
    st = opened(LAT2, 0, 1)
    st = [r for r in exists_responses(st, LAT2, Witness("x0", "y0", 0, 0))
          if r.network.has_node("n2")][0]
    comps = [m for m in legal_moves(st, LAT2) if isinstance(m, Composition)]
    assert Composition("x0", "n2", "y0", 0, 0) in comps


def test_connector_witness_demand_needs_the_split_first(s1):
    ald1 = s1.element_of(["al", "d1"])
    ard2 = s1.element_of(["ar", "d2"])
    pd1 = s1.element_of(["p", "d1"])
    ppd1 = s1.element_of(["pp", "d1"])
    both = s1.element_of(["p", "pp", "d1"])
    assert s1.comp(ald1, ard2) == pd1
    st = opened(s1, both, ppd1, rounds=6)
    # the composite lands on the edge only after the splitting choice
    assert Witness("x0", "y0", ald1, ard2) not in legal_moves(st, s1)
    st = exists_responses(st, s1, Choice("x0", "y0", pd1, ppd1))[0]
    assert Witness("x0", "y0", ald1, ard2) in legal_moves(st, s1)


def test_every_response_extends_the_network(s1):
    ppd1 = s1.element_of(["pp", "d1"])
    both = s1.element_of(["p", "pp", "d1"])
    for struct, st in ((LAT2, opened(LAT2, 0, 1)),
                       (s1, opened(s1, both, ppd1))):
        for m in legal_moves(st, struct)[:300]:
            for r in exists_responses(st, struct, m):
                assert r.network.extends(st.network)


# -- move formatting ----------------------------------------------------------


def test_format_move_uses_element_names():
    assert format_move(Init(0, 1), LAT2) == "init 0 a"
    assert format_move(Choice("x0", "y0", 0, 1), LAT2) == "choice x0 y0 0 a"
    assert format_move(Join("x0", "y0", 1, 0), LAT2) == "join x0 y0 a 0"
    assert format_move(Witness("x0", "y0", 0, 0), LAT2) == "witness x0 y0 0 0"
    assert (format_move(Composition("x0", "n2", "y0", 0, 1), LAT2)
            == "composition x0 n2 y0 0 a")


# -- canonical keys -----------------------------------------------------------


def test_canonical_key_ignores_junk_node_names():
    base = Network(("x0", "y0"), {("x0", "y0"): 0b01})
    via_n2 = base.with_top("x0", "n2", 0b10).with_top("n2", "y0", 0b01)
    via_zz = base.with_top("x0", "zz", 0b10).with_top("zz", "y0", 0b01)
    k1 = canonical_state_key(GameState(via_n2, "x0", "y0", 1, 2))
    k2 = canonical_state_key(GameState(via_zz, "x0", "y0", 1, 2))
    assert k1 == k2


def test_canonical_key_separates_anchors_and_payload():
    net = Network(("x0", "y0"), {("x0", "y0"): 0b01})
    swapped = Network(("x0", "y0"), {("y0", "x0"): 0b01})
    st = GameState(net, "x0", "y0", 1, 2)
    assert canonical_state_key(st) != canonical_state_key(
        GameState(swapped, "x0", "y0", 1, 2))
    assert canonical_state_key(st) != canonical_state_key(
        GameState(net, "x0", "y0", 0, 2))
    assert canonical_state_key(st) != canonical_state_key(
        GameState(net, "x0", "y0", 1, 3))


# -- solving -------------------------------------------------------------------


def test_singleton_structure_is_vacuously_safe():
    rep = solve_game(ONE, 4)
    assert rep.winner == EXISTS_WINS
    assert rep.states == 1


def test_lat2_survives_small_games():
    for rounds in (1, 2, 3):
        rep = solve_game(LAT2, rounds)
        assert rep.winner == EXISTS_WINS, rounds


def test_solver_is_deterministic():
    a = solve_game(LAT2, 3)
    b = solve_game(LAT2, 3)
    assert (a.winner, a.trace) == (b.winner, b.trace)
    assert a.states == b.states


def test_budget_exhaustion_is_its_own_outcome():
    rep = solve_game(LAT2, 3, state_budget=2)
    assert rep.winner == BUDGET
    assert rep.trace == ()


def test_fixed_opening_restricts_the_solve():
    rep = solve_game(LAT2, 1, opening=(0, 1))
    assert rep.winner == EXISTS_WINS


def test_forall_strategy_restriction_can_end_early():
    # a strategy that never finds a move concedes at once
    rep = solve_game(LAT2, 5, forall_strategy=lambda st: None)
    assert rep.winner == EXISTS_WINS
    assert rep.states <= 5


# -- random-play smoke over the big structure ---------------------------------


@settings(max_examples=10, deadline=None)
@given(seed=hs.integers(min_value=0, max_value=10**9))
def test_random_play_keeps_engine_invariants(s1, seed):
    rng = random.Random(seed)
    a = rng.randrange(s1.size)
    b = rng.randrange(s1.size - 1)
    b += b >= a
    st = rng.choice(exists_responses(
        GameState(Network(), "x0", "y0", -1, 4), s1, Init(a, b)))
    for _ in range(3):
        moves = legal_moves(st, s1)
        if not moves:
            break
        resp = exists_responses(st, s1, rng.choice(moves))
        assert resp
        for r in resp[:10]:
            assert r.network.extends(st.network)
            assert r.rounds_left == st.rounds_left - 1
        st = rng.choice(resp)
