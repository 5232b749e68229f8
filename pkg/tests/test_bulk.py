import numpy as np
import pytest

from demrel import bulk
from demrel.relations import Base, Relation

BASES = {n: Base(tuple(f"p{i}" for i in range(n))) for n in (2, 3)}


def scalar(op, n, rb, sb):
    base = BASES[n]
    r, s = Relation(base, int(rb)), Relation(base, int(sb))
    if op == "compose":
        return r.compose(s).bits
    if op == "demonic_compose":
        return r.demonic_compose(s).bits
    if op == "demonic_join":
        return r.demonic_join(s).bits
    if op == "refines":
        return r.demonic_refines(s)
    if op == "eq3":
        return r.has_common_refinement(s)
    raise AssertionError(op)


OPS = ["compose", "demonic_compose", "demonic_join", "refines", "eq3"]


@pytest.mark.parametrize("op", OPS)
def test_paths_agree_exhaustively_n2(op):
    R, S = bulk.pair_grid(2)
    a = bulk._run(op, R, S, 2, force="numpy")
    b = bulk._run(op, R, S, 2, force="numba")
    assert np.array_equal(a, b)
    for i in range(0, R.size, 7):  # scalar cross-check on a stride
        assert scalar(op, 2, R[i], S[i]) == a[i]


@pytest.mark.parametrize("op", OPS)
def test_paths_agree_sampled_n3(op):
    rng = np.random.default_rng(20260815)
    R = rng.integers(0, 1 << 9, size=4000).astype(np.uint32)
    S = rng.integers(0, 1 << 9, size=4000).astype(np.uint32)
    a = bulk._run(op, R, S, 3, force="numpy")
    b = bulk._run(op, R, S, 3, force="numba")
    assert np.array_equal(a, b)
    for i in range(0, 4000, 101):
        assert scalar(op, 3, R[i], S[i]) == a[i]


def test_meet_all_matches_scalar_where_defined():
    R, S = bulk.pair_grid(2)
    defined_np, meet_np = bulk.meet_all(R, S, 2, force="numpy")
    defined_nb, meet_nb = bulk.meet_all(R, S, 2, force="numba")
    assert np.array_equal(defined_np, defined_nb)
    assert np.array_equal(meet_np[defined_np], meet_nb[defined_nb])
    base = BASES[2]
    for i in range(0, R.size, 5):
        r, s = Relation(base, int(R[i])), Relation(base, int(S[i]))
        if defined_np[i]:
            assert r.demonic_meet(s).bits == int(meet_np[i])
        else:
            assert not r.has_common_refinement(s)


def test_dom_all():
    R = np.array([0b000000000, 0b000000011, 0b100000000], dtype=np.uint32)
    assert list(bulk.dom_all(R, 3)) == [0, 1, 4]


def test_rejects_oversized_base():
    with pytest.raises(ValueError):
        bulk.all_codes(6)
