"""All-pairs relation kernels over small bases.

Relations are integer codes (pair (x,y) at bit x*n+y), batched in uint32
arrays. Two implementations of every kernel: a pure-numpy row-sweep and a
numba per-code loop; numba_enabled() picks the active one. Bases up to n=5
fit the dtype.
"""

from __future__ import annotations

import numpy as np

from ._accel import maybe_njit, numba_enabled

MAX_POINTS = 5


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_POINTS:
        raise ValueError(f"base size {n} outside 1..{MAX_POINTS}")


def all_codes(n: int) -> np.ndarray:
    """Every relation code over an n-point base, ascending."""
    _check_n(n)
    return np.arange(1 << (n * n), dtype=np.uint32)


def pair_grid(n: int):
    """Flat (R, S) arrays covering the full code x code square."""
    codes = all_codes(n)
    m = codes.size
    return np.repeat(codes, m), np.tile(codes, m)


# -- numpy paths -----------------------------------------------------------


def _np_dom(R, n):
    rowmask = np.uint32((1 << n) - 1)
    out = np.zeros_like(R)
    for x in range(n):
        row = (R >> np.uint32(n * x)) & rowmask
        out |= (row != 0).astype(np.uint32) << np.uint32(x)
    return out


def _np_compose(R, S, n):
    rowmask = np.uint32((1 << n) - 1)
    out = np.zeros_like(R)
    for x in range(n):
        rrow = (R >> np.uint32(n * x)) & rowmask
        acc = np.zeros_like(R)
        for y in range(n):
            sel = ((rrow >> np.uint32(y)) & 1).astype(bool)
            srow = (S >> np.uint32(n * y)) & rowmask
            acc |= np.where(sel, srow, 0).astype(np.uint32)
        out |= acc << np.uint32(n * x)
    return out


def _np_demonic_compose(R, S, n):
    rowmask = np.uint32((1 << n) - 1)
    ds = _np_dom(S, n)
    comp = _np_compose(R, S, n)
    out = np.zeros_like(R)
    for x in range(n):
        rrow = (R >> np.uint32(n * x)) & rowmask
        keep = (rrow & ~ds) == 0
        crow = (comp >> np.uint32(n * x)) & rowmask
        out |= np.where(keep, crow, 0).astype(np.uint32) << np.uint32(n * x)
    return out


def _np_demonic_join(R, S, n):
    rowmask = np.uint32((1 << n) - 1)
    dm = _np_dom(R, n) & _np_dom(S, n)
    u = R | S
    out = np.zeros_like(R)
    for x in range(n):
        keep = ((dm >> np.uint32(x)) & 1).astype(bool)
        urow = (u >> np.uint32(n * x)) & rowmask
        out |= np.where(keep, urow, 0).astype(np.uint32) << np.uint32(n * x)
    return out


def _np_refines(R, S, n):
    rowmask = np.uint32((1 << n) - 1)
    dr, ds = _np_dom(R, n), _np_dom(S, n)
    ok = (ds & ~dr) == 0
    for x in range(n):
        inds = ((ds >> np.uint32(x)) & 1).astype(bool)
        rrow = (R >> np.uint32(n * x)) & rowmask
        srow = (S >> np.uint32(n * x)) & rowmask
        ok &= ~inds | ((rrow & ~srow) == 0)
    return ok


def _np_eq3(R, S, n):
    return (_np_dom(R, n) & _np_dom(S, n)) == _np_dom(R & S, n)


def _np_meet(R, S, n):
    rowmask = np.uint32((1 << n) - 1)
    dr, ds = _np_dom(R, n), _np_dom(S, n)
    out = R & S
    for x in range(n):
        rrow = (R >> np.uint32(n * x)) & rowmask
        srow = (S >> np.uint32(n * x)) & rowmask
        no_s = ((ds >> np.uint32(x)) & 1) == 0
        no_r = ((dr >> np.uint32(x)) & 1) == 0
        add = (np.where(no_s, rrow, 0) | np.where(no_r, srow, 0)).astype(np.uint32)
        out |= add << np.uint32(n * x)
    return out


# -- numba paths -----------------------------------------------------------


@maybe_njit
def _nb_kernels(R, S, n, which, out_code, out_flag):
    rowmask = (1 << n) - 1
    for i in range(R.size):
        r = np.int64(R[i])
        s = np.int64(S[i])
        dr = 0
        ds = 0
        for x in range(n):
            if (r >> (n * x)) & rowmask:
                dr |= 1 << x
            if (s >> (n * x)) & rowmask:
                ds |= 1 << x
        if which == 0:  # compose
            o = 0
            for x in range(n):
                row = (r >> (n * x)) & rowmask
                acc = 0
                for y in range(n):
                    if (row >> y) & 1:
                        acc |= (s >> (n * y)) & rowmask
                o |= acc << (n * x)
            out_code[i] = o
        elif which == 1:  # demonic compose
            o = 0
            for x in range(n):
                row = (r >> (n * x)) & rowmask
                if row == 0 or (row & ~ds) & rowmask:
                    continue
                acc = 0
                for y in range(n):
                    if (row >> y) & 1:
                        acc |= (s >> (n * y)) & rowmask
                o |= acc << (n * x)
            out_code[i] = o
        elif which == 2:  # demonic join
            o = 0
            dm = dr & ds
            for x in range(n):
                if (dm >> x) & 1:
                    o |= (((r | s) >> (n * x)) & rowmask) << (n * x)
            out_code[i] = o
        elif which == 3:  # refines
            ok = (ds & ~dr) & rowmask == 0
            if ok:
                for x in range(n):
                    if (ds >> x) & 1:
                        row = (r >> (n * x)) & rowmask
                        if row & ~((s >> (n * x)) & rowmask) & rowmask:
                            ok = False
                            break
            out_flag[i] = ok
        elif which == 4:  # eq3
            dboth = 0
            for x in range(n):
                if ((r & s) >> (n * x)) & rowmask:
                    dboth |= 1 << x
            out_flag[i] = dboth == (dr & ds)
        else:  # meet (value only; caller gates on eq3)
            o = r & s
            for x in range(n):
                if not (ds >> x) & 1:
                    o |= ((r >> (n * x)) & rowmask) << (n * x)
                if not (dr >> x) & 1:
                    o |= ((s >> (n * x)) & rowmask) << (n * x)
            out_code[i] = o


_NB_IDS = {"compose": 0, "demonic_compose": 1, "demonic_join": 2,
           "refines": 3, "eq3": 4, "meet": 5}
_NP_FNS = {"compose": _np_compose, "demonic_compose": _np_demonic_compose,
           "demonic_join": _np_demonic_join, "refines": _np_refines,
           "eq3": _np_eq3, "meet": _np_meet}
_FLAG_OPS = {"refines", "eq3"}


def _run(op: str, R, S, n: int, force: str | None = None):
    _check_n(n)
    R = np.ascontiguousarray(R, dtype=np.uint32)
    S = np.ascontiguousarray(S, dtype=np.uint32)
    use_numba = numba_enabled() if force is None else force == "numba"
    if not use_numba:
        return _NP_FNS[op](R, S, n)
    out_code = np.zeros(R.shape, dtype=np.uint32)
    out_flag = np.zeros(R.shape, dtype=np.bool_)
    _nb_kernels(R.ravel(), S.ravel(), n, _NB_IDS[op],
                out_code.ravel(), out_flag.ravel())
    return out_flag if op in _FLAG_OPS else out_code


def dom_all(R, n: int):
    return _np_dom(np.asarray(R, dtype=np.uint32), n)


def compose_all(R, S, n, force=None):
    return _run("compose", R, S, n, force)


def demonic_compose_all(R, S, n, force=None):
    return _run("demonic_compose", R, S, n, force)


def demonic_join_all(R, S, n, force=None):
    return _run("demonic_join", R, S, n, force)


def refines_all(R, S, n, force=None):
    return _run("refines", R, S, n, force)


def eq3_all(R, S, n, force=None):
    return _run("eq3", R, S, n, force)


def meet_all(R, S, n, force=None):
    """Meet codes plus a definedness mask (Eq-3); undefined slots carry junk."""
    return _run("eq3", R, S, n, force), _run("meet", R, S, n, force)
