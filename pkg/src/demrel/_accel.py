"""Numba gate. DEMREL_NUMBA=1 forces jit, =0 disables it, unset autodetects."""

import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only on stripped installs
    numba = None


def _flag():
    v = os.environ.get("DEMREL_NUMBA", "auto").strip().lower()
    if v in ("1", "true", "on", "yes"):
        return True
    if v in ("0", "false", "off", "no"):
        return False
    return None


def numba_enabled():
    """Whether the jitted kernel paths should be used."""
    f = _flag()
    if f is None:
        return numba is not None
    if f and numba is None:
        raise RuntimeError("DEMREL_NUMBA=1 but numba is not importable")
    return f


def maybe_njit(*jit_args, **jit_kws):
    """@njit when numba is importable, identity decorator otherwise.

    Decoration is unconditional so the loop kernels stay importable either
    way; dispatch between jitted loops and the numpy paths happens at call
    sites via numba_enabled().
    """
    if len(jit_args) == 1 and callable(jit_args[0]) and not jit_kws:
        fn = jit_args[0]
        return numba.njit(cache=True)(fn) if numba is not None else fn

    def wrap(fn):
        if numba is not None:
            return numba.njit(*jit_args, cache=True, **jit_kws)(fn)
        return fn

    return wrap
