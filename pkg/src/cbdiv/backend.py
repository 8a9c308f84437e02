"""Numba/numpy backend selection for the hot numeric kernels.

The compiled path is the default. Set ``CBD_NUMBA=0`` (or ``false``/``off``)
to force the pure-numpy fallback, e.g. on machines where numba is unavailable
or while debugging. ``CBD_THREADS`` (or the CLI ``--threads`` flag) caps the
number of threads used by the compiled kernels; results are identical for any
thread count.
"""

from __future__ import annotations

import os
import warnings

# workqueue is the fork-safe threading layer; it also sidesteps noisy TBB
# version checks. Users can still override via the environment.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba
    from numba import njit, prange

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return deco

    def prange(*args):
        return range(*args)


_FALSEY = {"0", "false", "off", "no"}


def _env_wants_numba() -> bool:
    return os.environ.get("CBD_NUMBA", "1").strip().lower() not in _FALSEY


_active = "numba" if (NUMBA_AVAILABLE and _env_wants_numba()) else "numpy"
if _env_wants_numba() and not NUMBA_AVAILABLE:  # pragma: no cover
    warnings.warn("numba is not installed; falling back to the numpy backend")


def active() -> str:
    """Name of the backend currently in use: ``"numba"`` or ``"numpy"``."""
    return _active


def use(name: str) -> None:
    """Select the kernel backend (``"numba"`` or ``"numpy"``) at runtime."""
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    _active = name


def using_numba() -> bool:
    return _active == "numba"


def set_threads(count: int | None) -> None:
    """Cap worker threads for the compiled kernels (no-op on the numpy path)."""
    if count is None:
        count = _threads_from_env()
    if count is None or not NUMBA_AVAILABLE:
        return
    count = max(1, min(int(count), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(count)


def _threads_from_env() -> int | None:
    raw = os.environ.get("CBD_THREADS")
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        return None


set_threads(None)
