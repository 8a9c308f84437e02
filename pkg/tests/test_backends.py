"""The compiled and numpy kernel paths must agree on every operation."""

import numpy as np
import pytest

from cbdiv import Bandwidths, backend, cbd_ustat, cbd_vstat, default_bandwidths, normalized_cbd
from cbdiv.resampling import GaussianAffineSampler, cpt_permutation

from conftest import random_dataset

pytestmark = pytest.mark.skipif(not backend.NUMBA_AVAILABLE, reason="numba not installed")


def _both(fn):
    previous = backend.active()
    try:
        backend.use("numba")
        a = fn()
        backend.use("numpy")
        b = fn()
    finally:
        backend.use(previous)
    return a, b


def test_env_flag_selects_backend(monkeypatch):
    import importlib

    assert backend.active() in ("numba", "numpy")
    with pytest.raises(ValueError):
        backend.use("cython")


def test_vstat_agrees(rng):
    for k in range(10):
        ds = random_dataset(rng, int(rng.integers(5, 40)), tie_stress=(k % 2 == 0))
        bw = default_bandwidths(ds)
        a, b = _both(lambda: cbd_vstat(ds, bw).value)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


def test_normalized_agrees(rng):
    ds = random_dataset(rng, 25)
    bw = default_bandwidths(ds)
    a, b = _both(lambda: normalized_cbd(ds, bw))
    assert a == pytest.approx(b, rel=1e-12)


def test_ustat_exact_agrees(rng):
    ds = random_dataset(rng, 10)
    bw = Bandwidths(h1=4.0, h2=4.0, h0=1.0)
    a, b = _both(lambda: cbd_ustat(ds, bw, mode="exact").value)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-15)


def test_ustat_incomplete_agrees_on_same_tuples(rng):
    ds = random_dataset(rng, 20)
    bw = Bandwidths(h1=4.0, h2=4.0, h0=1.0)
    a, b = _both(
        lambda: cbd_ustat(ds, bw, mode="incomplete", tuples=2000, rng=np.random.default_rng(3)).value
    )
    assert a == pytest.approx(b, rel=1e-10, abs=1e-15)


def test_cpt_chain_is_bitwise_identical(rng):
    ds = random_dataset(rng, 12)
    sam = GaussianAffineSampler(beta=[[1.0]], mu=[0.0], sigma=1.0)
    a, b = _both(lambda: cpt_permutation(ds, sam, np.random.default_rng(5), mh_steps=400).tolist())
    assert a == b
