"""Compiled and pure-Python kernels must agree bit for bit."""
import numpy as np
import pytest

from ergolab import _kernels
from ergolab._kernels import backend_module

try:
    backend_module("cython")
    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False

needs_ext = pytest.mark.skipif(not HAVE_EXT, reason="compiled kernels not built")


def _accumulate(mod, blocks, width, cps):
    s, c = np.zeros(width), np.zeros(width)
    out = np.zeros((len(cps), width))
    pos, start = 0, 0
    for b in blocks:
        pos = mod.compensated_accumulate(np.ascontiguousarray(b), s, c, start, cps, pos, out)
        start += b.shape[0]
    return out, pos


def test_backend_reported():
    assert _kernels.BACKEND in ("cython", "python")


@needs_ext
def test_accumulate_bit_identical(rng):
    data = rng.standard_normal((5000, 7)) * 10.0 ** rng.integers(-8, 8, size=(5000, 1))
    cps = np.array([1, 17, 1024, 3333, 5000], dtype=np.int64)
    blocks = [data[i:i + 613] for i in range(0, 5000, 613)]
    a, pa = _accumulate(backend_module("python"), blocks, 7, cps)
    b, pb = _accumulate(backend_module("cython"), blocks, 7, cps)
    assert pa == pb == len(cps)
    assert a.tobytes() == b.tobytes()


def test_accumulate_block_split_invariant(rng):
    mod = backend_module(_kernels.BACKEND)
    data = rng.standard_normal((4000, 3))
    cps = np.array([10, 999, 4000], dtype=np.int64)
    a, _ = _accumulate(mod, [data], 3, cps)
    b, _ = _accumulate(mod, [data[i:i + 37] for i in range(0, 4000, 37)], 3, cps)
    assert a.tobytes() == b.tobytes()


def test_compensation_beats_naive():
    mod = backend_module(_kernels.BACKEND)
    # 1 + many tiny terms: naive float summation loses all of them
    data = np.full((100001, 1), 1e-16)
    data[0, 0] = 1.0
    out, _ = _accumulate(mod, [data], 1, np.array([100001], dtype=np.int64))
    exact = (1.0 + 1e-11) / 100001
    assert abs(out[0, 0] - exact) <= 1e-16 * exact


@needs_ext
def test_dd_phase_bit_identical(rng):
    ns = rng.integers(1, 10**9, size=2000).astype(np.int64)
    ahi = rng.random(9)
    alo = rng.standard_normal(9) * 1e-17
    outs = []
    for name in ("python", "cython"):
        out = np.empty((ns.shape[0], 9))
        backend_module(name).dd_phase_fraction(ns, ahi, alo, out)
        outs.append(out)
    assert outs[0].tobytes() == outs[1].tobytes()
    assert np.all((outs[0] >= 0) & (outs[0] < 1))


@needs_ext
def test_permutation_gather_identical(rng):
    from ergolab.operators import doubling

    P = doubling(101)
    X = rng.standard_normal((50, 101)) + 1j * rng.standard_normal((50, 101))
    ns = rng.integers(0, 1000, size=50).astype(np.int64)
    outs = []
    for name in ("python", "cython"):
        out = np.empty_like(X)
        backend_module(name).permutation_gather(X, P._members, P._cstart, P._cpos, P._clen, ns, out)
        outs.append(out)
    assert outs[0].tobytes() == outs[1].tobytes()
