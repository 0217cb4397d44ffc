import math

import numpy as np
import pytest

from ergolab import core, jdlg, operators as op
from ergolab.errors import IllConditionedEigenbasis, NotPowerBounded


def _projector_invariants(D, T=None, tol=1e-9):
    Pr = D.reversible_projector.matrix()
    Ps = D.stable_projector.matrix()
    d = Pr.shape[0]
    assert np.max(np.abs(Pr @ Pr - Pr)) <= tol
    assert np.max(np.abs(Ps @ Ps - Ps)) <= tol
    assert np.max(np.abs(Pr @ Ps)) <= tol
    assert np.max(np.abs(Pr + Ps - np.eye(d))) <= tol
    for lam, v in D.reversible_pairs:
        assert abs(abs(lam) - 1) <= D.tol_unimodular
        assert np.max(np.abs(Pr @ v.coeffs - v.coeffs)) <= 1e-9
    if T is not None:
        A = T.matrix()
        assert np.max(np.abs(Pr @ A - A @ Pr)) <= 1e-8


def test_permutation_all_reversible(rng):
    T = op.GridPermutation(rng.permutation(12))
    D = jdlg.decompose(T)
    assert D.stable_dim == 0
    assert np.max(np.abs(D.stable_projector.matrix())) <= 1e-10
    assert len(D.reversible_pairs) == 12
    _projector_invariants(D, T)
    for lam, v in D.reversible_pairs:
        assert np.allclose(T.apply(v).coeffs, lam * v.coeffs, atol=1e-12)


def test_contractive_diagonal_all_stable():
    D = jdlg.decompose(op.diagonal(np.full(7, 0.5), 3))
    assert D.reversible_dim == 0
    assert np.max(np.abs(D.reversible_projector.matrix())) == 0


def test_rotation_unitary_all_reversible():
    D = jdlg.decompose(op.rotation("0.123", 5))
    assert D.stable_dim == 0
    assert np.allclose(D.reversible_projector.matrix(), np.eye(11), atol=1e-10)


def test_block_example():
    alpha = 0.3141
    A = np.diag([np.exp(2j * np.pi * alpha), 0.3])
    T = op.dense_spatial(A)
    D = jdlg.decompose(T)
    assert D.reversible_dim == 1
    assert np.allclose(D.reversible_projector.matrix(), np.diag([1, 0]), atol=1e-12)
    f = core.spatial(np.array([2.0 - 1j, 0.7]))
    assert np.allclose(jdlg.project_reversible(D, f).coeffs, [2 - 1j, 0])
    assert np.allclose(jdlg.project_stable(D, f).coeffs, [0, 0.7])


def test_non_normal_spectral_projectors(rng):
    # unimodular part coupled to a Jordan block inside the disc
    S = np.array([[1.0, 0.4, 0.2], [0, 0.5, 1.0], [0, 0, 0.5]], dtype=complex)
    Q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    T = op.dense_spatial(Q @ S @ Q.T)
    D = jdlg.decompose(T)
    assert D.reversible_dim == 1
    _projector_invariants(D, T)
    # the stable part decays under powers (down to rounding in the unimodular direction)
    x = core.spatial(rng.standard_normal(3))
    s = jdlg.project_stable(D, x)
    assert core.norm(s, 2) > 0.1
    assert core.norm(T.power_apply(200, s), 2) < 1e-12


def test_reconstruction(rng):
    T = op.dense_spatial(op.random_doubly_stochastic(8, rng))
    D = jdlg.decompose(T)
    f = core.spatial(rng.standard_normal(8))
    back = jdlg.project_reversible(D, f) + jdlg.project_stable(D, f)
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-9
    _projector_invariants(D, T)


def test_guards():
    with pytest.raises(NotPowerBounded):
        jdlg.decompose(op.dense_spatial(np.diag([1.1, 0.2])))
    with pytest.raises(NotPowerBounded):
        jdlg.decompose(op.dense_spatial(np.array([[1.0, 1.0], [0.0, 1.0]])))
    near = np.array([[1.0, 1.0], [0.0, 1.0 - 1e-10]])
    with pytest.raises((IllConditionedEigenbasis, NotPowerBounded)):
        jdlg.decompose(op.dense_spatial(near), tol_unimodular=1e-9)
    with pytest.raises(IllConditionedEigenbasis):
        jdlg.decompose(op.dense_spatial(np.array([[1.0, 1e6], [0.0, -1.0 + 1e-3j]]) @ np.eye(2)),
                       tol_unimodular=1e-3, cond_max=1e3)


def test_stability_curve_examples(rng):
    # eigenvalue 1, phi = f: constant curve ||f||^2
    T = op.shift_permutation(1, 6)
    f = core.constant(core.SpatialGrid(6), 2.0)
    s = jdlg.stability_curve(T, f, f, 100, [1, 10, 100])
    assert np.allclose(s.values, 4.0)
    # T = 0.5 I: geometric decay
    H = op.dense_spatial(0.5 * np.eye(4))
    g = core.spatial(rng.standard_normal(4))
    c = jdlg.stability_curve(H, g, g, 1000, [10, 1000])
    pair = abs(core.inner(g, g))
    for N, v in zip(c.checkpoints, c.values):
        assert v <= pair / N * (1 + 1e-12)


def test_stability_curve_doubling_is_periodic():
    # every orbit of a grid permutation is periodic: the curve settles to the cycle mean
    D = op.doubling(101)
    r = np.random.default_rng(3)
    x = r.standard_normal(101)
    f = core.spatial(x - x.mean())
    phi = core.spatial(r.standard_normal(101))
    c = jdlg.stability_curve(D, f, phi, 10000, [100, 10000])
    assert c.values[1] == pytest.approx(c.values[0], rel=1e-12)
    assert c.values[0] > 0.01


def test_density_one_fraction():
    assert jdlg.density_one_fraction(np.zeros(50), 0.1) == 0.0
    assert jdlg.density_one_fraction(np.ones(50), 0.5) == 1.0
    n = np.arange(1, 10001)
    a = (np.round(np.sqrt(n)) ** 2 == n).astype(float)
    assert jdlg.density_one_fraction(a, 0.5, 10000) == 0.01


def test_csv_summary():
    D = jdlg.decompose(op.shift_permutation(1, 4))
    lines = D.to_csv().splitlines()
    assert lines[0] == "re,im,multiplicity"
    assert lines[1].startswith("1.0,0.0,1")
    assert lines[-1] == "stable_dim,0,"
    D2 = jdlg.decompose(op.dense_spatial(np.diag([1.0, 1.0, 0.2])))
    assert D2.eigenvalue_summary() == [(1 + 0j, 2)]


def _random_split_matrix(r, d):
    while True:
        k = int(r.integers(1, d))
        uni = np.exp(2j * np.pi * r.random(k))
        inner = r.random(d - k) * 0.85 * np.exp(2j * np.pi * r.random(d - k))
        ev = np.concatenate([uni, inner])
        gaps = np.abs(ev[:, None] - ev[None, :]) + np.eye(d) * 10
        if gaps.min() >= 0.1:
            break
    V = r.standard_normal((d, d)) + 1j * r.standard_normal((d, d))
    V /= np.linalg.norm(V, axis=0)
    return V @ np.diag(ev) @ np.linalg.inv(V), V, ev, k


def test_spectral_vs_n_class_oracle():
    r = np.random.default_rng(99)
    for _ in range(10):
        d = int(r.integers(2, 9))
        A, V, ev, k = _random_split_matrix(r, d)
        if np.linalg.cond(V) > 1e3:
            continue
        T = op.dense_spectral(A) if d % 2 else op.dense_spatial(A)
        D = jdlg.decompose(T)
        assert D.reversible_dim == k
        v = jdlg.project_stable(D, core.FunctionVector(T.basis, r.standard_normal(d) + 0j))
        for _ in range(3):
            phi = core.FunctionVector(T.basis, r.standard_normal(d) + 1j * r.standard_normal(d))
            c = jdlg.stability_curve(T, v, phi, 10**4, [10**4])
            scale = core.norm(v, 2) * core.norm(phi, 2)
            assert c.final < 0.01 * max(scale, 1e-300) + 1e-15
