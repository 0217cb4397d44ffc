import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergolab import core, operators as op
from ergolab.angles import Angle
from ergolab.errors import DimensionError, Unsupported


def test_rotation_eigen_relation():
    R = op.rotation("0.3", 4)
    for m in (-4, -1, 0, 2):
        out = R.apply(core.mode(m, 4))
        assert out.coefficient(m) == pytest.approx(np.exp(2j * np.pi * m * 0.3), abs=1e-15)


def test_identity_permutation_and_doubling_indicator():
    G = 5
    ident = op.identity(core.SpatialGrid(G))
    f = core.spatial(np.arange(G, dtype=float))
    assert np.array_equal(ident.apply(f).coeffs, f.coeffs)
    D = op.doubling(G)
    ind1 = core.spatial(np.eye(G)[1])
    # (Tf)(g) = f(2g mod 5): only g = 3 maps to 1
    assert np.array_equal(D.apply(ind1).coeffs, np.eye(G)[3])


def test_basis_mismatch():
    with pytest.raises(DimensionError):
        op.rotation("0.3", 4).apply(core.mode(0, 3))
    with pytest.raises(DimensionError):
        op.doubling(5).apply(core.spatial(np.ones(7)))


def test_power_zero_is_identity(rng):
    f = core.spectral(rng.standard_normal(9) + 0j)
    g = core.spatial(rng.standard_normal(11) + 0j)
    for T, x in ((op.rotation("0.17", 4), f), (op.doubling(11), g),
                 (op.dense_spatial(op.random_doubly_stochastic(11, rng)), g)):
        assert np.array_equal(T.power_apply(0, x).coeffs, x.coeffs)


def test_permutation_order():
    D = op.doubling(101)
    assert D.order == 100
    f = core.spatial(np.random.default_rng(0).standard_normal(101))
    assert np.array_equal(D.power_apply(100, f).coeffs, f.coeffs)
    assert not np.array_equal(D.power_apply(50, f).coeffs, f.coeffs)


def test_rotation_large_power_phase():
    import mpmath

    R = op.rotation(Angle.sqrt2_minus_1(), 1)
    c = R.power_apply(10**6, core.mode(1, 1)).coefficient(1)
    mpmath.mp.dps = 50
    frac = float(mpmath.frac(10**6 * (mpmath.sqrt(2) - 1)))
    got = np.mod(np.angle(c) / (2 * np.pi), 1.0)
    assert abs(got - frac) <= 1e-9


def test_rational_rotation_exact_period():
    R = op.rotation(Fraction(3, 7), 6)
    f = core.spectral(np.arange(13) + 1j)
    assert np.array_equal(R.power_apply(7, f).coeffs, f.coeffs)
    assert R.power_apply(14000, f).coeffs.tobytes() == f.coeffs.tobytes()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["rot", "perm", "dense_sp", "dense_spec", "diag"]))
def test_power_matches_iteration(seed, kind):
    r = np.random.default_rng(seed)
    if kind == "rot":
        T = op.rotation(format(r.random(), ".17f"), 5)
    elif kind == "perm":
        T = op.GridPermutation(r.permutation(13))
    elif kind == "dense_sp":
        T = op.dense_spatial(op.random_doubly_stochastic(9, r))
    elif kind == "dense_spec":
        Q = np.linalg.qr(r.standard_normal((7, 7)) + 1j * r.standard_normal((7, 7)))[0]
        T = op.dense_spectral(Q)
    else:
        T = op.diagonal(r.random(11) * np.exp(2j * np.pi * r.random(11)), 5)
    x = T.basis.dim
    f = core.FunctionVector(T.basis, r.standard_normal(x) + 1j * r.standard_normal(x))
    g = f
    for n in range(1, 65):
        g = T.apply(g)
        if n in (1, 2, 7, 63, 64):
            assert np.max(np.abs(T.power_apply(n, f).coeffs - g.coeffs)) <= 1e-10


def test_dense_power_plan_beyond_block(rng):
    A = op.random_doubly_stochastic(6, rng)
    T = op.dense_spatial(A)
    f = core.spatial(rng.standard_normal(6))
    ref = np.linalg.matrix_power(A, 200) @ f.coeffs
    assert np.max(np.abs(T.power_apply(200, f).coeffs - ref)) <= 1e-12


def test_modulus_kinds():
    D = op.doubling(7)
    assert isinstance(D.modulus(), op.GridPermutation)
    assert np.array_equal(D.modulus().matrix(), D.matrix())
    M = op.dense_spatial(np.array([[-1.0, 2.0], [2.0, -1.0]]))
    assert np.array_equal(M.modulus().matrix().real, [[1, 2], [2, 1]])
    R = op.rotation("0.2", 3)
    assert np.allclose(R.modulus().mu, R.mu)
    with pytest.raises(Unsupported):
        op.diagonal(np.linspace(-1, 1, 7), 3).modulus()
    with pytest.raises(Unsupported):
        op.dense_spectral(np.eye(5)).modulus()


def test_modulus_domination(rng):
    for T in (op.GridPermutation(rng.permutation(10), np.exp(0.3j)),
              op.dense_spatial(rng.standard_normal((10, 10)) * 0.2)):
        f = core.spatial(rng.standard_normal(10) + 1j * rng.standard_normal(10))
        mod = T.modulus()
        absf = core.spatial(np.abs(f.coeffs))
        for n in (1, 3, 8):
            lhs = np.abs(T.power_apply(n, f).coeffs)
            rhs = mod.power_apply(n, absf).coeffs.real
            assert np.all(lhs <= rhs + 1e-12)


def test_permutation_preserves_norms(rng):
    P = op.GridPermutation(rng.permutation(31))
    f = core.spatial(rng.standard_normal(31))
    g = P.apply(f)
    for p in (1, 2, math.inf):
        assert core.norm(g, p) == core.norm(f, p)


def test_ds_reports():
    rep = op.validate_dunford_schwartz(op.doubling(11))
    assert rep.worst_l1_ratio == 1.0 and rep.worst_linf_ratio == 1.0 and rep.passed
    half = op.validate_dunford_schwartz(op.dense_spatial(0.5 * np.eye(6)))
    assert half.worst_l1_ratio == pytest.approx(0.5) and half.worst_linf_ratio == pytest.approx(0.5)
    assert half.passed
    bad = op.validate_dunford_schwartz(op.dense_spatial(np.array([[1.0, 1.0], [0.0, 1.0]])))
    assert not bad.passed


def test_doubly_stochastic_passes(rng):
    for _ in range(5):
        T = op.dense_spatial(op.random_doubly_stochastic(15, rng))
        assert op.validate_dunford_schwartz(T, tol=1e-10, rng=rng).passed


def test_unimodular_multiple_stays_ds(rng):
    for T in (op.doubling(9), op.dense_spatial(op.random_doubly_stochastic(8, rng))):
        lam = np.exp(2j * np.pi * rng.random())
        assert op.validate_dunford_schwartz(T.scale(lam), rng=rng).passed


def test_rational_rotation_validates_exactly():
    rep = op.validate_dunford_schwartz(op.rotation(Fraction(1, 3), 4))
    assert rep.passed


def test_fix_modulus():
    # the doubling map mod 5 fixes 0 and cycles {1, 2, 4, 3}: two invariant indicators
    assert op.check_fix_modulus_trivial(op.doubling(5)) is False
    M = op.doubling(5).matrix().real
    w = np.linalg.eigvals(M)
    assert np.sum(np.abs(w - 1) < 1e-9) == 2
    assert op.check_fix_modulus_trivial(op.shift_permutation(1, 12)) is True
    assert op.check_fix_modulus_trivial(op.identity(core.SpatialGrid(4))) is False
    assert op.check_fix_modulus_trivial(op.rotation(Fraction(1, 3), 2)) is True
    assert op.check_fix_modulus_trivial(op.rotation(Fraction(1, 3), 3)) is False
    assert op.check_fix_modulus_trivial(op.rotation(Angle.sqrt2_minus_1(), 30)) is True


def test_operator_invariants():
    with pytest.raises(ValueError):
        op.GridPermutation([0, 0, 1])
    with pytest.raises(ValueError):
        op.diagonal([2.0, 0, 0], 1)
    with pytest.raises(ValueError):
        op.dense_spatial(np.array([[np.inf]]))
