import math
from fractions import Fraction

import numpy as np
import pytest

from ergolab import core, operators as op
from ergolab.angles import Angle
from ergolab.entangle import (
    EntangledChain,
    bohr_weight,
    cesaro_abs_average,
    cesaro_average,
    dual_functionals,
    entangled_term,
    extract_lambda_sequence,
    orbit_decomposition,
    weighted_average,
)
from ergolab.errors import AliasingError, DimensionError, NonUnimodularGamma, NotDunfordSchwartz

ALPHA = Angle.sqrt2_minus_1()


def test_chain_validation():
    R = op.rotation("0.2", 3)
    with pytest.raises(ValueError):
        EntangledChain([R, R], [])
    with pytest.raises(DimensionError):
        EntangledChain([R, op.rotation("0.2", 4)], [op.identity(R.basis)])
    with pytest.raises(NotDunfordSchwartz):
        EntangledChain([op.dense_spatial(np.array([[1.0, 1.0], [0.0, 1.0]]))])
    bad = op.dense_spatial(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert EntangledChain([bad], check="off").a == 0


def test_term_examples():
    M = 3
    R = op.rotation(ALPHA, M)
    f = core.mode(1, M)
    plain = EntangledChain([R])
    assert np.allclose(entangled_term(plain, 5, f).coeffs, R.power_apply(5, f).coeffs)
    ch = EntangledChain([R, R], [op.mode_projector([1], M)])
    a = float(ALPHA)
    for n in (1, 7, 1000):
        t = entangled_term(ch, n, f)
        assert t.coefficient(1) == pytest.approx(np.exp(2j * np.pi * a * 2 * n), abs=1e-12)
    zero = EntangledChain([R, R], [op.zero(R.basis)])
    assert np.all(entangled_term(zero, 3, f).coeffs == 0)


def test_identity_chain_average(rng):
    I = op.identity(core.SpatialGrid(9))
    f = core.spatial(rng.standard_normal(9))
    s = cesaro_average(EntangledChain([I, I, I], [I, I]), f, 500)
    for v in s.values:
        assert np.allclose(v.coeffs, f.coeffs, atol=1e-15)


def test_rotation_geometric_bound():
    M = 4
    R = op.rotation(ALPHA, M)
    ch = EntangledChain([R, R], [op.mode_projector([1], M)])
    s = cesaro_average(ch, core.mode(1, M), 5000, [10, 100, 1000, 5000])
    q = abs(1 - np.exp(4j * np.pi * float(ALPHA)))
    for N, v in zip(s.checkpoints, s.values):
        assert core.norm(v, 2) <= 2 / (N * q) + 1e-15


def test_permutation_chain_periodicity(rng):
    P = op.GridPermutation(rng.permutation(12))
    L = P.order
    ch = EntangledChain([P, P], [op.dense_spatial(op.random_doubly_stochastic(12, rng))])
    f = core.spatial(rng.standard_normal(12))
    s = cesaro_average(ch, f, 10 * L, [L * k for k in range(1, 11)])
    for v in s.values[1:]:
        assert np.max(np.abs(v.coeffs - s.values[0].coeffs)) <= 1e-13


def test_linearity(rng):
    M = 5
    R = op.rotation("0.1234567", M)
    A = op.dense_spectral(np.diag(rng.random(11)))
    ch = EntangledChain([R, R], [A])
    f = core.spectral(rng.standard_normal(11) + 1j * rng.standard_normal(11))
    g = core.spectral(rng.standard_normal(11) + 1j * rng.standard_normal(11))
    cp = [1, 10, 300]
    sf, sg, sfg = (cesaro_average(ch, x, 300, cp) for x in (f, g, f + g))
    for a, b, c in zip(sf.values, sg.values, sfg.values):
        assert np.max(np.abs((a + b).coeffs - c.coeffs)) <= 1e-10


def test_threads_bit_identical(rng):
    D = op.doubling(101)
    A = op.dense_spatial(op.random_doubly_stochastic(101, rng))
    f = core.spatial(rng.standard_normal(101))
    ch = EntangledChain([D, D], [A])
    cp = [1, 100, 999, 5000]
    base = cesaro_average(ch, f, 5000, cp)
    for threads in (2, 4):
        other = cesaro_average(ch, f, 5000, cp, threads=threads)
        assert other.full_csv() == base.full_csv()
    ab1 = cesaro_abs_average(ch, f, 3000, [3000], threads=1)
    ab4 = cesaro_abs_average(ch, f, 3000, [3000], threads=4)
    assert ab1.values[0].tobytes() == ab4.values[0].tobytes()


def test_block_size_does_not_change_bits(rng):
    R = op.rotation(ALPHA, 6)
    f = core.spectral(rng.standard_normal(13) + 0j)
    ch = EntangledChain([R])
    a = cesaro_average(ch, f, 4000, [4000], block=1024)
    b = cesaro_average(ch, f, 4000, [4000], block=77)
    assert a.full_csv() == b.full_csv()


def test_abs_average_examples():
    M = 3
    R = op.rotation(ALPHA, M)
    ch = EntangledChain([R])
    z = cesaro_abs_average(ch, core.zeros(core.SpectralFourier(M)), 50)
    assert all(np.all(v == 0) for v in z.values)
    ones = cesaro_abs_average(ch, core.mode(1, M), 200, [1, 200])
    for v in ones.values:
        assert np.allclose(v, 1.0, atol=1e-12)
    assert ones.basis.G == 4 * 7
    with pytest.raises(AliasingError):
        cesaro_abs_average(ch, core.mode(1, M), 10, G_eval=5)


def test_mean_zero_rotation_bound(rng):
    M = 6
    R = op.rotation(ALPHA, M)
    c = rng.standard_normal(13) + 1j * rng.standard_normal(13)
    c[M] = 0
    f = core.spectral(c)
    s = cesaro_average(EntangledChain([R]), f, 20000, [100, 20000])
    m = np.arange(-M, M + 1)
    with np.errstate(divide="ignore"):
        w = np.where(m != 0, 2 / np.abs(1 - np.exp(2j * np.pi * m * float(ALPHA))), 0)
    for N, v in zip(s.checkpoints, s.values):
        bound = np.sum(np.abs(c) * w) / N
        assert core.sup_bound(v) <= bound + 1e-12


def test_transitive_permutation_limit_is_constant(rng):
    G = 16
    C = op.shift_permutation(3, G)
    assert op.check_fix_modulus_trivial(C)
    f = core.spatial(rng.standard_normal(G))
    s = cesaro_average(EntangledChain([C]), f, 16 * 50, [16 * 50])
    v = s.final.coeffs
    assert np.ptp(v.real) <= 1e-12
    assert abs(v[0]) <= core.norm(f, 1) + 1e-12


def test_bohr_weight_examples():
    assert np.allclose(bohr_weight([1.0], [1.0], 10).values, 1.0)
    w = bohr_weight([-1.0], [1.0], 6).values
    assert np.allclose(w, [(-1) ** n for n in range(1, 7)])
    beta = 0.3819660112501051
    w = bohr_weight([np.exp(2j * np.pi * beta), 1.0], [0.7, 0.3], 10000)
    assert np.max(np.abs(w.values)) <= 1.0 + 1e-12
    with pytest.raises(NonUnimodularGamma):
        bohr_weight([1.1], [1.0], 3)


def test_weighted_average_identities(rng):
    M = 4
    R = op.rotation(ALPHA, M)
    f = core.spectral(rng.standard_normal(9) + 0j)
    plain = cesaro_average(EntangledChain([R]), f, 3000, [10, 3000])
    w1 = weighted_average(R, f, bohr_weight([1.0], [1.0], 3000), 3000, [10, 3000])
    for a, b in zip(plain.values, w1.values):
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-15
    gamma = np.exp(2j * np.pi * 0.123)
    wg = weighted_average(R, f, bohr_weight([gamma], [1.0], 3000), 3000, [10, 3000])
    sc = cesaro_average(EntangledChain([R.scale(gamma)]), f, 3000, [10, 3000])
    for a, b in zip(wg.values, sc.values):
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-12
    with pytest.raises(ValueError):
        weighted_average(R, f, bohr_weight([1.0], [1.0], 10), 20)


def test_bohr_weight_limit():
    from ergolab.limit import point_spectrum, predict_weighted_limit

    M = 3
    R = op.rotation(ALPHA, M)
    c = np.zeros(7, complex)
    c[M + 1], c[M - 2] = 1.0, 0.5
    f = core.spectral(c)
    # gamma_1 resonates with e_1, gamma_2 with e_{-2}
    g1 = np.exp(-2j * np.pi * float(ALPHA))
    g2 = np.exp(4j * np.pi * float(ALPHA))
    gammas, qs = [g1, g2], [0.6, 0.4]
    N = 100000
    s = weighted_average(R, f, bohr_weight(gammas, qs, N), N, [N])
    pred = predict_weighted_limit(point_spectrum(R), f, gammas, qs)
    assert pred.coefficient(1) == pytest.approx(0.6) and pred.coefficient(-2) == pytest.approx(0.2)
    assert np.max(np.abs(s.final.coeffs - pred.coeffs)) <= 1e-3


def test_dual_functionals_and_orbit_split(rng):
    basis = core.SpatialGrid(8)
    gs = [core.spatial(rng.standard_normal(8)) for _ in range(3)]
    phis = dual_functionals(gs)
    for i, g in enumerate(gs):
        for j, p in enumerate(phis):
            assert core.inner(g, p) == pytest.approx(float(i == j), abs=1e-12)
    A = op.dense_spatial(op.random_doubly_stochastic(8, rng))
    P = op.GridPermutation(rng.permutation(8))
    f = core.spatial(rng.standard_normal(8))
    lam, r = orbit_decomposition(A, P, f, gs, 5, phis)
    for g in gs:
        assert abs(core.inner(r, g)) <= 1e-12
    h = A.apply(P.power_apply(5, f))
    rebuilt = r
    for c, g in zip(lam, gs):
        rebuilt = rebuilt + c * g
    assert np.allclose(rebuilt.coeffs, h.coeffs)


def test_extract_lambda_sequence(rng):
    M = 3
    R = op.rotation(ALPHA, M)
    I = op.identity(R.basis)
    f = core.mode(1, M)
    ex = extract_lambda_sequence((I, R), f, [core.mode(1, M)], 500)
    lam = ex.sequences[0].values
    n = np.arange(1, 501)
    assert np.allclose(lam, np.exp(2j * np.pi * float(ALPHA) * n), atol=1e-12)
    assert np.allclose(np.abs(lam), 1.0)
    ortho = extract_lambda_sequence((I, R), f, [core.mode(2, M)], 100)
    assert np.all(ortho.sequences[0].values == 0)
    A = op.dense_spectral(rng.standard_normal((7, 7)) * 0.3)
    g = core.spectral(rng.standard_normal(7) + 1j * rng.standard_normal(7))
    phis = [core.spectral(rng.standard_normal(7) + 0j) for _ in range(3)]
    ex = extract_lambda_sequence((A, R), g, phis, 300)
    assert ex.within_bound
