import warnings
from fractions import Fraction

import numpy as np
import pytest

from ergolab import core, operators as op
from ergolab.angles import Angle
from ergolab.entangle import EntangledChain, cesaro_average
from ergolab.errors import ClusterAmbiguity, ToleranceOverlap
from ergolab.jdlg import decompose
from ergolab.limit import (
    cluster_unimodular,
    compare_limit,
    fit_decay,
    nonresonant_gap,
    point_spectrum,
    predict_limit,
    resonant_tuples,
    verify_projector,
)

ALPHA = Angle.sqrt2_minus_1()


def _is_projector(P, atol=1e-10):
    return np.allclose(P @ P, P, atol=atol)


def test_rotation_spectrum_labels():
    M = 3
    S = point_spectrum(op.rotation(ALPHA, M))
    assert len(S) == 2 * M + 1 and S.exact and S.symbol == ALPHA.symbol
    assert sorted(e.label[1] for e in S.entries) == list(range(-M, M + 1))
    for e in S.entries:
        m = e.label[1]
        assert e.lam == pytest.approx(np.exp(2j * np.pi * m * float(ALPHA)), abs=1e-14)
        assert e.rank == 1
    assert np.allclose(S.total_projector(), np.eye(2 * M + 1))


def test_rational_rotation_merges_modes():
    S = point_spectrum(op.rotation("1/2", 2))
    assert len(S) == 2
    assert {e.label[0] for e in S.entries} == {Fraction(0), Fraction(1, 2)}
    assert sorted(e.rank for e in S.entries) == [2, 3]


def test_single_cycle_spectrum():
    G = 6
    S = point_spectrum(op.shift_permutation(1, G))
    assert len(S) == G
    for e in S.entries:
        P = e.projector.matrix()
        assert _is_projector(P)
        assert e.rank == 1
        T = op.shift_permutation(1, G).matrix()
        assert np.allclose(T @ P, e.lam * P, atol=1e-12)
    assert np.allclose(S.total_projector(), np.eye(G), atol=1e-12)


def test_contractive_diagonal_has_empty_spectrum():
    S = point_spectrum(op.diagonal(np.full(5, 0.5), 2))
    assert len(S) == 0
    assert np.all(S.total_projector() == 0)


def test_dense_spectrum_matches_reversible_projector(rng):
    for _ in range(10):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, d + 1))
        lam = np.concatenate([np.exp(2j * np.pi * rng.random(k)), 0.6 * rng.random(d - k)])
        V = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        T = op.dense_spatial(V @ np.diag(lam) @ np.linalg.inv(V))
        D = decompose(T)
        S = point_spectrum(T, D)
        assert np.allclose(S.total_projector(), D.reversible_projector.matrix(), atol=1e-8)
        for e in S.entries:
            assert _is_projector(e.projector.matrix(), atol=1e-8)


def test_verify_projector_rate():
    R = op.rotation(ALPHA, 2)
    S = point_spectrum(R)
    for e in S.entries:
        err = verify_projector(R, e.lam, e.projector, N=2000)
        assert err <= 4 / (2000 * 0.01)


def test_cluster_ambiguity():
    assert cluster_unimodular(np.exp(2j * np.pi * np.array([0.1, 0.1 + 1e-9, 0.5])), 1e-6) == [[0, 1], [2]]
    with pytest.raises(ClusterAmbiguity):
        cluster_unimodular(np.exp(2j * np.pi * np.array([0.1, 0.1 + 3e-7])), 1e-6)


def test_resonance_examples():
    flip = point_spectrum(op.rotation("1/2", 1))
    R = resonant_tuples([flip, flip])
    assert len(R) == 2 and R.mode == "exact"
    S = point_spectrum(op.rotation(ALPHA, 2))
    R = resonant_tuples([S, S])
    assert len(R) == 5
    for t in R.tuples:
        assert S.entries[t[0]].label[1] == -S.entries[t[1]].label[1]
    Rn = resonant_tuples([S, S], mode="numeric")
    assert sorted(Rn.tuples) == sorted(R.tuples)
    third = point_spectrum(op.diagonal([np.exp(2j * np.pi / 3)], 0))
    fifth = point_spectrum(op.diagonal([np.exp(2j * np.pi / 5)], 0))
    assert len(resonant_tuples([third, fifth])) == 0
    assert nonresonant_gap([third, fifth], resonant_tuples([third, fifth])) > 0.1


def test_tolerance_overlap():
    a = point_spectrum(op.diagonal([np.exp(2j * np.pi * 3e-10)], 0), tol_sep=1e-12)
    one = point_spectrum(op.diagonal([1.0], 0))
    with pytest.raises(ToleranceOverlap):
        resonant_tuples([a, one], tol_match=1e-9)
    assert len(resonant_tuples([a, one], tol_match=1e-7)) == 1


def test_identity_chain_prediction(rng):
    G = 7
    I = op.identity(core.SpatialGrid(G))
    A0 = op.dense_spatial(op.random_doubly_stochastic(G, rng))
    ch = EntangledChain([I, I], [A0])
    f = core.spatial(rng.standard_normal(G))
    S = point_spectrum(I)
    pred = predict_limit(ch, f, [S, S])
    assert np.allclose(pred.coeffs, A0.apply(f).coeffs, atol=1e-13)


def test_prediction_linear(rng):
    M = 3
    R = op.rotation(ALPHA, M)
    ch = EntangledChain([R, R], [op.dense_spectral(rng.standard_normal((7, 7)) * 0.2)], check="off")
    S = point_spectrum(R)
    f = core.spectral(rng.standard_normal(7) + 0j)
    g = core.spectral(rng.standard_normal(7) + 0j)
    lhs = predict_limit(ch, 2 * f + g, [S, S])
    rhs = 2 * predict_limit(ch, f, [S, S]) + predict_limit(ch, g, [S, S])
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


def test_stable_component_warns():
    D = op.diagonal([0.5, 1.0, 0.5], 1)
    ch = EntangledChain([D])
    with pytest.warns(UserWarning):
        predict_limit(ch, core.spectral(np.ones(3)), [point_spectrum(D)])


def _random_rotation_chain(rng):
    M = int(rng.integers(1, 6))
    d = 2 * M + 1
    a = int(rng.integers(0, 3))
    Ts = []
    for _ in range(a + 1):
        q = int(rng.integers(1, 8))
        Ts.append(op.rotation(f"{int(rng.integers(0, q))}/{q}", M))
    As = [op.dense_spectral(op.random_doubly_stochastic(d, rng), M) for _ in range(a)]
    f = core.spectral(rng.standard_normal(d) + 1j * rng.standard_normal(d))
    return EntangledChain(Ts, As), f


def _random_permutation_chain(rng):
    G = int(rng.integers(2, 13))
    a = int(rng.integers(0, 3))
    Ts = [op.GridPermutation(rng.permutation(G)) for _ in range(a + 1)]
    As = [op.dense_spatial(op.random_doubly_stochastic(G, rng)) for _ in range(a)]
    return EntangledChain(Ts, As), core.spatial(rng.standard_normal(G))


@pytest.mark.parametrize("make", [_random_rotation_chain, _random_permutation_chain])
def test_prediction_against_direct_average(rng, make):
    N = 10**5
    for _ in range(6):
        ch, f = make(rng)
        spectra = [point_spectrum(T) for T in ch.T]
        R = resonant_tuples(spectra)
        pred = predict_limit(ch, f, spectra, R)
        gap = nonresonant_gap(spectra, R)
        s = cesaro_average(ch, f, N, [N])
        err = np.max(np.abs(s.final.coeffs - pred.coeffs))
        # each non-resonant tuple contributes at most 2 |piece| / (N |lam - 1|)
        scale = max(1.0, float(np.sum(np.abs(f.coeffs)))) * max(1, len(spectra[0])) ** len(spectra)
        assert err <= 5 * scale / (N * gap) + 1e-12 if np.isfinite(gap) else err <= 1e-12


def test_printed_form_differs_on_doubling(rng):
    G = 11
    Dbl = op.doubling(G)
    A0 = op.dense_spatial(op.random_doubly_stochastic(G, rng))
    ch = EntangledChain([Dbl, Dbl], [A0])
    f = core.spatial(rng.standard_normal(G))
    S = point_spectrum(Dbl)
    full = predict_limit(ch, f, [S, S])
    printed = predict_limit(ch, f, [S, S], form="printed")
    L = Dbl.order
    s = cesaro_average(ch, f, 100 * L, [100 * L])
    assert np.max(np.abs(s.final.coeffs - full.coeffs)) <= 1e-12
    assert np.max(np.abs(s.final.coeffs - printed.coeffs)) > 1e-3


def test_compare_limit_and_decay():
    M = 4
    R = op.rotation(ALPHA, M)
    ch = EntangledChain([R, R], [op.mode_projector([1], M)])
    f = core.mode(1, M)
    S = point_spectrum(R)
    pred = predict_limit(ch, f, [S, S])
    assert np.all(pred.coeffs == 0)
    cp = [100, 1000, 10000, 100000]
    cmp = compare_limit(pred, cesaro_average(ch, f, 100000, cp))
    assert cmp.final_sup <= 1e-3
    assert cmp.decay_exponent == pytest.approx(-1.0, abs=0.15)
    assert cmp.to_csv().splitlines()[0] == "checkpoint,sup_err,l2_err"
    assert fit_decay([10, 100], [1e-1, 1e-2]) == pytest.approx(-1.0)
    assert np.isnan(fit_decay([10, 100], [0.0, 0.0]))
