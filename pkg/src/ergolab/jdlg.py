"""Reversible / stable splitting of a power-bounded operator.

In finite dimensions the reversible part is the span of eigenvectors with
unimodular eigenvalues and the stable part is the complementary spectral
subspace. :func:`stability_curve` and :func:`density_one_fraction` measure
the defining Cesàro property of stable vectors directly, so the two
characterizations can be checked against each other.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import FunctionVector, inner
from .errors import IllConditionedEigenbasis, NotPowerBounded
from .operators import DenseOperator, DiagonalSpectral, GridPermutation, Operator
from .series import CesaroSeries, normalize_checkpoints, running_means

TOL_UNIMODULAR = 1e-9
COND_MAX = 1e8
ORBIT_BLOCK = 2048


@dataclass(frozen=True, eq=False)
class JdlgDecomposition:
    """Eigenstructure on the unit circle plus the two spectral projectors.

    ``right`` (d x k) and ``left`` (k x d) factor the reversible projector as
    ``right @ left`` with ``left @ right = I``; ``reduced`` is the operator
    compressed to the reversible subspace, ``left @ T @ right``.
    """

    operator: Operator
    reversible_pairs: list
    reversible_projector: DenseOperator
    stable_projector: DenseOperator
    tol_unimodular: float
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    reduced: np.ndarray = field(repr=False)

    @property
    def reversible_dim(self) -> int:
        return self.right.shape[1]

    @property
    def stable_dim(self) -> int:
        return self.operator.dim - self.reversible_dim

    def eigenvalue_summary(self, tol: float = 1e-7) -> list[tuple[complex, int]]:
        """Distinct reversible eigenvalues with multiplicities."""
        groups: list[list] = []
        for lam, _ in self.reversible_pairs:
            for g in groups:
                if abs(g[0] - lam) < tol:
                    g[1] += 1
                    break
            else:
                groups.append([lam, 1])
        groups.sort(key=lambda g: (np.mod(np.angle(g[0]), 2 * np.pi)))
        return [(complex(g[0]), g[1]) for g in groups]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "multiplicity"])
        for lam, mult in self.eigenvalue_summary():
            w.writerow([repr(lam.real), repr(lam.imag), mult])
        w.writerow(["stable_dim", self.stable_dim, ""])
        return buf.getvalue()


def _finish(T, pairs, right, left, reduced, tol):
    d = T.dim
    pr = right @ left if right.shape[1] else np.zeros((d, d), dtype=np.complex128)
    return JdlgDecomposition(
        operator=T,
        reversible_pairs=pairs,
        reversible_projector=DenseOperator(T.basis, pr),
        stable_projector=DenseOperator(T.basis, np.eye(d) - pr),
        tol_unimodular=tol,
        right=right,
        left=left,
        reduced=reduced,
    )


def _decompose_diagonal(T: DiagonalSpectral, tol):
    mu = T.mu
    if np.any(np.abs(mu) > 1 + tol):
        raise NotPowerBounded("diagonal entry outside the closed unit disc")
    keep = np.nonzero(np.abs(mu) >= 1 - tol)[0]
    d = T.dim
    eye = np.eye(d, dtype=np.complex128)
    right = eye[:, keep]
    left = eye[keep, :]
    pairs = [(complex(mu[i]), FunctionVector(T.basis, eye[i])) for i in keep]
    return _finish(T, pairs, right, left, np.diag(mu[keep]), tol)


def _decompose_permutation(T: GridPermutation, tol):
    G = T.dim
    pairs = []
    for cyc in T.cycles:
        L = len(cyc)
        idx = np.array(cyc)
        pos = np.arange(L)
        for k in range(L):
            omega = np.exp(2j * np.pi * k / L)
            v = np.zeros(G, dtype=np.complex128)
            # T v = phase * v(perm(g)); with v(c_j) = omega**j this gives eigenvalue phase * omega
            v[idx] = omega**pos * np.sqrt(G / L)
            pairs.append((complex(T.phase * omega), FunctionVector(T.basis, v)))
    eye = np.eye(G, dtype=np.complex128)
    return _finish(T, pairs, eye, eye, T.matrix(), tol)


def _decompose_dense(T: Operator, tol, cond_max):
    A = T.matrix()
    d = A.shape[0]
    ev = np.linalg.eigvals(A)
    if np.max(np.abs(ev), initial=0.0) > 1 + tol:
        raise NotPowerBounded(f"spectral radius {np.max(np.abs(ev)):.6g} exceeds 1")
    S, Z, k = scipy.linalg.schur(A, output="complex", sort=lambda z: abs(z) >= 1 - tol)
    if k == 0:
        return _finish(T, [], np.zeros((d, 0), complex), np.zeros((0, d), complex), np.zeros((0, 0), complex), tol)
    if k == d:
        right, left, reduced = np.eye(d, dtype=complex), np.eye(d, dtype=complex), A
    else:
        S11, S12, S22 = S[:k, :k], S[:k, k:], S[k:, k:]
        # block-diagonalize: S11 Y - Y S22 + S12 = 0
        Y = scipy.linalg.solve_sylvester(S11, -S22, -S12)
        right = Z[:, :k]
        left = np.hstack([np.eye(k), -Y]) @ Z.conj().T
        reduced = S11
    w, V = np.linalg.eig(reduced)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > cond_max:
        close = np.abs(w[:, None] - w[None, :]) + np.eye(len(w))
        if np.min(close) < 1e-6:
            raise NotPowerBounded("Jordan block on the unit circle (operator is not power bounded)")
        raise IllConditionedEigenbasis(f"eigenvector condition number {cond:.3g} exceeds {cond_max:.3g}")
    vecs = right @ V
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    pairs = [(complex(w[i]), FunctionVector(T.basis, vecs[:, i])) for i in range(k)]
    return _finish(T, pairs, right, left, reduced, tol)


def decompose(T: Operator, tol_unimodular: float = TOL_UNIMODULAR, cond_max: float = COND_MAX) -> JdlgDecomposition:
    """Split ``T`` into reversible and stable parts.

    Diagonal and permutation kinds are handled exactly. Dense operators go
    through a sorted complex Schur form; the reversible block is decoupled by
    a Sylvester solve, so Jordan blocks strictly inside the disc are fine.

    Raises
    ------
    NotPowerBounded
        Spectral radius above ``1 + tol_unimodular`` or a Jordan block on the circle.
    IllConditionedEigenbasis
        The reversible eigenvectors have condition number above ``cond_max``.
    """
    if isinstance(T, DiagonalSpectral):
        return _decompose_diagonal(T, tol_unimodular)
    if isinstance(T, GridPermutation):
        return _decompose_permutation(T, tol_unimodular)
    return _decompose_dense(T, tol_unimodular, cond_max)


def project_reversible(D: JdlgDecomposition, f: FunctionVector) -> FunctionVector:
    return D.reversible_projector.apply(f)


def project_stable(D: JdlgDecomposition, f: FunctionVector) -> FunctionVector:
    return D.stable_projector.apply(f)


def orbit_blocks(T: Operator, f: FunctionVector, N: int, block: int = ORBIT_BLOCK, start: int = 1):
    """Yield ``(ns, rows)`` with ``rows[k] = T**ns[k] f`` for ``n = start..N``."""
    for n0 in range(start, N + 1, block):
        ns = np.arange(n0, min(n0 + block, N + 1), dtype=np.int64)
        X = np.broadcast_to(f.coeffs, (ns.shape[0], f.basis.dim))
        yield ns, T.power_rows(ns, np.array(X))


def orbit_functional(T: Operator, f: FunctionVector, phi: FunctionVector, N: int) -> np.ndarray:
    """``a_n = <T^n f, phi>`` for ``n = 1..N``."""
    T._check_basis(f.basis)
    T._check_basis(phi.basis)
    scale = 1.0 if f.is_spectral else 1.0 / f.basis.G
    parts = [rows @ phi.coeffs.conj() * scale for _, rows in orbit_blocks(T, f, N)]
    return np.concatenate(parts) if parts else np.zeros(0, complex)


def stability_curve(T: Operator, f: FunctionVector, phi: FunctionVector, N: int, checkpoints=None) -> CesaroSeries:
    """Cesàro means of ``|<T^n f, phi>|`` at each checkpoint."""
    cp = normalize_checkpoints(checkpoints, N)
    a = np.abs(orbit_functional(T, f, phi, N))
    blocks = (a[i : i + ORBIT_BLOCK, None] for i in range(0, N, ORBIT_BLOCK))
    means = running_means(blocks, 1, cp)[:, 0]
    return CesaroSeries(tuple(int(c) for c in cp), tuple(float(v) for v in means), "abs_scalar")


def density_one_fraction(a, delta: float, N: int | None = None) -> float:
    """Fraction of ``n <= N`` with ``|a_n| > delta``."""
    a = np.abs(np.asarray(a))
    if N is not None:
        a = a[:N]
    if a.size == 0:
        return 0.0
    return float(np.count_nonzero(a > delta) / a.size)


def pairing(f: FunctionVector, phi: FunctionVector) -> complex:
    return inner(f, phi)
