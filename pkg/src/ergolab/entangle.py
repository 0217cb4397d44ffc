"""Entangled Cesàro averages ``(1/N) sum_n T_a^n A_{a-1} ... A_0 T_0^n f``.

Terms are produced in fixed blocks of consecutive ``n`` (optionally on a
thread pool) and reduced strictly in ``n`` order with compensated
summation, so results are bit-identical for any thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .angles import turn_phases
from .core import FunctionVector, SpatialGrid, SpectralFourier, OVERSAMPLING, inner, norm, spectral_to_grid_values
from .errors import AliasingError, DimensionError, NonUnimodularGamma, NotDunfordSchwartz
from .operators import (
    DS_TOL,
    DiagonalSpectral,
    GridPermutation,
    Operator,
    validate_dunford_schwartz,
)
from .series import CesaroSeries, complex_running_means, normalize_checkpoints, running_means

BLOCK = 1024
GAMMA_TOL = 1e-12


def _structurally_ds(T: Operator) -> bool:
    if isinstance(T, GridPermutation):
        return True
    if isinstance(T, DiagonalSpectral):
        if T.angle is not None:
            return True
        mu = T.mu
        return bool(np.all(mu == mu[0]) and abs(mu[0]) <= 1)
    return False


@dataclass(eq=False)
class EntangledChain:
    """Operators ``T_0..T_a`` interleaved with ``A_0..A_{a-1}`` on one basis.

    ``check`` controls the Dunford-Schwartz check of each ``T_j`` at
    construction: ``"structural"`` accepts Koopman kinds (rotations, grid
    permutations, their unimodular multiples) without sampling and validates
    everything else numerically; ``"numeric"`` validates every ``T_j``;
    ``"off"`` skips the check.
    """

    T: Sequence[Operator]
    A: Sequence[Operator] = ()
    check: str = "structural"
    ds_tol: float = DS_TOL
    ds_reports: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.T = tuple(self.T)
        self.A = tuple(self.A)
        if len(self.T) != len(self.A) + 1:
            raise ValueError(f"need len(T) == len(A) + 1, got {len(self.T)} and {len(self.A)}")
        basis = self.T[0].basis
        for op in (*self.T, *self.A):
            if op.basis != basis:
                raise DimensionError(f"chain operators disagree on basis: {basis} vs {op.basis}")
        if self.check not in ("structural", "numeric", "off"):
            raise ValueError(f"unknown check mode {self.check!r}")
        if self.check != "off":
            for j, op in enumerate(self.T):
                if self.check == "structural" and _structurally_ds(op):
                    continue
                rep = validate_dunford_schwartz(op, tol=self.ds_tol)
                self.ds_reports.append((j, rep))
                if not rep.passed:
                    raise NotDunfordSchwartz(f"T_{j} failed the Dunford-Schwartz check: {rep}")

    @property
    def a(self) -> int:
        return len(self.A)

    @property
    def basis(self):
        return self.T[0].basis

    def term_rows(self, ns: np.ndarray, f: FunctionVector) -> np.ndarray:
        """Rows ``T_a^n A_{a-1} ... A_0 T_0^n f`` for each ``n`` in ``ns`` (right to left)."""
        X = np.array(np.broadcast_to(f.coeffs, (ns.shape[0], f.basis.dim)))
        for j, T in enumerate(self.T):
            X = T.power_rows(ns, X)
            if j < self.a:
                X = self.A[j].apply_rows(X)
        return X


def entangled_term(chain: EntangledChain, n: int, f: FunctionVector) -> FunctionVector:
    if n < 1:
        raise ValueError("n must be >= 1")
    if f.basis != chain.basis:
        raise DimensionError(f"f lives on {f.basis}, chain on {chain.basis}")
    return FunctionVector(f.basis, chain.term_rows(np.array([n], dtype=np.int64), f)[0])


def _blocks(fn: Callable[[np.ndarray], np.ndarray], N: int, block: int, threads: int):
    """Yield ``fn(ns)`` for the fixed grid of blocks ``[1 + kB, (k+1)B]``, in order."""
    ranges = [np.arange(n0, min(n0 + block, N + 1), dtype=np.int64) for n0 in range(1, N + 1, block)]
    if threads <= 1:
        for ns in ranges:
            yield fn(ns)
        return
    window = 2 * threads
    with ThreadPoolExecutor(max_workers=threads) as ex:
        for i in range(0, len(ranges), window):
            for fut in [ex.submit(fn, ns) for ns in ranges[i : i + window]]:
                yield fut.result()


def cesaro_average(chain: EntangledChain, f: FunctionVector, N: int, checkpoints=None,
                   threads: int = 1, block: int = BLOCK) -> CesaroSeries:
    """Partial means ``(1/N') sum_{n <= N'} term(n)`` at each checkpoint ``N'``."""
    if f.basis != chain.basis:
        raise DimensionError(f"f lives on {f.basis}, chain on {chain.basis}")
    cp = normalize_checkpoints(checkpoints, N)
    N = int(cp[-1])
    means = complex_running_means(_blocks(lambda ns: chain.term_rows(ns, f), N, block, threads), f.basis.dim, cp)
    vals = tuple(FunctionVector(f.basis, row) for row in means)
    return CesaroSeries(tuple(int(c) for c in cp), vals, "vector", f.basis)


def _abs_grid(basis, G_eval):
    if isinstance(basis, SpatialGrid):
        if G_eval not in (None, basis.G):
            raise DimensionError("spatial chains are evaluated on their own grid")
        return basis.G, np.abs
    M = basis.M
    G = G_eval if G_eval is not None else OVERSAMPLING * basis.dim
    if G < 2 * M + 1:
        raise AliasingError(f"G_eval={G} cannot resolve modes up to {M}")
    return G, lambda X: np.abs(spectral_to_grid_values(X, M, G))


def cesaro_abs_average(chain: EntangledChain, f: FunctionVector, N: int, checkpoints=None,
                       G_eval: int | None = None, threads: int = 1, block: int = BLOCK) -> CesaroSeries:
    """Per-grid-point running mean of ``|term(n)(x)|``.

    Spectral terms are sampled on ``G_eval`` points (default ``4 (2M + 1)``)
    before taking absolute values.
    """
    if f.basis != chain.basis:
        raise DimensionError(f"f lives on {f.basis}, chain on {chain.basis}")
    cp = normalize_checkpoints(checkpoints, N)
    N = int(cp[-1])
    G, to_abs = _abs_grid(f.basis, G_eval)
    means = running_means(_blocks(lambda ns: to_abs(chain.term_rows(ns, f)), N, block, threads), G, cp)
    vals = tuple(np.array(row) for row in means)
    return CesaroSeries(tuple(int(c) for c in cp), vals, "abs_grid", SpatialGrid(G))


# -- coefficient sequences and weights ---------------------------------------

@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Scalar weights ``a_1..a_N``; ``values[n - 1] = a_n``."""

    kind: str
    values: np.ndarray
    gammas: tuple = ()
    qs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("bohr", "extracted"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        for g in self.gammas:
            if abs(abs(g) - 1) > GAMMA_TOL:
                raise NonUnimodularGamma(f"|gamma| = {abs(g)!r}")

    @property
    def horizon(self) -> int:
        return int(self.values.shape[0])

    def __getitem__(self, n: int) -> complex:
        return complex(self.values[n - 1])


def bohr_weight(gammas, qs, N: int) -> WeightSequence:
    """``a_n = sum_k q_k gamma_k^n`` for ``n = 1..N`` with unimodular ``gamma_k``."""
    gammas = np.atleast_1d(np.asarray(gammas, dtype=np.complex128))
    qs = np.atleast_1d(np.asarray(qs, dtype=np.complex128))
    if gammas.shape != qs.shape:
        raise ValueError("gammas and qs must have the same length")
    bad = np.abs(np.abs(gammas) - 1) > GAMMA_TOL
    if np.any(bad):
        raise NonUnimodularGamma(f"non-unimodular gamma(s): {gammas[bad]}")
    turns = np.ascontiguousarray(np.mod(np.angle(gammas) / (2 * np.pi), 1.0))
    vals = np.empty(N, dtype=np.complex128)
    for n0 in range(0, N, 65536):
        ns = np.arange(n0 + 1, min(n0 + 65536, N) + 1, dtype=np.int64)
        vals[n0 : n0 + ns.shape[0]] = turn_phases(ns, turns, np.zeros_like(turns)) @ qs
    return WeightSequence("bohr", vals, tuple(complex(g) for g in gammas), tuple(complex(q) for q in qs))


def weighted_average(T: Operator, f: FunctionVector, w: WeightSequence, N: int, checkpoints=None,
                     threads: int = 1, block: int = BLOCK) -> CesaroSeries:
    """Partial means ``(1/N') sum_{n <= N'} a_n T^n f``."""
    T._check_basis(f.basis)
    cp = normalize_checkpoints(checkpoints, N)
    N = int(cp[-1])
    if w.horizon < N:
        raise ValueError(f"weight sequence has {w.horizon} terms, need {N}")

    def rows(ns):
        X = np.array(np.broadcast_to(f.coeffs, (ns.shape[0], f.basis.dim)))
        return T.power_rows(ns, X) * w.values[ns - 1][:, None]

    means = complex_running_means(_blocks(rows, N, block, threads), f.basis.dim, cp)
    return CesaroSeries(tuple(int(c) for c in cp), tuple(FunctionVector(f.basis, r) for r in means), "vector", f.basis)


def dual_functionals(gs: Sequence[FunctionVector]) -> list[FunctionVector]:
    """Functionals ``phi_j`` in ``span(gs)`` with ``<g_i, phi_j> = delta_ij``.

    ``h -> sum_j <h, phi_j> g_j`` is then the orthogonal projection onto ``span(gs)``.
    """
    if not gs:
        return []
    basis = gs[0].basis
    Gm = np.array([[inner(gi, gl) for gl in gs] for gi in gs])
    if np.linalg.cond(Gm) > 1e12:
        raise ValueError("functions are numerically linearly dependent")
    B = np.linalg.inv(Gm).conj()
    stack = np.array([g.coeffs for g in gs])
    return [FunctionVector(basis, B[:, j] @ stack) for j in range(len(gs))]


def orbit_decomposition(A: Operator, T: Operator, f: FunctionVector, gs: Sequence[FunctionVector],
                        n: int, phis: Sequence[FunctionVector] | None = None):
    """Split ``A T^n f = sum_j lambda_j g_j + r_n`` with ``r_n`` orthogonal to ``span(gs)``."""
    phis = dual_functionals(gs) if phis is None else phis
    h = A.apply(T.power_apply(n, f))
    lam = np.array([inner(h, p) for p in phis])
    r = h
    for c, g in zip(lam, gs):
        r = r - c * g
    return lam, r


@dataclass(frozen=True, eq=False)
class LambdaExtraction:
    sequences: list
    max_modulus: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.max_modulus <= self.bound + 1e-12


def extract_lambda_sequence(chain_prefix, f: FunctionVector, dual: Sequence[FunctionVector], N: int) -> LambdaExtraction:
    """Coefficient sequences ``lambda_{j,n} = <A T^n f, phi_j>`` for ``n = 1..N``.

    ``chain_prefix`` is the pair ``(A, T)``. The reported bound is
    ``||f||_2 ||A|| max_j ||phi_j||_2``, valid for L2 contractions ``T``.
    """
    A, T = chain_prefix
    T._check_basis(f.basis)
    A._check_basis(f.basis)
    scale = 1.0 if isinstance(f.basis, SpectralFourier) else 1.0 / f.basis.G
    if dual:
        P = np.array([p.coeffs for p in dual]).conj().T * scale
    else:
        P = np.zeros((f.basis.dim, 0), dtype=np.complex128)
    parts = []
    for n0 in range(1, N + 1, BLOCK):
        ns = np.arange(n0, min(n0 + BLOCK, N + 1), dtype=np.int64)
        X = np.array(np.broadcast_to(f.coeffs, (ns.shape[0], f.basis.dim)))
        parts.append(A.apply_rows(T.power_rows(ns, X)) @ P)
    lam = np.concatenate(parts) if parts else np.zeros((0, P.shape[1]), complex)
    seqs = [WeightSequence("extracted", np.ascontiguousarray(lam[:, j])) for j in range(P.shape[1])]
    opnorm = float(np.linalg.norm(A.matrix(), 2))
    maxphi = max((norm(p, 2) for p in dual), default=0.0)
    bound = norm(f, 2) * opnorm * maxphi
    mx = float(np.max(np.abs(lam), initial=0.0))
    return LambdaExtraction(seqs, mx, bound)
