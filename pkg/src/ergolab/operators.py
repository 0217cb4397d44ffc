"""Linear operators on function vectors with fast n-th powers.

Four kinds are supported:

``DiagonalSpectral``
    Fourier multiplier ``e_m -> mu_m e_m``. Rotations ``x -> x + alpha`` are
    the special case ``mu_m = exp(2 pi i m alpha)``; their powers reduce
    ``n * m * alpha`` modulo one exactly (rational alpha) or in double-double
    arithmetic (declared irrational alpha), never by repeated multiplication.
``GridPermutation``
    Koopman operator ``(Tf)(g) = phase * f(perm(g))`` of a bijection of the
    grid; powers are cycle-indexed lookups.
``DenseOperator``
    Arbitrary matrix on either basis; powers use a blocked power plan.

Every operator also acts row-wise on stacks of coefficient vectors through
:meth:`Operator.power_rows`, which is what the averaging engine calls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _kernels
from .angles import Angle, rational_phase_indices, rational_phase_table, turn_phases
from .core import (
    OVERSAMPLING,
    Basis,
    FunctionVector,
    SpatialGrid,
    SpectralFourier,
    spectral_to_grid_values,
)
from .errors import DimensionError, Unsupported

UNIMODULAR_TOL = 1e-12
DS_TOL = 1e-10
FIX_TOL = 1e-9


class Operator:
    """Base class; subclasses implement :meth:`power_rows` and :meth:`matrix`."""

    basis: Basis
    kind: str = "operator"

    @property
    def dim(self) -> int:
        return self.basis.dim

    def _check_basis(self, basis):
        if basis != self.basis:
            raise DimensionError(f"{self.kind} acts on {self.basis}, got {basis}")

    def apply(self, f: FunctionVector) -> FunctionVector:
        self._check_basis(f.basis)
        return FunctionVector(self.basis, self.apply_rows(f.coeffs[None, :])[0])

    def power_apply(self, n: int, f: FunctionVector) -> FunctionVector:
        if n < 0:
            raise ValueError("power must be nonnegative")
        self._check_basis(f.basis)
        if n == 0:
            return f
        out = self.power_rows(np.array([n], dtype=np.int64), f.coeffs[None, :])
        return FunctionVector(self.basis, out[0])

    def apply_rows(self, X: np.ndarray) -> np.ndarray:
        return self.power_rows(np.ones(X.shape[0], dtype=np.int64), X)

    def power_rows(self, ns: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Return ``Y`` with ``Y[k] = T**ns[k] X[k]``."""
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        raise NotImplementedError

    def scale(self, lam: complex) -> "Operator":
        """The operator ``lam * T``."""
        raise NotImplementedError

    def modulus(self) -> "Operator":
        raise Unsupported(f"no finite-dimensional modulus for {self.kind}")

    @property
    def is_koopman(self) -> bool:
        """True when the operator is structurally a Koopman operator (positive, measure preserving)."""
        return False

    def __add__(self, other: "Operator") -> "DenseOperator":
        self._check_basis(other.basis)
        return DenseOperator(self.basis, self.matrix() + other.matrix())

    def __sub__(self, other: "Operator") -> "DenseOperator":
        self._check_basis(other.basis)
        return DenseOperator(self.basis, self.matrix() - other.matrix())

    def __matmul__(self, other: "Operator") -> "DenseOperator":
        self._check_basis(other.basis)
        return DenseOperator(self.basis, self.matrix() @ other.matrix())


# -- diagonal multipliers ----------------------------------------------------

class DiagonalSpectral(Operator):
    """Fourier multiplier ``e_m -> mu_m e_m`` on modes ``-M..M``.

    Construct rotations with :func:`rotation`; other multipliers with
    :func:`diagonal`. ``scalar`` is a unimodular prefactor carried
    separately so that ``lam * R`` keeps exact rotation powers.
    """

    kind = "diagonal_spectral"

    def __init__(self, basis: SpectralFourier, mu=None, angle: Angle | None = None, scalar: complex = 1.0):
        if not isinstance(basis, SpectralFourier):
            raise DimensionError("DiagonalSpectral needs a spectral basis")
        self.basis = basis
        self.angle = angle
        self.scalar = complex(scalar)
        if abs(abs(self.scalar) - 1.0) > UNIMODULAR_TOL:
            raise ValueError("scalar prefactor must be unimodular")
        if angle is None:
            if mu is None:
                raise ValueError("need mu or angle")
            mu = np.array(mu, dtype=np.complex128)
            if mu.ndim == 0:
                mu = np.full(basis.dim, complex(mu))
            if mu.shape != (basis.dim,):
                raise DimensionError(f"mu must have {basis.dim} entries")
            if not np.all(np.isfinite(mu)):
                raise ValueError("mu entries must be finite")
            mu = mu * self.scalar
            if np.any(np.abs(mu) > 1 + UNIMODULAR_TOL):
                raise ValueError("diagonal entries must satisfy |mu_m| <= 1")
            mu.setflags(write=False)
            self._mu = mu
            self._radius = np.abs(mu)
            turns = np.mod(np.angle(mu) / (2 * np.pi), 1.0)
            self._ahi = np.ascontiguousarray(turns)
            self._alo = np.zeros_like(turns)
        else:
            self._scalar_turn = np.array([np.mod(np.angle(self.scalar) / (2 * np.pi), 1.0)])
            if angle.is_rational:
                self._rat_table = rational_phase_table(angle.exact.denominator)
            else:
                self._ahi, self._alo = angle.mode_angles(basis.modes)

    @cached_property
    def mu(self) -> np.ndarray:
        if self.angle is None:
            return self._mu
        return self.power_rows(np.array([1], dtype=np.int64), np.ones((1, self.dim), dtype=np.complex128))[0]

    @property
    def is_rotation(self) -> bool:
        return self.angle is not None

    @property
    def is_koopman(self) -> bool:
        return self.angle is not None and self.scalar == 1.0

    def phases(self, ns: np.ndarray) -> np.ndarray:
        """``mu_m ** n`` for each ``n`` in ``ns``, shape (len(ns), dim)."""
        ns = np.asarray(ns, dtype=np.int64)
        if self.angle is None:
            ph = turn_phases(ns, self._ahi, self._alo)
            return ph * np.power(self._radius[None, :], ns[:, None].astype(np.float64))
        if self.angle.is_rational:
            idx = rational_phase_indices(ns, self.basis.modes, self.angle.exact)
            ph = self._rat_table[idx]
        else:
            ph = turn_phases(ns, self._ahi, self._alo)
        if self.scalar != 1.0:
            ph = ph * turn_phases(ns, self._scalar_turn, np.zeros(1))
        return ph

    def power_rows(self, ns, X):
        return np.asarray(X) * self.phases(ns)

    def matrix(self):
        return np.diag(self.mu)

    def scale(self, lam):
        lam = complex(lam)
        if self.angle is not None and abs(abs(lam) - 1) <= UNIMODULAR_TOL:
            return DiagonalSpectral(self.basis, angle=self.angle, scalar=self.scalar * lam)
        return DiagonalSpectral(self.basis, self.mu * lam)

    def modulus(self):
        if self.angle is not None:
            return DiagonalSpectral(self.basis, angle=self.angle)
        if np.allclose(self.mu, self.mu[0], rtol=0, atol=UNIMODULAR_TOL):
            return DiagonalSpectral(self.basis, np.full(self.dim, abs(self.mu[0])))
        raise Unsupported("modulus of a general Fourier multiplier has no positive realization in the truncated basis")

    def __repr__(self):
        if self.angle is not None:
            s = "" if self.scalar == 1 else f", scalar={self.scalar:.6g}"
            return f"rotation(alpha={self.angle}, M={self.basis.M}{s})"
        return f"DiagonalSpectral(M={self.basis.M})"


def rotation(alpha, M: int) -> DiagonalSpectral:
    """Koopman operator of ``x -> x + alpha`` restricted to modes ``-M..M``.

    ``alpha`` may be an :class:`Angle`, a :class:`~fractions.Fraction`, or a
    decimal string (declared irrational).
    """
    if isinstance(alpha, Fraction):
        alpha = Angle(exact=alpha % 1)
    elif isinstance(alpha, str):
        alpha = Angle(exact=Fraction(alpha) % 1) if "/" in alpha else Angle.from_decimal(alpha)
    elif isinstance(alpha, (int, float)) and not isinstance(alpha, bool):
        alpha = Angle.from_decimal(repr(float(alpha)))
    return DiagonalSpectral(SpectralFourier(M), angle=alpha)


def diagonal(mu, M: int) -> DiagonalSpectral:
    return DiagonalSpectral(SpectralFourier(M), mu)


def mode_projector(modes, M: int) -> DiagonalSpectral:
    """Orthogonal projector onto ``span{e_m : m in modes}``."""
    basis = SpectralFourier(M)
    mu = np.zeros(basis.dim)
    for m in modes:
        mu[basis.index(int(m))] = 1.0
    return DiagonalSpectral(basis, mu)


# -- grid permutations ---------------------------------------------------------

class GridPermutation(Operator):
    """``(Tf)(g) = phase * f(perm(g))`` on the uniform grid."""

    kind = "grid_permutation"

    def __init__(self, perm, phase: complex = 1.0):
        perm = np.asarray(perm, dtype=np.int64)
        G = perm.shape[0]
        if perm.ndim != 1 or G == 0 or not np.array_equal(np.sort(perm), np.arange(G)):
            raise ValueError("perm must be a bijection of {0..G-1}")
        self.basis = SpatialGrid(G)
        self.perm = perm
        self.perm.setflags(write=False)
        self.phase = complex(phase)
        if abs(abs(self.phase) - 1.0) > UNIMODULAR_TOL:
            raise ValueError("phase must be unimodular")
        self._phase_turn = np.array([np.mod(np.angle(self.phase) / (2 * np.pi), 1.0)])
        self._build_cycles()

    def _build_cycles(self):
        G = self.basis.G
        seen = np.zeros(G, dtype=bool)
        members, cstart, cpos, clen, cycles = [], np.empty(G, np.int64), np.empty(G, np.int64), np.empty(G, np.int64), []
        for g0 in range(G):
            if seen[g0]:
                continue
            cyc = [g0]
            seen[g0] = True
            g = int(self.perm[g0])
            while g != g0:
                cyc.append(g)
                seen[g] = True
                g = int(self.perm[g])
            start = len(members)
            members.extend(cyc)
            for pos, h in enumerate(cyc):
                cstart[h] = start
                cpos[h] = pos
                clen[h] = len(cyc)
            cycles.append(tuple(cyc))
        self._members = np.array(members, dtype=np.int64)
        self._cstart, self._cpos, self._clen = cstart, cpos, clen
        self.cycles = tuple(cycles)

    @property
    def order(self) -> int:
        """Least common multiple of the cycle lengths."""
        return int(np.lcm.reduce([len(c) for c in self.cycles]))

    @property
    def is_koopman(self) -> bool:
        return self.phase == 1.0

    def power_rows(self, ns, X):
        ns = np.ascontiguousarray(ns, dtype=np.int64)
        X = np.ascontiguousarray(X, dtype=np.complex128)
        out = np.empty_like(X)
        _kernels.permutation_gather(X, self._members, self._cstart, self._cpos, self._clen, ns, out)
        if self.phase != 1.0:
            out *= turn_phases(ns, self._phase_turn, np.zeros(1))
        return out

    def matrix(self):
        G = self.basis.G
        m = np.zeros((G, G), dtype=np.complex128)
        m[np.arange(G), self.perm] = self.phase
        return m

    def scale(self, lam):
        lam = complex(lam)
        if abs(abs(lam) - 1) <= UNIMODULAR_TOL:
            return GridPermutation(self.perm, self.phase * lam)
        return DenseOperator(self.basis, self.matrix() * lam)

    def modulus(self):
        return GridPermutation(self.perm)

    def __repr__(self):
        return f"GridPermutation(G={self.basis.G}, cycles={len(self.cycles)})"


def multiplier_permutation(k: int, G: int) -> GridPermutation:
    """``g -> k g mod G``; a bijection iff ``gcd(k, G) = 1``."""
    return GridPermutation((k * np.arange(G)) % G)


def doubling(G: int) -> GridPermutation:
    """Koopman operator of the doubling map on the cyclic grid (G odd)."""
    if G % 2 == 0:
        raise ValueError("doubling map is a bijection only for odd G")
    return multiplier_permutation(2, G)


def shift_permutation(k: int, G: int) -> GridPermutation:
    """``g -> g + k mod G``; a single cycle iff ``gcd(k, G) = 1``."""
    return GridPermutation((np.arange(G) + k) % G)


# -- dense operators -----------------------------------------------------------

POWER_BLOCK = 64


@dataclass
class DensePowerPlan:
    """Powers ``T**r`` for ``r < block`` plus a cache of ``(T**block)**q``."""

    stack: np.ndarray
    big: np.ndarray
    block: int

    def __post_init__(self):
        self._big_cache: dict[int, np.ndarray] = {0: np.eye(self.big.shape[0], dtype=np.complex128)}

    def big_power(self, q: int) -> np.ndarray:
        if q not in self._big_cache:
            if len(self._big_cache) > 4096:
                self._big_cache = {0: self._big_cache[0]}
            self._big_cache[q] = np.linalg.matrix_power(self.big, q)
        return self._big_cache[q]

    def apply(self, ns: np.ndarray, X: np.ndarray) -> np.ndarray:
        out = np.empty_like(X, dtype=np.complex128)
        qs, rs = np.divmod(ns, self.block)
        for q in np.unique(qs):
            sel = np.nonzero(qs == q)[0]
            Y = X[sel] @ self.big_power(int(q)).T
            out[sel] = np.einsum("kij,kj->ki", self.stack[rs[sel]], Y)
        return out


class DenseOperator(Operator):
    """Arbitrary complex matrix acting on coefficients (spectral) or grid values (spatial)."""

    def __init__(self, basis: Basis, matrix):
        matrix = np.array(matrix, dtype=np.complex128)
        if matrix.shape != (basis.dim, basis.dim):
            raise DimensionError(f"matrix shape {matrix.shape} does not match {basis}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix entries must be finite")
        matrix.setflags(write=False)
        self.basis = basis
        self._matrix = matrix
        self._plan: DensePowerPlan | None = None

    @property
    def kind(self) -> str:
        return "dense_spectral" if isinstance(self.basis, SpectralFourier) else "dense_spatial"

    def matrix(self):
        return self._matrix

    def precompute_powers(self, N: int | None = None, block: int = POWER_BLOCK) -> DensePowerPlan:
        """Build (once) the blocked power plan; ``N`` caps the stored stack."""
        if self._plan is None or self._plan.block != block:
            size = block if N is None else max(1, min(block, N + 1))
            if size < block:
                block = size
            d = self.dim
            stack = np.empty((block, d, d), dtype=np.complex128)
            stack[0] = np.eye(d)
            for r in range(1, block):
                stack[r] = self._matrix @ stack[r - 1]
            big = self._matrix @ stack[block - 1]
            stack.setflags(write=False)
            self._plan = DensePowerPlan(stack, big, block)
        return self._plan

    def apply_rows(self, X):
        return np.asarray(X) @ self._matrix.T

    def power_rows(self, ns, X):
        ns = np.asarray(ns, dtype=np.int64)
        if np.all(ns == 1):
            return self.apply_rows(X)
        return self.precompute_powers().apply(ns, np.asarray(X, dtype=np.complex128))

    def scale(self, lam):
        return DenseOperator(self.basis, self._matrix * complex(lam))

    def modulus(self):
        if isinstance(self.basis, SpatialGrid):
            return DenseOperator(self.basis, np.abs(self._matrix))
        raise Unsupported("dense spectral operators have no positive spatial realization in the truncated basis")

    def __repr__(self):
        return f"DenseOperator({self.kind}, dim={self.dim})"


def dense_spatial(matrix) -> DenseOperator:
    matrix = np.asarray(matrix)
    return DenseOperator(SpatialGrid(matrix.shape[0]), matrix)


def dense_spectral(matrix, M: int | None = None) -> DenseOperator:
    matrix = np.asarray(matrix)
    if M is None:
        M = (matrix.shape[0] - 1) // 2
    return DenseOperator(SpectralFourier(M), matrix)


def identity(basis: Basis) -> Operator:
    if isinstance(basis, SpatialGrid):
        return GridPermutation(np.arange(basis.G))
    return DiagonalSpectral(basis, angle=Angle.rational(0))


def zero(basis: Basis) -> DenseOperator:
    return DenseOperator(basis, np.zeros((basis.dim, basis.dim)))


def random_doubly_stochastic(G: int, rng: np.random.Generator, sweeps: int = 200) -> np.ndarray:
    """Sinkhorn-balanced positive matrix; rows and columns sum to one."""
    m = rng.random((G, G)) + 1e-3
    for _ in range(sweeps):
        m /= m.sum(axis=1, keepdims=True)
        m /= m.sum(axis=0, keepdims=True)
    # make the row sums exact at the end; column sums are within roundoff
    m /= m.sum(axis=1, keepdims=True)
    return m


# -- Dunford-Schwartz validation -----------------------------------------------

@dataclass(frozen=True)
class DSReport:
    trials: int
    worst_l1_ratio: float
    worst_linf_ratio: float
    passed: bool
    tol: float
    realization: str


def _grid_values(T: Operator, G: int | None):
    """Return (sample, apply) callables realizing T on grid values."""
    if isinstance(T.basis, SpatialGrid):
        return None, lambda X: T.apply_rows(X)
    M = T.basis.M
    G = G or OVERSAMPLING * T.basis.dim
    if G < 2 * M + 1:
        G = 2 * M + 1
    angle = getattr(T, "angle", None)
    if angle is not None and angle.is_rational:
        # a rational rotation maps a grid of size q*k onto itself
        q = angle.exact.denominator
        G = q * -(-G // q)
    return G, lambda C: spectral_to_grid_values(T.apply_rows(C), M, G)


def validate_dunford_schwartz(T: Operator, trials: int = 64, tol: float = DS_TOL,
                              rng: np.random.Generator | None = None, G: int | None = None) -> DSReport:
    """Largest observed ``||Tf||_1/||f||_1`` and ``||Tf||_inf/||f||_inf`` over random ``f``.

    Spatial operators are tested on exact grid values. Spectral operators are
    tested on random trigonometric polynomials whose norms are sampled on a
    ``G``-point grid (default oversampling ``4 (2M+1)``); those ratios are
    estimates and can exceed one by the sampling error.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    Gs, act = _grid_values(T, G)
    d = T.dim
    X = rng.standard_normal((trials, d)) + 1j * rng.standard_normal((trials, d))
    # mix in nonnegative and sparse inputs, which saturate L1 / Linf for positive operators
    X[: trials // 4] = np.abs(X[: trials // 4])
    for k in range(trials // 4, trials // 2):
        X[k] = 0
        X[k, rng.integers(d)] = 1.0
    if Gs is None:
        fx, tx = X, act(X)
        realization = "grid"
    else:
        fx = spectral_to_grid_values(X, T.basis.M, Gs)
        tx = act(X)
        realization = f"sampled(G={Gs})"
    af, at = np.abs(fx), np.abs(tx)
    # fsum is correctly rounded, so reordered values give identical L1 norms
    l1 = np.array([math.fsum(a) for a in at]) / np.array([math.fsum(a) for a in af])
    linf = at.max(axis=1) / af.max(axis=1)
    w1, winf = float(l1.max()), float(linf.max())
    return DSReport(trials, w1, winf, bool(w1 <= 1 + tol and winf <= 1 + tol), tol, realization)


def check_fix_modulus_trivial(T: Operator, tol: float = FIX_TOL) -> bool:
    """Whether ``Fix |T|`` is exactly the constants.

    Computed from the null space of ``|T| - I`` (singular values below
    ``tol``); for permutations this is the number of cycles.
    """
    mod = T.modulus()
    if isinstance(mod, GridPermutation):
        return len(mod.cycles) == 1
    m = mod.matrix() - np.eye(mod.dim)
    s = np.linalg.svd(m, compute_uv=False)
    null_dim = int(np.sum(s < tol))
    if null_dim != 1:
        return False
    if isinstance(mod.basis, SpectralFourier):
        one = np.zeros(mod.dim)
        one[mod.basis.M] = 1.0
    else:
        one = np.ones(mod.dim) / np.sqrt(mod.dim)
    return bool(np.linalg.norm(m @ one) < tol * max(1.0, np.sqrt(mod.dim)))
