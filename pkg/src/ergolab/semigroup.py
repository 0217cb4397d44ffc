"""Contraction semigroups ``T(t) = exp(tG)`` and entangled Cesàro integrals.

The normalized integral ``(1/t) int_0^t T_a(s) A_{a-1} ... A_0 T_0(s) f ds``
is approximated by the composite trapezoid rule on nodes ``s = k h``. The
integrand at the nodes is an entangled chain term for the step operators
``T_j(h)``, so the same blocked, compensated reduction is reused.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import FunctionVector, SpatialGrid, SpectralFourier
from .entangle import BLOCK, EntangledChain, _abs_grid, _blocks
from .errors import DimensionError, InstabilityError
from .operators import DenseOperator, GridPermutation, Operator
from .series import CesaroSeries, complex_running_means, running_means

RE_TOL = 1e-12
NORM_TOL = 1e-6
DEFAULT_STEPS = 10**4


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """Generator of a contraction semigroup.

    ``kind="diagonal"`` holds one complex rate per basis element (Fourier
    multiplier, ``Re g <= 1e-12``); ``kind="dense"`` holds a matrix.
    """

    basis: object
    kind: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128)
        d = self.basis.dim
        if self.kind == "diagonal":
            if vals.shape != (d,):
                raise DimensionError(f"diagonal generator needs {d} rates")
            if np.any(vals.real > RE_TOL):
                raise InstabilityError(f"rate with positive real part {vals.real.max():.3g}")
        elif self.kind == "dense":
            if vals.shape != (d, d):
                raise DimensionError(f"dense generator needs shape {(d, d)}")
        else:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("generator entries must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def matrix(self) -> np.ndarray:
        return np.diag(self.values) if self.kind == "diagonal" else self.values

    def exp(self, t: float) -> np.ndarray:
        """``exp(tG)`` as a matrix (diagonal kinds exactly per entry)."""
        if self.kind == "diagonal":
            return np.diag(np.exp(t * self.values))
        E = scipy.linalg.expm(t * self.values)
        nrm = np.linalg.norm(E, 2)
        if nrm > 1 + NORM_TOL:
            raise InstabilityError(f"||exp({t:g} G)||_2 = {nrm:.9g} exceeds 1")
        return E


def diagonal_generator(rates, M: int | None = None) -> GeneratorSpec:
    rates = np.asarray(rates, dtype=np.complex128)
    M = (rates.shape[0] - 1) // 2 if M is None else M
    return GeneratorSpec(SpectralFourier(M), "diagonal", rates)


def dense_generator(matrix, basis=None) -> GeneratorSpec:
    matrix = np.asarray(matrix, dtype=np.complex128)
    basis = SpatialGrid(matrix.shape[0]) if basis is None else basis
    return GeneratorSpec(basis, "dense", matrix)


def zero_generator(basis) -> GeneratorSpec:
    if isinstance(basis, SpectralFourier):
        return GeneratorSpec(basis, "diagonal", np.zeros(basis.dim))
    return GeneratorSpec(basis, "dense", np.zeros((basis.dim, basis.dim)))


def rotation_flow(alpha: float, M: int) -> GeneratorSpec:
    """Generator of ``x -> x + alpha t``: rates ``2 pi i m alpha``."""
    basis = SpectralFourier(M)
    return GeneratorSpec(basis, "diagonal", 2j * np.pi * float(alpha) * basis.modes)


def permutation_laplacian(P: GridPermutation, rate: float = 1.0) -> GeneratorSpec:
    """``rate (P - I)``: a positive, doubly stochastic jump semigroup.

    Its kernel is the constants exactly when ``P`` acts transitively.
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    M = P.matrix()
    return GeneratorSpec(P.basis, "dense", rate * (M - np.eye(P.dim)))


def semigroup_apply(G: GeneratorSpec, t: float, f: FunctionVector) -> FunctionVector:
    """``exp(tG) f``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if f.basis != G.basis:
        raise DimensionError(f"f lives on {f.basis}, generator on {G.basis}")
    if G.kind == "diagonal":
        return FunctionVector(f.basis, np.exp(t * G.values) * f.coeffs)
    return FunctionVector(f.basis, G.exp(t) @ f.coeffs)


class _DiagonalFlow(Operator):
    """Step operator ``exp(hG)`` for a diagonal generator; powers evaluated as ``exp(n h g)``."""

    kind = "diagonal_flow"

    def __init__(self, G: GeneratorSpec, h: float):
        self.basis = G.basis
        self._rates = G.values * h

    def power_rows(self, ns, X):
        ns = np.asarray(ns, dtype=np.float64)
        return np.asarray(X) * np.exp(ns[:, None] * self._rates[None, :])

    def matrix(self):
        return np.diag(np.exp(self._rates))


def step_operator(G: GeneratorSpec, h: float) -> Operator:
    if G.kind == "diagonal":
        return _DiagonalFlow(G, h)
    return DenseOperator(G.basis, G.exp(h))


@dataclass(eq=False)
class SemigroupChain:
    """Generators ``G_0..G_a``, intertwiners ``A_0..A_{a-1}``, horizon and step.

    ``h`` defaults to ``horizon / 10**4`` and must divide the horizon.
    """

    generators: Sequence[GeneratorSpec]
    A: Sequence[Operator] = ()
    horizon: float = 1.0
    h: float | None = None

    def __post_init__(self):
        self.generators = tuple(self.generators)
        self.A = tuple(self.A)
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.h is None:
            self.h = self.horizon / DEFAULT_STEPS
        if not 0 < self.h <= self.horizon:
            raise ValueError("need 0 < h <= horizon")
        self.steps = _as_steps(self.horizon, self.h)
        self._discrete = EntangledChain([step_operator(G, self.h) for G in self.generators], self.A, check="off")

    @property
    def basis(self):
        return self.generators[0].basis

    @property
    def a(self) -> int:
        return len(self.A)

    def term_rows(self, ks: np.ndarray, f: FunctionVector) -> np.ndarray:
        """Integrand at nodes ``t = k h``."""
        ks = np.asarray(ks, dtype=np.int64)
        out = np.empty((ks.shape[0], f.basis.dim), dtype=np.complex128)
        zero = ks == 0
        if np.any(zero):
            x = f.coeffs[None, :]
            for A in self.A:
                x = A.apply_rows(x)
            out[zero] = x[0]
        if np.any(~zero):
            out[~zero] = self._discrete.term_rows(ks[~zero], f)
        return out


def _as_steps(t: float, h: float) -> int:
    k = int(round(t / h))
    if k < 1 or abs(k * h - t) > 1e-9 * max(t, h):
        raise ValueError(f"time {t!r} is not a multiple of the step {h!r}")
    return k


def _node_checkpoints(chain: SemigroupChain, checkpoints) -> tuple[np.ndarray, tuple]:
    if checkpoints is None:
        checkpoints = [chain.horizon]
    times = sorted(set(float(t) for t in checkpoints))
    if times[0] <= 0 or times[-1] > chain.horizon * (1 + 1e-12):
        raise ValueError(f"checkpoints must lie in (0, {chain.horizon}]")
    ks = np.array([_as_steps(t, chain.h) for t in times], dtype=np.int64)
    if np.any(np.diff(ks) <= 0):
        raise ValueError("checkpoints collapse onto the same quadrature node")
    return ks, tuple(times)


def _trapezoid(means: np.ndarray, ks: np.ndarray, g0: np.ndarray, gk: np.ndarray) -> np.ndarray:
    # (1/K)(g_0/2 + g_1 + ... + g_K - g_K/2) from the running mean of g_1..g_K
    return means + (g0[None, :] - gk) / (2.0 * ks[:, None])


def cesaro_integral(chain: SemigroupChain, f: FunctionVector, checkpoints=None, threads: int = 1,
                    block: int = BLOCK) -> CesaroSeries:
    """Trapezoid approximation of ``(1/t) int_0^t term(s) ds`` at each checkpoint time.

    The returned series is indexed by the number of quadrature steps
    ``t / h``; multiply by ``chain.h`` for the times.
    """
    if f.basis != chain.basis:
        raise DimensionError(f"f lives on {f.basis}, chain on {chain.basis}")
    ks, _ = _node_checkpoints(chain, checkpoints)
    K = int(ks[-1])
    means = complex_running_means(_blocks(lambda ns: chain.term_rows(ns, f), K, block, threads), f.basis.dim, ks)
    g0 = chain.term_rows(np.zeros(1, dtype=np.int64), f)[0]
    gk = chain.term_rows(ks, f)
    vals = _trapezoid(means, ks, g0, gk)
    return CesaroSeries(tuple(int(k) for k in ks), tuple(FunctionVector(f.basis, v) for v in vals), "vector", f.basis)


def cesaro_integral_abs(chain: SemigroupChain, f: FunctionVector, checkpoints=None, G_eval: int | None = None,
                        threads: int = 1, block: int = BLOCK) -> CesaroSeries:
    """As :func:`cesaro_integral` for the pointwise absolute value of the integrand."""
    if f.basis != chain.basis:
        raise DimensionError(f"f lives on {f.basis}, chain on {chain.basis}")
    ks, _ = _node_checkpoints(chain, checkpoints)
    K = int(ks[-1])
    G, to_abs = _abs_grid(f.basis, G_eval)
    means = running_means(_blocks(lambda ns: to_abs(chain.term_rows(ns, f)), K, block, threads), G, ks)
    g0 = to_abs(chain.term_rows(np.zeros(1, dtype=np.int64), f))[0]
    gk = to_abs(chain.term_rows(ks, f))
    vals = _trapezoid(means, ks, g0, gk)
    return CesaroSeries(tuple(int(k) for k in ks), tuple(np.array(v) for v in vals), "abs_grid", SpatialGrid(G))


def rotation_flow_mean(alpha: float, m: int, t: float) -> complex:
    """Closed form of ``(1/t) int_0^t exp(2 pi i m alpha s) ds``."""
    w = 2j * np.pi * m * float(alpha)
    if w == 0:
        return 1.0 + 0j
    return complex(np.expm1(w * t) / (w * t))
