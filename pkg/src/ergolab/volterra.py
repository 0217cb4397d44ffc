"""The Volterra operator ``(Vf)(x) = int_0^x f`` on Fourier modes ``-M..M``.

``V`` splits as ``V1 + V2 + V3`` with

* ``V1 f = c_0 J`` where ``J(x) = x`` (truncated to the sawtooth series),
* ``V2 f = -(1 / 2 pi i) sum_{m != 0} (c_m / m) e_0``,
* ``V3 f = (1 / 2 pi i) sum_{m != 0} (c_m / m) e_m``.

``V1`` and ``V2`` have rank one; ``V3`` is diagonal. A twisted-compactness
certificate picks the least ``M`` with ``sum_{|m| >= M} 1/m^2 < 4 pi^2 eps^2``,
after which the high-mode part of ``V3 f`` has sup norm below ``eps`` for
every ``||f||_2 <= 1``.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .core import FunctionVector, SpectralFourier, sawtooth_coefficients, spectral_to_grid_values, sup_bound
from .errors import CapExceeded, NumericalGuardError
from .operators import DenseOperator, DiagonalSpectral, Operator, diagonal

MAX_POWER = 4
SUMMATION_LIMIT = 10**7
DEFAULT_M_CAP = 10**6
_EPS = np.finfo(np.float64).eps


# -- tail sums of 1/m^2 -------------------------------------------------------

@lru_cache(maxsize=8)
def _far_tail(start: int) -> tuple[float, float]:
    """Bounds on ``sum_{m >= start} 1/m^2`` (one-sided, ``start >= 1``).

    Direct summation up to :data:`SUMMATION_LIMIT` plus integral bounds
    ``1/K < sum_{m >= K} 1/m^2 < 1/K + 1/K^2`` on the remainder.
    """
    K = max(SUMMATION_LIMIT, start)
    m = np.arange(start, K, dtype=np.float64)
    s = float(np.sum(1.0 / (m * m))) if m.size else 0.0
    # pairwise summation + per-term rounding
    err = (math.log2(max(m.size, 2)) + 3) * _EPS * s
    return s - err + 1.0 / K, s + err + 1.0 / K + 1.0 / K**2


def inverse_square_tail_bounds(M: int) -> tuple[float, float]:
    """Certified interval for ``sum_{|m| >= M} 1/m^2`` (two-sided sum, ``M >= 1``)."""
    if M < 1:
        return math.inf, math.inf
    lo, hi = _far_tail(M)
    return 2 * lo, 2 * hi


def inverse_square_tail(M: int) -> float:
    lo, hi = inverse_square_tail_bounds(M)
    return 0.5 * (lo + hi)


def _tail_table(M_cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Bounds on the two-sided tail for every ``M = 1..M_cap``; index ``M - 1``."""
    lo_far, hi_far = _far_tail(M_cap + 1)
    m = np.arange(1, M_cap + 1, dtype=np.float64)
    terms = 1.0 / (m * m)
    suffix = np.cumsum(terms[::-1])[::-1]
    # recursive summation error bound, elementwise
    count = np.arange(M_cap, 0, -1, dtype=np.float64)
    err = (count + 2) * _EPS * suffix
    return 2 * (suffix - err + lo_far), 2 * (suffix + err + hi_far)


@dataclass(frozen=True)
class CompactnessCertificate:
    """Mode cutoff splitting ``V3 f`` into a finite part and a uniformly small remainder.

    ``U = span{e_m : |m| < M_min}``; for ``||f||_2 <= 1`` the remainder
    ``P_R V3 f`` has sup norm at most ``certified_bound < epsilon``.
    """

    epsilon: float
    M_min: int
    tail_sum: float
    tail_upper: float
    tail_previous: float
    threshold: float
    certified_bound: float

    def csv_row(self) -> list:
        return [repr(self.epsilon), self.M_min, repr(self.tail_sum), repr(self.certified_bound)]

    def to_csv(self) -> str:
        return certificates_csv([self])


def certificates_csv(certs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "M_min", "tail_sum", "certified_bound"])
    for c in certs:
        w.writerow(c.csv_row())
    return buf.getvalue()


def twisted_compactness_certificate(epsilon: float, M_cap: int = DEFAULT_M_CAP) -> CompactnessCertificate:
    """Least ``M`` with ``sum_{|m| >= M} 1/m^2 < 4 pi^2 epsilon^2``.

    Raises :class:`CapExceeded` when no ``M <= M_cap`` qualifies.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if M_cap < 1 or M_cap > SUMMATION_LIMIT:
        raise ValueError(f"M_cap must lie in 1..{SUMMATION_LIMIT}")
    thr = 4 * math.pi**2 * epsilon**2
    lo, hi = _tail_table(M_cap)
    ok = np.nonzero(hi < thr)[0]
    if ok.size == 0:
        raise CapExceeded(f"no cutoff M <= {M_cap} reaches tail < {thr:.6g}")
    M_min = int(ok[0]) + 1
    prev_lo = math.inf if M_min == 1 else float(lo[M_min - 2])
    if prev_lo < thr:
        raise NumericalGuardError(f"tail at M={M_min - 1} too close to the threshold to certify minimality")
    tail = 0.5 * float(lo[M_min - 1] + hi[M_min - 1])
    prev = math.inf if M_min == 1 else 0.5 * float(lo[M_min - 2] + hi[M_min - 2])
    bound = math.sqrt(float(hi[M_min - 1])) / (2 * math.pi)
    return CompactnessCertificate(float(epsilon), M_min, tail, float(hi[M_min - 1]), prev, thr, bound)


# -- the operator and its parts ----------------------------------------------

@dataclass(frozen=True, eq=False)
class VolterraParts:
    """``V = v1 + v2 + v3`` on modes ``-M..M`` and the ``k``-th power split.

    ``v3`` holds ``V3**k``; ``cross`` is the sum of all other words of
    ``(V1 + V2 + V3)**k`` (each containing ``V1`` or ``V2``), and
    ``power = cross + v3``.
    """

    M: int
    k: int
    v1: DenseOperator
    v2: DenseOperator
    v3: DiagonalSpectral
    cross: DenseOperator
    cross_terms: tuple

    @property
    def basis(self) -> SpectralFourier:
        return self.v3.basis

    @property
    def power(self) -> DenseOperator:
        return self.cross + self.v3

    @property
    def truncation_residual(self) -> float:
        """``||J - J_M||_2`` lost by representing ``V1`` in the truncated span."""
        from .core import sawtooth_residual

        return sawtooth_residual(self.M)


def _v3_diagonal(M: int, k: int) -> np.ndarray:
    m = np.arange(-M, M + 1)
    mu = np.zeros(2 * M + 1, dtype=np.complex128)
    nz = m != 0
    mu[nz] = (2j * np.pi * m[nz]) ** (-k)
    return mu


def build_volterra(M: int, k: int = 1) -> VolterraParts:
    if M < 1:
        raise ValueError("M must be >= 1")
    if not 1 <= k <= MAX_POWER:
        raise ValueError(f"powers 1..{MAX_POWER} supported (the word expansion has 3**k terms)")
    basis = SpectralFourier(M)
    d = basis.dim
    saw = sawtooth_coefficients(M).coeffs
    m1 = np.zeros((d, d), dtype=np.complex128)
    m1[:, M] = saw
    m2 = np.zeros((d, d), dtype=np.complex128)
    m = basis.modes
    nz = m != 0
    m2[M, nz] = -1.0 / (2j * np.pi * m[nz])
    v1 = DenseOperator(basis, m1)
    v2 = DenseOperator(basis, m2)
    base3 = _v3_diagonal(M, 1)
    mats = {1: m1, 2: m2, 3: np.diag(base3)}
    terms = []
    for word in itertools.product((1, 2, 3), repeat=k):
        if all(w == 3 for w in word):
            continue
        prod = reduce(np.matmul, (mats[w] for w in word))
        terms.append((word, DenseOperator(basis, prod)))
    cross = DenseOperator(basis, sum(t.matrix() for _, t in terms))
    v3 = diagonal(_v3_diagonal(M, k), M)
    return VolterraParts(M, k, v1, v2, v3, cross, tuple(terms))


# -- (A2) bound ----------------------------------------------------------------

A2_CONSTANT = 1.0 / (2.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class A2Report:
    trials: int
    worst_ratio: float
    worst_chained_ratio: float
    max_sup: float
    bound: float
    passed: bool


def a2_bound_check(parts: VolterraParts, trials: int = 1000, rng: np.random.Generator | None = None,
                   include_extremal: bool = True) -> A2Report:
    """Check ``sup_bound(V2 f) <= ||f||_2 / (2 sqrt 3)`` on random spectral ``f``.

    The chained form ``<= ||f||_inf / (2 sqrt 3)`` uses grid samples on
    ``2M + 1`` or more points, where the sampled maximum dominates the RMS and
    hence ``||f||_2``. ``worst_ratio`` is the largest
    ``sup_bound(V2 f) / (||f||_2 / (2 sqrt 3))``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    d = parts.basis.dim
    F = rng.standard_normal((trials, d)) + 1j * rng.standard_normal((trials, d))
    if include_extremal and trials:
        # Cauchy-Schwarz is saturated by c_m proportional to 1/m
        m = parts.basis.modes.astype(float)
        ext = np.zeros(d, dtype=np.complex128)
        ext[m != 0] = 1.0 / m[m != 0]
        F[0] = ext
    F /= np.linalg.norm(F, axis=1, keepdims=True)
    out = parts.v2.apply_rows(F)
    sups = np.sum(np.abs(out), axis=1)
    l2 = np.linalg.norm(F, axis=1)
    linf = np.max(np.abs(spectral_to_grid_values(F, parts.M, 2 * parts.M + 1)), axis=1)
    ratio = sups / (l2 * A2_CONSTANT)
    chained = sups / (linf * A2_CONSTANT)
    ok = bool(np.all(sups <= l2 * A2_CONSTANT + 1e-12) and np.all(sups <= linf * A2_CONSTANT + 1e-12))
    return A2Report(trials, float(ratio.max(initial=0.0)), float(chained.max(initial=0.0)),
                    float(sups.max(initial=0.0)), A2_CONSTANT, ok)


# -- certificate verification ------------------------------------------------

@dataclass(frozen=True)
class CertificateCheck:
    trials: int
    violations: int
    worst_sup: float
    epsilon: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def remainder_part(f: FunctionVector, M_min: int) -> FunctionVector:
    """``P_R f``: keep modes ``|m| >= M_min``."""
    keep = np.abs(f.basis.modes) >= M_min
    return FunctionVector(f.basis, np.where(keep, f.coeffs, 0))


def _random_unitary_kind(basis: SpectralFourier, rng: np.random.Generator) -> Operator:
    from .operators import rotation

    if rng.random() < 0.5:
        return rotation(format(rng.random(), ".17f"), basis.M)
    return diagonal(np.exp(2j * np.pi * rng.random(basis.dim)), basis.M)


def verify_certificate(cert: CompactnessCertificate, parts: VolterraParts, trials: int = 500,
                       rng: np.random.Generator | None = None, n_max: int = 1000) -> CertificateCheck:
    """Sample ``sup_bound(P_R V3 T0^n f)`` for random ``f`` (``||f||_2 <= 1``), ``n <= n_max`` and unitary ``T0``."""
    if parts.M < cert.M_min:
        raise ValueError(f"parts cover modes up to {parts.M}, certificate needs {cert.M_min}")
    rng = rng if rng is not None else np.random.default_rng(0)
    d = parts.basis.dim
    worst, bad = 0.0, 0
    for t in range(trials):
        c = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        if t % 4 == 3:
            # weight toward the boundary mode, where the bound is tightest
            c = c * (np.abs(parts.basis.modes) >= cert.M_min)
            if not np.any(c):
                c[-1] = 1.0
        scale = 1.0 if t % 2 == 0 else rng.random()
        f = FunctionVector(parts.basis, c / np.linalg.norm(c) * scale)
        T0 = _random_unitary_kind(parts.basis, rng)
        n = int(rng.integers(1, n_max + 1))
        g = remainder_part(parts.v3.apply(T0.power_apply(n, f)), cert.M_min)
        s = sup_bound(g)
        worst = max(worst, s)
        bad += s >= cert.epsilon
    return CertificateCheck(trials, int(bad), worst, cert.epsilon)


__all__ = [
    "A2_CONSTANT",
    "A2Report",
    "CertificateCheck",
    "CompactnessCertificate",
    "VolterraParts",
    "a2_bound_check",
    "build_volterra",
    "certificates_csv",
    "inverse_square_tail",
    "inverse_square_tail_bounds",
    "remainder_part",
    "twisted_compactness_certificate",
    "verify_certificate",
]
