"""Function vectors on [0, 1) in a Fourier basis or on a uniform grid.

Spectral vectors hold coefficients ``c_m`` of ``e_m(x) = exp(2 pi i m x)`` for
``m = -M..M`` in ascending order. Spatial vectors hold values at the grid
points ``x_g = g / G``, ``g = 0..G-1``. Norms refer to the Lebesgue
probability measure on [0, 1), so the grid L2 norm is a root-mean-square.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AliasingError, DimensionError, OffGridError

#: grid refinement used for L1 / Linf estimates of spectral vectors
OVERSAMPLING = 4


@dataclass(frozen=True)
class SpectralFourier:
    M: int

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("mode cutoff must be nonnegative")

    @property
    def dim(self) -> int:
        return 2 * self.M + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def index(self, m: int) -> int:
        if abs(m) > self.M:
            raise DimensionError(f"mode {m} outside -{self.M}..{self.M}")
        return m + self.M

    @property
    def kind(self) -> str:
        return "spectral"

    @property
    def size(self) -> int:
        return self.M


@dataclass(frozen=True)
class SpatialGrid:
    G: int

    def __post_init__(self):
        if self.G < 1:
            raise ValueError("grid size must be positive")

    @property
    def dim(self) -> int:
        return self.G

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.G) / self.G

    @property
    def kind(self) -> str:
        return "spatial"

    @property
    def size(self) -> int:
        return self.G


Basis = SpectralFourier | SpatialGrid


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FunctionVector:
    """Immutable coefficient vector in a declared basis."""

    basis: Basis
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _frozen(self.coeffs)
        if arr.ndim != 1 or arr.shape[0] != self.basis.dim:
            raise DimensionError(f"expected {self.basis.dim} coefficients for {self.basis}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", arr)

    @property
    def is_spectral(self) -> bool:
        return isinstance(self.basis, SpectralFourier)

    def coefficient(self, m: int) -> complex:
        """Fourier coefficient of mode ``m`` (spectral vectors only)."""
        if not self.is_spectral:
            raise DimensionError("coefficient(m) needs a spectral vector")
        return complex(self.coeffs[self.basis.index(m)])

    def _check(self, other: "FunctionVector"):
        if self.basis != other.basis:
            raise DimensionError(f"basis mismatch: {self.basis} vs {other.basis}")

    def __add__(self, other: "FunctionVector") -> "FunctionVector":
        self._check(other)
        return FunctionVector(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "FunctionVector") -> "FunctionVector":
        self._check(other)
        return FunctionVector(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "FunctionVector":
        return FunctionVector(self.basis, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "FunctionVector":
        return FunctionVector(self.basis, -self.coeffs)

    def conj_abs(self) -> "FunctionVector":
        """Pointwise modulus (spatial vectors)."""
        if self.is_spectral:
            raise DimensionError("pointwise modulus needs a spatial vector")
        return FunctionVector(self.basis, np.abs(self.coeffs))


def spectral(coeffs, M: int | None = None) -> FunctionVector:
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if M is None:
        M = (coeffs.shape[0] - 1) // 2
    return FunctionVector(SpectralFourier(M), coeffs)


def spatial(values) -> FunctionVector:
    values = np.asarray(values, dtype=np.complex128)
    return FunctionVector(SpatialGrid(values.shape[0]), values)


def mode(m: int, M: int) -> FunctionVector:
    """The basis function ``e_m`` truncated to modes ``-M..M``."""
    basis = SpectralFourier(M)
    c = np.zeros(basis.dim, dtype=np.complex128)
    c[basis.index(m)] = 1.0
    return FunctionVector(basis, c)


def constant(basis: Basis, value: complex = 1.0) -> FunctionVector:
    if isinstance(basis, SpectralFourier):
        c = np.zeros(basis.dim, dtype=np.complex128)
        c[basis.M] = value
        return FunctionVector(basis, c)
    return FunctionVector(basis, np.full(basis.dim, value, dtype=np.complex128))


def zeros(basis: Basis) -> FunctionVector:
    return FunctionVector(basis, np.zeros(basis.dim, dtype=np.complex128))


def sawtooth_coefficients(M: int) -> FunctionVector:
    """Truncated Fourier series of ``J(x) = x`` on [0, 1).

    ``c_0 = 1/2`` and ``c_m = i / (2 pi m)`` for ``m != 0``.
    """
    if M < 1:
        raise ValueError("sawtooth needs M >= 1")
    basis = SpectralFourier(M)
    m = basis.modes.astype(np.float64)
    c = np.empty(basis.dim, dtype=np.complex128)
    nz = m != 0
    c[nz] = 1j / (2 * np.pi * m[nz])
    c[~nz] = 0.5
    return FunctionVector(basis, c)


def sawtooth_residual(M: int) -> float:
    """L2 distance ``||J - J_M||_2`` between ``x`` and its truncated series."""
    from .volterra import inverse_square_tail

    return float(np.sqrt(inverse_square_tail(M + 1) / (4 * np.pi**2)))


def evaluate(f: FunctionVector, x: float) -> complex:
    """Point value of ``f`` at ``x`` in [0, 1)."""
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x={x} outside [0, 1)")
    if f.is_spectral:
        m = f.basis.modes
        # reduce m*x mod 1 before the exponential to keep the phase accurate
        phase = np.mod(m * x, 1.0)
        return complex(np.sum(f.coeffs * np.exp(2j * np.pi * phase)))
    G = f.basis.G
    g = round(x * G)
    if abs(x * G - g) > 1e-9:
        raise OffGridError(f"x={x} is not a point of the {G}-grid")
    return complex(f.coeffs[g % G])


def _check_alias(M: int, G: int):
    if G < 2 * M + 1:
        raise AliasingError(f"grid of size {G} cannot resolve modes up to {M} (need G >= {2 * M + 1})")


def spectral_to_grid_values(coeffs: np.ndarray, M: int, G: int) -> np.ndarray:
    """Grid values of spectral coefficient rows; works on the last axis."""
    coeffs = np.asarray(coeffs)
    buf = np.zeros(coeffs.shape[:-1] + (G,), dtype=np.complex128)
    idx = np.arange(-M, M + 1) % G
    if G >= 2 * M + 1:
        buf[..., idx] = coeffs
    else:
        np.add.at(buf, (..., idx), coeffs)
    return np.fft.ifft(buf, axis=-1) * G


def to_spatial(f: FunctionVector, G: int) -> FunctionVector:
    """Sample a spectral vector on the ``G``-point grid.

    Raises :class:`AliasingError` when ``G < 2M + 1``; use
    :func:`to_spatial_undersampled` to sample a coarser grid anyway.
    """
    if not f.is_spectral:
        raise DimensionError("to_spatial expects a spectral vector")
    _check_alias(f.basis.M, G)
    return FunctionVector(SpatialGrid(G), spectral_to_grid_values(f.coeffs, f.basis.M, G))


def to_spatial_undersampled(f: FunctionVector, G: int) -> FunctionVector:
    """Grid samples without the aliasing guard; not invertible when ``G < 2M + 1``."""
    if not f.is_spectral:
        raise DimensionError("to_spatial_undersampled expects a spectral vector")
    return FunctionVector(SpatialGrid(G), spectral_to_grid_values(f.coeffs, f.basis.M, G))


def _grid_to_coeffs(values: np.ndarray, M: int) -> np.ndarray:
    G = values.shape[-1]
    hat = np.fft.fft(values, axis=-1) / G
    return hat[..., np.arange(-M, M + 1) % G]


def to_spectral(g: FunctionVector, M: int) -> FunctionVector:
    """Discrete Fourier coefficients of grid values for modes ``-M..M``.

    Exact inverse of :func:`to_spatial` whenever ``G >= 2M + 1``; otherwise
    raises :class:`AliasingError` (see :func:`to_spectral_lossy`).
    """
    if g.is_spectral:
        raise DimensionError("to_spectral expects a spatial vector")
    _check_alias(M, g.basis.G)
    return FunctionVector(SpectralFourier(M), _grid_to_coeffs(g.coeffs, M))


def to_spectral_lossy(g: FunctionVector, M: int) -> FunctionVector:
    """Like :func:`to_spectral` but accepts aliased mode sets (modes folded mod G)."""
    if g.is_spectral:
        raise DimensionError("to_spectral_lossy expects a spatial vector")
    return FunctionVector(SpectralFourier(M), _grid_to_coeffs(g.coeffs, M))


def inner(f: FunctionVector, g: FunctionVector) -> complex:
    """L2 inner product ``<f, g>``, linear in ``f``."""
    f._check(g)
    if f.is_spectral:
        return complex(np.vdot(g.coeffs, f.coeffs))
    return complex(np.vdot(g.coeffs, f.coeffs) / f.basis.G)


def norm(f: FunctionVector, p=2) -> float:
    """L^p norm for p in {1, 2, inf}.

    Spectral L2 uses Parseval. Spectral L1 and Linf are estimated on a grid
    oversampled by :data:`OVERSAMPLING`; :func:`sup_bound` is the certified
    Linf upper bound.
    """
    if p not in (1, 2, np.inf, "inf"):
        raise ValueError(f"unsupported norm order {p!r}")
    if p == 2:
        if f.is_spectral:
            return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))
        return float(np.sqrt(np.mean(np.abs(f.coeffs) ** 2)))
    vals = f.coeffs
    if f.is_spectral:
        vals = spectral_to_grid_values(f.coeffs, f.basis.M, OVERSAMPLING * f.basis.dim)
    a = np.abs(vals)
    return float(a.mean() if p == 1 else a.max())


def sup_bound(f: FunctionVector) -> float:
    """Certified Linf bound ``sum |c_m|`` of a spectral vector."""
    if not f.is_spectral:
        return float(np.max(np.abs(f.coeffs)))
    return float(np.sum(np.abs(f.coeffs)))


# -- CSV -------------------------------------------------------------------

def write_csv(f: FunctionVector, path) -> None:
    """One row per coefficient (index, re, im); a comment header records the basis."""
    Path(path).write_text(format_csv(f), encoding="utf-8")


def format_csv(f: FunctionVector) -> str:
    buf = io.StringIO()
    buf.write(f"# basis={f.basis.kind} size={f.basis.size}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "re", "im"])
    labels = f.basis.modes if f.is_spectral else range(f.basis.G)
    for k, c in zip(labels, f.coeffs):
        w.writerow([int(k), repr(float(c.real)), repr(float(c.imag))])
    return buf.getvalue()


def read_csv(path) -> FunctionVector:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# basis="):
        raise ValueError(f"{path}: missing basis header")
    meta = dict(item.split("=", 1) for item in lines[0][1:].split())
    size = int(meta["size"])
    basis = SpectralFourier(size) if meta["basis"] == "spectral" else SpatialGrid(size)
    rows = list(csv.DictReader(lines[1:]))
    vals = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    return FunctionVector(basis, vals)
