"""Checkpointed running means and their CSV form."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import _kernels
from .core import Basis, FunctionVector, SpectralFourier

MODES = ("vector", "abs_grid", "scalar", "abs_scalar")


def geometric_checkpoints(N: int) -> np.ndarray:
    """``1, 2, 4, ...`` up to ``N``, always ending at ``N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    pts = [1 << k for k in range(N.bit_length()) if (1 << k) <= N]
    if pts[-1] != N:
        pts.append(N)
    return np.array(pts, dtype=np.int64)


def normalize_checkpoints(checkpoints, N: int) -> np.ndarray:
    if checkpoints is None:
        return geometric_checkpoints(N)
    cp = np.array(sorted(set(int(c) for c in checkpoints)), dtype=np.int64)
    if cp.size == 0 or cp[0] < 1 or cp[-1] > N:
        raise ValueError(f"checkpoints must lie in 1..{N}")
    return cp


def running_means(blocks: Iterable[np.ndarray], width: int, checkpoints: np.ndarray) -> np.ndarray:
    """Compensated running means of consecutive real row blocks.

    ``blocks`` yields float64 arrays of shape (B, width) covering terms
    ``n = 1, 2, ...`` in order. Returns the means at each checkpoint, shape
    (len(checkpoints), width). The reduction order is the row order, so the
    result does not depend on how the rows were split into blocks.
    """
    s = np.zeros(width)
    c = np.zeros(width)
    out = np.zeros((checkpoints.shape[0], width))
    ck = np.ascontiguousarray(checkpoints, dtype=np.int64)
    pos = 0
    start = 0
    for block in blocks:
        block = np.ascontiguousarray(block, dtype=np.float64)
        pos = _kernels.compensated_accumulate(block, s, c, start, ck, pos, out)
        start += block.shape[0]
    if pos != ck.shape[0]:
        raise ValueError(f"blocks ended at n={start} before the last checkpoint {ck[-1]}")
    return out


def complex_running_means(blocks: Iterable[np.ndarray], width: int, checkpoints: np.ndarray) -> np.ndarray:
    """As :func:`running_means` for complex rows (real and imaginary parts summed separately)."""

    def as_real() -> Iterator[np.ndarray]:
        for b in blocks:
            yield np.ascontiguousarray(b, dtype=np.complex128).view(np.float64)

    out = running_means(as_real(), 2 * width, checkpoints)
    return out.view(np.complex128)


@dataclass(frozen=True, eq=False)
class CesaroSeries:
    """Partial Cesàro means at increasing checkpoints.

    ``values`` holds FunctionVectors (``vector``), nonnegative grid arrays
    (``abs_grid``), or scalars (``scalar`` / ``abs_scalar``).
    """

    checkpoints: tuple
    values: tuple
    mode: str
    basis: Basis | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown series mode {self.mode!r}")
        if len(self.checkpoints) != len(self.values):
            raise ValueError("one value per checkpoint required")
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ValueError("checkpoints must be strictly increasing")

    def __len__(self):
        return len(self.checkpoints)

    def at(self, N: int):
        return self.values[self.checkpoints.index(N)]

    @property
    def final(self):
        return self.values[-1]

    def sup_values(self) -> np.ndarray:
        """Sup over coefficients / grid points (absolute value for scalars)."""
        return np.array([float(np.max(np.abs(_raw(v)))) for v in self.values])

    def l2_values(self) -> np.ndarray:
        out = []
        for v in self.values:
            if isinstance(v, FunctionVector):
                from .core import norm

                out.append(norm(v, 2))
            elif np.ndim(v) == 0:
                out.append(abs(complex(v)))
            else:
                out.append(float(np.sqrt(np.mean(np.abs(v) ** 2))))
        return np.array(out)

    def to_csv(self, path=None, summary: bool = False) -> str:
        text = self.summary_csv() if summary else self.full_csv()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def full_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint", "index", "re", "im"])
        for N, v in zip(self.checkpoints, self.values):
            raw = np.atleast_1d(_raw(v)).astype(np.complex128)
            if isinstance(v, FunctionVector) and isinstance(v.basis, SpectralFourier):
                labels = v.basis.modes
            else:
                labels = range(raw.shape[0])
            for k, z in zip(labels, raw):
                w.writerow([int(N), int(k), repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint", "sup_value", "l2_value"])
        for N, s, l2 in zip(self.checkpoints, self.sup_values(), self.l2_values()):
            w.writerow([int(N), repr(float(s)), repr(float(l2))])
        return buf.getvalue()


def _raw(v):
    return v.coeffs if isinstance(v, FunctionVector) else np.asarray(v)
