"""Rotation angles carried exactly or in double-double precision.

An :class:`Angle` is either an exact rational ``p/q`` or a declared
irrational given by a decimal string. Irrationals are split into a
double-double pair ``hi + lo`` so that ``frac(n * m * alpha)`` stays accurate
to about 1e-16 for ``n`` up to ``2**53 / |m|``.
"""
from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels

_DEC_CTX = decimal.Context(prec=60)


def _dd_from_decimal(value: decimal.Decimal) -> tuple[float, float]:
    hi = float(value)
    lo = float(_DEC_CTX.subtract(value, decimal.Decimal(hi)))
    return hi, lo


@dataclass(frozen=True)
class Angle:
    """Rotation number in [0, 1).

    Attributes
    ----------
    exact : Fraction or None
        Set for rational angles.
    decimal : str or None
        Canonical decimal string for declared irrationals.
    symbol : str or None
        Identity used to recognize a shared irrational across operators.
    """

    exact: Fraction | None = None
    decimal: str | None = None
    symbol: str | None = None

    def __post_init__(self):
        if (self.exact is None) == (self.decimal is None):
            raise ValueError("Angle needs exactly one of a rational or a decimal value")

    @classmethod
    def rational(cls, p: int, q: int = 1) -> "Angle":
        return cls(exact=Fraction(p, q) % 1)

    @classmethod
    def from_decimal(cls, text: str, precision: int | None = None, symbol: str | None = None) -> "Angle":
        """Declare an irrational angle from a decimal string.

        ``precision`` is the number of significant digits the string is
        asserted to carry; a mismatch is an error.
        """
        value = decimal.Decimal(text.strip())
        if not value.is_finite():
            raise ValueError(f"angle {text!r} is not finite")
        if precision is not None:
            digits = len(value.as_tuple().digits)
            if digits < precision:
                raise ValueError(f"angle {text!r} carries {digits} digits, declared precision {precision}")
        value = _DEC_CTX.remainder(value, decimal.Decimal(1))
        if value < 0:
            value += 1
        canon = format(value.normalize(_DEC_CTX), "f")
        return cls(decimal=canon, symbol=symbol or canon)

    @classmethod
    def sqrt2_minus_1(cls, digits: int = 50) -> "Angle":
        ctx = decimal.Context(prec=digits)
        return cls.from_decimal(str(ctx.subtract(ctx.sqrt(decimal.Decimal(2)), decimal.Decimal(1))),
                                symbol="sqrt2-1")

    @property
    def is_rational(self) -> bool:
        return self.exact is not None

    @property
    def hi_lo(self) -> tuple[float, float]:
        if self.exact is not None:
            value = decimal.Decimal(self.exact.numerator) / decimal.Decimal(self.exact.denominator)
            return _dd_from_decimal(_DEC_CTX.plus(value))
        return _dd_from_decimal(decimal.Decimal(self.decimal))

    def __float__(self) -> float:
        return self.hi_lo[0]

    def mode_angles(self, modes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Double-double ``frac(m * alpha)`` for each integer mode ``m``."""
        if self.exact is not None:
            fr = [Fraction(int(m)) * self.exact % 1 for m in modes]
            pairs = [_dd_from_decimal(_DEC_CTX.divide(decimal.Decimal(x.numerator), decimal.Decimal(x.denominator)))
                     for x in fr]
        else:
            a = decimal.Decimal(self.decimal)
            pairs = []
            for m in modes:
                v = _DEC_CTX.remainder(_DEC_CTX.multiply(a, decimal.Decimal(int(m))), decimal.Decimal(1))
                if v < 0:
                    v += 1
                pairs.append(_dd_from_decimal(v))
        arr = np.array(pairs, dtype=np.float64).reshape(-1, 2)
        return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])

    def __str__(self) -> str:
        if self.exact is not None:
            return f"{self.exact.numerator}/{self.exact.denominator}"
        return self.decimal


def rational_phase_indices(ns: np.ndarray, modes: np.ndarray, exact: Fraction) -> np.ndarray:
    """Residues ``(n * m * p) mod q`` as an int64 array of shape (len(ns), len(modes))."""
    p, q = exact.numerator, exact.denominator
    mp = (modes.astype(np.int64) * p) % q
    nn = ns.astype(np.int64) % q
    return (nn[:, None] * mp[None, :]) % q


def rational_phase_table(q: int) -> np.ndarray:
    k = np.arange(q)
    table = np.exp(2j * np.pi * k / q)
    # pin the exactly representable quarter turns
    for r, val in ((0, 1.0), (q / 2, -1.0), (q / 4, 1j), (3 * q / 4, -1j)):
        if float(r).is_integer() and r < q:
            table[int(r)] = val
    return table


def turn_phases(ns: np.ndarray, ahi: np.ndarray, alo: np.ndarray) -> np.ndarray:
    """``exp(2 pi i frac(n * a))`` with the fraction reduced in double-double."""
    out = np.empty((ns.shape[0], ahi.shape[0]), dtype=np.float64)
    _kernels.dd_phase_fraction(np.ascontiguousarray(ns, dtype=np.int64), ahi, alo, out)
    return np.exp(2j * np.pi * out)
