"""Predicted limits of entangled averages from unimodular point spectra.

For each operator the unimodular eigenvalues are grouped and paired with
their spectral projectors. The limit is the sum, over eigenvalue tuples
whose product is one, of the projector chain applied to ``f``. Tuples are
matched exactly (integer lattice arithmetic) whenever every eigenvalue
carries an exact label, and numerically otherwise.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import FunctionVector, norm
from .errors import ClusterAmbiguity, DimensionError, ToleranceOverlap, TupleLimitExceeded
from .jdlg import JdlgDecomposition, decompose
from .operators import DenseOperator, DiagonalSpectral, GridPermutation, Operator
from .series import CesaroSeries

TOL_SEP = 1e-6
TOL_MATCH = 1e-9
TUPLE_LIMIT = 10**7

# exact labels are pairs (r, k): lambda = exp(2 pi i (r + k * alpha)) with r a
# Fraction in [0, 1) and alpha the operator's declared irrational (k = 0 if none)


@dataclass(frozen=True, eq=False)
class SpectrumEntry:
    lam: complex
    projector: Operator
    label: tuple | None = None

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.projector.matrix()).real))


@dataclass(frozen=True, eq=False)
class PointSpectrum:
    """Unimodular eigenvalues of one operator with their spectral projectors.

    ``symbol`` names the irrational angle that the integer part of the exact
    labels refers to; it is ``None`` when all labels are rational.
    """

    operator: Operator
    entries: tuple
    symbol: str | None = None

    def __len__(self):
        return len(self.entries)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries], dtype=np.complex128)

    @property
    def exact(self) -> bool:
        return all(e.label is not None for e in self.entries)

    def total_projector(self) -> np.ndarray:
        d = self.operator.dim
        out = np.zeros((d, d), dtype=np.complex128)
        for e in self.entries:
            out += e.projector.matrix()
        return out


def _turn(lam: complex) -> float:
    return float(np.mod(np.angle(lam) / (2 * np.pi), 1.0))


def _label_value(label, alpha: float | None) -> complex:
    r, k = label
    t = float(r) + (k * alpha if k else 0.0)
    return complex(np.exp(2j * np.pi * (t % 1.0)))


def cluster_unimodular(values, tol_sep: float) -> list[list[int]]:
    """Single-linkage groups of eigenvalues closer than ``tol_sep``.

    Raises ClusterAmbiguity when two different groups come within
    ``10 * tol_sep`` of each other.
    """
    values = np.asarray(values, dtype=np.complex128)
    n = values.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    dist = np.abs(values[:, None] - values[None, :])
    for i, j in zip(*np.nonzero(np.triu(dist < tol_sep, 1))):
        parent[find(i)] = find(j)
    groups: dict[int, list[int]] = defaultdict(list)
    for i in range(n):
        groups[find(i)].append(i)
    out = sorted(groups.values(), key=lambda g: (_turn(values[g[0]]), g[0]))
    root = np.array([find(i) for i in range(n)])
    near = (dist < 10 * tol_sep) & (root[:, None] != root[None, :])
    if np.any(near):
        i, j = np.argwhere(near)[0]
        raise ClusterAmbiguity(f"eigenvalues {values[i]:.12g} and {values[j]:.12g} are {dist[i, j]:.3g} apart, "
                               f"between tol_sep={tol_sep:g} and 10*tol_sep")
    return out


def _spectrum_diagonal(T: DiagonalSpectral, D: JdlgDecomposition, tol_sep):
    basis = T.basis
    keep = np.nonzero(np.abs(np.diag(D.reversible_projector.matrix())) > 0.5)[0]
    mu = T.mu
    entries = []
    symbol = None
    if T.angle is not None and T.scalar == 1.0:
        groups: dict[tuple, list[int]] = defaultdict(list)
        if T.angle.is_rational:
            for i in keep:
                groups[(Fraction(int(basis.modes[i])) * T.angle.exact % 1, 0)].append(i)
        else:
            symbol = T.angle.symbol
            for i in keep:
                groups[(Fraction(0), int(basis.modes[i]))].append(i)
        alpha = float(T.angle)
        for label, idx in sorted(groups.items(), key=lambda kv: (_turn(mu[kv[1][0]]), kv[1][0])):
            mask = np.zeros(basis.dim)
            mask[idx] = 1.0
            lam = complex(mu[idx[0]]) if T.angle.is_rational else _label_value(label, alpha)
            entries.append(SpectrumEntry(lam, DiagonalSpectral(basis, mask), label))
        return entries, symbol
    for grp in cluster_unimodular(mu[keep], tol_sep):
        idx = keep[grp]
        mask = np.zeros(basis.dim)
        mask[idx] = 1.0
        lam = complex(np.mean(mu[idx]))
        entries.append(SpectrumEntry(lam / abs(lam), DiagonalSpectral(basis, mask), None))
    return entries, None


def _spectrum_permutation(T: GridPermutation, tol_sep):
    G = T.dim
    comps: dict = {}
    values = []
    for cyc in T.cycles:
        L = len(cyc)
        for k in range(L):
            values.append(T.phase * np.exp(2j * np.pi * k / L))
            comps[len(values) - 1] = (np.array(cyc), k, L)

    def cycle_block(idx, k, L):
        pos = np.arange(L)
        w = np.exp(2j * np.pi * k * (pos[:, None] - pos[None, :]) / L) / L
        P = np.zeros((G, G), dtype=np.complex128)
        P[np.ix_(idx, idx)] = w
        return P

    entries = []
    if T.phase == 1.0:
        groups: dict[Fraction, list[int]] = defaultdict(list)
        for i, (idx, k, L) in comps.items():
            groups[Fraction(k, L)].append(i)
        for r in sorted(groups):
            P = sum(cycle_block(*comps[i]) for i in groups[r])
            entries.append(SpectrumEntry(_label_value((r, 0), None), DenseOperator(T.basis, P), (r, 0)))
        return entries
    for grp in cluster_unimodular(values, tol_sep):
        P = sum(cycle_block(*comps[i]) for i in grp)
        lam = complex(np.mean([values[i] for i in grp]))
        entries.append(SpectrumEntry(lam / abs(lam), DenseOperator(T.basis, P), None))
    return entries


def _spectrum_dense(T: Operator, D: JdlgDecomposition, tol_sep):
    if D.reversible_dim == 0:
        return []
    w, V = np.linalg.eig(D.reduced)
    Vinv = np.linalg.inv(V)
    entries = []
    for grp in cluster_unimodular(w, tol_sep):
        P = D.right @ V[:, grp] @ Vinv[grp, :] @ D.left
        lam = complex(np.mean(w[grp]))
        entries.append(SpectrumEntry(lam / abs(lam), DenseOperator(T.basis, P), None))
    return entries


def point_spectrum(T: Operator, D: JdlgDecomposition | None = None, tol_sep: float = TOL_SEP) -> PointSpectrum:
    """Group the reversible eigenpairs of ``T`` and build their projectors.

    Rotations and unphased grid permutations get exact eigenvalue labels;
    other kinds are clustered numerically with radius ``tol_sep``.
    """
    D = decompose(T) if D is None else D
    if D.operator is not T:
        raise ValueError("decomposition belongs to a different operator")
    symbol = None
    if isinstance(T, DiagonalSpectral):
        entries, symbol = _spectrum_diagonal(T, D, tol_sep)
    elif isinstance(T, GridPermutation):
        entries = _spectrum_permutation(T, tol_sep)
    else:
        entries = _spectrum_dense(T, D, tol_sep)
    return PointSpectrum(T, tuple(entries), symbol)


def verify_projector(T: Operator, lam: complex, P: Operator, N: int = 10**4) -> float:
    """Max entry of ``(1/N) sum_{n<=N} (conj(lam) T)^n - P``.

    Small multiples of ``1/N`` are expected; this checks the projector
    against the averaging definition of the mean ergodic projection.
    """
    d = T.dim
    S = T.scale(np.conj(lam))
    acc = np.zeros((d, d), dtype=np.complex128)
    eye = np.eye(d, dtype=np.complex128)
    for n in range(1, N + 1):
        acc += S.power_rows(np.full(d, n, dtype=np.int64), eye)
    # rows hold (S^n e_i) so the accumulated matrix is the transpose
    return float(np.max(np.abs(acc.T / N - P.matrix())))


# -- resonances -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResonanceSet:
    """Index tuples ``(i_0, ..., i_a)`` into the spectra with product one."""

    spectra: tuple
    tuples: tuple
    mode: str
    tol_match: float

    def __len__(self):
        return len(self.tuples)

    def eigenvalues(self, t) -> tuple:
        return tuple(self.spectra[j].entries[i].lam for j, i in enumerate(t))

    def products(self) -> np.ndarray:
        return np.array([np.prod(self.eigenvalues(t)) for t in self.tuples], dtype=np.complex128)

    def to_csv(self, contributions=None, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([*(f"turn_{j}" for j in range(len(self.spectra))), "contribution_l2"])
        for k, t in enumerate(self.tuples):
            turns = [repr(_turn(lam)) for lam in self.eigenvalues(t)]
            c = "" if contributions is None else repr(float(contributions[k]))
            w.writerow([*turns, c])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _exact_ok(spectra) -> bool:
    if not all(s.exact for s in spectra):
        return False
    symbols = {s.symbol for s in spectra if s.symbol is not None}
    return len(symbols) <= 1


def _count(spectra) -> int:
    return math.prod(len(s) for s in spectra)


def _half_products(spectra, key, combine, zero):
    """All (key, index tuple) pairs over the cartesian product of ``spectra``."""
    if _count(spectra) > TUPLE_LIMIT:
        raise TupleLimitExceeded(f"more than {TUPLE_LIMIT} candidate tuples")
    items = [(zero, ())]
    for s in spectra:
        keys = [key(e) for e in s.entries]
        items = [(combine(acc, k), idx + (i,)) for acc, idx in items for i, k in enumerate(keys)]
    return items


def _resonant_exact(spectra):
    def key(e):
        return e.label

    def combine(a, b):
        return ((a[0] + b[0]) % 1, a[1] + b[1])

    zero = (Fraction(0), 0)
    h = (len(spectra) + 1) // 2
    left = _half_products(spectra[:h], key, combine, zero)
    right = _half_products(spectra[h:], key, combine, zero)
    table: dict = defaultdict(list)
    for k, idx in left:
        table[k].append(idx)
    out = []
    for k, ridx in right:
        need = ((-k[0]) % 1, -k[1])
        for lidx in table.get(need, ()):
            out.append(lidx + ridx)
            if len(out) > TUPLE_LIMIT:
                raise TupleLimitExceeded(f"more than {TUPLE_LIMIT} resonant tuples")
    return sorted(out)


def _circle_dist(t: float) -> float:
    t = t % 1.0
    return min(t, 1.0 - t)


def _resonant_numeric(spectra, tol_match):
    # |prod - 1| = 2 sin(pi d) for turn distance d; compare on turns
    def to_turn_tol(x):
        return math.asin(min(1.0, x / 2)) / math.pi

    band_t = to_turn_tol(10 * tol_match)

    def key(e):
        return _turn(e.lam)

    h = (len(spectra) + 1) // 2
    left = _half_products(spectra[:h], key, lambda a, b: (a + b) % 1.0, 0.0)
    right = _half_products(spectra[h:], key, lambda a, b: (a + b) % 1.0, 0.0)
    left.sort(key=lambda kv: kv[0])
    lkeys = [k for k, _ in left]
    out = []
    for rk, ridx in right:
        target = (-rk) % 1.0
        for shift in (-1.0, 0.0, 1.0):
            lo = bisect_left(lkeys, target + shift - band_t)
            for pos in range(lo, len(lkeys)):
                if lkeys[pos] > target + shift + band_t:
                    break
                idx = left[pos][1] + ridx
                lam = np.prod([spectra[j].entries[i].lam for j, i in enumerate(idx)])
                gap = abs(lam - 1)
                if gap < tol_match:
                    out.append(idx)
                elif gap < 10 * tol_match:
                    raise ToleranceOverlap(f"product {lam!r} is {gap:.3g} from 1, inside the ambiguity band "
                                           f"[{tol_match:g}, {10 * tol_match:g})")
        if len(out) > TUPLE_LIMIT:
            raise TupleLimitExceeded(f"more than {TUPLE_LIMIT} resonant tuples")
    return sorted(set(out))


def resonant_tuples(spectra, tol_match: float = TOL_MATCH, mode: str = "auto") -> ResonanceSet:
    """All eigenvalue tuples, one per spectrum, whose product is one.

    ``mode="auto"`` uses exact lattice matching when every eigenvalue has an
    exact label and at most one irrational angle is involved, and numeric
    matching with tolerance ``tol_match`` otherwise. Both enumerate with a
    meet-in-the-middle split over the spectra.
    """
    spectra = tuple(spectra)
    if not spectra:
        raise ValueError("need at least one spectrum")
    if mode not in ("auto", "exact", "numeric"):
        raise ValueError(f"unknown mode {mode!r}")
    exact = _exact_ok(spectra)
    if mode == "exact" and not exact:
        raise ValueError("exact matching needs labelled spectra over at most one irrational angle")
    if mode == "numeric" or not exact:
        return ResonanceSet(spectra, tuple(_resonant_numeric(spectra, tol_match)), "numeric", tol_match)
    return ResonanceSet(spectra, tuple(_resonant_exact(spectra)), "exact", tol_match)


def nonresonant_gap(spectra, R: ResonanceSet) -> float:
    """``min |prod - 1|`` over tuples not in ``R`` (brute force, guarded)."""
    if _count(spectra) > TUPLE_LIMIT:
        raise TupleLimitExceeded(f"more than {TUPLE_LIMIT} candidate tuples")
    res = set(R.tuples)
    best = math.inf
    for idx in itertools.product(*(range(len(s)) for s in spectra)):
        if idx in res:
            continue
        lam = np.prod([spectra[j].entries[i].lam for j, i in enumerate(idx)])
        best = min(best, abs(lam - 1))
    return best


# -- prediction -------------------------------------------------------------------

def _chain_sum(tuples, spectra, A, f: FunctionVector):
    """Sum over tuples of ``P_{a} A_{a-1} ... A_0 P_{0} f`` sharing common prefixes."""
    level = {(): f.coeffs}
    for j, spec in enumerate(spectra):
        prefixes = {t[: j + 1] for t in tuples}
        nxt = {}
        for p in sorted(prefixes):
            x = level[p[:-1]]
            y = spec.entries[p[-1]].projector.apply_rows(x[None, :])[0]
            if j < len(spectra) - 1:
                y = A[j].apply_rows(y[None, :])[0]
            nxt[p] = y
        level = nxt
    total = np.zeros(f.basis.dim, dtype=np.complex128)
    contrib = []
    for t in tuples:
        total = total + level[t]
        contrib.append(float(np.linalg.norm(level[t])))
    return total, contrib


@dataclass(frozen=True, eq=False)
class LimitPrediction:
    vector: FunctionVector
    form: str
    contributions: tuple
    resonances: ResonanceSet


def predict_limit(chain, f: FunctionVector, spectra, R: ResonanceSet | None = None, form: str = "full",
                  tol_match: float = TOL_MATCH, details: bool = False):
    """Predicted limit of the entangled average of ``f``.

    ``form="full"`` sums over tuples ``(l_0, ..., l_a)`` with product one of
    ``P_{l_a} A_{a-1} ... A_0 P_{l_0} f``. ``form="printed"`` drops ``A_0``
    and the ``T_0`` side: tuples ``(l_1, ..., l_a)`` with product one of
    ``P_{l_a} A_{a-1} ... A_1 P_{l_1} f``. Only the full form matches the
    empirical averages in general; the other is kept for comparison.
    """
    spectra = tuple(spectra)
    if len(spectra) != chain.a + 1:
        raise DimensionError(f"need {chain.a + 1} spectra, got {len(spectra)}")
    if f.basis != chain.basis:
        raise DimensionError(f"f lives on {f.basis}, chain on {chain.basis}")
    if form == "full":
        used, A = spectra, chain.A
        stable = f.coeffs - spectra[0].total_projector() @ f.coeffs
        if np.linalg.norm(stable) > 1e-9 * max(1.0, np.linalg.norm(f.coeffs)):
            warnings.warn("f has a stable component for T_0; it is projected out", stacklevel=2)
    elif form == "printed":
        used, A = spectra[1:], chain.A[1:]
        if not used:
            raise ValueError("the printed form needs a >= 1")
    else:
        raise ValueError(f"unknown form {form!r}")
    if R is None or R.spectra != used:
        R = resonant_tuples(used, tol_match)
    vec, contrib = _chain_sum(R.tuples, used, A, f)
    out = FunctionVector(f.basis, vec)
    if details:
        return LimitPrediction(out, form, tuple(contrib), R)
    return out


# -- comparison -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LimitComparison:
    checkpoints: tuple
    sup_err: np.ndarray
    l2_err: np.ndarray
    decay_exponent: float
    alternative_l2: float | None = None

    @property
    def final_sup(self) -> float:
        return float(self.sup_err[-1])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint", "sup_err", "l2_err"])
        for N, s, l2 in zip(self.checkpoints, self.sup_err, self.l2_err):
            w.writerow([int(N), repr(float(s)), repr(float(l2))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def fit_decay(checkpoints, errors) -> float:
    """Least-squares slope of ``log err`` against ``log N`` (NaN if undetermined)."""
    x = np.log(np.asarray(checkpoints, dtype=float))
    y = np.asarray(errors, dtype=float)
    ok = y > 0
    if np.count_nonzero(ok) < 2 or np.ptp(x[ok]) == 0:
        return float("nan")
    return float(np.polyfit(x[ok], np.log(y[ok]), 1)[0])


def compare_limit(predicted: FunctionVector, series: CesaroSeries, alternative: FunctionVector | None = None) -> LimitComparison:
    """Distances between a predicted limit and each checkpoint of ``series``.

    ``sup_err`` is the largest coefficient (or grid value) difference and
    ``l2_err`` the L2 distance. ``alternative`` is an optional second
    prediction whose L2 distance to the final mean is also reported.
    """
    if series.mode != "vector":
        raise ValueError("compare_limit needs a vector-valued series")
    if series.basis != predicted.basis:
        raise DimensionError(f"prediction on {predicted.basis}, series on {series.basis}")
    sup, l2 = [], []
    for v in series.values:
        d = v - predicted
        sup.append(float(np.max(np.abs(d.coeffs), initial=0.0)))
        l2.append(norm(d, 2))
    alt = None if alternative is None else norm(series.final - alternative, 2)
    return LimitComparison(series.checkpoints, np.array(sup), np.array(l2), fit_decay(series.checkpoints, l2), alt)


def predict_weighted_limit(spectrum: PointSpectrum, f: FunctionVector, gammas, qs, tol_match: float = TOL_MATCH) -> FunctionVector:
    """Limit of ``(1/N) sum a_n T^n f`` for ``a_n = sum_k q_k gamma_k^n``: ``sum_k q_k P_{conj(gamma_k)} f``."""
    out = np.zeros(f.basis.dim, dtype=np.complex128)
    for g, q in zip(gammas, qs):
        target = np.conj(complex(g))
        for e in spectrum.entries:
            if abs(e.lam - target) < tol_match:
                out += complex(q) * e.projector.apply_rows(f.coeffs[None, :])[0]
    return FunctionVector(f.basis, out)
