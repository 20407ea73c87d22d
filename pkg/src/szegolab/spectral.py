"""Eigendecompositions, spectral projections, counting and trace functionals.

The central object is :class:`SpectralData`, a full eigendecomposition of a
truncated operator together with the trust window below which the finite box
faithfully represents the infinite-lattice spectrum.  On top of it sit the
counting function Tr(proj(lam)), window counts N_r(lam), compressions of a
second operator to the range of a spectral projection, matrix functional
calculus, and traces of resolvent powers (with an analytically tail-corrected
variant for the diagonal potential, whose full lattice sum collapses to a
shell series).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import SzegoError
from .lattice import LatticeBox, Potential, SymmetricOperator


@dataclass(frozen=True)
class SpectralData:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_box: LatticeBox | None = None
    trust_limit: float = math.inf

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        """Q diag(e) Q^T; agrees with the input to 1e-8 * max|A|."""
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T

    def function_of(self, fn) -> np.ndarray:
        """Symmetric matrix fn(A) via the spectral theorem."""
        with np.errstate(all="ignore"):
            fe = np.asarray(fn(self.eigenvalues), dtype=float)
        if not np.all(np.isfinite(fe)):
            raise SzegoError("f-domain", "function not finite on an eigenvalue")
        q = self.eigenvectors
        m = (q * fe) @ q.T
        return 0.5 * (m + m.T)


def _is_tridiagonal(a: np.ndarray) -> bool:
    if a.shape[0] < 3:
        return False
    mask = np.abs(np.arange(a.shape[0])[:, None] - np.arange(a.shape[0])[None, :]) > 1
    return not np.any(a[mask])


def _fix_signs(q: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: first significant component positive."""
    scale = np.max(np.abs(q), axis=0)
    scale[scale == 0.0] = 1.0
    signif = np.abs(q) > 1e-12 * scale
    first = np.argmax(signif, axis=0)
    signs = np.sign(q[first, np.arange(q.shape[1])])
    signs[signs == 0.0] = 1.0
    return q * signs


def eigendecompose(a, source_box: LatticeBox | None = None,
                   trust: float = math.inf) -> SpectralData:
    """Full symmetric eigendecomposition with deterministic output.

    Accepts a :class:`SymmetricOperator` or a plain symmetric array.  A
    tridiagonal input is routed to the dedicated tridiagonal solver.
    """
    if isinstance(a, SymmetricOperator):
        if source_box is None:
            source_box = a.box
        entries = a.entries
    else:
        entries = np.asarray(a, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise SzegoError("invalid-matrix", f"expected square matrix, got {entries.shape}")
    if not np.all(np.isfinite(entries)):
        raise SzegoError("invalid-matrix", "matrix has non-finite entries")
    if entries.shape[0] == 0:
        return SpectralData(np.zeros(0), np.zeros((0, 0)), source_box, trust)
    if _is_tridiagonal(entries):
        ev, q = scipy.linalg.eigh_tridiagonal(np.diag(entries).copy(),
                                              np.diag(entries, 1).copy())
    else:
        ev, q = scipy.linalg.eigh(entries)
    order = np.argsort(ev, kind="stable")
    ev = ev[order]
    q = _fix_signs(q[:, order])
    return SpectralData(ev, q, source_box, trust)


def hamiltonian_spectrum(h: SymmetricOperator, pot: Potential,
                         theta: float = 0.5) -> SpectralData:
    """Decompose a truncated Hamiltonian; trust window theta * L^k."""
    return eigendecompose(h, trust=theta * float(h.box.L) ** pot.k)


def _check_trust(spec: SpectralData, lam: float):
    if lam > spec.trust_limit:
        raise SzegoError(
            "untrusted-window",
            f"threshold {lam} beyond trusted window; maximal admissible "
            f"threshold is {spec.trust_limit}")


def counting(spec: SpectralData, lam: float) -> int:
    """#{eigenvalues in (0, lam]} = rank of the spectral projection."""
    _check_trust(spec, lam)
    ev = spec.eigenvalues
    return int(np.count_nonzero((ev > 0.0) & (ev <= lam)))


@dataclass(frozen=True)
class CountingFunction:
    """Right-continuous jump representation of lam -> counting(lam)."""

    jumps: np.ndarray
    counts: np.ndarray

    def __call__(self, t):
        idx = np.searchsorted(self.jumps, t, side="right")
        padded = np.concatenate([[0], self.counts])
        return padded[idx]


def counting_function(spec: SpectralData) -> CountingFunction:
    ev = spec.eigenvalues[spec.eigenvalues > 0.0]
    jumps, mult = np.unique(ev, return_counts=True)
    return CountingFunction(jumps, np.cumsum(mult))


def gap_count(spec: SpectralData, lam: float, r: float) -> int:
    """Maximal #{eigenvalues in (mu, mu+r]} over mu <= lam.

    The sliding maximum is attained just as an eigenvalue enters the window,
    so it suffices to test mu = e_j - r (clamped to lam) plus mu = lam.
    """
    if not (r > 0):
        raise SzegoError("bad-window", f"window width must be positive, got {r}")
    _check_trust(spec, lam + r)
    ev = np.sort(spec.eigenvalues)
    starts = np.append(ev - r, lam)
    starts = starts[starts <= lam]
    hi = np.searchsorted(ev, starts + r, side="right")
    lo = np.searchsorted(ev, starts, side="right")
    return int(np.max(hi - lo)) if len(starts) else 0


def compress_below(spec_h: SpectralData, b: SymmetricOperator, lam: float) -> np.ndarray:
    """Q^T B Q over the eigenvectors of eigenvalues in (0, lam]."""
    if spec_h.source_box is not None and b.box != spec_h.source_box:
        raise SzegoError("incompatible-operators",
                         f"operator box {b.box} does not match spectral box "
                         f"{spec_h.source_box}")
    if b.entries.shape[0] != spec_h.eigenvectors.shape[0]:
        raise SzegoError("incompatible-operators", "dimension mismatch")
    _check_trust(spec_h, lam)
    mask = (spec_h.eigenvalues > 0.0) & (spec_h.eigenvalues <= lam)
    q = spec_h.eigenvectors[:, mask]
    m = q.T @ b.entries @ q
    return 0.5 * (m + m.T)


def matrix_function(m: np.ndarray, fn) -> np.ndarray:
    """fn applied to a symmetric matrix through its eigendecomposition."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.zeros_like(m)
    return eigendecompose(m).function_of(fn)


def trace_function(m: np.ndarray, fn) -> float:
    """Tr fn(M) = sum of fn over the eigenvalues (compression-trace rule)."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    ev = scipy.linalg.eigvalsh(m)
    with np.errstate(all="ignore"):
        fe = np.asarray(fn(ev), dtype=float)
    if not np.all(np.isfinite(fe)):
        raise SzegoError("f-domain", "function not finite on an eigenvalue")
    return float(np.sum(fe))


def resolvent_power_trace(a, lam: float, m: int) -> float:
    """Tr (A + lam)^(-m) for a decomposable finite operator."""
    spec = a if isinstance(a, SpectralData) else eigendecompose(a)
    ev = spec.eigenvalues
    if len(ev) and ev[0] + lam <= 0.0:
        raise SzegoError("not-positive",
                         f"shift {lam} does not make the operator positive "
                         f"(min eigenvalue {ev[0] if len(ev) else 'n/a'})")
    return float(np.sum((ev + lam) ** (-float(m))))


def _shell_size(d: int, j: int) -> int:
    """#{n : |n|_inf = j}; the sup-norm sphere count."""
    if j == 0:
        return 1
    return (2 * j + 1) ** d - (2 * j - 1) ** d


def potential_resolvent_trace(pot: Potential, d: int, lam: float, m: int,
                              rel_tol: float = 1e-8) -> float:
    """Full-lattice Tr (V + lam)^(-m), tail handled by integral comparison.

    V is radial in |n|_inf, so the lattice sum collapses to the shell series
    sum_j s_d(j) (j^k + lam)^(-m) with s_d(j) = (2j+1)^d - (2j-1)^d.  Beyond
    a cutoff J where the summand f is decreasing, the exact tail is bracketed
    by the integrals of f over [J+1, inf) and [J, inf); their midpoint is
    added and J grows until half the bracket width is below rel_tol of the
    result.
    """
    if lam <= -1.0:
        raise SzegoError("not-positive", f"shift {lam} <= -min V = -1")
    if m * pot.k <= d:
        raise SzegoError("not-trace-class",
                         f"need m*k > d for summability; m*k = {m * pot.k}, d = {d}")
    k = pot.k

    def f(t):
        return ((2.0 * t + 1.0) ** d - (2.0 * t - 1.0) ** d) * (t ** k + lam) ** (-float(m))

    # f is decreasing once t^k (mk - d + 1) > (d-1) lam; see shell log-derivative
    j_min = int(math.ceil((max((d - 1) * max(lam, 1.0), 1.0)) ** (1.0 / k))) + 2
    j_hi = max(8, j_min)
    origin = (1.0 + lam) ** (-float(m))
    while True:
        partial = origin + float(np.sum(f(np.arange(1.0, j_hi + 1.0))))
        tail_hi = scipy.integrate.quad(f, j_hi, np.inf)[0]
        tail_lo = scipy.integrate.quad(f, j_hi + 1.0, np.inf)[0]
        total = partial + 0.5 * (tail_hi + tail_lo)
        if 0.5 * (tail_hi - tail_lo) <= rel_tol * total:
            return float(total)
        j_hi *= 4
