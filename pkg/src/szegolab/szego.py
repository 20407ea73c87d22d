"""Both sides of the spectral-average limit, and the error machinery.

The quantity under study is the normalized trace Tr f(P B P) / Tr P, with P
the spectral projection of the truncated Hamiltonian below a threshold and B
a quantized zero-order symbol.  As the threshold grows this converges to the
torus average of f(b) (multiplication symbols) or to the potential-sublevel
average of the per-site torus integrals (n-dependent symbols).  The
commutator norm of H^(-kappa) [H, B] feeds the two-projection trace
inequality that controls the convergence rate; that inequality is evaluated
explicitly so it can be checked against the directly computed trace
difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SzegoError
from .lattice import LatticeBox, Potential, SymmetricOperator, count_below
from .spectral import SpectralData, compress_below, counting, gap_count, trace_function
from .symbols import (
    ToroidalSymbol,
    _column_coefficients,
    _frequency_vectors,
    quantize,
)

_NAMED_FUNCTIONS = {
    # name -> (vectorised callable, sup of |f''| over [lo, hi])
    "exp": (np.exp, lambda lo, hi: math.exp(hi)),
    "sin": (np.sin, lambda lo, hi: 1.0),
    "cos": (np.cos, lambda lo, hi: 1.0),
}


@dataclass(frozen=True)
class TestFunction:
    """Polynomial (coefficient list, degree <= 8) or named smooth function."""

    __test__ = False  # not a pytest class, despite the name

    kind: str
    coeffs: tuple = ()
    name: str = ""

    @classmethod
    def poly(cls, coeffs) -> "TestFunction":
        coeffs = tuple(float(c) for c in coeffs)
        if not coeffs:
            raise ValueError("empty coefficient list")
        if len(coeffs) > 9:
            raise ValueError(f"polynomial degree {len(coeffs) - 1} exceeds 8")
        return cls("poly", coeffs=coeffs)

    @classmethod
    def named(cls, name: str) -> "TestFunction":
        if name not in _NAMED_FUNCTIONS:
            raise ValueError(f"unknown function '{name}'; "
                             f"available: {sorted(_NAMED_FUNCTIONS)}")
        return cls("named", name=name)

    @property
    def degree(self) -> int | None:
        return len(self.coeffs) - 1 if self.kind == "poly" else None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "poly":
            out = np.zeros_like(t)
            for c in reversed(self.coeffs):
                out = out * t + c
            return out
        return _NAMED_FUNCTIONS[self.name][0](t)

    def second_derivative_sup(self, lo: float, hi: float) -> float:
        """Exact sup of |f''| on [lo, hi] (polynomials via critical points)."""
        if self.kind == "named":
            return float(_NAMED_FUNCTIONS[self.name][1](lo, hi))
        d2 = np.polynomial.Polynomial(self.coeffs).deriv(2)
        candidates = [lo, hi]
        if d2.degree() >= 1:
            roots = d2.deriv().roots()
            candidates += [float(r.real) for r in roots
                           if abs(r.imag) < 1e-12 and lo <= r.real <= hi]
        return float(max(abs(d2(t)) for t in candidates))


def default_kappa(k: float) -> float:
    """Commutator exponent matched to the potential growth.

    Nearest-neighbour increments of V grow like |n|^(k-1) while H^(-kappa)
    damps like |n|^(-k kappa), so any kappa >= (k-1)/k keeps the product
    bounded; a 0.05 margin is added and the value stays inside (0, 1).
    """
    return min(0.95, max(0.5, (k - 1.0) / k + 0.05))


def lhs_ratio(spec_h: SpectralData, b: SymmetricOperator, f: TestFunction,
              lam: float) -> float:
    """Tr f(compression of B below lam) / rank."""
    p = counting(spec_h, lam)
    if p == 0:
        raise SzegoError("empty-projection", f"no spectrum in (0, {lam}]")
    m = compress_below(spec_h, b, lam)
    return trace_function(m, f) / p


def rhs_multiplication(b: ToroidalSymbol, f: TestFunction) -> float:
    """Normalized torus integral of f(b) for an n-independent symbol."""
    if not b.n_independent:
        raise ValueError("multiplication-form limit needs an n-independent symbol")
    col = np.real(b.samples[..., 0])
    return float(np.mean(f(col)))


def rhs_symbol_average(b: ToroidalSymbol, f: TestFunction, lam: float,
                       pot: Potential) -> float:
    """Average of the normalized torus integrals of f(b(., n)) over V(n) <= lam."""
    v = pot.values(b.n_box.sites)
    mask = v <= lam
    inside = int(np.count_nonzero(mask))
    if inside != count_below(pot, b.n_box.d, lam):
        raise SzegoError("n-range",
                         f"sublevel set {{V <= {lam}}} exceeds the symbol's n-box")
    cols = np.real(b.samples.reshape(-1, b.n_box.count)[:, mask])
    return float(np.mean(f(cols)))


def commutator_condition_norm(spec_h: SpectralData, b: SymmetricOperator,
                              kappa: float) -> float:
    """Operator 2-norm of H^(-kappa) [H, B] on the box.

    Growing-box stabilization of this value is the numerical stand-in for
    boundedness on the infinite lattice.
    """
    if not (0.0 < kappa < 1.0):
        raise SzegoError("bad-kappa", f"kappa must lie in (0, 1), got {kappa}")
    if spec_h.source_box is not None and b.box != spec_h.source_box:
        raise SzegoError("incompatible-operators", "operator/spectrum box mismatch")
    ev, q = spec_h.eigenvalues, spec_h.eigenvectors
    if ev[0] <= 0.0:
        raise SzegoError("not-positive", "H must be positive for fractional powers")
    h = (q * ev) @ q.T
    comm = h @ b.entries - b.entries @ h
    damped = (q * ev ** (-kappa)) @ q.T @ comm
    return float(np.linalg.norm(damped, 2))


def symbol_bandwidth(sym: ToroidalSymbol, cutoff: float = 1e-12) -> int:
    """Max |frequency|_inf carrying a coefficient above the cutoff."""
    coeffs = _column_coefficients(sym)
    fv = _frequency_vectors(sym.d, sym.n_x)
    alive = np.any(np.abs(coeffs) >= cutoff, axis=1)
    if not alive.any():
        return 0
    return int(np.max(np.abs(fv[alive])))


def run_horner(entries: np.ndarray, coeffs) -> np.ndarray:
    """Matrix polynomial sum_j c_j B^j by Horner's rule."""
    n = entries.shape[0]
    acc = np.zeros_like(entries)
    np.fill_diagonal(acc, coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = acc @ entries
        acc[np.diag_indices(n)] += c
    return acc


def poly_of_quantized(sym: ToroidalSymbol, box: LatticeBox, f: TestFunction,
                      cutoff: float = 1e-12) -> SymmetricOperator:
    """f(B) on the box with interior entries free of truncation artifacts.

    B is quantized on a box enlarged by degree(f) * bandwidth(B) and the
    matrix polynomial evaluated there; entries of a power B^j only involve
    hopping paths of length j * bandwidth, so after restriction every entry
    agrees with the infinite-lattice value.
    """
    if f.kind != "poly":
        raise ValueError("exact margin evaluation needs a polynomial test function")
    bw = max(symbol_bandwidth(sym, cutoff), 1)
    margin = f.degree * bw
    big_l = box.L + margin
    if sym.n_box.L < big_l:
        raise SzegoError("insufficient-margin",
                         f"need symbol n-box radius >= {big_l} "
                         f"(= box {box.L} + degree*bandwidth {margin}), "
                         f"have {sym.n_box.L}")
    big_box = LatticeBox(box.d, big_l)
    b_big = quantize(sym, big_box, cutoff)
    p_big = run_horner(b_big.entries, f.coeffs)
    keep = big_box.indices_of(box.sites)
    entries = p_big[np.ix_(keep, keep)]
    entries = 0.5 * (entries + entries.T)
    return SymmetricOperator(box, entries, bandwidth=min(margin, 2 * box.L),
                             sym_defect=b_big.sym_defect)


@dataclass(frozen=True)
class TraceInequalityResult:
    """One evaluation of the two-projection trace inequality."""

    lam: float
    r: float
    kappa: float
    lhs_diff: float
    rhs_bound: float
    window_count: int
    proj_b_norm: float
    commutator_norm: float
    f_second_sup: float

    @property
    def holds(self) -> bool:
        return self.lhs_diff <= self.rhs_bound + 1e-9


def trace_inequality_check(spec_h: SpectralData, b: SymmetricOperator,
                           f: TestFunction, lam: float, r: float, kappa: float,
                           f_of_b: SymmetricOperator | None = None,
                           ) -> TraceInequalityResult:
    """Compare |Tr(P f(B) P) - Tr f(P B P)| with its displayed bound.

    ``f_of_b`` should be the margin-exact operator from
    :func:`poly_of_quantized`; when omitted, f is applied spectrally to the
    boxed B (legitimate on the finite box, but carrying truncation effects
    near the boundary).
    """
    if not (0.0 < kappa < 1.0):
        raise SzegoError("bad-kappa", f"kappa must lie in (0, 1), got {kappa}")
    if not (r > 0.0 and lam - r > 0.0):
        raise SzegoError("bad-window", f"need 0 < r < lam, got r={r}, lam={lam}")
    p = counting(spec_h, lam)
    if p == 0:
        raise SzegoError("empty-projection", f"no spectrum in (0, {lam}]")
    ev, q = spec_h.eigenvalues, spec_h.eigenvectors

    if f_of_b is None:
        from .spectral import eigendecompose
        f_of_b = SymmetricOperator(b.box, eigendecompose(b).function_of(f))
    below = (ev > 0.0) & (ev <= lam)
    q_lam = q[:, below]
    lhs_projected = float(np.trace(q_lam.T @ f_of_b.entries @ q_lam))
    lhs_compressed = trace_function(q_lam.T @ b.entries @ q_lam, f)
    lhs_diff = abs(lhs_projected - lhs_compressed)

    n_window = gap_count(spec_h, lam, r)
    q_low = q[:, (ev > 0.0) & (ev <= lam - r)]
    proj_b_norm = float(np.linalg.norm(q_low.T @ b.entries, 2)) if q_low.size else 0.0
    h = (q * ev) @ q.T
    comm = h @ b.entries - b.entries @ h
    damp = (q * (ev ** (-kappa) * ((ev > 0.0) & (ev <= lam - r)))) @ q.T
    comm_norm = float(np.linalg.norm(damp @ comm, 2))

    b_ev = np.linalg.eigvalsh(b.entries)
    f2 = f.second_derivative_sup(min(0.0, float(b_ev[0])), float(b_ev[-1]))
    rhs = 0.5 * f2 * n_window * (proj_b_norm ** 2
                                 + (math.pi ** 2 * lam ** (2 * kappa))
                                 / (6.0 * r ** 2) * comm_norm ** 2)
    return TraceInequalityResult(lam, r, kappa, lhs_diff, rhs, n_window,
                                 proj_b_norm, comm_norm, f2)


@dataclass(frozen=True)
class SzegoSample:
    """One threshold of a convergence sweep."""

    lam: float
    rank: int
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    rate_diag: float  # lam^kappa / lam, the proven error scale

    @classmethod
    def build(cls, lam: float, rank: int, lhs: float, rhs: float,
              kappa: float) -> "SzegoSample":
        abs_err = abs(lhs - rhs)
        rel_err = abs_err / max(abs(rhs), 1e-15)
        return cls(lam, rank, lhs, rhs, abs_err, rel_err, lam ** (kappa - 1.0))


def convergence_sweep(spec_h: SpectralData, b_op: SymmetricOperator,
                      b_sym: ToroidalSymbol, f: TestFunction, lambdas,
                      pot: Potential, kappa: float | None = None) -> list:
    """Evaluate lhs and limit-side rhs on an ascending threshold grid.

    The rhs takes the multiplication form for n-independent symbols and the
    sublevel-average form otherwise.
    """
    if kappa is None:
        kappa = default_kappa(pot.k)
    samples = []
    for lam in sorted(float(x) for x in lambdas):
        lhs = lhs_ratio(spec_h, b_op, f, lam)
        if b_sym.n_independent:
            rhs = rhs_multiplication(b_sym, f)
        else:
            rhs = rhs_symbol_average(b_sym, f, lam, pot)
        samples.append(SzegoSample.build(lam, counting(spec_h, lam), lhs, rhs, kappa))
    return samples
