"""Step-function kernel transforms and the ratio experiments behind the limit.

The counting functions of H and V are nondecreasing pure-jump functions; the
kernel transform Phi(r) = integral of phi(r u) / (1 + u)^(m+1) du connects
their growth to traces of resolvent powers, and power-law growth indices plus
multiplicative continuity are the side conditions under which ratio limits
transfer back from the transforms to the functions themselves.  Everything
here is desk-scale: indices are least-squares slope estimates reported with
residuals, and the resolvent-trace ratios are computed by a split of
box-exact differences plus analytic potential tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .errors import SzegoError
from .lattice import Potential, SymmetricOperator
from .spectral import SpectralData, potential_resolvent_trace


@dataclass(frozen=True)
class StepFunction:
    """Nondecreasing pure-jump function on [0, inf), right-continuous."""

    jumps: np.ndarray
    increments: np.ndarray

    def __post_init__(self):
        j, c = self.jumps, self.increments
        if j.shape != c.shape or j.ndim != 1 or len(j) == 0:
            raise ValueError("jumps and increments must be matching 1-d arrays")
        if not np.all(np.diff(j) > 0):
            raise ValueError("jump points must be strictly ascending")
        # a jump placed at 0 is allowed (mass present from the start)
        if not (np.all(j >= 0) and np.all(c > 0)):
            raise ValueError("jumps must be >= 0 and increments positive")

    @classmethod
    def from_values(cls, values, weights=None) -> "StepFunction":
        """Sorted/merged step function; equal values pool their weights."""
        values = np.asarray(values, dtype=float)
        weights = np.ones_like(values) if weights is None else np.asarray(weights, float)
        order = np.argsort(values, kind="stable")
        v, w = values[order], weights[order]
        uniq, start = np.unique(v, return_index=True)
        pooled = np.add.reduceat(w, start)
        return cls(uniq, pooled)

    @property
    def total(self) -> float:
        return float(np.sum(self.increments))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.increments)

    def __call__(self, t):
        idx = np.searchsorted(self.jumps, t, side="right")
        padded = np.concatenate([[0.0], self.cumulative])
        return padded[idx]


def step_from_spectrum(spec: SpectralData) -> StepFunction:
    """Counting function of the positive spectrum as a step function."""
    ev = spec.eigenvalues[spec.eigenvalues > 0.0]
    if len(ev) == 0:
        raise SzegoError("degenerate", "no positive spectrum")
    return StepFunction.from_values(ev)


def step_from_potential(pot: Potential, d: int, t_max: float) -> StepFunction:
    """Counting function of V up to t_max, built from sup-norm shells."""
    j_max = int(math.ceil(max(t_max, 1.0) ** (1.0 / pot.k))) + 1
    shells = np.arange(2, j_max + 1, dtype=float)
    jumps = np.concatenate([[1.0], shells ** pot.k])
    sizes = (2 * shells + 1) ** d - (2 * shells - 1) ** d
    increments = np.concatenate([[float(3 ** d)], sizes])  # origin joins shell 1
    return StepFunction(jumps, increments)


def kernel_transform(phi: StepFunction, r: float, m: float) -> float:
    """Closed form of integral phi(r u) (1 + u)^(-m-1) du over [0, inf).

    Each jump u_i contributes c_i / m * (1 + u_i/r)^(-m); when phi counts the
    spectrum of A this equals (r^m / m) Tr (r + A)^(-m).
    """
    if m <= 0:
        raise SzegoError("divergent-kernel", f"kernel exponent must be positive, got {m}")
    if r <= 0:
        raise ValueError(f"transform scale must be positive, got {r}")
    return float(np.sum(phi.increments * (1.0 + phi.jumps / r) ** (-m)) / m)


def kernel_transform_quadrature(phi: StepFunction, r: float, m: float) -> float:
    """Slow reference route: adaptive quadrature of the defining integral.

    Kept independent of the closed form (it integrates the kernel piecewise
    between the transformed jump points); used to cross-check
    :func:`kernel_transform`.
    """
    if m <= 0:
        raise SzegoError("divergent-kernel", f"kernel exponent must be positive, got {m}")
    breaks = np.concatenate([[0.0], np.sort(phi.jumps / r)])
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        val = float(phi(r * 0.5 * (a + b)))
        if val:
            total += val * scipy.integrate.quad(
                lambda u: (1.0 + u) ** (-(m + 1.0)), a, b,
                epsabs=1e-13, epsrel=1e-12)[0]
    total += phi.total * scipy.integrate.quad(
        lambda u: (1.0 + u) ** (-(m + 1.0)), breaks[-1], np.inf,
        epsabs=1e-13, epsrel=1e-12)[0]
    return total


@dataclass(frozen=True)
class IndexEstimate:
    """Fitted power-law growth window of a step function at infinity."""

    alpha_hat: float
    beta_hat: float
    fits: tuple  # (r, slope, rms residual) per transform scale
    t_lo: float
    t_hi: float


def matushevskaya_indices(phi: StepFunction, r_grid, t_grid=None) -> IndexEstimate:
    """Estimate upper/lower growth indices from log phi(t r) vs log t slopes.

    The indices are lim-sup/inf objects, so they are only estimable: per r the
    slope over t in [1, t_hi] is fitted by least squares, and the extreme
    slopes over the r grid are reported together with the residuals.
    """
    if t_grid is None:
        t_grid = np.geomspace(1.0, 8.0, 16)
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 12:
        raise ValueError("need at least 12 sample points for the slope fit")
    fits = []
    for r in r_grid:
        vals = phi(t_grid * float(r))
        if np.any(vals <= 0.0):
            raise SzegoError("degenerate",
                             f"step function vanishes on the sampled range at r={r}")
        x, y = np.log(t_grid), np.log(vals)
        slope, intercept = np.polyfit(x, y, 1)
        rms = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
        fits.append((float(r), float(slope), rms))
    slopes = [s for _, s, _ in fits]
    return IndexEstimate(max(slopes), min(slopes), tuple(fits),
                         float(t_grid[0]), float(t_grid[-1]))


@dataclass(frozen=True)
class MultContinuityProbe:
    """Ratios phi(tau r)/phi(r) and their per-r deviation from 1."""

    taus: np.ndarray
    rs: np.ndarray
    ratios: np.ndarray  # shape (len(rs), len(taus))

    def deviation(self) -> np.ndarray:
        """sup_tau |ratio - 1| per r; should fall along growing r."""
        return np.max(np.abs(self.ratios - 1.0), axis=1)


def mult_continuity_probe(phi: StepFunction, tau_grid=None,
                          r_grid=None) -> MultContinuityProbe:
    if tau_grid is None:
        tau_grid = np.linspace(0.8, 1.25, 19)
    if r_grid is None:
        r_grid = np.geomspace(1e2, 1e4, 5)
    taus = np.asarray(tau_grid, dtype=float)
    rs = np.asarray(r_grid, dtype=float)
    base = phi(rs)
    if np.any(base <= 0.0):
        raise SzegoError("degenerate", "step function vanishes on the r grid")
    ratios = phi(np.outer(rs, taus)) / base[:, None]
    return MultContinuityProbe(taus, rs, ratios)


# ---------------------------------------------------------------------------
# Resolvent-trace ratio experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatioResult:
    lam: float
    m: int
    ratio: float
    bound: float

    @property
    def deviation(self) -> float:
        return abs(self.ratio - 1.0)

    def within(self, slack: float = 1.1) -> bool:
        return self.deviation <= self.bound * slack


def _check_trace_class(pot: Potential, d: int, m: int):
    if m * pot.k <= d:
        raise SzegoError("not-trace-class",
                         f"need m*k > d; m*k = {m * pot.k}, d = {d}")


def resolvent_ratio(spec_h: SpectralData, pot: Potential, lam: float, m: int) -> RatioResult:
    """Tr (H + lam)^(-m) over Tr (V + lam)^(-m), with the explicit bound.

    Computed as 1 + D/T: T is the tail-corrected full-lattice potential
    trace; D is the difference of the two box traces, whose summand decays
    one power faster than either trace, so the box that resolves the spectrum
    already resolves D.
    """
    box = spec_h.source_box
    if box is None:
        raise SzegoError("invalid-matrix", "spectral data carries no lattice box")
    d = box.d
    _check_trace_class(pot, d, m)
    if spec_h.eigenvalues[0] + lam <= 0.0:
        raise SzegoError("not-positive", f"H + {lam} is not positive")
    t_full = potential_resolvent_trace(pot, d, lam, m)
    h_box = float(np.sum((spec_h.eigenvalues + lam) ** (-float(m))))
    v_box = float(np.sum((pot.values(box.sites) + lam) ** (-float(m))))
    ratio = 1.0 + (h_box - v_box) / t_full
    bound = 4.0 * d * m * (1.0 + lam) ** (-float(m))
    return RatioResult(lam, m, ratio, bound)


def _boundary_diag_mean(b: SymmetricOperator) -> float:
    box = b.box
    rim = np.max(np.abs(box.sites), axis=1) == box.L
    return float(np.mean(np.diag(b.entries)[rim]))


def weighted_resolvent_ratio(spec_h: SpectralData, pot: Potential,
                             b: SymmetricOperator, lam: float, m: int,
                             diag_limit: float | None = None) -> RatioResult:
    """Weighted version Tr B(H+lam)^(-m) / Tr B(V+lam)^(-m) for positive B.

    The split-and-tail strategy needs the large-|n| behaviour of the diagonal
    of B; ``diag_limit`` supplies it (defaults to the mean diagonal entry on
    the boundary shell, exact for quantized symbols whose x-average is
    constant in n).
    """
    box = spec_h.source_box
    d = box.d
    _check_trace_class(pot, d, m)
    if b.box != box:
        raise SzegoError("incompatible-operators", "operator/spectrum box mismatch")
    b_ev_min = float(np.linalg.eigvalsh(b.entries)[0])
    if b_ev_min < -1e-10:
        raise SzegoError("not-positive",
                         f"weight operator has negative eigenvalue {b_ev_min}")
    if diag_limit is None:
        diag_limit = _boundary_diag_mean(b)
    ev, q = spec_h.eigenvalues, spec_h.eigenvectors
    weights = np.einsum("ij,ij->j", q, b.entries @ q)
    num_box = float(np.sum(weights * (ev + lam) ** (-float(m))))
    v_vals = pot.values(box.sites)
    den_box = float(np.sum(np.diag(b.entries) * (v_vals + lam) ** (-float(m))))
    t_full = potential_resolvent_trace(pot, d, lam, m)
    t_box = float(np.sum((v_vals + lam) ** (-float(m))))
    tail = diag_limit * (t_full - t_box)
    ratio = (num_box + tail) / (den_box + tail)
    bound = 4.0 * d * m * (1.0 + lam) ** (-float(m))
    return RatioResult(lam, m, ratio, bound)


@dataclass(frozen=True)
class TraceComparisonRow:
    lam: float
    h_side: float
    v_side: float

    @property
    def gap(self) -> float:
        return abs(self.h_side - self.v_side)


def normalized_trace_comparison(spec_h: SpectralData, pot: Potential,
                                op: SymmetricOperator, m: int, lam_grid,
                                diag_limit: float | None = None) -> list:
    """Tabulate the two normalized weighted traces along a threshold grid.

    ``op`` is the positive weight (B itself, or a precomputed f(B)).  The
    h-side and v-side columns must approach each other as lam grows.
    """
    box = spec_h.source_box
    d = box.d
    _check_trace_class(pot, d, m)
    if op.box != box:
        raise SzegoError("incompatible-operators", "operator/spectrum box mismatch")
    if diag_limit is None:
        diag_limit = _boundary_diag_mean(op)
    ev, q = spec_h.eigenvalues, spec_h.eigenvectors
    weights = np.einsum("ij,ij->j", q, op.entries @ q)
    v_vals = pot.values(box.sites)
    diag = np.diag(op.entries)
    rows = []
    for lam in sorted(float(x) for x in lam_grid):
        t_full = potential_resolvent_trace(pot, d, lam, m)
        t_box = float(np.sum((v_vals + lam) ** (-float(m))))
        tail = t_full - t_box
        h_num = float(np.sum(weights * (ev + lam) ** (-float(m)))) + diag_limit * tail
        h_den = float(np.sum((ev + lam) ** (-float(m)))) + tail
        v_num = float(np.sum(diag * (v_vals + lam) ** (-float(m)))) + diag_limit * tail
        v_den = t_full
        rows.append(TraceComparisonRow(lam, h_num / h_den, v_num / v_den))
    return rows
