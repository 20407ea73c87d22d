"""Toroidal symbols sigma(x, n) on T^d x Z^d and their operator calculus.

A symbol is sampled on a uniform x-grid (trapezoidal quadrature on the torus
is exact for band-limited data) times a lattice box of n values.  Quantization
fills matrix column n with the x-Fourier coefficients of sigma(., n); the
entry at row m is the coefficient at frequency m - n. De-quantization inverts
that column by column.

For an n-dependent real symbol the raw quantization is not exactly
self-adjoint (and generally not real), so the raw complex matrix is reduced to
a real symmetric operator by Re(B + B*)/2 and the deviation is recorded on
the result; :func:`symmetry_defect` measures the raw self-adjointness defect
directly.  All expansion statements ("asymptotic in n") are probed as
log-log decay fits over interior n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SzegoError
from .lattice import LatticeBox, SymmetricOperator

DEFAULT_NX = 256
DEFAULT_CUTOFF = 1e-12


def x_axis(n_x: int) -> np.ndarray:
    """Uniform grid of [0, 2pi) with n_x points."""
    return 2.0 * np.pi * np.arange(n_x) / n_x


def bracket(sites: np.ndarray) -> np.ndarray:
    """Japanese bracket <n> = sqrt(1 + |n|^2) (Euclidean norm)."""
    sites = np.asarray(sites, dtype=float)
    if sites.ndim == 1:
        sites = sites[:, None]
    return np.sqrt(1.0 + np.sum(sites ** 2, axis=1))


@dataclass(frozen=True)
class ToroidalSymbol:
    """Samples of sigma(x, n) on an x-grid of T^d times a lattice box of n.

    ``samples`` has the d grid axes first and the flat (lexicographic) site
    index last; dtype is float64 for real symbols, complex128 when a
    de-quantized column is genuinely complex.
    """

    d: int
    n_x: int
    n_box: LatticeBox
    samples: np.ndarray
    x_independent: bool = False
    n_independent: bool = False
    bandwidth_hint: int = 0

    def __post_init__(self):
        if self.n_x < 8 or self.n_x & (self.n_x - 1):
            raise ValueError(f"x-grid size must be a power of two >= 8, got {self.n_x}")
        if self.n_box.d != self.d:
            raise ValueError("n_box dimension mismatch")
        want = (self.n_x,) * self.d + (self.n_box.count,)
        if self.samples.shape != want:
            raise ValueError(f"samples shape {self.samples.shape}, expected {want}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def x_axes(self) -> tuple:
        return tuple(range(self.d))

    def sup_profile(self) -> np.ndarray:
        """sup_x |sigma(., n)| for every site, in box order."""
        return np.max(np.abs(self.samples), axis=self.x_axes)

    def column(self, site) -> np.ndarray:
        return self.samples[..., self.n_box.index_of(site)]

    def is_real(self) -> bool:
        return not np.iscomplexobj(self.samples)


def _maybe_real(samples: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(samples):
        scale = np.max(np.abs(samples)) or 1.0
        if np.max(np.abs(samples.imag)) <= 1e-12 * scale:
            return np.ascontiguousarray(samples.real)
    return samples


def symbol_from_function(fn, n_box: LatticeBox, n_x: int = DEFAULT_NX,
                         x_independent: bool = False,
                         n_independent: bool = False) -> ToroidalSymbol:
    """Sample fn(x, n) columnwise; fn gets d broadcast grid arrays and a site."""
    d = n_box.d
    axes = np.meshgrid(*([x_axis(n_x)] * d), indexing="ij")
    cols = np.empty((n_x,) * d + (n_box.count,), dtype=float)
    for j, site in enumerate(n_box.sites):
        cols[..., j] = fn(axes, tuple(int(c) for c in site))
    return ToroidalSymbol(d, n_x, n_box, cols,
                          x_independent=x_independent, n_independent=n_independent)


def constant_symbol(c: float, n_box: LatticeBox, n_x: int = DEFAULT_NX) -> ToroidalSymbol:
    samples = np.full((n_x,) * n_box.d + (n_box.count,), float(c))
    return ToroidalSymbol(n_box.d, n_x, n_box, samples,
                          x_independent=True, n_independent=True)


def trig_poly_symbol(coeffs, n_box: LatticeBox, n_x: int = DEFAULT_NX) -> ToroidalSymbol:
    """b(x) = c0 + sum_j c_j cos(j x_1); n-independent multiplication symbol."""
    coeffs = [float(c) for c in coeffs]

    def fn(axes, site):
        out = np.full_like(axes[0], coeffs[0])
        for j, c in enumerate(coeffs[1:], start=1):
            out = out + c * np.cos(j * axes[0])
        return out

    sym = symbol_from_function(fn, n_box, n_x, n_independent=True)
    return ToroidalSymbol(sym.d, n_x, n_box, sym.samples, n_independent=True,
                          bandwidth_hint=len(coeffs) - 1)


def shifted_cosine_symbol(c0: float, gamma: float, n_box: LatticeBox,
                          n_x: int = DEFAULT_NX) -> ToroidalSymbol:
    """b(x, n) = c0 + cos(x_1 + gamma/<n>); the phase dies off at infinity."""

    def fn(axes, site):
        return c0 + np.cos(axes[0] + gamma / bracket(np.array([site]))[0])

    sym = symbol_from_function(fn, n_box, n_x)
    return ToroidalSymbol(sym.d, n_x, n_box, sym.samples, bandwidth_hint=1)


def diagonal_symbol(s: float, n_box: LatticeBox, n_x: int = DEFAULT_NX) -> ToroidalSymbol:
    """c(n) = <n>^(-s); x-independent, quantizes to a diagonal matrix."""
    vals = bracket(n_box.sites) ** (-float(s))
    samples = np.broadcast_to(vals, (n_x,) * n_box.d + (n_box.count,)).copy()
    return ToroidalSymbol(n_box.d, n_x, n_box, samples, x_independent=True)


NAMED_SYMBOLS = ("trig-poly", "shifted-cosine", "diagonal")


def make_named_symbol(name: str, params: dict, n_box: LatticeBox,
                      n_x: int = DEFAULT_NX) -> ToroidalSymbol:
    """Build one of the CLI-addressable symbols from a flat parameter dict."""
    if name == "trig-poly":
        raw = params.get("coeffs", "2,1")
        coeffs = [float(c) for c in str(raw).split(",")] if isinstance(raw, str) else list(raw)
        return trig_poly_symbol(coeffs, n_box, n_x)
    if name == "shifted-cosine":
        return shifted_cosine_symbol(float(params.get("c0", 2.0)),
                                     float(params.get("gamma", 1.0)), n_box, n_x)
    if name == "diagonal":
        return diagonal_symbol(float(params.get("s", 1.0)), n_box, n_x)
    raise ValueError(f"unknown symbol '{name}'; available: {NAMED_SYMBOLS}")


# ---------------------------------------------------------------------------
# Fourier machinery
# ---------------------------------------------------------------------------

def _frequencies(n_x: int) -> np.ndarray:
    return np.fft.fftfreq(n_x, d=1.0 / n_x).astype(int)


def _frequency_vectors(d: int, n_x: int) -> np.ndarray:
    """All d-dim integer frequency vectors in FFT bin order, shape (n_x^d, d)."""
    f = _frequencies(n_x)
    grids = np.meshgrid(*([f] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _column_coefficients(sym: ToroidalSymbol) -> np.ndarray:
    """x-Fourier coefficients of every column, shape (n_x^d, count)."""
    co = np.fft.fftn(sym.samples, axes=sym.x_axes) / float(sym.n_x) ** sym.d
    return co.reshape((sym.n_x ** sym.d, sym.n_box.count))


def _check_resolved(coeffs_flat: np.ndarray, d: int, n_x: int, cutoff: float):
    """Highest resolvable bands must sit below the cutoff."""
    fv = _frequency_vectors(d, n_x)
    band = np.max(np.abs(fv), axis=1) >= n_x // 2 - 1
    worst = float(np.max(np.abs(coeffs_flat[band, :]))) if band.any() else 0.0
    if worst >= cutoff:
        raise SzegoError("under-resolved-symbol",
                         f"Fourier tail {worst:.3e} at the grid edge exceeds "
                         f"cutoff {cutoff:.3e}; enlarge the x-grid")


def quantize_raw(sym: ToroidalSymbol, box: LatticeBox,
                 cutoff: float = DEFAULT_CUTOFF) -> np.ndarray:
    """Exact (complex) quantization: column n holds the coefficients of
    sigma(., n), the row index offset by the frequency."""
    if box.d != sym.d:
        raise SzegoError("incompatible-symbols", "dimension mismatch")
    if sym.n_box.L < box.L:
        raise SzegoError("n-range",
                         f"symbol n-box radius {sym.n_box.L} does not cover "
                         f"operator box radius {box.L}")
    coeffs = _column_coefficients(sym)
    _check_resolved(coeffs, sym.d, sym.n_x, cutoff)
    fv = _frequency_vectors(sym.d, sym.n_x)
    b = np.zeros((box.count, box.count), dtype=complex)
    for j, site in enumerate(box.sites):
        col = coeffs[:, sym.n_box.index_of(site)]
        keep = np.abs(col) >= cutoff
        if not keep.any():
            continue
        rows_sites = site[None, :] + fv[keep]
        inside = np.all(np.abs(rows_sites) <= box.L, axis=1)
        if not inside.any():
            continue
        b[box.indices_of(rows_sites[inside]), j] = col[keep][inside]
    return b


def matrix_bandwidth(entries: np.ndarray, box: LatticeBox, tol: float = 0.0) -> int:
    """Maximal |m - n|_inf over entries with magnitude above tol."""
    i, j = np.nonzero(np.abs(entries) > tol)
    if len(i) == 0:
        return 0
    return int(np.max(np.abs(box.sites[i] - box.sites[j])))


def quantize(sym: ToroidalSymbol, box: LatticeBox,
             cutoff: float = DEFAULT_CUTOFF) -> SymmetricOperator:
    """Real symmetric operator of the symbol, with the reduction defect kept.

    The raw matrix is reduced by Re(B + B*)/2; for n-independent real
    symbols of cosine type the reduction is the identity.  ``sym_defect``
    on the result is the max-norm of (raw - reduced) over interior entries
    (margin = the realised bandwidth).
    """
    raw = quantize_raw(sym, box, cutoff)
    entries = 0.5 * (raw.real + raw.real.T)
    bw = matrix_bandwidth(entries, box, tol=0.0)
    interior = box.interior_indices(min(bw, box.L))
    sub = np.ix_(interior, interior)
    defect = float(np.max(np.abs(raw[sub] - entries[sub]))) if len(interior) else 0.0
    return SymmetricOperator(box, entries, bandwidth=bw, sym_defect=defect)


def dequantize(b, box: LatticeBox, n_x: int = DEFAULT_NX) -> ToroidalSymbol:
    """Inverse of quantization on matrix columns:
    sigma(x, n) = sum_m B(m, n) exp(i (m - n) x)."""
    entries = b.entries if isinstance(b, SymmetricOperator) else np.asarray(b)
    n = box.count
    if entries.shape != (n, n):
        raise SzegoError("incompatible-operators",
                         f"matrix shape {entries.shape} does not match box count {n}")
    if not np.all(np.isfinite(entries)):
        raise SzegoError("invalid-matrix", "matrix has non-finite entries")
    d = box.d
    spectrum = np.zeros((n_x,) * d + (n,), dtype=complex)
    flat = spectrum.reshape(n_x ** d, n)
    strides = n_x ** np.arange(d - 1, -1, -1)
    for j, site in enumerate(box.sites):
        rows = np.nonzero(entries[:, j])[0]
        if len(rows) == 0:
            continue
        offsets = box.sites[rows] - site[None, :]
        if np.max(np.abs(offsets)) > n_x // 2 - 1:
            raise SzegoError("under-resolved-symbol",
                             f"offset {np.max(np.abs(offsets))} not representable "
                             f"on an x-grid of {n_x} points")
        bins = (offsets % n_x) @ strides
        flat[bins, j] = entries[rows, j]
    samples = np.fft.ifftn(spectrum, axes=tuple(range(d))) * float(n_x) ** d
    return ToroidalSymbol(d, n_x, box, _maybe_real(samples))


# ---------------------------------------------------------------------------
# Difference / derivative calculus
# ---------------------------------------------------------------------------

def _normalize_multi_index(alpha, d: int) -> tuple:
    if isinstance(alpha, (int, np.integer)):
        if d != 1:
            raise ValueError("scalar multi-index only valid for d = 1")
        alpha = (int(alpha),)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d or any(a < 0 for a in alpha):
        raise ValueError(f"bad multi-index {alpha} for dimension {d}")
    return alpha


def restrict_box(sym: ToroidalSymbol, radius: int) -> ToroidalSymbol:
    """Restrict the n-box to a smaller concentric cube."""
    L = sym.n_box.L
    if radius > L:
        raise SzegoError("n-range", f"cannot grow box from {L} to {radius}")
    if radius == L:
        return sym
    d, side = sym.d, sym.n_box.side
    grid = sym.samples.reshape((sym.n_x,) * d + (side,) * d)
    sl = (slice(None),) * d + (slice(L - radius, L + radius + 1),) * d
    new_box = LatticeBox(d, radius)
    samples = np.ascontiguousarray(grid[sl].reshape((sym.n_x,) * d + (new_box.count,)))
    return ToroidalSymbol(d, sym.n_x, new_box, samples,
                          x_independent=sym.x_independent,
                          n_independent=sym.n_independent,
                          bandwidth_hint=sym.bandwidth_hint)


def difference_op(sym: ToroidalSymbol, alpha) -> ToroidalSymbol:
    """Forward differences in n, coordinatewise to order alpha.

    The output n-box shrinks to radius L - max(alpha) so that every retained
    site has all shifted values available.
    """
    alpha = _normalize_multi_index(alpha, sym.d)
    shift = max(alpha) if alpha else 0
    new_radius = sym.n_box.L - shift
    if new_radius < 0:
        raise SzegoError("n-range",
                         f"box radius {sym.n_box.L} exhausted by differences {alpha}")
    d, side, L = sym.d, sym.n_box.side, sym.n_box.L
    grid = sym.samples.reshape((sym.n_x,) * d + (side,) * d)
    for axis, a in enumerate(alpha):
        for _ in range(a):
            grid = np.diff(grid, axis=d + axis)
    # after a diffs along axis, index i still addresses site -L + i
    sl = [slice(None)] * d
    for axis in range(d):
        sl.append(slice(L - new_radius, L + new_radius + 1))
    grid = grid[tuple(sl)]
    new_box = LatticeBox(d, new_radius)
    samples = np.ascontiguousarray(grid.reshape((sym.n_x,) * d + (new_box.count,)))
    return ToroidalSymbol(d, sym.n_x, new_box, samples,
                          x_independent=sym.x_independent,
                          n_independent=sym.n_independent and sum(alpha) == 0,
                          bandwidth_hint=sym.bandwidth_hint)


def x_derivative(sym: ToroidalSymbol, beta,
                 cutoff: float = DEFAULT_CUTOFF) -> ToroidalSymbol:
    """Spectral derivative D_x^beta on the grid; exact for band-limited data."""
    beta = _normalize_multi_index(beta, sym.d)
    if sum(beta) == 0:
        return sym
    coeffs = np.fft.fftn(sym.samples, axes=sym.x_axes)
    _check_resolved(coeffs.reshape(sym.n_x ** sym.d, -1) / float(sym.n_x) ** sym.d,
                    sym.d, sym.n_x, cutoff)
    f = _frequencies(sym.n_x)
    for axis, b_ord in enumerate(beta):
        if b_ord == 0:
            continue
        shape = [1] * (sym.d + 1)
        shape[axis] = sym.n_x
        coeffs = coeffs * (1j * f.reshape(shape)) ** b_ord
    out = np.fft.ifftn(coeffs, axes=sym.x_axes)
    if sym.is_real():
        out = np.ascontiguousarray(out.real)
    return ToroidalSymbol(sym.d, sym.n_x, sym.n_box, out,
                          x_independent=False,
                          n_independent=sym.n_independent,
                          bandwidth_hint=sym.bandwidth_hint)


def _multi_indices(d: int, order: int):
    for alpha in itertools.product(range(order + 1), repeat=d):
        if sum(alpha) <= order:
            yield alpha


def compose(a: ToroidalSymbol, b: ToroidalSymbol, order: int) -> ToroidalSymbol:
    """Truncated composition sum_{|alpha| <= order} (1/alpha!)
    (difference^alpha a) (D_x^alpha b)."""
    if a.d != b.d or a.n_x != b.n_x:
        raise SzegoError("incompatible-symbols",
                         "symbols must share dimension and x-grid")
    common = min(a.n_box.L, b.n_box.L)
    out_radius = common - order
    if out_radius < 0:
        raise SzegoError("n-range", f"order {order} exhausts box radius {common}")
    ac, bc = restrict_box(a, common), restrict_box(b, common)
    out_box = LatticeBox(a.d, out_radius)
    total = np.zeros((a.n_x,) * a.d + (out_box.count,),
                     dtype=complex if (np.iscomplexobj(a.samples)
                                       or np.iscomplexobj(b.samples)) else float)
    for alpha in _multi_indices(a.d, order):
        da = restrict_box(difference_op(ac, alpha), out_radius)
        db = restrict_box(x_derivative(bc, alpha), out_radius)
        weight = 1.0 / math.prod(math.factorial(x) for x in alpha)
        total = total + weight * da.samples * db.samples
    return ToroidalSymbol(a.d, a.n_x, out_box, _maybe_real(total),
                          n_independent=a.n_independent and b.n_independent,
                          bandwidth_hint=a.bandwidth_hint + b.bandwidth_hint)


def compose_oracle(a: ToroidalSymbol, b: ToroidalSymbol,
                   cutoff: float = DEFAULT_CUTOFF) -> ToroidalSymbol:
    """Exact product symbol via the matrix route: dequantize(Op(a) Op(b)).

    Columns within bandwidth(a) + bandwidth(b) of the box boundary carry
    truncation artifacts; comparisons should stay on interior sites.
    """
    box = LatticeBox(a.d, min(a.n_box.L, b.n_box.L))
    pa = quantize_raw(restrict_box(a, box.L), box, cutoff)
    pb = quantize_raw(restrict_box(b, box.L), box, cutoff)
    return dequantize(pa @ pb, box, n_x=a.n_x)


def power_symbol_expansion(a: ToroidalSymbol, k: int,
                           cutoff: float = DEFAULT_CUTOFF):
    """Pointwise power a^k next to the true power-symbol error.

    Returns (main, error): main(x, n) = a(x, n)^k and
    error = dequantize(quantize(a)^k) - main, meaningful at sites further
    than k * bandwidth from the box boundary.
    """
    if k < 1:
        raise ValueError(f"power must be a positive integer, got {k}")
    box = a.n_box
    main = ToroidalSymbol(a.d, a.n_x, box, a.samples ** k,
                          x_independent=a.x_independent,
                          n_independent=a.n_independent,
                          bandwidth_hint=a.bandwidth_hint * k)
    raw = quantize_raw(a, box, cutoff)
    power = np.linalg.matrix_power(raw, k)
    exact = dequantize(power, box, n_x=a.n_x)
    err = exact.samples - main.samples
    error = ToroidalSymbol(a.d, a.n_x, box, _maybe_real(err),
                           bandwidth_hint=a.bandwidth_hint * k)
    return main, error


def symmetry_defect(b_raw: np.ndarray, box: LatticeBox,
                    margin: int | None = None) -> float:
    """Self-adjointness defect of a raw quantization over interior entries.

    For a real matrix this is max |B - B^T|; for a complex raw matrix the
    adjoint is the conjugate transpose, which is what the self-adjointness
    claim for real symbols is about.
    """
    b_raw = np.asarray(b_raw)
    if margin is None:
        tol = 1e-14 * max(1.0, float(np.max(np.abs(b_raw))))
        margin = min(matrix_bandwidth(b_raw, box, tol=tol), box.L)
    interior = box.interior_indices(margin)
    if len(interior) == 0:
        interior = np.arange(box.count)
    sub = np.ix_(interior, interior)
    return float(np.max(np.abs(b_raw[sub] - b_raw.conj().T[sub])))


# ---------------------------------------------------------------------------
# Decay fits and symbol-class probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of log sup_x|sigma| against log <n>."""

    slope: float
    intercept: float
    residual: float
    n_lo: int
    n_hi: int

    @property
    def constant(self) -> float:
        return math.exp(self.intercept)


def decay_fit(sym: ToroidalSymbol, n_lo: int, n_hi: int) -> DecayFit:
    """Fit the sup-profile decay over sites with n_lo <= |n|_inf <= n_hi."""
    profile = sym.sup_profile()
    radius = np.max(np.abs(sym.n_box.sites), axis=1)
    mask = (radius >= n_lo) & (radius <= n_hi)
    if not mask.any():
        raise SzegoError("n-range", f"no sites with |n| in [{n_lo}, {n_hi}]")
    vals = profile[mask]
    if np.any(vals <= 0.0):
        raise ValueError("decay fit requires strictly positive sup values")
    x = np.log(bracket(sym.n_box.sites[mask]))
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DecayFit(float(slope), float(intercept), resid, n_lo, n_hi)


@dataclass(frozen=True)
class ProbeRow:
    alpha: tuple
    beta: tuple
    exponent: float
    constant: float
    residual: float


@dataclass(frozen=True)
class SymbolClassReport:
    """Fitted seminorm growth per (alpha, beta) and the membership verdict.

    ``member`` is true when every fitted exponent is at most
    m - |alpha| + slack and, per alpha, the fitted constants stay within
    ``const_factor`` of each other across beta (the derivative-uniformity
    that distinguishes the infinity-subclass).
    """

    m: float
    rows: tuple
    member: bool
    slack: float = 0.2
    const_factor: float = 10.0
    zero_level: float = field(default=1e-13, compare=False)


def class_probe(sym: ToroidalSymbol, m: float, alpha_max: int, beta_max: int,
                n_lo: int | None = None, n_hi: int | None = None,
                slack: float = 0.2, const_factor: float = 10.0) -> SymbolClassReport:
    """Estimate symbol-class membership up to the tested orders."""
    d = sym.d
    if sym.n_box.L - alpha_max < 2:
        raise SzegoError("n-range",
                         f"box radius {sym.n_box.L} too small for differences "
                         f"of order {alpha_max}")
    if n_hi is None:
        n_hi = sym.n_box.L - alpha_max - 1
    if n_lo is None:
        n_lo = max(2, n_hi // 8)
    scale = float(np.max(np.abs(sym.samples))) or 1.0
    rows = []
    for alpha in _multi_indices(d, alpha_max):
        for beta in _multi_indices(d, beta_max):
            g = difference_op(x_derivative(sym, beta), alpha)
            profile = g.sup_profile()
            if float(np.max(profile)) <= 1e-13 * scale:
                rows.append(ProbeRow(alpha, beta, -math.inf, 0.0, 0.0))
                continue
            fit = decay_fit(g, n_lo, min(n_hi, g.n_box.L))
            rows.append(ProbeRow(alpha, beta, fit.slope, fit.constant, fit.residual))
    member = True
    for alpha in _multi_indices(d, alpha_max):
        group = [r for r in rows if r.alpha == alpha]
        live = [r for r in group if r.constant > 0.0]
        if any(r.exponent > m - sum(alpha) + slack for r in live):
            member = False
        if live:
            cs = [r.constant for r in live]
            if max(cs) > const_factor * min(cs):
                member = False
    return SymbolClassReport(m, tuple(rows), member, slack, const_factor)
