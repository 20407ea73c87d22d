"""Finite lattice boxes, growing potentials, and truncated Hamiltonians.

The operator of interest acts on square-summable sequences over Z^d as

    (H u)(n) = sum_{|n-j|_1 = 1} u(j) + 2d u(n) + V(n) u(n),

with V(n) = |n|^k away from the origin and V(0) = 1, so H >= 1 and has
discrete spectrum.  Everything here lives on the finite cube
{n : |n|_inf <= L} under Dirichlet truncation: hopping terms that leave the
cube are dropped, which keeps the truncated operator >= V >= 1 and makes low
eigenvalues converge from above as L grows.  Sites are enumerated in
lexicographic order so traces and reports are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import SzegoError


@dataclass(frozen=True)
class LatticeBox:
    """Cube {n in Z^d : |n|_inf <= L} with a fixed lexicographic site order."""

    d: int
    L: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.L < 0:
            raise ValueError(f"box radius must be >= 0, got {self.L}")

    @property
    def side(self) -> int:
        return 2 * self.L + 1

    @property
    def count(self) -> int:
        return self.side ** self.d

    @cached_property
    def sites(self) -> np.ndarray:
        """All sites as an int array of shape (count, d), lexicographic."""
        axes = [np.arange(-self.L, self.L + 1)] * self.d
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    @cached_property
    def _strides(self) -> np.ndarray:
        return self.side ** np.arange(self.d - 1, -1, -1)

    def index_of(self, site) -> int:
        """Lexicographic index of a site; inverse of :meth:`site_of`."""
        site = np.asarray(site, dtype=int)
        if site.shape != (self.d,):
            raise ValueError(f"site must have {self.d} coordinates")
        if np.any(np.abs(site) > self.L):
            raise ValueError(f"site {tuple(site)} outside box of radius {self.L}")
        return int(np.dot(site + self.L, self._strides))

    def indices_of(self, sites: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`index_of` for an (m, d) array of in-box sites."""
        return (np.asarray(sites, dtype=int) + self.L) @ self._strides

    def site_of(self, index: int) -> tuple:
        return tuple(int(c) for c in self.sites[index])

    def contains(self, site) -> bool:
        site = np.asarray(site, dtype=int)
        return bool(np.all(np.abs(site) <= self.L))

    def interior_indices(self, margin: int) -> np.ndarray:
        """Indices of sites at inf-distance >= margin from the boundary."""
        return np.flatnonzero(np.max(np.abs(self.sites), axis=1) <= self.L - margin)


@dataclass(frozen=True)
class Potential:
    """Radially growing potential V(n) = |n|_inf^k, with V(0) = 1.

    The sup norm makes the sublevel sets exact cubes, so the closed-form
    count (2 floor(lam^(1/k)) + 1)^d is exact for every lam >= 1.
    """

    k: float
    norm: str = field(default="inf", compare=False)

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError(f"growth exponent must be positive, got {self.k}")
        if self.norm != "inf":
            raise ValueError("only the sup norm is supported")

    def value(self, n) -> float:
        n = np.asarray(n, dtype=int)
        r = int(np.max(np.abs(n)))
        return 1.0 if r == 0 else float(r) ** self.k

    def values(self, sites: np.ndarray) -> np.ndarray:
        """Vectorised evaluation over an (m, d) array of sites."""
        r = np.max(np.abs(np.asarray(sites, dtype=int)), axis=1).astype(float)
        v = r ** self.k
        v[r == 0] = 1.0
        return v


def potential_value(pot: Potential, n) -> float:
    """V at a single site: 1 at the origin, |n|_inf^k elsewhere."""
    return pot.value(n)


def _int_root_floor(lam: float, k: float) -> int:
    """Exact floor(lam^(1/k)) for lam >= 0, robust to float pow roundoff."""
    if lam < 0:
        raise ValueError("negative threshold")
    j = int(math.floor(lam ** (1.0 / k))) if lam > 0 else 0
    j = max(j, 0)
    while float(j + 1) ** k <= lam:
        j += 1
    while j > 0 and float(j) ** k > lam:
        j -= 1
    return j


def count_below(pot: Potential, d: int, lam: float) -> int:
    """Exact #{n in Z^d : V(n) <= lam} by enumeration over a sufficient box."""
    if not math.isfinite(lam) or lam < 0:
        raise SzegoError("empty-threshold", f"threshold must be finite and >= 0, got {lam}")
    if lam < 1.0:
        return 0
    radius = _int_root_floor(lam, pot.k)
    box = LatticeBox(d, max(radius, 1))
    return int(np.count_nonzero(pot.values(box.sites) <= lam))


def count_below_closed_form(pot: Potential, d: int, lam: float) -> int:
    """Cube-count (2 floor(lam^(1/k)) + 1)^d.

    Agrees with :func:`count_below` for every lam >= 1; below 1 it returns 1
    (the formula keeps counting the origin) while the exact count is 0.
    """
    if not math.isfinite(lam) or lam < 0:
        raise SzegoError("empty-threshold", f"threshold must be finite and >= 0, got {lam}")
    return (2 * _int_root_floor(lam, pot.k) + 1) ** d


@dataclass(frozen=True)
class SymmetricOperator:
    """Real symmetric matrix indexed by a box's site order.

    ``bandwidth`` is the maximal |m - n|_inf carrying a nonzero entry;
    ``sym_defect`` records how far a quantized raw matrix was from the stored
    symmetric one (0.0 for operators assembled directly).
    """

    box: LatticeBox
    entries: np.ndarray
    bandwidth: int = 0
    sym_defect: float = 0.0

    def __post_init__(self):
        e = self.entries
        n = self.box.count
        if e.shape != (n, n):
            raise ValueError(f"entries shape {e.shape} does not match box count {n}")
        if not np.array_equal(e, e.T):
            raise ValueError("entries must be exactly symmetric")

    @property
    def size(self) -> int:
        return self.box.count

    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)


def identity_operator(box: LatticeBox) -> SymmetricOperator:
    return SymmetricOperator(box, np.eye(box.count), bandwidth=0)


def diagonal_operator(box: LatticeBox, values: np.ndarray) -> SymmetricOperator:
    values = np.asarray(values, dtype=float)
    return SymmetricOperator(box, np.diag(values), bandwidth=0)


def _hopping_pairs(box: LatticeBox):
    """Index pairs (i, j) with sites at l1-distance 1, j in +axis direction."""
    pairs = []
    sites = box.sites
    for axis in range(box.d):
        stride = int(box._strides[axis])
        keep = np.flatnonzero(sites[:, axis] < box.L)
        pairs.append((keep, keep + stride))
    return pairs


def assemble_laplacian(box: LatticeBox) -> SymmetricOperator:
    """Dirichlet truncation of the positive lattice Laplacian 2d + hopping."""
    n = box.count
    a = np.zeros((n, n))
    np.fill_diagonal(a, 2.0 * box.d)
    for i, j in _hopping_pairs(box):
        a[i, j] = 1.0
        a[j, i] = 1.0
    return SymmetricOperator(box, a, bandwidth=1)


def assemble_hamiltonian(box: LatticeBox, pot: Potential) -> SymmetricOperator:
    """H = Delta + V on the box: diagonal 2d + V(n), +1 between l1-neighbours."""
    n = box.count
    a = np.zeros((n, n))
    np.fill_diagonal(a, 2.0 * box.d + pot.values(box.sites))
    for i, j in _hopping_pairs(box):
        a[i, j] = 1.0
        a[j, i] = 1.0
    return SymmetricOperator(box, a, bandwidth=1)


def truncation_radius(lam_max: float, k: float, theta: float = 0.5) -> int:
    """Smallest integer L with theta * L^k >= lam_max.

    Spectral data from a box of radius L is only trusted at thresholds
    lam <= theta * L^k; the safety fraction keeps the queried window far from
    the Dirichlet boundary, where eigenfunctions are truncation-sensitive.
    """
    if not (lam_max > 0):
        raise ValueError(f"lam_max must be positive, got {lam_max}")
    if not (0.0 < theta < 1.0):
        raise ValueError(f"safety fraction must lie in (0,1), got {theta}")
    L = max(1, int(math.ceil((lam_max / theta) ** (1.0 / k) - 1e-12)))
    while theta * float(L) ** k < lam_max:
        L += 1
    while L > 1 and theta * float(L - 1) ** k >= lam_max:
        L -= 1
    return L


def trust_limit(box: LatticeBox, pot: Potential, theta: float = 0.5) -> float:
    """Largest threshold at which the box spectrum is trusted."""
    return theta * float(box.L) ** pot.k
