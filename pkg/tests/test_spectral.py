"""Eigendecomposition contracts, projections, counting, traces."""

import math

import numpy as np
import pytest

from szegolab.errors import SzegoError
from szegolab.lattice import (
    LatticeBox,
    Potential,
    assemble_hamiltonian,
    identity_operator,
)
from szegolab.spectral import (
    SpectralData,
    compress_below,
    counting,
    counting_function,
    eigendecompose,
    gap_count,
    matrix_function,
    potential_resolvent_trace,
    resolvent_power_trace,
    trace_function,
)
from szegolab.symbols import quantize, trig_poly_symbol


def _spec_of(values, trust=math.inf):
    values = np.asarray(values, dtype=float)
    return SpectralData(values, np.eye(len(values)), None, trust)


class TestEigendecompose:
    def test_three_site_oracle(self):
        a = np.array([[3.0, 1, 0], [1, 3, 1], [0, 1, 3]])
        spec = eigendecompose(a)
        assert np.allclose(spec.eigenvalues,
                           [3 - math.sqrt(2), 3.0, 3 + math.sqrt(2)], atol=1e-12)

    def test_identity(self):
        spec = eigendecompose(np.eye(5))
        assert np.allclose(spec.eigenvalues, 1.0)
        assert np.allclose(spec.eigenvectors, np.eye(5))

    def test_diagonal(self):
        spec = eigendecompose(np.diag([1.0, 2.0, 3.0]))
        assert np.allclose(spec.eigenvalues, [1.0, 2.0, 3.0])

    def test_sign_convention(self):
        # first significant component of every eigenvector is positive
        rng = np.random.default_rng(3)
        a = rng.normal(size=(12, 12))
        a = a + a.T
        q = eigendecompose(a).eigenvectors
        for col in q.T:
            lead = col[np.abs(col) > 1e-12 * np.max(np.abs(col))][0]
            assert lead > 0

    def test_invalid_matrix(self):
        bad = np.array([[1.0, np.nan], [np.nan, 1.0]])
        with pytest.raises(SzegoError) as err:
            eigendecompose(bad)
        assert err.value.code == "invalid-matrix"

    def test_invariants_on_hamiltonians(self, frame_d1_L100, frame_d2_L20):
        for frame in (frame_d1_L100, frame_d2_L20):
            spec, h = frame.spec, frame.h
            n = spec.size
            assert np.all(np.diff(spec.eigenvalues) >= 0)
            q = spec.eigenvectors
            assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-10
            recon_err = np.max(np.abs(spec.reconstruct() - h.entries))
            assert recon_err <= 1e-8 * np.max(np.abs(h.entries))

    def test_tridiagonal_path_matches_dense(self):
        h = assemble_hamiltonian(LatticeBox(1, 15), Potential(2.0))
        ev_tri = eigendecompose(h).eigenvalues
        dense = h.entries + 0.0
        dense[0, 0] = dense[0, 0]  # force the generic path via a full matrix
        perturbed = dense.copy()
        perturbed[0, -1] = perturbed[-1, 0] = 1e-300  # break tridiagonal detection
        ev_dense = eigendecompose(0.5 * (perturbed + perturbed.T)).eigenvalues
        assert np.allclose(ev_tri, ev_dense, atol=1e-10)


class TestCounting:
    def test_examples(self):
        spec = _spec_of([1.0, 2.0, 3.0, 10.0])
        assert counting(spec, 3.0) == 3
        assert counting(spec, 0.5) == 0

    def test_nondecreasing_and_saturating(self, frame_d1_L64):
        spec = frame_d1_L64.spec
        lams = np.linspace(1.0, spec.trust_limit, 40)
        counts = [counting(spec, lam) for lam in lams]
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        unlimited = SpectralData(spec.eigenvalues, spec.eigenvectors, None)
        assert counting(unlimited, math.inf) == spec.size

    def test_trust_window_enforced(self, frame_d1_L64):
        with pytest.raises(SzegoError) as err:
            counting(frame_d1_L64.spec, frame_d1_L64.spec.trust_limit + 1.0)
        assert err.value.code == "untrusted-window"
        assert "2048" in str(err.value)

    def test_counting_function_matches(self, frame_d1_L64):
        spec = frame_d1_L64.spec
        cf = counting_function(spec)
        for lam in (10.0, 333.3, 2000.0):
            assert cf(lam) == counting(spec, lam)


class TestGapCount:
    def test_example_window(self):
        spec = _spec_of([1.0, 2.0, 3.0, 10.0])
        assert gap_count(spec, 10.0, 1.5) == 2  # (1.6, 3.1] holds {2, 3}

    def test_tiny_window_isolates(self):
        spec = _spec_of([1.0, 2.0, 3.0, 10.0])
        assert gap_count(spec, 10.0, 0.5) == 1

    def test_monotone_in_width(self):
        rng = np.random.default_rng(11)
        ev = np.sort(rng.uniform(0.5, 50.0, 60))
        spec = _spec_of(ev)
        widths = [0.1, 0.5, 1.0, 3.0, 10.0]
        counts = [gap_count(spec, 40.0, r) for r in widths]
        assert all(b >= a for a, b in zip(counts, counts[1:]))

    def test_at_least_one_when_spectrum_present(self):
        spec = _spec_of([5.0])
        assert gap_count(spec, 4.5, 1.0) >= 1

    def test_bad_window(self):
        with pytest.raises(SzegoError) as err:
            gap_count(_spec_of([1.0]), 1.0, 0.0)
        assert err.value.code == "bad-window"


class TestCompression:
    def test_identity_compresses_to_identity(self, frame_d1_L64):
        frame = frame_d1_L64
        m = compress_below(frame.spec, identity_operator(frame.box), 500.0)
        p = counting(frame.spec, 500.0)
        assert m.shape == (p, p)
        assert np.allclose(m, np.eye(p), atol=1e-12)

    def test_empty_projection_gives_empty_matrix(self, frame_d1_L64):
        m = compress_below(frame_d1_L64.spec, identity_operator(frame_d1_L64.box), 0.5)
        assert m.shape == (0, 0)
        assert trace_function(m, lambda t: t + 1.0) == 0.0

    def test_compression_spectrum_inside_symbol_range(self, frame_d1_L64):
        frame = frame_d1_L64
        sym = trig_poly_symbol([2, 1], LatticeBox(1, frame.box.L + 2))
        b = quantize(sym, frame.box)
        m = compress_below(frame.spec, b, 800.0)
        ev = np.linalg.eigvalsh(m)
        assert ev[0] >= 1.0 - 1e-10 and ev[-1] <= 3.0 + 1e-10

    def test_trace_matches_columnwise_sum(self, frame_d1_L64):
        frame = frame_d1_L64
        sym = trig_poly_symbol([2, 1], LatticeBox(1, frame.box.L + 2))
        b = quantize(sym, frame.box)
        lam = 700.0
        m = compress_below(frame.spec, b, lam)
        mask = frame.spec.eigenvalues <= lam
        direct = sum(q @ b.entries @ q for q in frame.spec.eigenvectors[:, mask].T)
        assert abs(np.trace(m) - direct) <= 1e-9 * max(1.0, abs(direct))

    def test_box_mismatch_rejected(self, frame_d1_L64):
        with pytest.raises(SzegoError) as err:
            compress_below(frame_d1_L64.spec, identity_operator(LatticeBox(1, 10)), 5.0)
        assert err.value.code == "incompatible-operators"


class TestMatrixFunction:
    def test_square_of_involution(self):
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = matrix_function(m, lambda t: t ** 2)
        assert np.allclose(out, np.eye(2), atol=1e-12)
        assert abs(trace_function(m, lambda t: t ** 2) - 2.0) < 1e-12

    def test_constant_function(self):
        m = np.diag([1.0, 4.0, 9.0])
        out = matrix_function(m, lambda t: np.full_like(t, 7.0))
        assert np.allclose(out, 7.0 * np.eye(3), atol=1e-12)

    def test_identity_function_preserves_trace(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(9, 9))
        a = a + a.T
        assert abs(trace_function(a, lambda t: t) - np.trace(a)) < 1e-9 * np.abs(np.trace(a))

    def test_polynomial_agrees_with_horner(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(14, 14))
        a = 0.5 * (a + a.T)
        coeffs = [1.0, -2.0, 0.5, 1.5]  # 1 - 2t + 0.5 t^2 + 1.5 t^3
        spectral = matrix_function(a, lambda t: ((1.5 * t + 0.5) * t - 2.0) * t + 1.0)
        horner = np.eye(14) * coeffs[-1]
        for c in reversed(coeffs[:-1]):
            horner = horner @ a + c * np.eye(14)
        scale = np.max(np.abs(horner))
        assert np.max(np.abs(spectral - horner)) <= 1e-9 * scale

    def test_function_domain_error(self):
        m = np.diag([-1.0, 1.0])
        with pytest.raises(SzegoError) as err:
            matrix_function(m, lambda t: np.log(t))
        assert err.value.code == "f-domain"


class TestResolventTraces:
    def test_single_eigenvalue(self):
        spec = _spec_of([4.0])
        assert abs(resolvent_power_trace(spec, 1.0, 1) - 0.2) < 1e-14

    def test_derivative_relation_by_finite_differences(self):
        rng = np.random.default_rng(13)
        a = rng.normal(size=(10, 10))
        a = a + a.T + 10.0 * np.eye(10)
        spec = eigendecompose(a)
        lam, eps = 3.0, 1e-5
        numeric = (resolvent_power_trace(spec, lam + eps, 1)
                   - resolvent_power_trace(spec, lam - eps, 1)) / (2 * eps)
        assert abs(numeric + resolvent_power_trace(spec, lam, 2)) < 1e-7

    def test_not_positive_rejected(self):
        with pytest.raises(SzegoError) as err:
            resolvent_power_trace(_spec_of([2.0]), -2.0, 1)
        assert err.value.code == "not-positive"

    def test_potential_trace_closed_form(self):
        # sum over Z of 1/(V(n)+1), V(n) = n^2 except V(0) = 1:
        # 1/2 + 2 * sum_{n>=1} 1/(n^2+1) = 1/2 + (pi coth(pi) - 1)
        value = potential_resolvent_trace(Potential(2.0), 1, 1.0, 1)
        exact = 0.5 + (math.pi / math.tanh(math.pi) - 1.0)
        assert abs(value - exact) <= 1e-8 * exact

    def test_potential_trace_scaled_closed_form(self):
        # sum_{n>=1} 1/(n^2+lam) = (pi sqrt(lam) coth(pi sqrt(lam)) - 1)/(2 lam)
        for lam in (10.0, 250.0):
            s = math.sqrt(lam)
            exact = 1.0 / (1.0 + lam) + (math.pi * s / math.tanh(math.pi * s) - 1.0) / lam
            value = potential_resolvent_trace(Potential(2.0), 1, lam, 1)
            assert abs(value - exact) <= 1e-8 * exact

    def test_potential_trace_brute_force_d2(self):
        pot = Potential(2.0)
        value = potential_resolvent_trace(pot, 2, 5.0, 2)
        js = np.arange(1.0, 20001.0)
        brute = (1.0 + 5.0) ** -2 + np.sum(
            ((2 * js + 1) ** 2 - (2 * js - 1) ** 2) * (js ** 2 + 5.0) ** -2.0)
        assert abs(value - brute) <= 2e-8 * brute

    def test_trace_class_condition(self):
        with pytest.raises(SzegoError) as err:
            potential_resolvent_trace(Potential(2.0), 2, 1.0, 1)  # m k = 2 = d
        assert err.value.code == "not-trace-class"

    def test_box_trace_vs_boxed_potential(self, frame_d1_L64):
        # on a shared box the H and V resolvent traces already track each other
        frame = frame_d1_L64
        h_tr = resolvent_power_trace(frame.spec, 100.0, 1)
        v_tr = float(np.sum((frame.pot.values(frame.box.sites) + 100.0) ** -1.0))
        assert abs(h_tr / v_tr - 1.0) < 0.05
