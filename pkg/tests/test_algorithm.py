from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tncompress.algorithm import (
    FiducialSet,
    basis_as_mps,
    channel_spectrum,
    emulator_sample_estimate,
    encoding_isometry,
    fiducial_family,
    frame_decompose,
    gap_closed_form,
    gap_report,
    gram_matrix,
    gram_schmidt_span,
    overlap_matrix,
    reflection_superoperator,
    w_factor,
)
from tncompress.errors import SizeLimitError
from tncompress.mps import eval_statevector, random_mps

H = 1 / math.sqrt(2)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unit_rows(a):
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def random_span_set(rng, m, dim, r):
    """m unit states drawn from a random r-dimensional subspace of C^dim."""
    q, _ = np.linalg.qr(crandn(rng, dim, r))
    return FiducialSet(unit_rows(crandn(rng, m, r) @ q.T)), q


class TestFiducialSet:
    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            FiducialSet(np.array([[1.0, 1.0]]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            FiducialSet(np.zeros((0, 2)))

    def test_from_states_dimension_mismatch(self):
        with pytest.raises(ValueError):
            FiducialSet.from_states([np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0])])

    def test_from_mps(self):
        m = random_mps(3, 2, 2, 0, boundary="open")
        psi = eval_statevector(m)
        scaled = type(m)(m.sites, "open", m.left / np.linalg.norm(psi), m.right)
        f = FiducialSet.from_states([scaled])
        assert f.m == 1 and f.dim == 8


class TestGramMatrix:
    def test_orthonormal(self):
        g = gram_matrix(FiducialSet(np.eye(3)))
        np.testing.assert_allclose(g.gram, np.eye(3))
        assert g.rank == 3

    def test_repeated_state(self):
        g = gram_matrix(FiducialSet(np.array([[1.0, 0.0], [1.0, 0.0]])))
        np.testing.assert_allclose(g.gram, [[1, 1], [1, 1]])
        assert g.rank == 1

    def test_two_by_two(self):
        g = gram_matrix(FiducialSet(np.array([[1.0, 0.0], [H, H]])))
        np.testing.assert_allclose(g.gram, [[1, H], [H, 1]], atol=1e-15)
        assert g.rank == 2

    def test_hermitian_psd(self):
        f, _ = random_span_set(np.random.default_rng(0), 7, 10, 4)
        g = gram_matrix(f)
        assert np.linalg.norm(g.gram - g.gram.conj().T) <= 1e-12
        assert g.eigenvalues.min() >= -1e-10
        assert g.rank == 4


class TestWFactor:
    def test_identity(self):
        w = w_factor(gram_matrix(FiducialSet(np.eye(3)))).w
        np.testing.assert_allclose(w, np.eye(3), atol=1e-15)

    def test_repeated_state(self):
        w = w_factor(gram_matrix(FiducialSet(np.array([[1.0, 0.0], [1.0, 0.0]])))).w
        np.testing.assert_allclose(w, [[1, 1]], atol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 12), st.integers(1, 6))
    def test_reconstruction(self, seed, m, r):
        rng = np.random.default_rng(seed)
        f, _ = random_span_set(rng, m, 8, min(r, m))
        g = w_factor(gram_matrix(f))
        assert g.w.shape == (g.rank, m)
        assert np.linalg.norm(g.w.conj().T @ g.w - g.gram) <= 1e-10 * np.linalg.norm(g.gram)
        assert np.all(np.diff(np.linalg.norm(g.w, axis=1)) <= 1e-12)


class TestEncodingIsometry:
    def test_orthonormal_states(self):
        f = FiducialSet(np.eye(4)[:3])
        v = encoding_isometry(f, w_factor(gram_matrix(f)))
        for j in range(3):
            np.testing.assert_allclose(v.matrix @ f.states[j], np.eye(3)[j], atol=1e-14)
        assert v.isometry_defect() <= 1e-12

    def test_collapsed_span(self):
        f = FiducialSet(np.array([[1.0, 0.0], [1.0, 0.0]]))
        v = encoding_isometry(f, w_factor(gram_matrix(f)))
        assert v.out_dim == 1
        np.testing.assert_allclose(v.matrix @ f.states[0], [1.0], atol=1e-14)

    def test_maps_fiducials_to_columns_of_w(self):
        f, _ = random_span_set(np.random.default_rng(1), 6, 9, 3)
        g = w_factor(gram_matrix(f))
        v = encoding_isometry(f, g)
        np.testing.assert_allclose(v.matrix @ f.states.T, g.w, atol=1e-10)

    def test_norms_on_span(self):
        rng = np.random.default_rng(2)
        f, q = random_span_set(rng, 8, 12, 5)
        v = encoding_isometry(f, w_factor(gram_matrix(f)))
        for _ in range(100):
            psi = q @ crandn(rng, 5)
            assert abs(np.linalg.norm(v.matrix @ psi) - np.linalg.norm(psi)) <= 1e-9

    def test_supplied_unitary_rotation(self):
        rng = np.random.default_rng(3)
        f, _ = random_span_set(rng, 5, 6, 3)
        g = w_factor(gram_matrix(f))
        u, _ = np.linalg.qr(crandn(rng, 3, 3))
        rotated = type(g)(g.gram, g.rank, g.eigenvalues, g.eigenvectors, g.eigen_tol, u @ g.w)
        v = encoding_isometry(f, rotated)
        np.testing.assert_allclose(v.matrix @ f.states.T, u @ g.w, atol=1e-10)

    def test_missing_w(self):
        f = FiducialSet(np.eye(2))
        with pytest.raises(ValueError):
            encoding_isometry(f, gram_matrix(f))

    def test_inconsistent_w(self):
        f = FiducialSet(np.eye(2))
        g = w_factor(gram_matrix(f))
        bad = type(g)(g.gram, g.rank, g.eigenvalues, g.eigenvectors, g.eigen_tol, 2 * g.w)
        with pytest.raises(ValueError):
            encoding_isometry(f, bad)


class TestFiducialFamily:
    def test_two_dimensional(self):
        f = fiducial_family(2)
        assert f.m == 12
        np.testing.assert_allclose(f.states[0], [H, H])
        np.testing.assert_allclose(f.states[4], [1, 0])
        np.testing.assert_allclose(f.states[11], [1, 0])

    def test_wraps_around(self):
        f = fiducial_family(3)
        np.testing.assert_allclose(f.states[12], np.array([1, 0, 1]) * H)

    @pytest.mark.parametrize("r", range(2, 9))
    def test_spans(self, r):
        f = fiducial_family(r)
        assert f.m == 6 * r
        np.testing.assert_allclose(np.linalg.norm(f.states, axis=1), 1, atol=1e-14)
        assert gram_matrix(f).rank == r

    def test_custom_basis(self):
        q, _ = np.linalg.qr(crandn(np.random.default_rng(4), 5, 3))
        f = fiducial_family(q.T)
        assert f.dim == 5 and gram_matrix(f).rank == 3

    def test_needs_two(self):
        with pytest.raises(ValueError):
            fiducial_family(1)

    def test_non_orthonormal(self):
        with pytest.raises(ValueError):
            fiducial_family(np.array([[1.0, 0.0], [1.0, 0.0]]))


class TestGramSchmidt:
    def test_already_orthonormal(self):
        basis = gram_schmidt_span(list(np.eye(3)))
        np.testing.assert_allclose(basis.coefficients, np.eye(3), atol=1e-15)

    def test_duplicate_skipped(self):
        basis = gram_schmidt_span([np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert basis.size == 2 and basis.kept == (0, 2)

    def test_rank_three(self):
        rng = np.random.default_rng(5)
        q, _ = np.linalg.qr(crandn(rng, 6, 3))
        states = list((crandn(rng, 5, 3) @ q.T))
        basis = gram_schmidt_span(states)
        assert basis.size == 3
        vecs = basis.coefficients @ np.array(states)
        np.testing.assert_allclose(vecs.conj() @ vecs.T, np.eye(3), atol=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 10), st.integers(1, 6))
    def test_size_equals_rank(self, seed, t, r):
        rng = np.random.default_rng(seed)
        r = min(r, t)
        q, _ = np.linalg.qr(crandn(rng, 8, r))
        states = list(crandn(rng, t, r) @ q.T)
        basis = gram_schmidt_span(states)
        assert basis.size == r
        vecs = basis.coefficients @ np.array(states)
        np.testing.assert_allclose(vecs.conj() @ vecs.T, np.eye(r), atol=1e-10)

    def test_mps_pipeline(self):
        states = [random_mps(3, 2, 2, k, boundary="open") for k in range(4)]
        states.append(states[0])
        basis = gram_schmidt_span(states)
        assert basis.size == 4
        mps_basis = basis_as_mps(basis, states)
        assert all(m.max_bond <= 2 * len(states) for m in mps_basis)
        np.testing.assert_allclose(overlap_matrix(mps_basis), np.eye(4), atol=1e-10)
        assert (basis.size - 1).bit_length() == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            gram_schmidt_span([])


class TestChannelSpectrum:
    @pytest.mark.parametrize("r", [2, 3, 5])
    def test_unital_and_bounded(self, r):
        spec = channel_spectrum(fiducial_family(r))
        np.testing.assert_allclose(spec.apply(np.eye(r)), np.eye(r), atol=1e-12)
        assert spec.eigenvalue_moduli[0] == pytest.approx(1.0, abs=1e-9)
        assert spec.eigenvalue_moduli.max() <= 1 + 1e-9
        assert np.all(np.diff(spec.eigenvalue_moduli) <= 1e-12)

    def test_trace_preserving(self):
        rng = np.random.default_rng(6)
        spec = channel_spectrum(fiducial_family(4))
        rho = crandn(rng, 4, 4)
        assert np.trace(spec.apply(rho)) == pytest.approx(np.trace(rho), abs=1e-12)

    def test_single_state_is_degenerate(self):
        spec = channel_spectrum(FiducialSet(np.array([[1.0]])))
        assert spec.degenerate and spec.gap == 0.0 and spec.block_gap is None
        np.testing.assert_allclose(spec.superoperator, [[1.0]])

    def test_superoperator_matches_direct_map(self):
        rng = np.random.default_rng(7)
        coords = unit_rows(crandn(rng, 3, 3))
        sup = reflection_superoperator(coords)
        rho = crandn(rng, 3, 3)
        direct = sum((np.eye(3) - 2 * np.outer(p, p.conj())) @ rho @ (np.eye(3) - 2 * np.outer(p, p.conj()))
                     for p in coords) / 3
        np.testing.assert_allclose((sup @ rho.reshape(-1)).reshape(3, 3), direct, atol=1e-12)

    def test_size_limit(self):
        with pytest.raises(SizeLimitError):
            channel_spectrum(fiducial_family(5), max_superoperator=16)


class TestGap:
    @pytest.mark.parametrize("r,value", [(3, 2 / 3), (4, 1 / 3), (2, 4 / 3)])
    def test_closed_form(self, r, value):
        assert gap_closed_form(r) == pytest.approx(value, abs=1e-12)

    def test_decreasing(self):
        values = [gap_closed_form(r) for r in range(3, 65)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert gap_closed_form(64) * 3 * 64**3 / (8 * math.pi**2) == pytest.approx(1.0, rel=1e-3)

    @pytest.mark.parametrize("r", range(2, 9))
    def test_block_difference_matches(self, r):
        rep = gap_report(r)
        assert rep.block_difference <= 1e-9

    def test_literal_gap_at_two(self):
        rep = gap_report(2)
        assert rep.literal_gap == pytest.approx(2 / 3, abs=1e-9)
        assert rep.literal_mismatch

    @pytest.mark.parametrize("r", range(3, 9))
    def test_literal_gap_bounded(self, r):
        rep = gap_report(r)
        assert 0 < rep.literal_gap <= 1 + 1e-12

    def test_invalid(self):
        with pytest.raises(ValueError):
            gap_closed_form(1)


class TestEmulatorEstimate:
    def test_value(self):
        q = emulator_sample_estimate(4, 0.1, 1 / 3)
        assert q == pytest.approx(16 * 10 * 9 * math.log2(40) ** 2, rel=1e-12)
        assert q == pytest.approx(4.1e4, rel=0.01)

    def test_doubling_r(self):
        a = emulator_sample_estimate(4, 0.1, 0.5)
        b = emulator_sample_estimate(8, 0.1, 0.5)
        assert b / a == pytest.approx(4 * (math.log2(80) / math.log2(40)) ** 2, rel=1e-12)

    def test_growth_with_closed_form_gap(self):
        # With the closed-form gap the estimate grows like r^8 up to logs.
        q = [emulator_sample_estimate(r, 0.1, gap_closed_form(r)) for r in (16, 32)]
        exponent = math.log2(q[1] / q[0])
        assert 8.0 < exponent < 8.6

    @pytest.mark.parametrize("args", [(4, 0.0, 0.5), (4, 1.0, 0.5), (4, 0.1, 0.0), (4, 0.1, 4 / 3), (0, 0.1, 0.5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            emulator_sample_estimate(*args)


class TestFrameDecompose:
    def test_orthonormal_basis(self):
        rng = np.random.default_rng(8)
        psi = crandn(rng, 3)
        fd = frame_decompose(np.eye(3), psi)
        np.testing.assert_allclose(fd.coefficients, psi, atol=1e-14)
        assert fd.lambda_min == pytest.approx(1.0)
        assert fd.success_probability == pytest.approx(1 / 3)

    def test_three_states(self):
        sig = np.array([[1.0, 0.0], [0.0, 1.0], [H, H]])
        fd = frame_decompose(sig, np.array([1.0, 0.0]))
        np.testing.assert_allclose(fd.coefficients, [0.75, -0.25, 0.5 * H], atol=1e-14)
        assert fd.residual <= 1e-14
        assert fd.lambda_min == pytest.approx(1.0)
        assert fd.success_probability == pytest.approx(1 / (3 * (0.5625 + 0.0625 + 0.125)))

    def test_frame_eigenvalues_match_gram(self):
        rng = np.random.default_rng(9)
        sig = unit_rows(crandn(rng, 7, 4))
        gram = np.linalg.eigvalsh(sig.conj() @ sig.T)
        fd = frame_decompose(sig, sig[0])
        assert fd.lambda_min == pytest.approx(gram[gram > 1e-10].min(), rel=1e-10)

    @pytest.mark.parametrize("seed", range(20))
    def test_guaranteed_bound(self, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 9))
        s = int(rng.integers(dim + 1, 2 * dim + 3))
        sig = unit_rows(crandn(rng, s, dim))
        fd = frame_decompose(sig, crandn(rng, dim))
        assert fd.residual <= 1e-9 * max(1.0, np.linalg.norm(fd.coefficients))
        assert fd.guaranteed_bound_holds

    def test_in_subspace(self):
        rng = np.random.default_rng(10)
        q, _ = np.linalg.qr(crandn(rng, 6, 2))
        sig = unit_rows(crandn(rng, 4, 2) @ q.T)
        fd = frame_decompose(sig, q @ crandn(rng, 2))
        assert fd.residual <= 1e-10

    def test_outside_span(self):
        with pytest.raises(ValueError):
            frame_decompose(np.array([[1.0, 0.0]]), np.array([0.0, 1.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            frame_decompose(np.eye(2), np.ones(3))
