import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duloc.linalg import (
    ConvergenceError,
    IllConditionedError,
    NotHermitianError,
    hermitian_eig,
    quadratic_form,
    regularized_inverse,
    trace,
)
from conftest import random_hermitian


def power_iteration(m, iters=500):
    v = np.arange(1, m.shape[0] + 1, dtype=complex)
    for _ in range(iters):
        v = m @ v
        v /= np.linalg.norm(v)
    return np.real(v.conj() @ m @ v), v


def reconstruct(es):
    u = es.eigenvectors
    return u @ np.diag(es.eigenvalues) @ u.conj().T


class TestHermitianEig:
    def test_identity(self):
        es = hermitian_eig(np.eye(4))
        np.testing.assert_allclose(es.eigenvalues, np.ones(4))
        np.testing.assert_allclose(reconstruct(es), np.eye(4), atol=1e-12)

    def test_rank_one_ones(self):
        m = np.ones((4, 4), dtype=complex)
        lam, v = power_iteration(m)
        assert lam == pytest.approx(4.0)
        es = hermitian_eig(m)
        np.testing.assert_allclose(es.eigenvalues, [4, 0, 0, 0], atol=1e-12)
        top = es.eigenvectors[:, 0]
        np.testing.assert_allclose(top, np.full(4, 0.5), atol=1e-12)
        assert abs(np.vdot(v, top)) == pytest.approx(1.0, abs=1e-12)

    def test_random_order8(self, rng):
        m = random_hermitian(rng, 8)
        es = hermitian_eig(m)
        err = np.linalg.norm(reconstruct(es) - m) / np.linalg.norm(m)
        assert err < 1e-8
        assert abs(es.eigenvalues.sum() - np.sum(np.real(np.diag(m)))) < 1e-9 * np.abs(m).max()

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
    def test_matches_lapack(self, rng, n):
        m = random_hermitian(rng, n)
        es = hermitian_eig(m)
        ref = np.linalg.eigvalsh(m)[::-1]
        np.testing.assert_allclose(es.eigenvalues, ref, atol=1e-10 * np.abs(ref).max())

    def test_orthonormal_and_sorted(self, rng):
        es = hermitian_eig(random_hermitian(rng, 12, psd=True))
        u = es.eigenvectors
        np.testing.assert_allclose(u.conj().T @ u, np.eye(12), atol=1e-9)
        assert np.all(np.diff(es.eigenvalues) <= 0)

    def test_sign_convention(self, rng):
        es = hermitian_eig(random_hermitian(rng, 6))
        u = es.eigenvectors
        for k in range(6):
            col = u[:, k]
            first = col[np.argmax(np.abs(col) > 1e-12 * np.abs(col).max())]
            assert abs(first.imag) < 1e-15
            assert first.real > 0

    def test_deterministic(self, rng):
        m = random_hermitian(rng, 8)
        a, b = hermitian_eig(m), hermitian_eig(m.copy())
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        assert np.array_equal(a.eigenvectors, b.eigenvectors)

    def test_batched_equals_single(self, rng):
        ms = np.stack([random_hermitian(rng, 5) for _ in range(4)])
        batch = hermitian_eig(ms)
        for i, m in enumerate(ms):
            single = hermitian_eig(m)
            np.testing.assert_allclose(batch.eigenvalues[i], single.eigenvalues, atol=1e-12)
            np.testing.assert_allclose(reconstruct(hermitian_eig(m)), m, atol=1e-10)

    def test_rejects_non_hermitian(self):
        m = np.eye(3, dtype=complex)
        m[0, 2] = 0.5
        with pytest.raises(NotHermitianError, match=r"\(0,2\) and \(2,0\)|\(2,0\) and \(0,2\)"):
            hermitian_eig(m)

    def test_convergence_error_carries_residual(self, rng):
        with pytest.raises(ConvergenceError) as exc:
            hermitian_eig(random_hermitian(rng, 6), max_sweeps=0)
        assert exc.value.residual > 0

    def test_zero_matrix(self):
        es = hermitian_eig(np.zeros((3, 3)))
        np.testing.assert_array_equal(es.eigenvalues, np.zeros(3))


class TestTrace:
    def test_identity(self):
        assert trace(np.eye(8)) == 8

    def test_scaled_identity(self):
        assert trace(1.1 * np.eye(8)) == pytest.approx(8.8)

    def test_signal_plus_noise(self, rng):
        a = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        phi = np.outer(a, a.conj()) + 0.1 * np.eye(8)
        assert trace(phi) == pytest.approx(8 * (1 + 0.1), rel=1e-12)


class TestQuadraticForm:
    def test_identity_unit_vector(self, rng):
        v = rng.normal(size=5) + 1j * rng.normal(size=5)
        v /= np.linalg.norm(v)
        assert quadratic_form(np.eye(5), v) == pytest.approx(1.0)

    def test_rank_one(self, rng):
        a = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        assert quadratic_form(np.outer(a, a.conj()), a) == pytest.approx(64.0)

    def test_null_space(self):
        u = np.full(4, 0.5)
        m = 4 * (np.eye(4) - np.outer(u, u))  # eigenvalues {0, 4, 4, 4}
        assert abs(quadratic_form(m, u)) < 1e-14

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            quadratic_form(np.eye(3), np.ones(4))

    def test_batched_shapes(self, rng):
        ms = np.stack([random_hermitian(rng, 3) for _ in range(2)])
        vs = rng.normal(size=(2, 7, 3)) + 0j
        q = quadratic_form(ms, vs)
        assert q.shape == (2, 7)
        assert q[1, 4] == pytest.approx(np.real(vs[1, 4].conj() @ ms[1] @ vs[1, 4]))


class TestRegularizedInverse:
    def test_identity(self):
        np.testing.assert_allclose(regularized_inverse(np.eye(3), 0.0), np.eye(3), atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(regularized_inverse(np.diag([3.0, 1.0]), 1.0),
                                   np.diag([0.25, 0.5]), atol=1e-14)

    def test_rank_one_spectrum_against_brute_force(self):
        m = np.ones((4, 4), dtype=complex)
        inv = regularized_inverse(m, 1e-4)
        brute = np.linalg.inv(m + 1e-4 * np.eye(4))
        np.testing.assert_allclose(inv, brute, rtol=1e-8, atol=1e-6)
        ev = np.sort(np.linalg.eigvalsh(inv))
        np.testing.assert_allclose(ev, [1 / 4.0001, 1e4, 1e4, 1e4], rtol=1e-9)
        np.testing.assert_allclose(inv @ (m + 1e-4 * np.eye(4)), np.eye(4), atol=1e-7)

    def test_ill_conditioned(self):
        with pytest.raises(IllConditionedError, match="smallest shifted eigenvalue"):
            regularized_inverse(np.diag([1.0, 0.0]), 0.0)

    def test_per_matrix_load(self, rng):
        ms = np.stack([random_hermitian(rng, 4, psd=True) for _ in range(3)])
        loads = np.array([0.1, 1.0, 10.0])
        inv = regularized_inverse(ms, loads)
        for m, mu, r in zip(ms, loads, inv):
            np.testing.assert_allclose(r @ (m + mu * np.eye(4)), np.eye(4), atol=1e-7)


hermitian_inputs = st.tuples(st.integers(1, 16), st.integers(0, 2**32 - 1))


@settings(max_examples=40, deadline=None)
@given(hermitian_inputs)
def test_eigenvalue_sum_is_trace(args):
    n, seed = args
    m = random_hermitian(np.random.default_rng(seed), n)
    es = hermitian_eig(m)
    assert abs(es.eigenvalues.sum() - trace(m)) <= 1e-9 * max(1.0, abs(trace(m)), np.abs(m).max())


@settings(max_examples=40, deadline=None)
@given(hermitian_inputs)
def test_quadratic_form_spectral_expansion(args):
    n, seed = args
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, n)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    es = hermitian_eig(m)
    expansion = np.sum(es.eigenvalues * np.abs(es.eigenvectors.conj().T @ v) ** 2)
    scale = np.sum(np.abs(es.eigenvalues)) * np.vdot(v, v).real
    assert abs(quadratic_form(m, v) - expansion) <= 1e-9 * scale


@settings(max_examples=30, deadline=None)
@given(hermitian_inputs, st.floats(1e-3, 10.0))
def test_regularized_inverse_commutes(args, load):
    n, seed = args
    m = random_hermitian(np.random.default_rng(seed), n, psd=True)
    inv = regularized_inverse(m, load)
    assert np.linalg.norm(inv @ m - m @ inv) <= 1e-8 * max(1.0, np.linalg.norm(m) * np.linalg.norm(inv))
