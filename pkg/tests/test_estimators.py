import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import mean_and_se
from qgsf.estimators import (
    batch_estimates,
    batch_gradient,
    batch_hessian,
    grad_increment,
    gradient_weight,
    h_matrix,
    h_matrix_batch,
    hess_increment,
    smoothed_value,
)
from qgsf.qgaussian import Perturbation, QGaussianSpec, rho, sample_batch


def pert(spec, eta):
    eta = np.asarray(eta, dtype=float)
    return Perturbation(eta, rho(spec, eta))


class TestHMatrix:
    @pytest.mark.parametrize("n,q", [(1, 0.5), (3, 1.0), (4, 1.2)])
    def test_zero_perturbation(self, n, q):
        spec = QGaussianSpec(n, q)
        np.testing.assert_array_equal(h_matrix(spec, pert(spec, np.zeros(n))), -np.eye(n))

    def test_compact_support_example(self):
        spec = QGaussianSpec(1, 0.5)
        np.testing.assert_allclose(h_matrix(spec, pert(spec, [1.0])), [[-0.625]], rtol=1e-14)

    def test_gaussian_example(self):
        spec = QGaussianSpec(2, 1.0)
        np.testing.assert_array_equal(h_matrix(spec, pert(spec, [1.0, 2.0])), [[0.0, 2.0], [2.0, 3.0]])

    def test_boundary_rejected(self):
        spec = QGaussianSpec(1, 0.5)
        with pytest.raises(ValueError):
            h_matrix(spec, Perturbation(np.array([np.sqrt(5.0)]), 0.0))

    def test_batch_matches_single(self, rng):
        spec = QGaussianSpec(4, 0.7)
        eta, r = sample_batch(spec, rng, 20)
        stacked = h_matrix_batch(spec, eta, r)
        for k in range(20):
            np.testing.assert_allclose(stacked[k], h_matrix(spec, Perturbation(eta[k], r[k])), rtol=1e-13)

    @settings(max_examples=200, deadline=None)
    @given(
        n=st.integers(1, 8),
        q=st.sampled_from([0.2, 0.5, 0.9, 1.0, 1.1]),
        data=st.data(),
    )
    def test_exactly_symmetric(self, n, q, data):
        spec = QGaussianSpec(n, q)
        eta = data.draw(arrays(float, n, elements=st.floats(-1.0, 1.0)))
        h = h_matrix(spec, pert(spec, eta))
        assert np.array_equal(h, h.T)


class TestIncrements:
    def test_gradient_compact(self):
        spec = QGaussianSpec(1, 0.5, beta=0.1)
        np.testing.assert_allclose(grad_increment(spec, pert(spec, [1.0]), 2.0, 1.0), [5.0], rtol=1e-14)

    def test_gradient_gaussian(self):
        spec = QGaussianSpec(1, 1.0, beta=0.1)
        np.testing.assert_allclose(grad_increment(spec, pert(spec, [1.0]), 2.0, 1.0), [5.0], rtol=1e-14)

    def test_gradient_equal_costs(self, rng):
        spec = QGaussianSpec(3, 1.05, beta=0.3)
        eta, r = sample_batch(spec, rng, 1)
        np.testing.assert_array_equal(grad_increment(spec, Perturbation(eta[0], r[0]), 4.2, 4.2), 0.0)

    def test_hessian_compact(self):
        spec = QGaussianSpec(1, 0.5, beta=0.1)
        np.testing.assert_allclose(hess_increment(spec, pert(spec, [1.0]), 2.0, 1.0), [[-75.0]], rtol=1e-12)

    def test_hessian_zero_costs(self):
        spec = QGaussianSpec(2, 0.5, beta=0.1)
        np.testing.assert_array_equal(hess_increment(spec, pert(spec, [0.3, -0.2]), 0.0, 0.0), 0.0)

    def test_hessian_gaussian(self):
        spec = QGaussianSpec(2, 1.0, beta=1.0)
        np.testing.assert_array_equal(
            hess_increment(spec, pert(spec, [1.0, 2.0]), 1.0, 1.0), [[0.0, 2.0], [2.0, 3.0]]
        )

    def test_gradient_only_paths_allow_nonpositive_q(self):
        spec = QGaussianSpec(2, -1.0, beta=0.5)
        p = pert(spec, [0.5, 0.5])
        # K = 2 + 2 + 2 = 6, rho = 1 - 2 * 0.5 / 6
        np.testing.assert_allclose(gradient_weight(spec, p), np.array([0.5, 0.5]) / (0.5 * 6 * (1 - 1 / 6)))


class TestSmoothedValue:
    def test_constant(self, rng):
        assert smoothed_value(lambda x: 3.5, QGaussianSpec(3, 0.4, 0.7), np.zeros(3), 1000, rng) == 3.5

    def test_norm_squared_gaussian(self):
        spec = QGaussianSpec(2, 1.0, beta=0.5)
        f = lambda x: np.sum(x * x, axis=1)
        est = smoothed_value(f, spec, np.zeros(2), 10**6, np.random.default_rng(5), vectorized=True)
        # each sample equals beta^2 |eta|^2; its SD is beta^2 * sqrt(2N)
        assert abs(est - 0.5) < 5 * 0.25 * 2 / 1e3

    def test_linear(self, rng):
        c = np.array([1.5, -2.0, 0.25])
        f = lambda x: x @ c + 1.0
        theta = np.array([0.2, 0.1, -0.4])
        est = smoothed_value(f, QGaussianSpec(3, 1.1, 0.5), theta, 1000, rng, vectorized=True)
        assert est == pytest.approx(f(theta), abs=1e-12)


class TestBatchEstimates:
    def test_constant_objective(self):
        # q > 2/3 keeps the rho^-2 terms square-integrable, so 5 SE is meaningful
        spec = QGaussianSpec(3, 1.05, beta=0.1)
        c = 2.0
        g, h, _, terms = batch_estimates(
            lambda x: np.full(len(x), c), spec, np.zeros(3), 10**5,
            np.random.default_rng(1), vectorized=True, return_terms=True,
        )
        np.testing.assert_array_equal(g, 0.0)
        eta, r = sample_batch(spec, np.random.default_rng(1), 10**5)
        expect = c * 2 * h_matrix_batch(spec, eta, r).sum(axis=0) / (10**5 * 0.01 * spec.rho_scale)
        np.testing.assert_allclose(h, expect, rtol=1e-10, atol=1e-10)
        for i in range(3):
            for j in range(3):
                m, se = mean_and_se(terms[:, i, j])
                assert abs(m) < 5 * se

    def test_scalar_and_vectorized_paths_agree(self):
        spec = QGaussianSpec(2, 0.8, beta=0.2)
        f = lambda x: float(np.sum(np.sin(x)))
        fv = lambda x: np.sum(np.sin(x), axis=1)
        theta = np.array([0.3, -0.1])
        a = batch_estimates(f, spec, theta, 500, np.random.default_rng(4))
        b = batch_estimates(fv, spec, theta, 500, np.random.default_rng(4), vectorized=True)
        np.testing.assert_allclose(a[0], b[0], rtol=1e-12)
        np.testing.assert_allclose(a[1], b[1], rtol=1e-12)

    def test_einsum_path_matches_terms(self):
        spec = QGaussianSpec(3, 1.05, beta=0.1)
        f = lambda x: np.sum(x**2, axis=1) + x[:, 0] * x[:, 2]
        theta = np.array([0.1, 0.2, 0.3])
        g1, h1 = batch_estimates(f, spec, theta, 2000, np.random.default_rng(3), vectorized=True)
        g2, h2, *_ = batch_estimates(f, spec, theta, 2000, np.random.default_rng(3), vectorized=True, return_terms=True)
        np.testing.assert_allclose(g1, g2, rtol=1e-12)
        np.testing.assert_allclose(h1, h2, rtol=1e-10, atol=1e-9)

    def test_helpers(self):
        spec = QGaussianSpec(2, 1.0, beta=0.1)
        f = lambda x: np.sum(x**2, axis=1)
        theta = np.array([0.4, -0.2])
        g = batch_gradient(f, spec, theta, 100, np.random.default_rng(0), vectorized=True)
        h = batch_hessian(f, spec, theta, 100, np.random.default_rng(0), vectorized=True)
        g2, h2 = batch_estimates(f, spec, theta, 100, np.random.default_rng(0), vectorized=True)
        np.testing.assert_array_equal(g, g2)
        np.testing.assert_array_equal(h, h2)


def random_quadratic(seed, n=3):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    A = 0.5 * (a + a.T)
    return A, rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)


@pytest.mark.parametrize("q", [0.5, 1.0, 1.05])
def test_quadratic_unbiased(q):
    A, center, theta = random_quadratic(21)
    f = lambda x: np.einsum("li,ij,lj->l", x - center, A, x - center)
    spec = QGaussianSpec(3, q, beta=0.1)
    _, _, g, h = batch_estimates(f, spec, theta, 10**6, np.random.default_rng(8), vectorized=True, return_terms=True)
    grad, hess = 2 * A @ (theta - center), 2 * A
    for i in range(3):
        m, se = mean_and_se(g[:, i])
        assert abs(m - grad[i]) < 5 * se
        for j in range(3):
            m, se = mean_and_se(h[:, i, j])
            assert abs(m - hess[i, j]) < 5 * se


@pytest.mark.parametrize("n,q", [(3, 0.5), (3, 1.0), (3, 1.05), (20, 0.5), (20, 1.0), (20, 1.05)])
def test_h_matrix_mean_zero(n, q):
    spec = QGaussianSpec(n, q)
    eta, r = sample_batch(spec, np.random.default_rng([n, int(100 * q)]), 10**6)
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    if n > 3:
        idx = [(0, 0), (0, 1), (5, 5), (7, 19), (19, 19)]
    for i, j in idx:
        # h_ij from the formula, without materialising 10^6 x N x N
        if spec.is_gaussian:
            hij = eta[:, i] * eta[:, j] - (i == j)
        else:
            hij = (2 * q / spec.rho_scale) * eta[:, i] * eta[:, j] / r**2 - (i == j) / r
        m, se = mean_and_se(hij)
        assert abs(m) < 5 * se, (i, j, m, se)


def test_h_matrix_entry_formula_matches_function():
    spec = QGaussianSpec(3, 0.5)
    eta, r = sample_batch(spec, np.random.default_rng(0), 10)
    full = h_matrix_batch(spec, eta, r)
    manual = (2 * 0.5 / spec.rho_scale) * eta[:, 0] * eta[:, 1] / r**2
    np.testing.assert_allclose(full[:, 0, 1], manual, rtol=1e-14)


@pytest.mark.parametrize("q", [0.5, 1.05])
def test_quadratic_form_identity(q):
    A, _, _ = random_quadratic(5)
    spec = QGaussianSpec(3, q)
    eta, r = sample_batch(spec, np.random.default_rng(44), 10**6)
    H = h_matrix_batch(spec, eta, r)
    quad = np.einsum("li,ij,lj->l", eta, A, eta)
    for i in range(3):
        for j in range(3):
            m, se = mean_and_se(H[:, i, j] * quad)
            assert abs(m - spec.rho_scale * A[i, j]) < 5 * se


@pytest.mark.parametrize("q", [-1.0, 0.5, 1.0, 1.05])
def test_gradient_direction_identity(q):
    spec = QGaussianSpec(3, q)
    eta, r = sample_batch(spec, np.random.default_rng(9), 10**6)
    for i in range(3):
        for j in range(3):
            m, se = mean_and_se(2 * eta[:, i] * eta[:, j] / (spec.rho_scale * r))
            assert abs(m - (i == j)) < 5 * se


@pytest.mark.parametrize("q", [0.6, 1.0, 1.1])
def test_finite_difference_cross_check(q):
    # smooth non-quadratic objective: smoothing bias is O(beta^2)
    w = np.array([1.0, 2.0, 0.5])
    f = lambda x: np.sum(np.cos(w * x), axis=-1)
    theta = np.array([0.3, -0.7, 1.1])
    h = 1e-5
    fd = np.array([(f(theta + h * e) - f(theta - h * e)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(fd, -w * np.sin(w * theta), rtol=1e-8)
    spec = QGaussianSpec(3, q, beta=1e-2)
    g = batch_gradient(f, spec, theta, 10**6, np.random.default_rng(6), vectorized=True)
    assert np.linalg.norm(g - fd) < 0.05 * np.linalg.norm(fd)
