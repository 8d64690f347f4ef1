import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biharmonic_conformal import models
from biharmonic_conformal.fd import DomainError, FdConfig, SingularMetricError
from biharmonic_conformal.geometry import (
    ChartManifold,
    ScalarField,
    christoffel,
    covariant_derivative_vec,
    flat,
    grad,
    hessian,
    inner,
    invert_metric,
    laplacian_scalar,
    local_jet,
    metric,
    orthonormal_frame,
    ricci_operator,
    riemann,
    riemann_and_ricci,
    rough_laplacian_vec,
    sharp,
)


def hyperbolic_half_space(n):
    """Poincare upper half space ``|dx|^2 / x_n^2`` with Ricci ``-(n-1) Id``."""
    e = np.zeros(n)
    e[-1] = 1.0
    u = models.log_linear(e, scale=-1.0)
    return models.conformally_flat(n, u, domain=lambda x: np.asarray(x)[..., -1] > 0, name="H^n")


def generic_chart(n):
    """A non-conformally-flat metric with only FD Christoffels."""

    def metric_at(x):
        x = np.asarray(x, dtype=float)
        A = np.zeros(x.shape[:-1] + (n, n))
        A[...] = np.eye(n)
        A[..., 0, 1] = A[..., 1, 0] = 0.3 * np.sin(x[..., 2])
        A[..., 2, 2] = 1.0 + 0.2 * x[..., 0] ** 2
        return A

    return ChartManifold(n, metric_at, domain=lambda x: np.ones(np.shape(x)[:-1], dtype=bool), name="generic")


class TestMetricAlgebra:
    def test_flat_sharp_round_trip(self, rng):
        M = models.sphere_stereo(3)
        x = rng.normal(size=(5, 3))
        X = rng.normal(size=(5, 3))
        assert np.allclose(sharp(M, flat(M, X, x), x), X, atol=1e-13)

    def test_frame_is_orthonormal(self, rng):
        M = generic_chart(3)
        x = rng.normal(size=(4, 3))
        E = orthonormal_frame(M, x)
        G = np.einsum("...ia,...ij,...jb->...ab", E, metric(M, x), E)
        assert np.allclose(G, np.eye(3), atol=1e-13)

    def test_frame_is_gram_schmidt(self):
        # first frame vector is the normalized first coordinate vector
        M = models.sphere_stereo(2)
        x = np.array([0.5, 0.2])
        E = orthonormal_frame(M, x)
        assert E[1, 0] == pytest.approx(0.0)
        assert inner(metric(M, x), E[:, 0], E[:, 0]) == pytest.approx(1.0)

    def test_singular_metric(self):
        with pytest.raises(SingularMetricError):
            invert_metric(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]]))

    def test_point_outside_domain(self):
        with pytest.raises(DomainError):
            metric(models.half_space(2), np.array([-1.0, 1.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            metric(models.euclidean(3), np.zeros(2))


class TestCurvature:
    def test_euclidean_is_flat(self, rng):
        for n in (2, 3, 5):
            x = rng.normal(size=(4, n))
            M = models.euclidean(n)
            assert np.max(np.abs(riemann(M, x))) <= 1e-10
            assert np.max(np.abs(ricci_operator(M, x, use_analytic=False))) <= 1e-10

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_sphere_ricci_from_differences(self, n, rng):
        M = models.sphere_stereo(n)
        x = rng.uniform(-1.5, 1.5, size=(10, n))
        ric = ricci_operator(M, x, FdConfig(1e-4), use_analytic=False)
        assert np.max(np.abs(ric - (n - 1) * np.eye(n))) <= 1e-6

    def test_hyperbolic_ricci(self, rng):
        M = hyperbolic_half_space(3)
        x = np.column_stack([rng.normal(size=(6, 2)), rng.uniform(0.5, 2.0, size=6)])
        ric = ricci_operator(M, x, use_analytic=False)
        assert np.allclose(ric, -2.0 * np.eye(3), atol=1e-6)

    def test_sphere_sectional_curvature_one(self, rng):
        M = models.sphere_stereo(3)
        x = rng.normal(size=3) * 0.7
        R, _ = riemann_and_ricci(M, x)
        E = orthonormal_frame(M, x)
        h = metric(M, x)
        X, Y = E[:, 0], E[:, 2]
        assert inner(h, R(X, Y, Y), X) == pytest.approx(1.0, abs=1e-6)

    def test_riemann_symmetries(self, rng):
        M = generic_chart(3)
        x = rng.normal(size=3)
        riem = riemann(M, x, FdConfig(1e-3, richardson=True))
        low = np.einsum("ml,lkij->mkij", metric(M, x), riem)  # R_{mkij}
        assert np.allclose(riem, -np.swapaxes(riem, -1, -2), atol=1e-12)
        assert np.allclose(low, -np.swapaxes(low, 0, 1), atol=1e-6)
        assert np.allclose(low, np.transpose(low, (2, 3, 0, 1)), atol=1e-6)
        bianchi = riem + np.transpose(riem, (0, 2, 3, 1)) + np.transpose(riem, (0, 3, 1, 2))
        assert np.max(np.abs(bianchi)) <= 1e-6

    def test_christoffel_analytic_matches_fd(self, rng):
        M = models.sphere_stereo(3)
        plain = ChartManifold(3, M.metric_at, M.domain)
        x = rng.normal(size=(3, 3))
        assert np.allclose(christoffel(M, x), christoffel(plain, x, FdConfig(1e-4)), atol=1e-7)


class TestScalarOperators:
    def test_laplacian_of_radius(self, rng):
        # geometer's sign: Lap |x| = -(n-1)/|x|
        for n in (2, 3, 5):
            M = models.euclidean(n)
            x = rng.uniform(0.5, 2.0, size=(4, n))
            r = np.linalg.norm(x, axis=-1)
            assert np.allclose(laplacian_scalar(M, models.radius(), x), -(n - 1) / r, atol=1e-12)

    def test_fd_path_matches_analytic(self, rng):
        M = models.sphere_stereo(3)
        f = models.random_cubic(3, rng)
        x = rng.normal(size=(3, 3)) * 0.5
        cfg = FdConfig(1e-3, richardson=True)
        assert np.allclose(hessian(M, f, x, cfg), hessian(M, f.without_derivatives(), x, cfg), atol=1e-7)

    def test_grad_on_sphere(self, rng):
        M = models.sphere_stereo(2)
        f = models.linear([1.0, -2.0])
        x = rng.normal(size=2)
        lam = 2.0 / (1.0 + x @ x)
        assert np.allclose(grad(M, f, x), np.array([1.0, -2.0]) / lam**2)

    def test_hessian_symmetric(self, rng):
        M = generic_chart(3)
        f = models.random_cubic(3, rng)
        H = hessian(M, f, rng.normal(size=3))
        assert np.allclose(H, H.T, atol=1e-8)


class TestLocalJet:
    def test_unused_orders_are_nan(self):
        J = local_jet(models.euclidean(3), models.radius(), np.ones(3), order=1)
        assert np.all(np.isnan(J.d2)) and np.all(np.isnan(J.d3))
        assert np.isfinite(J.grad_norm2)

    def test_d_laplacian_matches_difference_of_laplacian(self, rng):
        M = models.sphere_stereo(3)
        f = models.random_cubic(3, rng)
        x = rng.normal(size=3) * 0.5
        J = local_jet(M, f, x)
        h = 1e-4
        fd = np.array([
            (laplacian_scalar(M, f, x + h * e) - laplacian_scalar(M, f, x - h * e)) / (2 * h) for e in np.eye(3)
        ])
        assert np.allclose(J.d_laplacian, fd, atol=1e-6)

    def test_trace_nabla2_grad_matches_rough_laplacian(self, rng):
        M = models.sphere_stereo(3)
        f = models.random_cubic(3, rng)
        x = rng.normal(size=3) * 0.5
        J = local_jet(M, f, x)
        field = lambda y: local_jet(M, f, y, order=1).grad
        rough = rough_laplacian_vec(M, field, x, FdConfig(1e-3, richardson=True))
        assert np.allclose(-rough, J.trace_nabla2_grad, atol=1e-6)

    def test_nabla_grad_matches_covariant_derivative(self, rng):
        M = models.sphere_stereo(3)
        f = models.random_cubic(3, rng)
        x = rng.normal(size=3) * 0.5
        J = local_jet(M, f, x)
        field = lambda y: local_jet(M, f, y, order=1).grad
        assert np.allclose(J.nabla_grad_grad, covariant_derivative_vec(M, field, J.grad, x), atol=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_weitzenboeck_for_gradients(self, seed):
        # d(Lap f) = -trace nabla^2 df + df o Ric, on the round sphere
        rng = np.random.default_rng(seed)
        M = models.sphere_stereo(3)
        f = models.random_cubic(3, rng)
        J = local_jet(M, f, rng.normal(size=3) * 0.5)
        rhs = -J.trace_nabla2_alpha + np.einsum("l,lk->k", J.d1, J.ricci)
        assert np.allclose(J.d_laplacian, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))
