import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biharmonic_conformal import models
from biharmonic_conformal.conformal import ConformalChange, bigrad_residual
from biharmonic_conformal.fd import FdConfig
from biharmonic_conformal.forms import (
    bidif_residual,
    codifferential,
    consecdif_residual,
    exactness_residual,
    exterior_derivative,
    laplacian_exact_form,
    wedge,
    weitzenboeck_laplacian,
)
from biharmonic_conformal.geometry import laplacian_scalar, local_jet, metric

FINE = FdConfig(1e-2, richardson=True)
# curved charts differentiate Christoffel symbols numerically; plain steps leave an O(h^2) gap
SHARP = FdConfig(1e-3, richardson=True)


def dform(M, f):
    return lambda y: local_jet(M, f, y, order=1).d1


class TestExteriorCalculus:
    def test_wedge_antisymmetric(self, rng):
        a, b = rng.normal(size=(2, 4))
        w = wedge(b, a)
        assert np.allclose(w, -w.T)
        assert w[0, 1] == pytest.approx(b[0] * a[1] - b[1] * a[0])

    def test_d_of_exact_form_vanishes(self, rng):
        M = models.euclidean(3)
        f = models.random_cubic(3, rng)
        assert np.max(np.abs(exterior_derivative(M, dform(M, f), rng.normal(size=(2, 3))))) <= 1e-8

    def test_d_of_x1_dx2(self):
        M = models.euclidean(2)
        w = exterior_derivative(M, lambda y: np.stack([np.zeros_like(y[..., 0]), y[..., 0]], axis=-1), np.zeros(2))
        assert np.allclose(w, [[0.0, 1.0], [-1.0, 0.0]])

    def test_codifferential_is_laplacian(self, rng):
        M = models.sphere_stereo(3)
        f = models.random_cubic(3, rng)
        x = rng.normal(size=(3, 3)) * 0.5
        assert np.allclose(codifferential(M, dform(M, f), x), laplacian_scalar(M, f, x), atol=1e-7)

    def test_weitzenboeck_equals_d_codifferential(self, rng):
        M = models.sphere_stereo(3)
        f = models.random_cubic(3, rng, 0.3)
        x = rng.normal(size=3) * 0.4
        a = weitzenboeck_laplacian(M, dform(M, f), x, FINE)
        b = laplacian_exact_form(M, dform(M, f), x, FINE)
        assert np.allclose(a, b, atol=1e-6)

    def test_exactness(self, rng):
        cc = ConformalChange(models.sphere_stereo(3), models.random_cubic(3, rng, 0.3))
        assert np.max(np.abs(exactness_residual(cc, rng.normal(size=(2, 3)) * 0.4))) <= 1e-5


class TestResidualForms:
    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from([3, 4, 5, 6, 7]), st.integers(0, 2**31 - 1), st.booleans())
    def test_bidif_is_flat_of_bigrad(self, n, seed, curved):
        rng = np.random.default_rng(seed)
        M = models.sphere_stereo(n) if curved else models.euclidean(n)
        cc = ConformalChange(M, models.random_cubic(n, rng, 0.4))
        x = rng.uniform(-0.5, 0.5, size=(3, n))
        flat_big = np.einsum("...ij,...j->...i", metric(M, x), bigrad_residual(cc, x, SHARP))
        assert np.max(np.abs(flat_big - bidif_residual(cc, x, SHARP))) <= 1e-8 * (1.0 + np.abs(flat_big).max())

    @pytest.mark.parametrize("n", [3, 5])
    def test_consequence_vanishes_for_ln_x1(self, n, rng):
        cc = ConformalChange(models.half_space(n), models.ln_x1(n))
        x = rng.uniform(0.5, 2.0, size=(4, n))
        assert np.max(np.abs(bidif_residual(cc, x))) <= 1e-12
        assert np.max(np.abs(consecdif_residual(cc, x))) <= 1e-10

    def test_consequence_vanishes_for_radial_ansatz(self, rng):
        a = (-5.0 + np.sqrt(17.0)) / 2.0
        cc = ConformalChange(models.euclidean(3), models.radial_log(a))
        x = rng.uniform(0.6, 1.2, size=(4, 3))
        assert np.max(np.abs(consecdif_residual(cc, x))) <= 1e-10

    def test_consequence_antisymmetric(self, rng):
        cc = ConformalChange(models.sphere_stereo(3), models.random_cubic(3, rng, 0.3))
        w = consecdif_residual(cc, rng.normal(size=(2, 3)) * 0.4)
        assert np.allclose(w, -np.swapaxes(w, -1, -2))

    @pytest.mark.parametrize("curved", [False, True])
    def test_consequence_is_derived_from_bidif(self, curved, rng):
        # for every rho: consecdif = d(beta)/2 + beta ^ a with beta the 1-form residual
        n = 3
        M = models.sphere_stereo(n) if curved else models.euclidean(n)
        cc = ConformalChange(M, models.random_cubic(n, rng, 0.3))
        x = rng.uniform(-0.4, 0.4, size=(2, n))
        beta = bidif_residual(cc, x)
        d_beta = exterior_derivative(M, lambda y: bidif_residual(cc, y), x, FINE)
        a = local_jet(M, cc.rho, x, order=1).d1
        expected = 0.5 * d_beta + wedge(beta, a)
        assert np.allclose(consecdif_residual(cc, x, FdConfig(1e-3, richardson=True)), expected, atol=1e-6)
