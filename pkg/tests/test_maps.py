import numpy as np
import pytest

from biharmonic_conformal import models
from biharmonic_conformal.fd import FdConfig
from biharmonic_conformal.maps import (
    SmoothMap,
    bitension_of_map,
    identity_map,
    projection_map,
    pullback_metric_defect,
    tension_of_map,
)

FD = FdConfig(1e-3, richardson=True)


class TestTension:
    def test_identity_is_harmonic(self, rng):
        M = models.sphere_stereo(3)
        x = rng.normal(size=(3, 3)) * 0.5
        assert np.max(np.abs(tension_of_map(M, M, identity_map(3), x))) <= 1e-8
        assert np.max(np.abs(bitension_of_map(M, M, identity_map(3), x, FD))) <= 1e-6

    def test_quadratic_map(self):
        # phi(x) = (x1^2, x2) between flat planes has tau = (2, 0)
        phi = SmoothMap(lambda x: np.stack([x[..., 0] ** 2, x[..., 1]], axis=-1))
        E = models.euclidean(2)
        tau = tension_of_map(E, E, phi, np.array([0.3, 0.4]), FD)
        assert np.allclose(tau, [2.0, 0.0], atol=1e-7)

    def test_quartic_bitension(self):
        # phi(x) = x1^4 into R: tau = 12 x1^2 and tau2 = trace nabla^2 tau = 24
        phi = SmoothMap(lambda x: x[..., :1] ** 4)
        tau2 = bitension_of_map(models.euclidean(2), models.euclidean(1), phi, np.array([0.5, 0.1]), FD)
        assert tau2 == pytest.approx([24.0], abs=1e-4)

    def test_projection_is_harmonic_riemannian_submersion(self, rng):
        x = rng.normal(size=(4, 5))
        E5, E3 = models.euclidean(5), models.euclidean(3)
        pi = projection_map(5, 3)
        assert np.max(np.abs(tension_of_map(E5, E3, pi, x))) == 0.0
        horiz = np.broadcast_to(np.eye(3, 5), (4, 3, 5))
        assert np.max(np.abs(pullback_metric_defect(E5, E3, pi, x, horiz))) == 0.0
