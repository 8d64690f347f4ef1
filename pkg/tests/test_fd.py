import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biharmonic_conformal.fd import (
    DomainError,
    FdConfig,
    central_diff,
    check_domain,
    observed_order,
)


class TestFdConfig:
    def test_rejects_bad_steps(self):
        for step in (0.0, -1e-3, np.inf, np.nan):
            with pytest.raises(ValueError):
                FdConfig(step)

    def test_with_step_keeps_richardson(self):
        cfg = FdConfig(1e-3, richardson=True).with_step(1e-2)
        assert cfg.step == 1e-2 and cfg.richardson


class TestCentralDiff:
    def test_index_appended_last(self):
        A = np.arange(6.0).reshape(2, 3)
        x = np.zeros((4, 3))
        d = central_diff(lambda y: np.einsum("ij,...j->...i", A, y), x)
        assert d.shape == (4, 2, 3)
        assert np.allclose(d, A, atol=1e-10)

    def test_nesting_gives_hessian(self):
        f = lambda y: y[..., 0] ** 2 * y[..., 1]
        x = np.array([1.0, 2.0])
        H = central_diff(lambda y: central_diff(f, y, FdConfig(1e-3)), x, FdConfig(1e-3))
        assert np.allclose(H, [[4.0, 2.0], [2.0, 0.0]], atol=1e-6)

    @pytest.mark.parametrize("richardson,order", [(False, 2.0), (True, 4.0)])
    def test_observed_order(self, richardson, order):
        x = np.array([0.3])
        steps = [0.2, 0.1, 0.05]
        errs = [abs(central_diff(np.sin, x, FdConfig(h, richardson))[0, 0] - np.cos(0.3)) for h in steps]
        assert observed_order(steps, errs) == pytest.approx(order, abs=0.1)

    def test_stencil_outside_domain(self):
        dom = lambda y: y[..., 0] > 0
        with pytest.raises(DomainError):
            central_diff(lambda y: np.log(y[..., 0]), np.array([1e-5]), FdConfig(1e-4), dom)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
    def test_quadratic_exact(self, c):
        # central differences are exact for quadratics up to roundoff
        c = np.asarray(c)
        f = lambda y: c[0] * y[..., 0] ** 2 + c[1] * y[..., 0] * y[..., 1] + c[2] * y[..., 1]
        x = np.array([0.4, -0.7])
        d = central_diff(f, x, FdConfig(1e-2))
        assert np.allclose(d, [2 * c[0] * 0.4 + c[1] * -0.7, c[1] * 0.4 + c[2]], atol=1e-11)


class TestCheckDomain:
    def test_accepts_inside(self):
        check_domain(lambda y: y[..., 0] > 0, np.ones((3, 2)))

    def test_reports_offending_point(self):
        pts = np.array([[1.0, 0.0], [-1.0, 5.0]])
        with pytest.raises(DomainError, match="-1"):
            check_domain(lambda y: y[..., 0] > 0, pts)
