import math

import numpy as np
import pytest
import sympy as sp

from biharmonic_conformal import models
from biharmonic_conformal.conformal import ConformalChange, bigrad_residual, residual_report
from biharmonic_conformal.fd import observed_order
from biharmonic_conformal.ode import (
    OdeBlowUpError,
    OdeProblem,
    ansatz_ex1,
    ansatz_ex2,
    ansatz_problem,
    ansatz_solution_field,
    conformal_factor_from_solution,
    flat_problem,
    integrate,
    load_table,
    ode_rhs,
    radial_problem,
    substitution_residual,
)

from conftest import box_grid


def symbolic_quadratic(family, n):
    """Ansatz polynomial derived from the ODE with sympy, divided by the trivial root."""
    s, a = sp.symbols("s a", positive=True)
    if family == "ex1":
        y = sp.Function("y")(s)
        sigma, c = 0, 0
        expr = sp.diff(y, s, 2) - sigma * sp.diff(y, s) + (4 - n) * y * sp.diff(y, s) + (2 * c) * y + (2 - n) * y**3
        # y' = a y^2 implies y'' = 2 a^2 y^3; divide by y^3
        Y = sp.symbols("Y", positive=True)
        expr = expr.subs(sp.Derivative(y, (s, 2)), 2 * a**2 * y**3).subs(sp.Derivative(y, s), a * y**2).subs(y, Y)
        return sp.Poly(sp.expand(expr / Y**3), a)
    y = a / s
    sigma = -(n - 1) / s
    expr = sp.diff(y, s, 2) - sigma * sp.diff(y, s) + (4 - n) * y * sp.diff(y, s) + (0 - sp.diff(sigma, s)) * y + 2 * sigma * y**2 + (2 - n) * y**3
    return sp.Poly(sp.expand(sp.simplify(expr * s**3 / a)), a)


class TestAnsatzRoots:
    @pytest.mark.parametrize("n", [1, 3, 4, 5, 6, 7, 10])
    @pytest.mark.parametrize("family", ["ex1", "ex2"])
    def test_coefficients_match_symbolic_derivation(self, family, n):
        poly = symbolic_quadratic(family, n)
        coeffs = [float(c) for c in poly.all_coeffs()]
        coeffs = [0.0] * (3 - len(coeffs)) + coeffs
        ar = (ansatz_ex1 if family == "ex1" else ansatz_ex2)(n)
        assert np.allclose(ar.coefficients, coeffs)

    @pytest.mark.parametrize("n", [3, 5, 6, 7, 10])
    def test_ex1_roots(self, n):
        roots = ansatz_ex1(n).roots
        assert len(roots) == 2
        assert roots[0] == pytest.approx(-1.0, abs=1e-12)
        assert roots[1] == pytest.approx((n - 2) / 2, abs=1e-12)

    def test_ex2_discriminant_sign(self):
        positive = [n for n in range(1, 13) if ansatz_ex2(n).discriminant > 0]
        assert positive == [1, 2, 3, 4]
        for n in range(1, 13):
            assert ansatz_ex2(n).discriminant == -7 * n * n + 36 * n - 28

    def test_ex2_n1(self):
        assert ansatz_ex2(1).roots == pytest.approx((1.0, 2.0), abs=1e-12)

    def test_ex2_n2_degenerate(self):
        ar = ansatz_ex2(2)
        assert ar.degenerate and ar.roots == ()

    def test_ex2_n3_roots_by_substitution(self):
        roots = ansatz_ex2(3).roots
        expected = sorted([(-5 - math.sqrt(17)) / 2, (-5 + math.sqrt(17)) / 2])
        assert roots == pytest.approx(expected, abs=1e-12)
        s = np.linspace(0.5, 3.0, 11)
        for a in roots:
            assert np.max(np.abs(substitution_residual(a, "ex2", 3, s))) <= 1e-12
            # the opposite signs do not solve the equation
            assert np.max(np.abs(substitution_residual(-a, "ex2", 3, s))) > 1.0

    def test_ex2_no_real_roots_n6(self):
        ar = ansatz_ex2(6)
        assert ar.discriminant == -64 and ar.roots == ()

    @pytest.mark.parametrize("n", [3, 5, 8])
    def test_ex1_substitution(self, n):
        for a in ansatz_ex1(n).roots:
            assert np.max(np.abs(substitution_residual(a, "ex1", n, np.linspace(1, 2, 7)))) <= 1e-12

    def test_trivial_root_rejected(self):
        with pytest.raises(ValueError):
            ansatz_solution_field(0.0, "ex1", 1.0)


class TestIntegrator:
    def test_ex1_endpoint(self):
        sol = integrate(flat_problem(3), 1e-3)
        assert sol.y[-1] == pytest.approx(0.5, abs=1e-6)
        assert sol.rho[-1] == pytest.approx(math.log(2.0), abs=1e-6)

    def test_rk4_order(self):
        steps = [0.1, 0.05, 0.025]
        errs = [abs(integrate(flat_problem(3), h).y[-1] - 0.5) for h in steps]
        assert observed_order(steps, errs) == pytest.approx(4.0, abs=0.5)

    def test_rho_quadrature_order(self):
        # end-corrected trapezoid: fourth order in the step
        steps = [0.1, 0.05]
        errs = [abs(integrate(flat_problem(3), h).rho[-1] - math.log(2.0)) for h in steps]
        assert observed_order(steps, errs) >= 3.5

    def test_radial_ansatz_tracks_closed_form(self):
        a = ansatz_ex2(3).roots[1]
        sol = integrate(ansatz_problem(a, "ex2", 3, (1.0, 2.0)), 1e-3)
        y, rho = ansatz_solution_field(a, "ex2", sol.s)
        assert np.max(np.abs(sol.y - y)) <= 1e-10
        assert np.max(np.abs(sol.rho - rho)) <= 1e-10

    def test_blow_up(self):
        # y' = y^2-type growth with large data
        p = flat_problem(3, (1.0, 10.0), (50.0, 5000.0))
        with pytest.raises(OdeBlowUpError):
            integrate(p, 1e-3)

    def test_invalid_problem(self):
        with np.errstate(divide="ignore"), pytest.raises(ValueError):
            OdeProblem(3, 0.0, lambda s: 1 / (s - 1.5), lambda s: s, (1.0, 2.0), (1.0, 0.0))
        with pytest.raises(ValueError):
            flat_problem(3, (2.0, 1.0))

    def test_sigma_consistency(self):
        assert radial_problem(4).consistency_defect() <= 1e-8

    def test_rhs_range_guard(self):
        with pytest.raises(ValueError):
            ode_rhs(flat_problem(3), 5.0, 1.0, 0.0)

    def test_grid_residual_small(self):
        assert integrate(flat_problem(3), 1e-3).max_residual <= 1e-5


class TestTabulatedProfile:
    def test_profile_derivatives(self):
        sol = integrate(flat_problem(3), 1e-2)
        s = np.linspace(1.0, 2.0, 13)
        rho, y, yp, ypp = sol.profile()(s)
        assert np.allclose(rho, np.log(s), atol=1e-7)
        assert np.allclose(y, 1 / s, atol=1e-7)
        assert np.allclose(yp, -1 / s**2, atol=1e-6)
        assert np.allclose(ypp, 2 / s**3, atol=1e-4)

    def test_profile_range(self):
        with pytest.raises(ValueError):
            integrate(flat_problem(3), 1e-2).profile()(2.5)

    def test_table_round_trip(self, tmp_path):
        sol = integrate(flat_problem(3), 1e-2)
        path = tmp_path / "table.csv"
        np.savetxt(path, sol.table(), delimiter=",", header="s,y,yp,ypp,rho", comments="", fmt="%.16e")
        s = np.linspace(1.0, 2.0, 7)
        assert np.allclose(load_table(path)(s), sol.profile()(s), atol=1e-14)

    def test_bad_table(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("s,y\n1,2\n2,3\n")
        with pytest.raises(ValueError):
            load_table(path)


class TestEndToEnd:
    @pytest.mark.parametrize("root", [0, 1])
    def test_radial_pipeline(self, root):
        a = ansatz_ex2(3).roots[root]
        sol = integrate(ansatz_problem(a, "ex2", 3, (1.0, 2.0)), 1e-3)
        rho = conformal_factor_from_solution(sol, models.radius())
        pts = box_grid(-2.0, 2.0, 9, 3)
        r = np.linalg.norm(pts, axis=-1)
        pts = pts[(r >= 1.0) & (r <= 2.0)]
        rep = residual_report(bigrad_residual, ConformalChange(models.euclidean(3), rho), pts)
        assert rep.max_norm <= 1e-4

    def test_flat_pipeline(self):
        # ex1 root a = -1 is rho = ln x1 on the half space
        sol = integrate(ansatz_problem(-1.0, "ex1", 4, (1.0, 2.0)), 1e-3)
        rho = conformal_factor_from_solution(sol, models.linear([1.0, 0.0, 0.0, 0.0]))
        x = np.column_stack([np.linspace(1.0, 2.0, 6), np.zeros((6, 3))])
        cc = ConformalChange(models.euclidean(4), rho)
        assert np.max(np.abs(bigrad_residual(cc, x))) <= 1e-6
