"""The reparametrization ODE for the conformal exponent and its ansatz families.

For an arclength function ``s`` with ``Lap s = sigma(s)`` on an Einstein
manifold with constant ``c``, ``rho = R(s)`` makes the identity biharmonic
when ``y = R'`` solves

    y'' - sigma y' + (4-n) y y' + (2c - sigma') y + 2 sigma y^2 + (2-n) y^3 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import BPoly

from .geometry import ScalarField
from .models import compose

BLOWUP = 1e6


class OdeBlowUpError(RuntimeError):
    """The solution left the blow-up corridor or became non-finite."""


@dataclass(frozen=True)
class OdeProblem:
    n: int
    c: float
    sigma: Callable
    sigma_prime: Callable
    s_range: Tuple[float, float]
    init: Tuple[float, float]

    def __post_init__(self):
        s0, s1 = self.s_range
        if not s1 > s0:
            raise ValueError("s_range must be increasing")
        probe = np.linspace(s0, s1, 9)
        sig = np.asarray(self.sigma(probe), dtype=float)
        sigp = np.asarray(self.sigma_prime(probe), dtype=float)
        if not (np.all(np.isfinite(sig)) and np.all(np.isfinite(sigp))):
            raise ValueError("sigma and sigma' must be finite on the integration range")

    def consistency_defect(self, step: float = 1e-5) -> float:
        """Max gap between ``sigma'`` and a central difference of ``sigma``."""
        s0, s1 = self.s_range
        probe = np.linspace(s0 + step, s1 - step, 17)
        fd = (np.asarray(self.sigma(probe + step)) - np.asarray(self.sigma(probe - step))) / (2 * step)
        return float(np.max(np.abs(fd - np.asarray(self.sigma_prime(probe)))))


def flat_problem(n: int, s_range=(1.0, 2.0), init=(1.0, -1.0)) -> OdeProblem:
    """Linear arclength on flat space: ``sigma = 0``."""
    zero = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return OdeProblem(n, 0.0, zero, zero, tuple(s_range), tuple(init))


def radial_problem(n: int, s_range=(1.0, 2.0), init=(1.0, -1.0)) -> OdeProblem:
    """Distance from the origin in R^n: ``sigma = -(n-1)/s``."""
    return OdeProblem(
        n,
        0.0,
        lambda s: -(n - 1.0) / np.asarray(s, dtype=float),
        lambda s: (n - 1.0) / np.asarray(s, dtype=float) ** 2,
        tuple(s_range),
        tuple(init),
    )


def ode_rhs(p: OdeProblem, s, y, yp, check_range: bool = True):
    s = np.asarray(s, dtype=float)
    if check_range:
        s0, s1 = p.s_range
        slack = 1e-12 * max(1.0, abs(s0), abs(s1))
        if np.any(s < s0 - slack) or np.any(s > s1 + slack):
            raise ValueError(f"s outside the problem range {p.s_range}")
    sig = p.sigma(s)
    return sig * yp - (4 - p.n) * y * yp - (2 * p.c - p.sigma_prime(s)) * y - 2 * sig * y**2 - (2 - p.n) * y**3


@dataclass(frozen=True)
class OdeSolution:
    problem: OdeProblem
    s: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    rho: np.ndarray
    max_residual: float

    @property
    def ypp(self) -> np.ndarray:
        return ode_rhs(self.problem, self.s, self.y, self.yp)

    def profile(self) -> Callable:
        """``s -> (rho, rho', rho'', rho''')`` by quintic Hermite interpolation of the state."""
        return hermite_profile(self.s, self.rho, self.y, self.yp, self.ypp)

    def at(self, s):
        rho, y, yp, _ = self.profile()(s)
        return rho, y, yp

    def table(self) -> np.ndarray:
        """Columns ``s, y, y', y'', rho``."""
        return np.column_stack([self.s, self.y, self.yp, self.ypp, self.rho])


TABLE_COLUMNS = ("s", "y", "yp", "ypp", "rho")


def hermite_profile(s, rho, y, yp, ypp) -> Callable:
    """C^2 piecewise-quintic profile through tabulated ``rho`` and ``y = rho'``.

    ``rho`` is matched with ``(rho, y, y')`` and ``y`` with ``(y, y', y'')`` at
    every node; the derivatives of ``rho`` are read off the interpolant of ``y``.
    """
    s = np.asarray(s, dtype=float)
    rho_poly = BPoly.from_derivatives(s, np.column_stack([rho, y, yp]), extrapolate=False)
    y_poly = BPoly.from_derivatives(s, np.column_stack([y, yp, ypp]), extrapolate=False)
    dy, ddy = y_poly.derivative(1), y_poly.derivative(2)
    lo, hi = s[0], s[-1]

    def prof(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < lo) or np.any(t > hi):
            raise ValueError(f"s outside the tabulated range [{lo}, {hi}]")
        return rho_poly(t), y_poly(t), dy(t), ddy(t)

    return prof


def load_table(path) -> Callable:
    """Profile from a CSV with header ``s,y,yp,ypp,rho`` as written by :meth:`OdeSolution.table`."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    missing = [c for c in TABLE_COLUMNS if c not in (data.dtype.names or ())]
    if missing:
        raise ValueError(f"table {path} lacks columns {missing}")
    if data.size < 2 or np.any(np.diff(data["s"]) <= 0):
        raise ValueError(f"table {path} needs at least two strictly increasing s values")
    return hermite_profile(data["s"], data["rho"], data["y"], data["yp"], data["ypp"])


def _rk4_step(p, s, state, h):
    def f(s_, st):
        return np.array([st[1], ode_rhs(p, s_, st[0], st[1], check_range=False)])

    k1 = f(s, state)
    k2 = f(s + h / 2, state + h / 2 * k1)
    k3 = f(s + h / 2, state + h / 2 * k2)
    k4 = f(s + h, state + h * k3)
    return state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(p: OdeProblem, step: float) -> OdeSolution:
    """Classical RK4 for ``(y, y')`` on a uniform grid from ``s_range[0]``.

    ``rho`` is accumulated with the end-corrected trapezoid rule
    ``h/2 (y_k + y_{k+1}) + h^2/12 (y'_k - y'_{k+1})`` and normalized to 0 at
    the start.  ``max_residual`` is the grid residual of the equation with
    ``y''`` replaced by a second difference of ``y``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    s0, s1 = p.s_range
    count = max(1, int(round((s1 - s0) / step)))
    s = np.linspace(s0, s1, count + 1)
    states = np.empty((count + 1, 2))
    states[0] = p.init
    for k in range(count):
        states[k + 1] = _rk4_step(p, s[k], states[k], s[k + 1] - s[k])
        if not np.all(np.isfinite(states[k + 1])) or abs(states[k + 1, 0]) > BLOWUP:
            raise OdeBlowUpError(f"solution blew up near s = {s[k + 1]:.6g}")
    y, yp = states[:, 0], states[:, 1]
    h = np.diff(s)
    pieces = h / 2 * (y[:-1] + y[1:]) + h**2 / 12 * (yp[:-1] - yp[1:])
    rho = np.concatenate([[0.0], np.cumsum(pieces)])
    if count >= 2:
        hh = s[1] - s[0]
        ypp_fd = (y[2:] - 2 * y[1:-1] + y[:-2]) / hh**2
        res = ypp_fd - ode_rhs(p, s[1:-1], y[1:-1], yp[1:-1])
        max_res = float(np.max(np.abs(res)))
    else:
        max_res = 0.0
    return OdeSolution(p, s, y, yp, rho, max_res)


# -- ansatz families ----------------------------------------------------------


@dataclass(frozen=True)
class AnsatzRoots:
    family: str
    n: int
    coefficients: Tuple[float, float, float]
    discriminant: float
    roots: Tuple[float, ...]
    degenerate: bool = False

    def quadratic(self, a):
        A, B, C = self.coefficients
        return A * a**2 + B * a + C

    def summary(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "coefficients": list(self.coefficients),
            "discriminant": self.discriminant,
            "roots": list(self.roots),
            "degenerate": self.degenerate,
        }


def _solve_quadratic(A: float, B: float, C: float) -> Tuple[float, ...]:
    disc = B * B - 4 * A * C
    if disc < 0:
        return ()
    if disc == 0:
        return (-B / (2 * A),)
    q = -0.5 * (B + np.copysign(np.sqrt(disc), B))
    r = sorted({q / A, C / q} if q != 0 else {np.sqrt(disc) / (2 * A), -np.sqrt(disc) / (2 * A)})
    return tuple(float(v) for v in r)


def ansatz_ex1(n: int) -> AnsatzRoots:
    """``y' = a y^2`` on flat space with ``sigma = 0``: ``2a^2 + (4-n)a + (2-n) = 0``."""
    A, B, C = 2.0, 4.0 - n, 2.0 - n
    return AnsatzRoots("ex1", n, (A, B, C), B * B - 4 * A * C, _solve_quadratic(A, B, C))


def ansatz_ex2(n: int) -> AnsatzRoots:
    """``y = a/s`` with ``sigma = -(n-1)/s``: ``(2-n)a^2 - (n+2)a + (4-2n) = 0``.

    For ``n = 2`` the equation is ``-4a = 0``; its only root is the trivial
    ``y = 0``, so no roots are reported and the result is flagged degenerate.
    """
    A, B, C = 2.0 - n, -(n + 2.0), 4.0 - 2.0 * n
    disc = B * B - 4 * A * C
    if A == 0:
        return AnsatzRoots("ex2", n, (A, B, C), disc, (), degenerate=True)
    return AnsatzRoots("ex2", n, (A, B, C), disc, _solve_quadratic(A, B, C))


def ansatz_solution_field(a: float, family: str, s):
    """Closed-form ``(y, rho)`` of an ansatz root.

    ``ex1``: ``y = -1/(a s)``, ``rho = -ln(s)/a`` (``a = -1`` gives ``ln s``).
    ``ex2``: ``y = a/s``, ``rho = a ln s``.
    """
    if a == 0:
        raise ValueError("a = 0 is the trivial solution y = 0")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("s must be positive")
    if family == "ex1":
        return -1.0 / (a * s), -np.log(s) / a
    if family == "ex2":
        return a / s, a * np.log(s)
    raise ValueError(f"unknown family {family!r}")


def ansatz_problem(a: float, family: str, n: int, s_range=(1.0, 2.0)) -> OdeProblem:
    """Initial value problem whose solution is the closed-form ansatz."""
    s0 = s_range[0]
    y0, _ = ansatz_solution_field(a, family, s0)
    yp0 = a * y0**2 if family == "ex1" else -a / s0**2
    make = flat_problem if family == "ex1" else radial_problem
    return make(n, s_range, (float(y0), float(yp0)))


def substitution_residual(a: float, family: str, n: int, s) -> np.ndarray:
    """Residual of the ODE at the closed-form ansatz solution."""
    s = np.asarray(s, dtype=float)
    y, _ = ansatz_solution_field(a, family, s)
    if family == "ex1":
        yp = a * y**2
        ypp = 2 * a * y * yp
        p = flat_problem(n, (float(s.min()), float(s.max()) + 1.0))
    else:
        yp = -a / s**2
        ypp = 2 * a / s**3
        p = radial_problem(n, (float(s.min()), float(s.max()) + 1.0))
    return ypp - ode_rhs(p, s, y, yp, check_range=False)


def conformal_factor_from_solution(sol: OdeSolution, s_field: ScalarField, name: Optional[str] = None) -> ScalarField:
    """``rho(x) = R(s(x))`` with ``R`` the tabulated solution.

    Derivatives are analytic (chain rule with interpolated ``y, y', y''``) when
    ``s_field`` supplies analytic derivatives up to order three.
    """
    return compose(sol.profile(), s_field, name=name or f"R({s_field.name})")
