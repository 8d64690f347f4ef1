"""Numerical tests for isoparametric functions and arclength reparametrization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .conformal import ConformalChange, evaluate_chunked
from .fd import DEFAULT_FD, FdConfig
from .geometry import ChartManifold, ScalarField, local_jet, norm

EPS_CRIT = 1e-8


class NoRegularPointsError(ValueError):
    """Every sampled point is critical for the function."""


@dataclass
class IsoparamReport:
    points: np.ndarray
    skipped: int
    defect_i: np.ndarray
    defect_ii: np.ndarray
    tol: float
    profile: dict = field(default_factory=dict)
    inconclusive: bool = False

    @property
    def verdict_i(self) -> Optional[bool]:
        return None if self.inconclusive else bool(np.max(self.defect_i, initial=0.0) <= self.tol)

    @property
    def verdict_ii(self) -> Optional[bool]:
        return None if self.inconclusive else bool(np.max(self.defect_ii, initial=0.0) <= self.tol)

    @property
    def isoparametric(self) -> Optional[bool]:
        if self.inconclusive:
            return None
        return self.verdict_i and self.verdict_ii

    def summary(self) -> dict:
        return {
            "regular_points": int(len(self.points)),
            "skipped_critical": int(self.skipped),
            "max_defect_i": float(np.max(self.defect_i, initial=0.0)),
            "max_defect_ii": float(np.max(self.defect_ii, initial=0.0)),
            "tol": self.tol,
            "verdict_i": self.verdict_i,
            "verdict_ii": self.verdict_ii,
            "inconclusive": self.inconclusive,
        }


def _regular_jets(M: ChartManifold, f: ScalarField, points, cfg: FdConfig, eps_crit: float):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    grad_norm = evaluate_chunked(lambda p: np.sqrt(local_jet(M, f, p, cfg, order=1).grad_norm2), points)
    scale = np.maximum(1.0, np.max(np.abs(points), axis=-1))
    regular = grad_norm >= eps_crit * scale
    if not regular.any():
        raise NoRegularPointsError("no regular points: the gradient vanishes at every sample")
    return points[regular], int((~regular).sum())


def _orthogonal_defect(h, v, g, vanish_tol):
    vn = norm(h, v)
    coef = np.einsum("...ij,...i,...j->...", h, v, g) / np.einsum("...ij,...i,...j->...", h, g, g)
    perp = norm(h, v - coef[..., None] * g)
    return np.where(vn > vanish_tol, perp / np.where(vn > vanish_tol, vn, 1.0), 0.0)


def collinearity_check(
    M: ChartManifold,
    f: ScalarField,
    points,
    tol: float = 1e-8,
    cfg: FdConfig = DEFAULT_FD,
    eps_crit: float = EPS_CRIT,
    vanish_tol: float = 1e-9,
) -> IsoparamReport:
    """Is ``grad|grad f|`` (i) and ``grad Lap f`` (ii) parallel to ``grad f``?

    The defect is the relative size of the component orthogonal to
    ``grad f``; a vector shorter than ``vanish_tol`` counts as parallel.
    """
    pts, skipped = _regular_jets(M, f, points, cfg, eps_crit)

    def defects(p):
        J = local_jet(M, f, p, cfg)
        gnorm = np.sqrt(J.grad_norm2)
        v1 = J.nabla_grad_grad / gnorm[..., None]
        v2 = np.einsum("...ij,...j->...i", J.hinv, J.d_laplacian)
        return np.stack([_orthogonal_defect(J.h, v1, J.grad, vanish_tol), _orthogonal_defect(J.h, v2, J.grad, vanish_tol)], axis=-1)

    d = evaluate_chunked(defects, pts)
    return IsoparamReport(pts, skipped, d[:, 0], d[:, 1], tol)


def _bins(order: np.ndarray, min_bin: int) -> list:
    count = len(order) // min_bin
    if count == 0:
        return []
    return np.array_split(order, count)


def _detrended_spread(t: np.ndarray, v: np.ndarray) -> float:
    """Max minus min of ``v`` after removing a least-squares polynomial in ``t``."""
    deg = min(2, len(t) - 3)
    width = np.ptp(t)
    if deg < 1 or width == 0.0:
        return float(np.ptp(v))
    u = (t - t.mean()) / width
    V = np.vander(u, deg + 1)
    coef, *_ = np.linalg.lstsq(V, v, rcond=None)
    return float(np.ptp(v - V @ coef))


def dependence_fit(
    M: ChartManifold,
    f: ScalarField,
    points,
    tol: float = 1e-6,
    cfg: FdConfig = DEFAULT_FD,
    min_bin: int = 5,
    eps_crit: float = EPS_CRIT,
) -> IsoparamReport:
    """Are ``|df|^2`` (i) and ``Lap f`` (ii) functions of ``f``?

    Points are sorted by ``f`` and cut into consecutive bins of at least
    ``min_bin`` samples.  Within a bin each quantity is detrended by a
    quadratic in ``f``; the defect is the remaining spread, relative to
    ``1 + max|value|``.  Bin means tabulate the profiles ``gamma`` and ``sigma``.
    """
    pts, skipped = _regular_jets(M, f, points, cfg, eps_crit)

    def values(p):
        J = local_jet(M, f, p, cfg, order=2)
        return np.stack([J.value, J.grad_norm2, J.laplacian], axis=-1)

    vals = evaluate_chunked(values, pts)
    order = np.argsort(vals[:, 0], kind="stable")
    bins = _bins(order, min_bin)
    if not bins:
        return IsoparamReport(pts, skipped, np.zeros(0), np.zeros(0), tol, inconclusive=True)
    d_i, d_ii, table = [], [], []
    for b in bins:
        t, gam, sig = vals[b, 0], vals[b, 1], vals[b, 2]
        d_i.append(_detrended_spread(t, gam) / (1.0 + np.max(np.abs(gam))))
        d_ii.append(_detrended_spread(t, sig) / (1.0 + np.max(np.abs(sig))))
        table.append((t.mean(), gam.mean(), sig.mean()))
    table = np.asarray(table)
    profile = {"f": table[:, 0], "gamma": table[:, 1], "sigma": table[:, 2]}
    return IsoparamReport(pts, skipped, np.asarray(d_i), np.asarray(d_ii), tol, profile)


# -- arclength ----------------------------------------------------------------


@dataclass(frozen=True)
class ArclengthMap:
    """Tabulated ``s(t) = int_{t0}^{t} gamma(u)^{-1/2} du``."""

    t: np.ndarray
    s: np.ndarray
    gamma: Callable

    @property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.t, self.s, self.derivative(self.t), extrapolate=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t[0]) or np.any(t > self.t[-1]):
            raise ValueError("argument outside the tabulated range")
        return self._spline(t)

    def derivative(self, t):
        return 1.0 / np.sqrt(self.gamma(np.asarray(t, dtype=float)))

    def compose(self, f: ScalarField) -> ScalarField:
        """``s o f``, with gradient ``s'(f) grad f`` when ``f`` has one."""
        spline = self._spline

        def value(x):
            t = f(x)
            if np.any(t < self.t[0]) or np.any(t > self.t[-1]):
                raise ValueError("field value outside the tabulated range")
            return spline(t)

        g = None
        if f.analytic_grad is not None:
            g = lambda x: self.derivative(f(x))[..., None] * f.analytic_grad(x)
        return ScalarField(value, g, name=f"s({f.name})")


def arclength_reparam(gamma: Callable, t_range, num: int = 401) -> ArclengthMap:
    """Arclength profile by composite Simpson on each grid interval."""
    t0, t1 = map(float, t_range)
    if not t1 > t0:
        raise ValueError("empty range")
    t = np.linspace(t0, t1, num)
    mid = 0.5 * (t[1:] + t[:-1])
    g_nodes = np.asarray(gamma(t), dtype=float)
    g_mid = np.asarray(gamma(mid), dtype=float)
    if np.any(g_nodes <= 0) or np.any(g_mid <= 0):
        raise ValueError("gamma must be positive on the whole range")
    w = lambda g: 1.0 / np.sqrt(g)
    dt = np.diff(t)
    pieces = dt / 6.0 * (w(g_nodes[:-1]) + 4.0 * w(g_mid) + w(g_nodes[1:]))
    s = np.concatenate([[0.0], np.cumsum(pieces)])
    return ArclengthMap(t, s, gamma)


def unit_speed_defect(M: ChartManifold, s_field: ScalarField, points, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``| |d s|^2 - 1 |`` with ``d s`` from differences of the field values only."""
    plain = s_field.without_derivatives()
    return np.abs(local_jet(M, plain, points, cfg, order=1).grad_norm2 - 1.0)


# -- the proportionality factor for Einstein bases ----------------------------


def lemma_F(cc: ConformalChange, gamma_prime: Callable, x, cfg: FdConfig = DEFAULT_FD):
    """Return ``(F, defect)`` with ``F = 2 d*a + (2-n)|a|^2 + (6-n)/2 gamma'(rho) + 2c``.

    ``defect = |Lap a - F a| / |a|`` under the residual-free assumption;
    it vanishes when ``rho`` satisfies the biharmonic 1-form equation.
    """
    c = cc.base.einstein_constant
    if c is None:
        raise ValueError("base manifold must carry an Einstein constant")
    J = cc.jet(x, cfg)
    n = cc.n
    F = 2.0 * J.laplacian + (2.0 - n) * J.grad_norm2 + 0.5 * (6.0 - n) * np.asarray(gamma_prime(J.value)) + 2.0 * c
    hinv = J.hinv
    diff = J.d_laplacian - F[..., None] * J.alpha
    defect = norm(hinv, diff) / np.maximum(norm(hinv, J.alpha), 1e-300)
    return F, defect
