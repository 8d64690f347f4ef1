"""Single-chart Riemannian manifolds and their differential operators.

Conventions used throughout the package:

* points have shape ``(..., n)``; every operator is vectorized over the
  leading axes;
* ``gamma[..., k, i, j]`` is the Christoffel symbol of the second kind;
* ``riemann[..., l, k, i, j]`` is the ``l`` component of ``R(d_i, d_j) d_k``
  with ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``;
* the Ricci operator is ``Ric(Y) = sum_a R(Y, E_a) E_a`` over an orthonormal
  frame, so the unit sphere has ``Ric = (n - 1) Id``;
* the Laplacian on functions is the positive one, ``Lap f = -div grad f``,
  hence ``Lap |x| = -(n - 1)/|x|`` on Euclidean space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .fd import (
    DEFAULT_FD,
    DomainError,
    FdConfig,
    SingularMetricError,
    central_diff,
    check_domain,
)

COND_LIMIT = 1e10

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ChartManifold:
    """A Riemannian metric on an open subset of R^n given in one chart."""

    dim: int
    metric_at: Field
    domain: Callable[[np.ndarray], np.ndarray]
    analytic_christoffel: Optional[Field] = None
    analytic_ricci: Optional[Field] = None
    einstein_constant: Optional[float] = None
    name: str = "chart"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")


@dataclass(frozen=True)
class ScalarField:
    """Smooth function on a chart, optionally with analytic derivatives.

    ``analytic_third[..., i, j, k]`` is the fully symmetric array of third
    partial derivatives.
    """

    eval: Field
    analytic_grad: Optional[Field] = None
    analytic_hessian: Optional[Field] = None
    analytic_third: Optional[Field] = None
    name: str = "f"

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float)

    def without_derivatives(self) -> "ScalarField":
        return ScalarField(self.eval, name=f"{self.name}[fd]")

    @property
    def has_analytic(self) -> bool:
        return self.analytic_grad is not None


def _points(M: ChartManifold, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != M.dim:
        raise ValueError(f"point dimension {x.shape[-1]} does not match manifold dimension {M.dim}")
    check_domain(M.domain, x)
    return x


# -- metric algebra -----------------------------------------------------------


def metric(M: ChartManifold, x) -> np.ndarray:
    x = _points(M, x)
    return np.asarray(M.metric_at(x), dtype=float)


def invert_metric(h: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(h)
    if not np.all(np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise SingularMetricError(f"metric condition number {np.max(cond):.3g} exceeds {COND_LIMIT:.0e}")
    return np.linalg.inv(h)


def inverse_metric(M: ChartManifold, x) -> np.ndarray:
    return invert_metric(metric(M, x))


def flat(M: ChartManifold, X, x) -> np.ndarray:
    """Lower the index of a vector: ``X_i = h_ij X^j``."""
    return np.einsum("...ij,...j->...i", metric(M, x), X)


def sharp(M: ChartManifold, alpha, x) -> np.ndarray:
    """Raise the index of a covector: ``a^i = h^ij a_j``."""
    return np.einsum("...ij,...j->...i", inverse_metric(M, x), alpha)


def inner(h: np.ndarray, X, Y) -> np.ndarray:
    return np.einsum("...ij,...i,...j->...", h, X, Y)


def norm(h: np.ndarray, X) -> np.ndarray:
    return np.sqrt(np.maximum(inner(h, X, X), 0.0))


def orthonormal_frame(M: ChartManifold, x) -> np.ndarray:
    """Gram-Schmidt on the coordinate basis, ascending index order.

    Returns ``E[..., i, a]``: column ``a`` holds the components of frame
    vector ``E_a``.  This equals ``L^{-T}`` for the Cholesky factor ``h = L L^T``.
    """
    h = metric(M, x)
    invert_metric(h)
    L = np.linalg.cholesky(h)
    return np.swapaxes(np.linalg.inv(L), -1, -2)


# -- connection and curvature -------------------------------------------------


def christoffel_from_metric_derivative(hinv: np.ndarray, dh: np.ndarray) -> np.ndarray:
    """``dh[..., a, b, l] = d_l h_ab``; returns ``gamma[..., k, i, j]``."""
    comb = (
        np.einsum("...jli->...lij", dh)
        + np.einsum("...ilj->...lij", dh)
        - np.einsum("...ijl->...lij", dh)
    )
    return 0.5 * np.einsum("...kl,...lij->...kij", hinv, comb)


def christoffel(M: ChartManifold, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    x = _points(M, x)
    if M.analytic_christoffel is not None:
        return np.asarray(M.analytic_christoffel(x), dtype=float)
    hinv = inverse_metric(M, x)
    dh = central_diff(M.metric_at, x, cfg, M.domain)
    return christoffel_from_metric_derivative(hinv, dh)


def christoffel_derivative(M: ChartManifold, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``dgamma[..., k, i, j, l] = d_l gamma^k_ij``."""
    x = _points(M, x)
    return central_diff(lambda y: christoffel(M, y, cfg), x, cfg, M.domain)


def riemann_from_christoffel(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    return (
        np.einsum("...ljki->...lkij", dgamma)
        - np.einsum("...likj->...lkij", dgamma)
        + np.einsum("...lim,...mjk->...lkij", gamma, gamma)
        - np.einsum("...ljm,...mik->...lkij", gamma, gamma)
    )


def ricci_from_riemann(hinv: np.ndarray, riem: np.ndarray) -> np.ndarray:
    """Ricci operator ``Ric[..., l, k]`` (mixed components)."""
    return np.einsum("...ij,...ljki->...lk", hinv, riem)


def riemann(M: ChartManifold, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    x = _points(M, x)
    return riemann_from_christoffel(christoffel(M, x, cfg), christoffel_derivative(M, x, cfg))


def ricci_operator(M: ChartManifold, x, cfg: FdConfig = DEFAULT_FD, use_analytic: bool = True) -> np.ndarray:
    x = _points(M, x)
    if use_analytic and M.analytic_ricci is not None:
        return np.asarray(M.analytic_ricci(x), dtype=float)
    return ricci_from_riemann(inverse_metric(M, x), riemann(M, x, cfg))


def curvature_apply(riem: np.ndarray, X, Y, Z) -> np.ndarray:
    """``R(X, Y) Z`` from the component array."""
    return np.einsum("...lkij,...i,...j,...k->...l", riem, X, Y, Z)


def riemann_and_ricci(M: ChartManifold, x, cfg: FdConfig = DEFAULT_FD, use_analytic: bool = True):
    """Curvature evaluator ``R(X, Y, Z)`` at ``x`` together with the Ricci operator."""
    riem = riemann(M, x, cfg)
    if use_analytic and M.analytic_ricci is not None:
        ric = np.asarray(M.analytic_ricci(_points(M, x)), dtype=float)
    else:
        ric = ricci_from_riemann(inverse_metric(M, x), riem)

    def R(X, Y, Z):
        return curvature_apply(riem, X, Y, Z)

    return R, ric


# -- scalar fields ------------------------------------------------------------


def _derivative_levels(f: ScalarField, cfg: FdConfig, domain) -> list:
    analytic = [f.eval, f.analytic_grad, f.analytic_hessian, f.analytic_third]
    levels: list = [f.eval]
    for k in range(1, 4):
        if analytic[k] is not None:
            levels.append(analytic[k])
        else:
            prev = levels[k - 1]
            levels.append(lambda y, prev=prev: central_diff(prev, y, cfg, domain))
    return levels


def partials(f: ScalarField, x, order: int, cfg: FdConfig = DEFAULT_FD, domain=None) -> np.ndarray:
    """Coordinate partial derivatives of ``f`` of the given order (0 to 3)."""
    x = np.asarray(x, dtype=float)
    return np.asarray(_derivative_levels(f, cfg, domain)[order](x), dtype=float)


def grad(M: ChartManifold, f: ScalarField, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    x = _points(M, x)
    df = partials(f, x, 1, cfg, M.domain)
    return np.einsum("...ij,...j->...i", inverse_metric(M, x), df)


def hessian(M: ChartManifold, f: ScalarField, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """Covariant Hessian ``H_ij = d_ij f - gamma^k_ij d_k f``."""
    x = _points(M, x)
    df = partials(f, x, 1, cfg, M.domain)
    d2f = partials(f, x, 2, cfg, M.domain)
    return d2f - np.einsum("...kij,...k->...ij", christoffel(M, x, cfg), df)


def laplacian_scalar(M: ChartManifold, f: ScalarField, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """Positive Laplacian ``-trace_h Hess f``."""
    x = _points(M, x)
    return -np.einsum("...ij,...ij->...", inverse_metric(M, x), hessian(M, f, x, cfg))


# -- vector fields ------------------------------------------------------------


def covariant_jacobian(M: ChartManifold, X: Field, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``J[..., k, i] = (nabla_{d_i} X)^k``."""
    x = _points(M, x)
    dX = central_diff(X, x, cfg, M.domain)
    return dX + np.einsum("...kij,...j->...ki", christoffel(M, x, cfg), np.asarray(X(x), dtype=float))


def covariant_derivative_vec(M: ChartManifold, X: Field, Y, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``nabla_Y X`` at ``x`` for a vector field callable ``X``."""
    return np.einsum("...ki,...i->...k", covariant_jacobian(M, X, x, cfg), Y)


def second_covariant(M: ChartManifold, X: Field, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``T[..., k, j, i] = (nabla^2_{d_i, d_j} X)^k``."""
    x = _points(M, x)
    W = covariant_jacobian(M, X, x, cfg)
    dW = central_diff(lambda y: covariant_jacobian(M, X, y, cfg), x, cfg, M.domain)
    gamma = christoffel(M, x, cfg)
    return (
        dW
        + np.einsum("...kil,...lj->...kji", gamma, W)
        - np.einsum("...mij,...km->...kji", gamma, W)
    )


def rough_laplacian_vec(M: ChartManifold, X: Field, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """Rough Laplacian ``Lap X = -trace_h nabla^2 X``, traced over the Gram-Schmidt frame."""
    x = _points(M, x)
    E = orthonormal_frame(M, x)
    return -np.einsum("...ia,...ja,...kji->...k", E, E, second_covariant(M, X, x, cfg))


# -- local jets of a function -------------------------------------------------


@dataclass(frozen=True)
class LocalJet:
    """Metric data and derivatives of a scalar up to order three at points.

    Built once per evaluation and reused by every formula-based operator so
    that the analytic path stays exact whenever the inputs are analytic.
    """

    x: np.ndarray
    h: np.ndarray
    hinv: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    ricci: np.ndarray
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[-1]

    @property
    def alpha(self) -> np.ndarray:
        return self.d1

    @cached_property
    def grad(self) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.hinv, self.d1)

    @cached_property
    def grad_norm2(self) -> np.ndarray:
        return np.einsum("...i,...i->...", self.d1, self.grad)

    @cached_property
    def hess(self) -> np.ndarray:
        return self.d2 - np.einsum("...kij,...k->...ij", self.gamma, self.d1)

    @cached_property
    def laplacian(self) -> np.ndarray:
        return -np.einsum("...ij,...ij->...", self.hinv, self.hess)

    @cached_property
    def nabla_hess(self) -> np.ndarray:
        """``N[..., l, i, j] = (nabla_l nabla dphi)_ij``."""
        dH = (
            self.d3
            - np.einsum("...kijl,...k->...ijl", self.dgamma, self.d1)
            - np.einsum("...kij,...kl->...ijl", self.gamma, self.d2)
        )
        dH = np.moveaxis(dH, -1, -3)
        return (
            dH
            - np.einsum("...kli,...kj->...lij", self.gamma, self.hess)
            - np.einsum("...klj,...ik->...lij", self.gamma, self.hess)
        )

    def nabla_grad(self, X) -> np.ndarray:
        """``nabla_X grad phi``."""
        return np.einsum("...ij,...jk,...k->...i", self.hinv, self.hess, X)

    @cached_property
    def nabla_grad_grad(self) -> np.ndarray:
        return self.nabla_grad(self.grad)

    @cached_property
    def d_grad_norm2(self) -> np.ndarray:
        """Covector ``d |grad phi|^2``."""
        return 2.0 * np.einsum("...ki,...i->...k", self.hess, self.grad)

    @cached_property
    def grad_grad_norm2(self) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.hinv, self.d_grad_norm2)

    @cached_property
    def trace_nabla2_alpha(self) -> np.ndarray:
        """Covector ``trace_h nabla^2 dphi``."""
        return np.einsum("...li,...lij->...j", self.hinv, self.nabla_hess)

    @cached_property
    def trace_nabla2_grad(self) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.hinv, self.trace_nabla2_alpha)

    @cached_property
    def d_laplacian(self) -> np.ndarray:
        """Covector ``d(Lap phi)``."""
        return -np.einsum("...ij,...kij->...k", self.hinv, self.nabla_hess)

    @cached_property
    def ricci_grad(self) -> np.ndarray:
        return np.einsum("...lk,...k->...l", self.ricci, self.grad)

    def flat(self, X) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.h, X)

    def norm(self, X) -> np.ndarray:
        return norm(self.h, X)


def local_jet(M: ChartManifold, f: ScalarField, x, cfg: FdConfig = DEFAULT_FD, order: int = 3) -> LocalJet:
    x = _points(M, x)
    h = metric(M, x)
    hinv = invert_metric(h)
    gamma = christoffel(M, x, cfg)
    dgamma = christoffel_derivative(M, x, cfg)
    if M.analytic_ricci is not None:
        ric = np.asarray(M.analytic_ricci(x), dtype=float)
    else:
        ric = ricci_from_riemann(hinv, riemann_from_christoffel(gamma, dgamma))
    levels = _derivative_levels(f, cfg, M.domain)
    vals = [np.asarray(levels[k](x), dtype=float) if k <= order else None for k in range(4)]
    n = M.dim
    if vals[2] is None:
        vals[2] = np.full(x.shape[:-1] + (n, n), np.nan)
    if vals[3] is None:
        vals[3] = np.full(x.shape[:-1] + (n, n, n), np.nan)
    return LocalJet(x, h, hinv, gamma, dgamma, ric, *vals)


__all__ = [
    "ChartManifold",
    "ScalarField",
    "LocalJet",
    "DomainError",
    "metric",
    "inverse_metric",
    "invert_metric",
    "flat",
    "sharp",
    "inner",
    "norm",
    "orthonormal_frame",
    "christoffel",
    "christoffel_derivative",
    "riemann",
    "riemann_and_ricci",
    "ricci_operator",
    "curvature_apply",
    "partials",
    "grad",
    "hessian",
    "laplacian_scalar",
    "covariant_jacobian",
    "covariant_derivative_vec",
    "second_covariant",
    "rough_laplacian_vec",
    "local_jet",
]

