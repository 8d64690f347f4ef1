"""Identity map between conformally related metrics ``h`` and ``exp(2 rho) h``.

The closed-form operators evaluate the bitension of ``1 : (N, h) -> (N, h~)``
and of its reverse from the derivatives of ``rho`` up to order three.  The
definitional route lives in :func:`bitension_oracle_fd`, which never uses the
closed forms and differentiates the changed metric directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fd import DEFAULT_FD, DimensionError, FdConfig, observed_order
from .geometry import (
    ChartManifold,
    LocalJet,
    ScalarField,
    covariant_derivative_vec,
    curvature_apply,
    local_jet,
    metric,
    norm,
    partials,
    riemann,
)
from .maps import BitensionParts, bitension_parts, identity_map, tension_of_map

ORACLE_FD = FdConfig(step=1e-3, richardson=True)


@dataclass(frozen=True)
class ConformalChange:
    """``h~ = exp(2 rho) h`` on the chart of ``base``."""

    base: ChartManifold
    rho: ScalarField

    @property
    def n(self) -> int:
        return self.base.dim

    def target(self) -> ChartManifold:
        """The changed metric as a chart of its own, Christoffels left to finite differences."""
        base, rho = self.base, self.rho

        def metric_at(x):
            return np.exp(2.0 * rho(x))[..., None, None] * np.asarray(base.metric_at(x), dtype=float)

        return ChartManifold(
            dim=base.dim,
            metric_at=metric_at,
            domain=base.domain,
            name=f"exp(2 {rho.name}) {base.name}",
        )

    def jet(self, x, cfg: FdConfig = DEFAULT_FD, order: int = 3) -> LocalJet:
        return local_jet(self.base, self.rho, x, cfg, order)


def _require_dim(cc: ConformalChange) -> None:
    if cc.n <= 2:
        raise DimensionError(f"tension and bitension of the identity need n > 2, got n = {cc.n}")


# -- the tensor P and the changed connection ----------------------------------


def p_tensor(cc: ConformalChange, X, Y, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``P(X, Y) = X(rho) Y + Y(rho) X - h(X, Y) grad rho``."""
    J = cc.jet(x, cfg, order=1)
    return _p(J, np.asarray(X, dtype=float), np.asarray(Y, dtype=float))


def _p(J: LocalJet, X, Y) -> np.ndarray:
    Xr = np.einsum("...i,...i->...", J.d1, X)[..., None]
    Yr = np.einsum("...i,...i->...", J.d1, Y)[..., None]
    hXY = np.einsum("...ij,...i,...j->...", J.h, X, Y)[..., None]
    return Xr * Y + Yr * X - hXY * J.grad


def conformal_connection(cc: ConformalChange, X: Callable, Y, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``nabla~_Y X = nabla_Y X + P(Y, X)`` for a vector field callable ``X``."""
    x = np.asarray(x, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return covariant_derivative_vec(cc.base, X, Y, x, cfg) + p_tensor(cc, Y, np.asarray(X(x), dtype=float), x, cfg)


def curvature_correction(cc: ConformalChange, X, Y, Z, x, cfg: FdConfig = DEFAULT_FD) -> dict:
    """The two groups of terms added to ``R`` under the change.

    ``nabla_P`` is ``(nabla_X P)(Y, Z) - (nabla_Y P)(X, Z)`` in the expanded
    form ``-h(Z, nabla_Y grad rho) X + h(Z, nabla_X grad rho) Y
    - h(Y, Z) nabla_X grad rho + h(X, Z) nabla_Y grad rho``; ``pp`` is
    ``P(X, P(Y, Z)) - P(Y, P(X, Z))``.
    """
    J = cc.jet(x, cfg, order=2)
    X, Y, Z = (np.asarray(v, dtype=float) for v in (X, Y, Z))
    return _curvature_correction(J, X, Y, Z)


def _curvature_correction(J: LocalJet, X, Y, Z) -> dict:
    def h(A, B):
        return np.einsum("...ij,...i,...j->...", J.h, A, B)[..., None]

    nX, nY = J.nabla_grad(X), J.nabla_grad(Y)
    nabla_p = -h(Z, nY) * X + h(Z, nX) * Y - h(Y, Z) * nX + h(X, Z) * nY
    pp = _p(J, X, _p(J, Y, Z)) - _p(J, Y, _p(J, X, Z))
    return {"nabla_P": nabla_p, "pp": pp}


def conformal_curvature(cc: ConformalChange, X, Y, Z, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``R~(X, Y) Z`` from the curvature of ``h`` plus the correction terms."""
    x = np.asarray(x, dtype=float)
    corr = curvature_correction(cc, X, Y, Z, x, cfg)
    base = curvature_apply(riemann(cc.base, x, cfg), X, Y, Z)
    return base + corr["nabla_P"] + corr["pp"]


# -- tension fields -----------------------------------------------------------


def tension_forward(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``tau(1) = (2 - n) grad rho`` for ``1 : (N, h) -> (N, h~)``."""
    _require_dim(cc)
    J = cc.jet(x, cfg, order=1)
    return (2.0 - cc.n) * J.grad


def tension_reverse(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``tau(1~) = -exp(-2 rho) (2 - n) grad rho`` for ``1~ : (N, h~) -> (N, h)``."""
    _require_dim(cc)
    J = cc.jet(x, cfg, order=1)
    return -np.exp(-2.0 * J.value)[..., None] * (2.0 - cc.n) * J.grad


# -- bitension fields ---------------------------------------------------------


def bigrad_terms(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> dict:
    """The four vector terms whose sum vanishes exactly when ``1`` is biharmonic."""
    _require_dim(cc)
    J = cc.jet(x, cfg)
    n = cc.n
    return {
        "trace_nabla2_grad": J.trace_nabla2_grad,
        "gradient_term": (2.0 * J.laplacian + (2.0 - n) * J.grad_norm2)[..., None] * J.grad,
        "grad_norm_term": 0.5 * (6.0 - n) * J.grad_grad_norm2,
        "ricci_term": J.ricci_grad,
    }


def bigrad_residual(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    return sum(bigrad_terms(cc, x, cfg).values())


def bitension_forward_parts(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> BitensionParts:
    """Closed forms of ``-Lap tau(1)`` and ``trace_h R~(., tau(1)) .``.

    ``-Lap tau = (2-n){trace nabla^2 grad rho + 3/2 grad|grad rho|^2
    + nabla_{grad rho} grad rho + (Lap rho + (2-n)|grad rho|^2) grad rho}``
    and ``trace R~(., tau) . = (2-n){-Ric(grad rho) - (Lap rho) grad rho
    - (2-n) nabla_{grad rho} grad rho}``.
    """
    _require_dim(cc)
    J = cc.jet(x, cfg)
    k = 2.0 - cc.n
    g = J.grad
    minus_lap = k * (
        J.trace_nabla2_grad
        + 1.5 * J.grad_grad_norm2
        + J.nabla_grad_grad
        + (J.laplacian + k * J.grad_norm2)[..., None] * g
    )
    curv = k * (-J.ricci_grad - J.laplacian[..., None] * g - k * J.nabla_grad_grad)
    return BitensionParts(k * g, minus_lap, curv)


def bitension_forward(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``tau2(1) = (2 - n) B(rho)`` with ``B`` the residual of :func:`bigrad_residual`."""
    return (2.0 - cc.n) * bigrad_residual(cc, x, cfg)


def bitension_reverse(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``tau2(1~)`` for ``1~ : (N, h~) -> (N, h)``, evaluated with operators of ``h``."""
    _require_dim(cc)
    J = cc.jet(x, cfg)
    n = cc.n
    bracket = (
        J.trace_nabla2_grad
        + (n - 6.0) * J.nabla_grad_grad
        + 2.0 * (J.laplacian - (n - 4.0) * J.grad_norm2)[..., None] * J.grad
        + J.ricci_grad
    )
    return (n - 2.0) * np.exp(-4.0 * J.value)[..., None] * bracket


def defect_identity(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD):
    """Return ``(lhs, rhs)`` of ``tau2(1~) + e^{-4 rho} tau2(1) = e^{-4 rho}(n-2)(n-6)(grad|grad rho|^2 - |grad rho|^2 grad rho)``."""
    _require_dim(cc)
    J = cc.jet(x, cfg)
    n = cc.n
    w = np.exp(-4.0 * J.value)[..., None]
    lhs = bitension_reverse(cc, x, cfg) + w * bitension_forward(cc, x, cfg)
    rhs = w * (n - 2.0) * (n - 6.0) * (J.grad_grad_norm2 - J.grad_norm2[..., None] * J.grad)
    return lhs, rhs


def bitension_oracle_parts(cc: ConformalChange, x, cfg: FdConfig = ORACLE_FD) -> BitensionParts:
    _require_dim(cc)
    return bitension_parts(cc.base, cc.target(), identity_map(cc.n), x, cfg)


def bitension_oracle_fd(cc: ConformalChange, x, cfg: FdConfig = ORACLE_FD) -> np.ndarray:
    """``tau2(1)`` from its definition, by nested differences of ``exp(2 rho) h``."""
    return bitension_oracle_parts(cc, x, cfg).bitension


def tension_oracle_fd(cc: ConformalChange, x, cfg: FdConfig = ORACLE_FD) -> np.ndarray:
    _require_dim(cc)
    return tension_of_map(cc.base, cc.target(), identity_map(cc.n), x, cfg)


# -- grid reports -------------------------------------------------------------


@dataclass
class ResidualReport:
    points: np.ndarray
    residual_vectors: np.ndarray
    norms: np.ndarray
    grid_meta: dict = field(default_factory=dict)
    convergence_order: Optional[float] = None

    @property
    def max_norm(self) -> float:
        return float(np.max(self.norms)) if self.norms.size else 0.0

    def summary(self) -> dict:
        out = {"points": int(self.norms.size), "max_norm": self.max_norm}
        if self.convergence_order is not None:
            out["convergence_order"] = self.convergence_order
        return out


def evaluate_chunked(func: Callable, points, chunk: int = 128) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    parts = [np.asarray(func(points[i : i + chunk])) for i in range(0, len(points), chunk)]
    return np.concatenate(parts, axis=0)


def residual_report(
    op: Callable,
    cc: ConformalChange,
    points,
    cfg: FdConfig = DEFAULT_FD,
    grid_meta: Optional[dict] = None,
    covariant: bool = False,
    chunk: int = 128,
) -> ResidualReport:
    """Evaluate ``op(cc, x, cfg)`` on a point list; norms use the base metric.

    Set ``covariant`` for 1-form residuals so their norm is taken with ``h^{-1}``.
    """
    points = np.asarray(points, dtype=float)
    vecs = evaluate_chunked(lambda p: op(cc, p, cfg), points, chunk)
    h = metric(cc.base, points)
    norms = norm(np.linalg.inv(h) if covariant else h, vecs)
    return ResidualReport(points, vecs, norms, dict(grid_meta or {}))


def convergence_study(op: Callable, cc: ConformalChange, points, steps, richardson: bool = False, **kw):
    """Max residual norm per step and the observed order of decay."""
    maxima = [residual_report(op, cc, points, FdConfig(s, richardson), **kw).max_norm for s in steps]
    return maxima, observed_order(steps, maxima)
