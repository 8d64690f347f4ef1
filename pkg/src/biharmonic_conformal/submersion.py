"""Product projections ``(N x R^k, h + dt^2) -> (N, h)`` composed with the identity into ``(N, h~)``.

The tension and bitension of the composite are computed from the
definitions on the total space and compared with those of the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import (
    ORACLE_FD,
    ConformalChange,
    ResidualReport,
    bitension_forward,
    evaluate_chunked,
    tension_forward,
)
from .fd import DEFAULT_FD, FdConfig
from .geometry import ChartManifold, metric, norm
from .maps import bitension_of_map, projection_map, pullback_metric_defect, tension_of_map

TENSION_TOL = 1e-6
BITENSION_TOL = 1e-3


@dataclass(frozen=True)
class ProductSubmersion:
    base: ChartManifold
    fiber_dim: int

    @property
    def n(self) -> int:
        return self.base.dim

    @property
    def m(self) -> int:
        return self.base.dim + self.fiber_dim

    def total(self) -> ChartManifold:
        n, m, base = self.n, self.m, self.base

        def metric_at(x):
            x = np.asarray(x, dtype=float)
            g = np.zeros(x.shape[:-1] + (m, m))
            g[..., :n, :n] = base.metric_at(x[..., :n])
            g[..., n:, n:] = np.eye(m - n)
            return g

        return ChartManifold(
            dim=m,
            metric_at=metric_at,
            domain=lambda x: base.domain(np.asarray(x)[..., :n]),
            name=f"{base.name} x R^{self.fiber_dim}",
        )

    def projection(self):
        return projection_map(self.m, self.n)

    def horizontal_defect(self, x) -> np.ndarray:
        """``h(dpi X, dpi Y) - g(X, Y)`` over the horizontal coordinate vectors."""
        x = np.asarray(x, dtype=float)
        vecs = np.broadcast_to(np.eye(self.n, self.m), x.shape[:-1] + (self.n, self.m))
        return pullback_metric_defect(self.total(), self.base, self.projection(), x, vecs)


def tension_of_composition(ps: ProductSubmersion, cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    return tension_of_map(ps.total(), cc.target(), ps.projection(), x, cfg)


def bitension_of_composition(ps: ProductSubmersion, cc: ConformalChange, x, cfg: FdConfig = ORACLE_FD) -> np.ndarray:
    return bitension_of_map(ps.total(), cc.target(), ps.projection(), x, cfg)


def _report(diff: np.ndarray, points: np.ndarray, base: ChartManifold, n: int, meta: dict) -> ResidualReport:
    h = metric(base, points[..., :n])
    return ResidualReport(points, diff, norm(h, diff), meta)


def reduction_check(
    ps: ProductSubmersion,
    cc: ConformalChange,
    points,
    cfg: FdConfig = DEFAULT_FD,
    oracle_cfg: FdConfig = ORACLE_FD,
):
    """Reports of ``tau(pi~) - tau(1) o pi`` and ``tau2(pi~) - tau2(1) o pi``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = ps.n
    t_comp = evaluate_chunked(lambda p: tension_of_composition(ps, cc, p, cfg), points)
    t_id = tension_forward(cc, points[:, :n], cfg)
    b_comp = evaluate_chunked(lambda p: bitension_of_composition(ps, cc, p, oracle_cfg), points, chunk=32)
    b_id = bitension_forward(cc, points[:, :n], cfg)
    r1 = _report(t_comp - t_id, points, ps.base, n, {"quantity": "tension", "tol": TENSION_TOL})
    r2 = _report(b_comp - b_id, points, ps.base, n, {"quantity": "bitension", "tol": BITENSION_TOL})
    return r1, r2


def corollary_verdicts(ps: ProductSubmersion, cc: ConformalChange, points, harmonic_tol: float = 1e-6, biharmonic_tol: float = 1e-3, cfg: FdConfig = DEFAULT_FD) -> dict:
    """Nonharmonic-and-biharmonic verdict for the composite and for the identity, evaluated independently."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = ps.n
    t_comp = evaluate_chunked(lambda p: tension_of_composition(ps, cc, p, cfg), points)
    b_comp = evaluate_chunked(lambda p: bitension_of_composition(ps, cc, p), points, chunk=32)
    t_id = tension_forward(cc, points[:, :n], cfg)
    b_id = bitension_forward(cc, points[:, :n], cfg)
    h = metric(ps.base, points[:, :n])

    def verdict(t, b):
        nonharmonic = bool(np.max(norm(h, t)) > harmonic_tol)
        biharmonic = bool(np.max(norm(h, b)) <= biharmonic_tol)
        return nonharmonic and biharmonic

    return {"composite": verdict(t_comp, b_comp), "identity": verdict(t_id, b_id)}
