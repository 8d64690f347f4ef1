"""Tension and bitension of maps between charts, straight from the definitions.

Everything here is assembled by nested central differences from metrics
alone: the second fundamental form ``nabla dphi`` traced over the source
metric, then ``tau2 = -Lap^phi tau - trace R^N(dphi ., tau) dphi .``.  No
conformal-change identity is used, which is what makes these routines
usable as independent oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fd import DEFAULT_FD, FdConfig, central_diff
from .geometry import ChartManifold, christoffel, metric, orthonormal_frame, riemann

MapField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SmoothMap:
    """Chart map ``phi``; optional analytic Jacobian ``[..., a, i]`` and Hessian ``[..., a, i, j]``."""

    phi: MapField
    jacobian: Optional[MapField] = None
    hessian: Optional[MapField] = None


def identity_map(n: int) -> SmoothMap:
    return SmoothMap(
        lambda x: np.asarray(x, dtype=float),
        lambda x: np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n)).copy(),
        lambda x: np.zeros(np.shape(x)[:-1] + (n, n, n)),
    )


def projection_map(m: int, n: int) -> SmoothMap:
    """``R^m -> R^n`` keeping the first ``n`` coordinates."""
    P = np.eye(n, m)
    return SmoothMap(
        lambda x: np.asarray(x, dtype=float)[..., :n],
        lambda x: np.broadcast_to(P, np.shape(x)[:-1] + (n, m)).copy(),
        lambda x: np.zeros(np.shape(x)[:-1] + (n, m, m)),
    )


def _jacobian(M: ChartManifold, f: SmoothMap, x, cfg):
    if f.jacobian is not None:
        return np.asarray(f.jacobian(x), dtype=float)
    return central_diff(f.phi, x, cfg, M.domain)


def _hessian(M: ChartManifold, f: SmoothMap, x, cfg):
    if f.hessian is not None:
        return np.asarray(f.hessian(x), dtype=float)
    return central_diff(lambda y: _jacobian(M, f, y, cfg), x, cfg, M.domain)


def second_fundamental_form(M: ChartManifold, N: ChartManifold, f: SmoothMap, x, cfg: FdConfig = DEFAULT_FD):
    """``B[..., c, i, j] = (nabla dphi)(d_i, d_j)^c``."""
    x = np.asarray(x, dtype=float)
    dphi = _jacobian(M, f, x, cfg)
    ddphi = _hessian(M, f, x, cfg)
    gM = christoffel(M, x, cfg)
    gN = christoffel(N, f.phi(x), cfg)
    return (
        ddphi
        - np.einsum("...kij,...ck->...cij", gM, dphi)
        + np.einsum("...cab,...ai,...bj->...cij", gN, dphi, dphi)
    )


def tension_of_map(M: ChartManifold, N: ChartManifold, f: SmoothMap, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``tau(phi) = trace_g nabla dphi`` over a Gram-Schmidt frame of ``M``."""
    x = np.asarray(x, dtype=float)
    E = orthonormal_frame(M, x)
    return np.einsum("...ia,...ja,...cij->...c", E, E, second_fundamental_form(M, N, f, x, cfg))


@dataclass(frozen=True)
class BitensionParts:
    tension: np.ndarray
    minus_laplacian: np.ndarray
    curvature_trace: np.ndarray

    @property
    def bitension(self) -> np.ndarray:
        return self.minus_laplacian - self.curvature_trace


def bitension_parts(M: ChartManifold, N: ChartManifold, f: SmoothMap, x, cfg: FdConfig = DEFAULT_FD) -> BitensionParts:
    """Pieces of ``tau2 = trace nabla^phi nabla^phi tau - trace R^N(dphi ., tau) dphi .``."""
    x = np.asarray(x, dtype=float)

    def tau(y):
        return tension_of_map(M, N, f, y, cfg)

    def pulled_derivative(y):
        # (nabla^phi_{d_j} tau)^c, shape [..., c, j]
        dtau = central_diff(tau, y, cfg, M.domain)
        gN = christoffel(N, f.phi(y), cfg)
        return dtau + np.einsum("...cab,...aj,...b->...cj", gN, _jacobian(M, f, y, cfg), tau(y))

    t = tau(x)
    W = pulled_derivative(x)
    dW = central_diff(pulled_derivative, x, cfg, M.domain)
    dphi = _jacobian(M, f, x, cfg)
    gN = christoffel(N, f.phi(x), cfg)
    gM = christoffel(M, x, cfg)
    T = (
        dW
        + np.einsum("...cab,...ai,...bj->...cji", gN, dphi, W)
        - np.einsum("...mij,...cm->...cji", gM, W)
    )
    E = orthonormal_frame(M, x)
    lap = np.einsum("...ia,...ja,...cji->...c", E, E, T)

    riem = riemann(N, f.phi(x), cfg)
    # sum_a R(dphi E_a, tau) dphi E_a
    Q = np.einsum("...ai,...bj,...ik,...jk->...ab", dphi, dphi, E, E)
    curv = np.einsum("...lbam,...ab,...m->...l", riem, Q, t)
    return BitensionParts(t, lap, curv)


def bitension_of_map(M: ChartManifold, N: ChartManifold, f: SmoothMap, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    return bitension_parts(M, N, f, x, cfg).bitension


def pullback_metric_defect(M: ChartManifold, N: ChartManifold, f: SmoothMap, x, vectors, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``h(dphi X, dphi Y) - g(X, Y)`` for each pair of the given vectors ``[..., k, m]``."""
    x = np.asarray(x, dtype=float)
    dphi = _jacobian(M, f, x, cfg)
    push = np.einsum("...ai,...ki->...ka", dphi, vectors)
    hN = metric(N, f.phi(x))
    gM = metric(M, x)
    return np.einsum("...ka,...ab,...lb->...kl", push, hN, push) - np.einsum("...ki,...ij,...lj->...kl", vectors, gM, vectors)
