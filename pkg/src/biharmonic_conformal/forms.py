"""1-form formulation: codifferential, Hodge Laplacian and the exterior consequence.

2-form values are plain antisymmetric arrays ``w[..., i, j] = w(d_i, d_j)``.
Wedge products carry no 1/2 factor: ``(b ^ a)(X, Y) = b(X) a(Y) - b(Y) a(X)``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .conformal import ConformalChange, _require_dim
from .fd import DEFAULT_FD, FdConfig, central_diff
from .geometry import (
    ChartManifold,
    christoffel,
    flat,
    local_jet,
    orthonormal_frame,
    ricci_operator,
    sharp,
)

__all__ = [
    "flat",
    "sharp",
    "wedge",
    "exterior_derivative",
    "covariant_derivative_form",
    "codifferential",
    "weitzenboeck_laplacian",
    "laplacian_exact_form",
    "bidif_residual",
    "consecdif_residual",
    "exactness_residual",
]

FormField = Callable[[np.ndarray], np.ndarray]


def wedge(beta, alpha) -> np.ndarray:
    return np.einsum("...i,...j->...ij", beta, alpha) - np.einsum("...j,...i->...ij", beta, alpha)


def exterior_derivative(M: ChartManifold, omega: FormField, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``(d w)_ij = d_i w_j - d_j w_i``; exactly antisymmetric."""
    dw = central_diff(omega, x, cfg, M.domain)  # [..., j, i]
    return np.swapaxes(dw, -1, -2) - dw


def covariant_derivative_form(M: ChartManifold, alpha: FormField, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``C[..., i, j] = (nabla_i alpha)_j``."""
    x = np.asarray(x, dtype=float)
    da = np.swapaxes(central_diff(alpha, x, cfg, M.domain), -1, -2)
    return da - np.einsum("...kij,...k->...ij", christoffel(M, x, cfg), np.asarray(alpha(x), dtype=float))


def codifferential(M: ChartManifold, alpha: FormField, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``d* alpha = -sum_a (nabla_{E_a} alpha)(E_a)``; equals ``Lap rho`` for ``alpha = d rho``."""
    E = orthonormal_frame(M, x)
    return -np.einsum("...ia,...ja,...ij->...", E, E, covariant_derivative_form(M, alpha, x, cfg))


def weitzenboeck_laplacian(M: ChartManifold, alpha: FormField, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """Hodge Laplacian as ``-trace nabla^2 alpha + alpha o Ric``."""
    x = np.asarray(x, dtype=float)
    C = covariant_derivative_form(M, alpha, x, cfg)
    dC = central_diff(lambda y: covariant_derivative_form(M, alpha, y, cfg), x, cfg, M.domain)  # [..., j, k, i]
    gamma = christoffel(M, x, cfg)
    second = (
        np.einsum("...jki->...ijk", dC)
        - np.einsum("...mij,...mk->...ijk", gamma, C)
        - np.einsum("...mik,...jm->...ijk", gamma, C)
    )
    E = orthonormal_frame(M, x)
    trace = np.einsum("...ia,...ja,...ijk->...k", E, E, second)
    ric = ricci_operator(M, x, cfg)
    return -trace + np.einsum("...l,...lk->...k", np.asarray(alpha(x), dtype=float), ric)


def laplacian_exact_form(M: ChartManifold, alpha: FormField, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``d d* alpha``, the Hodge Laplacian of a closed form."""
    return central_diff(lambda y: codifferential(M, alpha, y, cfg), x, cfg, M.domain)


def bidif_residual(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``-Lap a + (6-n)/2 d|a|^2 + (2 d*a + (2-n)|a|^2) a + 2 (Ric a#)_flat`` for ``a = d rho``.

    ``Lap a`` is taken as ``d(Lap rho)``, independent of the trace used by
    :func:`conformal.bigrad_residual`.
    """
    _require_dim(cc)
    J = cc.jet(x, cfg)
    n = cc.n
    a = J.alpha
    return (
        -J.d_laplacian
        + 0.5 * (6.0 - n) * J.d_grad_norm2
        + (2.0 * J.laplacian + (2.0 - n) * J.grad_norm2)[..., None] * a
        + 2.0 * J.flat(J.ricci_grad)
    )


def consecdif_residual(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``(4-n) d|a|^2 ^ a + 2 w ^ a + d w`` with ``w = (Ric a#)_flat``; an antisymmetric array."""
    _require_dim(cc)
    J = cc.jet(x, cfg, order=2)
    n = cc.n

    def omega(y):
        Jy = local_jet(cc.base, cc.rho, y, cfg, order=1)
        return Jy.flat(Jy.ricci_grad)

    w = J.flat(J.ricci_grad)
    return (
        (4.0 - n) * wedge(J.d_grad_norm2, J.alpha)
        + 2.0 * wedge(w, J.alpha)
        + exterior_derivative(cc.base, omega, x, cfg)
    )


def exactness_residual(cc: ConformalChange, x, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """``d(Lap a)`` for ``a = d rho``; vanishes because ``Lap a = d(Lap rho)``."""
    return exterior_derivative(cc.base, lambda y: local_jet(cc.base, cc.rho, y, cfg).d_laplacian, x, cfg)
