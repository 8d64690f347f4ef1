"""Central finite differences for batched array-valued callables.

Every field in this package is a numpy callable mapping points of shape
``(..., n)`` to arrays of shape ``(..., *S)``.  :func:`central_diff` returns
the coordinate derivative with the derivative index appended last, so that
nesting it builds higher derivatives without any bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class GeometryError(Exception):
    """Base class for geometric evaluation failures."""


class DomainError(GeometryError):
    """A point, or a finite-difference stencil around it, left the chart."""


class SingularMetricError(GeometryError):
    """Metric matrix too ill-conditioned to invert."""


class DimensionError(GeometryError):
    """Operation is undefined in the requested dimension."""


@dataclass(frozen=True)
class FdConfig:
    """Finite-difference settings.

    ``step`` is an absolute coordinate step.  With ``richardson`` each
    central difference is combined as ``(4 D(h/2) - D(h)) / 3``.
    """

    step: float = 1e-4
    richardson: bool = False

    def __post_init__(self):
        if not (self.step > 0 and np.isfinite(self.step)):
            raise ValueError(f"FD step must be positive and finite, got {self.step}")

    def with_step(self, step: float) -> "FdConfig":
        return FdConfig(step=step, richardson=self.richardson)


DEFAULT_FD = FdConfig()

Domain = Callable[[np.ndarray], np.ndarray]


def check_domain(domain: Optional[Domain], pts: np.ndarray, what: str = "point") -> None:
    if domain is None:
        return
    pts = np.asarray(pts, dtype=float)
    inside = np.broadcast_to(np.asarray(domain(pts), dtype=bool), pts.shape[:-1])
    if not inside.all():
        raise DomainError(f"{what} outside chart domain, e.g. {pts[~inside][0]}")


def _central_once(func, x: np.ndarray, h: float, domain: Optional[Domain]) -> np.ndarray:
    n = x.shape[-1]
    offsets = h * np.eye(n)
    pts = x[..., None, None, :] + np.stack([offsets, -offsets])
    check_domain(domain, pts, "finite-difference stencil")
    vals = np.asarray(func(pts), dtype=float)
    b = x.ndim - 1
    d = (np.take(vals, 0, axis=b) - np.take(vals, 1, axis=b)) / (2.0 * h)
    return np.moveaxis(d, b, -1)


def central_diff(func, x, cfg: FdConfig = DEFAULT_FD, domain: Optional[Domain] = None) -> np.ndarray:
    """Derivative of ``func`` at ``x``; output shape ``(..., *S, n)``."""
    x = np.asarray(x, dtype=float)
    if cfg.richardson:
        coarse = _central_once(func, x, cfg.step, domain)
        fine = _central_once(func, x, cfg.step / 2.0, domain)
        return (4.0 * fine - coarse) / 3.0
    return _central_once(func, x, cfg.step, domain)


def observed_order(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step)."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)
