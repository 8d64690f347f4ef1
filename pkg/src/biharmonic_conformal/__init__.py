"""Numerical verification of biharmonicity for conformal changes of metric.

The package evaluates the bitension field of the identity map between
``(N, h)`` and ``(N, exp(2 rho) h)`` on coordinate charts, both from closed
forms in the derivatives of ``rho`` and from the definition of the bitension,
and provides the supporting ODE, isoparametric and submersion tools.
"""

from .conformal import (
    ConformalChange,
    bigrad_residual,
    bitension_forward,
    bitension_oracle_fd,
    bitension_reverse,
    defect_identity,
    residual_report,
    tension_forward,
    tension_reverse,
)
from .fd import DEFAULT_FD, DimensionError, DomainError, FdConfig, GeometryError, SingularMetricError
from .forms import bidif_residual, consecdif_residual
from .geometry import ChartManifold, ScalarField, local_jet, ricci_operator
from .models import euclidean, half_space, ln_x1, sphere_stereo
from .ode import OdeProblem, ansatz_ex1, ansatz_ex2, integrate

__version__ = "0.1.0"

__all__ = [
    "ChartManifold",
    "ConformalChange",
    "DEFAULT_FD",
    "DimensionError",
    "DomainError",
    "FdConfig",
    "GeometryError",
    "OdeProblem",
    "ScalarField",
    "SingularMetricError",
    "ansatz_ex1",
    "ansatz_ex2",
    "bidif_residual",
    "bigrad_residual",
    "bitension_forward",
    "bitension_oracle_fd",
    "bitension_reverse",
    "consecdif_residual",
    "defect_identity",
    "euclidean",
    "half_space",
    "integrate",
    "ln_x1",
    "local_jet",
    "residual_report",
    "ricci_operator",
    "sphere_stereo",
    "tension_forward",
    "tension_reverse",
]
