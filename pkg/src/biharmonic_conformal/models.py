"""Model charts and scalar fields with closed-form derivatives."""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import ChartManifold, ScalarField


def _eye_batch(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()


def _zeros(x: np.ndarray, *shape: int) -> np.ndarray:
    return np.zeros(x.shape[:-1] + shape)


# -- charts -------------------------------------------------------------------


def euclidean(n: int) -> ChartManifold:
    return ChartManifold(
        dim=n,
        metric_at=_eye_batch,
        domain=lambda x: np.ones(np.shape(x)[:-1], dtype=bool),
        analytic_christoffel=lambda x: _zeros(x, n, n, n),
        analytic_ricci=lambda x: _zeros(x, n, n),
        einstein_constant=0.0,
        name=f"R^{n}",
    )


def half_space(n: int) -> ChartManifold:
    """Open positive orthant ``{x : x^i > 0}`` with the flat metric."""
    return ChartManifold(
        dim=n,
        metric_at=_eye_batch,
        domain=lambda x: np.all(np.asarray(x) > 0.0, axis=-1),
        analytic_christoffel=lambda x: _zeros(x, n, n, n),
        analytic_ricci=lambda x: _zeros(x, n, n),
        einstein_constant=0.0,
        name=f"R^{n}_+",
    )


def conformally_flat(n: int, u: ScalarField, domain=None, name: Optional[str] = None) -> ChartManifold:
    """Metric ``exp(2u) delta``; Christoffels are analytic when ``u`` has a gradient."""
    if domain is None:
        domain = lambda x: np.ones(np.shape(x)[:-1], dtype=bool)

    def metric_at(x):
        return np.exp(2.0 * u(x))[..., None, None] * _eye_batch(x)

    christ = None
    if u.analytic_grad is not None:

        def christ(x):
            du = np.asarray(u.analytic_grad(x), dtype=float)
            eye = np.eye(n)
            return (
                np.einsum("ki,...j->...kij", eye, du)
                + np.einsum("kj,...i->...kij", eye, du)
                - np.einsum("ij,...k->...kij", eye, du)
            )

    return ChartManifold(
        dim=n,
        metric_at=metric_at,
        domain=domain,
        analytic_christoffel=christ,
        name=name or f"exp(2 {u.name}) R^{n}",
    )


def sphere_stereo(n: int) -> ChartManifold:
    """Unit sphere S^n in stereographic coordinates from the north pole."""

    def u_eval(x):
        return np.log(2.0) - np.log1p(np.sum(x * x, axis=-1))

    def u_grad(x):
        return -2.0 * x / (1.0 + np.sum(x * x, axis=-1))[..., None]

    base = conformally_flat(n, ScalarField(u_eval, u_grad, name="u"))
    return ChartManifold(
        dim=n,
        metric_at=base.metric_at,
        domain=base.domain,
        analytic_christoffel=base.analytic_christoffel,
        analytic_ricci=lambda x: (n - 1.0) * _eye_batch(x),
        einstein_constant=float(n - 1),
        name=f"S^{n} (stereographic)",
    )


# -- scalar fields ------------------------------------------------------------


def constant(value: float = 0.0) -> ScalarField:
    return ScalarField(
        lambda x: np.full(np.shape(x)[:-1], float(value)),
        lambda x: np.zeros(np.shape(x)),
        lambda x: _zeros(np.asarray(x), x.shape[-1], x.shape[-1]),
        lambda x: _zeros(np.asarray(x), x.shape[-1], x.shape[-1], x.shape[-1]),
        name=f"const({value})",
    )


def polynomial(
    c0: float = 0.0,
    linear: Optional[Sequence[float]] = None,
    quadratic=None,
    cubic=None,
    n: Optional[int] = None,
    name: str = "poly",
) -> ScalarField:
    """``c0 + b.x + x.A.x / 2 + T[x, x, x] / 6`` with symmetrized ``A`` and ``T``."""
    dims = [len(a) for a in (linear, quadratic, cubic) if a is not None]
    n = n if n is not None else (dims[0] if dims else None)
    if n is None:
        raise ValueError("dimension required")
    b = np.zeros(n) if linear is None else np.asarray(linear, dtype=float)
    A = np.zeros((n, n)) if quadratic is None else np.asarray(quadratic, dtype=float)
    A = 0.5 * (A + A.T)
    T = np.zeros((n, n, n)) if cubic is None else np.asarray(cubic, dtype=float)
    T = sum(np.transpose(T, p) for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]) / 6.0

    def f(x):
        return (
            c0
            + x @ b
            + 0.5 * np.einsum("...i,ij,...j->...", x, A, x)
            + np.einsum("...i,...j,...k,ijk->...", x, x, x, T) / 6.0
        )

    def df(x):
        return b + x @ A + 0.5 * np.einsum("ijk,...j,...k->...i", T, x, x)

    def d2f(x):
        return A + np.einsum("ijk,...k->...ij", T, x)

    def d3f(x):
        return np.broadcast_to(T, np.shape(x)[:-1] + T.shape).copy()

    return ScalarField(f, df, d2f, d3f, name=name)


def random_cubic(n: int, rng: np.random.Generator, scale: float = 0.5) -> ScalarField:
    return polynomial(
        float(rng.normal()),
        scale * rng.normal(size=n),
        scale * rng.normal(size=(n, n)),
        scale * rng.normal(size=(n, n, n)),
        name="random_cubic",
    )


def linear(coeffs: Sequence[float], offset: float = 0.0) -> ScalarField:
    return polynomial(offset, coeffs, name="linear")


def log_linear(direction: Sequence[float], scale: float = 1.0) -> ScalarField:
    """``scale * ln(a.x)``; with ``a = e_1`` this is ``scale * ln x^1``."""
    a = np.asarray(direction, dtype=float)

    def s(x):
        return x @ a

    return ScalarField(
        lambda x: scale * np.log(s(x)),
        lambda x: scale * a / s(x)[..., None],
        lambda x: -scale * np.multiply.outer(1.0 / s(x) ** 2, np.outer(a, a)),
        lambda x: 2.0 * scale * np.multiply.outer(1.0 / s(x) ** 3, np.einsum("i,j,k->ijk", a, a, a)),
        name=f"{scale:g}*ln(a.x)",
    )


def ln_x1(n: int) -> ScalarField:
    e1 = np.zeros(n)
    e1[0] = 1.0
    f = log_linear(e1)
    return ScalarField(f.eval, f.analytic_grad, f.analytic_hessian, f.analytic_third, name="ln x1")


def radius() -> ScalarField:
    """``|x|`` on R^n minus the origin."""

    def r(x):
        return np.sqrt(np.sum(x * x, axis=-1))

    def dr(x):
        return x / r(x)[..., None]

    def d2r(x):
        rr = r(x)[..., None, None]
        n = x.shape[-1]
        return (np.eye(n) - np.einsum("...i,...j->...ij", x, x) / rr**2) / rr

    def d3r(x):
        rr = r(x)[..., None, None, None]
        n = x.shape[-1]
        eye = np.eye(n)
        sym = (
            np.einsum("ij,...k->...ijk", eye, x)
            + np.einsum("ik,...j->...ijk", eye, x)
            + np.einsum("jk,...i->...ijk", eye, x)
        )
        return -sym / rr**3 + 3.0 * np.einsum("...i,...j,...k->...ijk", x, x, x) / rr**5

    return ScalarField(r, dr, d2r, d3r, name="|x|")


Profile = Callable[[np.ndarray], tuple]


def compose(profile: Profile, inner: ScalarField, name: str = "R(s)") -> ScalarField:
    """``R(s(x))`` for a profile returning ``(R, R', R'', R''')`` at ``s``.

    Derivatives come from the chain rule and are analytic exactly when
    ``inner`` has analytic derivatives up to order three.
    """

    def value(x):
        return profile(inner(x))[0]

    if inner.analytic_third is None or inner.analytic_hessian is None or inner.analytic_grad is None:
        return ScalarField(value, name=name)

    def d1(x):
        R = profile(inner(x))
        return R[1][..., None] * inner.analytic_grad(x)

    def d2(x):
        R = profile(inner(x))
        g = inner.analytic_grad(x)
        return R[2][..., None, None] * np.einsum("...i,...j->...ij", g, g) + R[1][..., None, None] * inner.analytic_hessian(x)

    def d3(x):
        R = profile(inner(x))
        g = inner.analytic_grad(x)
        H = inner.analytic_hessian(x)
        mixed = (
            np.einsum("...ij,...k->...ijk", H, g)
            + np.einsum("...ik,...j->...ijk", H, g)
            + np.einsum("...jk,...i->...ijk", H, g)
        )
        return (
            R[3][..., None, None, None] * np.einsum("...i,...j,...k->...ijk", g, g, g)
            + R[2][..., None, None, None] * mixed
            + R[1][..., None, None, None] * inner.analytic_third(x)
        )

    return ScalarField(value, d1, d2, d3, name=name)


def log_profile(a: float) -> Profile:
    """``a ln s`` and its first three derivatives."""

    def prof(s):
        s = np.asarray(s, dtype=float)
        return a * np.log(s), a / s, -a / s**2, 2.0 * a / s**3

    return prof


def radial_log(a: float) -> ScalarField:
    """``a ln |x|``, the radial ansatz ``y = a / s``."""
    return compose(log_profile(a), radius(), name=f"{a:g}*ln|x|")
