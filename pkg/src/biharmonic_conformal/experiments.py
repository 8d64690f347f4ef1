"""Named experiments behind the command line.

Each ``cmd_*`` function takes a validated :class:`ExperimentConfig` and
returns a :class:`RunReport`; none of them prints or touches the disk.
"""

from __future__ import annotations

from typing import Callable, Dict

import numpy as np

from . import models
from .conformal import (
    ORACLE_FD,
    ConformalChange,
    bigrad_residual,
    bitension_forward,
    bitension_reverse,
    defect_identity,
    evaluate_chunked,
    residual_report,
    tension_forward,
)
from .config import ConfigError, ExperimentConfig, grid_points
from .fd import FdConfig, observed_order
from .forms import bidif_residual, consecdif_residual
from .geometry import ChartManifold, ScalarField, inverse_metric, metric, norm
from .isoparametric import collinearity_check, dependence_fit
from .ode import (
    ansatz_ex1,
    ansatz_ex2,
    ansatz_problem,
    conformal_factor_from_solution,
    flat_problem,
    integrate,
    load_table,
    radial_problem,
    substitution_residual,
)
from .reports import INFO, Check, CsvTable, RunReport
from .submersion import ProductSubmersion, reduction_check

# -- builders -----------------------------------------------------------------


def build_manifold(cfg: ExperimentConfig) -> ChartManifold:
    kind, n = cfg.manifold.kind, cfg.manifold.dim
    return {"euclidean": models.euclidean, "half_space": models.half_space, "sphere_stereo": models.sphere_stereo}[kind](n)


def _e1(n: int) -> list:
    return [1.0] + [0.0] * (n - 1)


def _coeffs(cfg: ExperimentConfig, n: int) -> np.ndarray:
    c = np.asarray(cfg.rho.coeffs if cfg.rho.coeffs is not None else _e1(n), dtype=float)
    if c.shape != (n,):
        raise ConfigError(f"rho.coeffs needs {n} entries, got {c.size}")
    return c


def _power_profile(scale: float, p: float):
    def prof(t):
        t = np.asarray(t, dtype=float)
        return (
            scale * t**p,
            scale * p * t ** (p - 1),
            scale * p * (p - 1) * t ** (p - 2),
            scale * p * (p - 1) * (p - 2) * t ** (p - 3),
        )

    return prof


def build_rho(cfg: ExperimentConfig) -> ScalarField:
    """The conformal exponent named by ``cfg.rho``; derivatives dropped on the FD path."""
    spec, n = cfg.rho, cfg.manifold.dim
    if spec.preset == "constant":
        rho = models.constant(spec.value)
    elif spec.preset == "ln_x1":
        rho = models.ln_x1(n)
    elif spec.preset == "linear":
        rho = models.linear(_coeffs(cfg, n), spec.offset)
    elif spec.preset == "log_linear":
        rho = models.log_linear(_coeffs(cfg, n), spec.scale)
    elif spec.preset == "power":
        inner = models.linear(_coeffs(cfg, n), spec.offset)
        rho = models.compose(_power_profile(spec.scale, spec.exponent), inner, name=f"{spec.scale:g}*(a.x)^{spec.exponent:g}")
    elif spec.preset == "radial_ansatz":
        a = spec.a
        if a is None:
            roots = ansatz_ex2(n).roots
            if spec.root >= len(roots):
                raise ConfigError(f"rho.root {spec.root} out of range: n = {n} has {len(roots)} radial ansatz roots")
            a = roots[spec.root]
        rho = models.radial_log(a)
    elif spec.preset == "ode_table":
        try:
            prof = load_table(spec.path)
        except OSError as err:
            raise ConfigError(f"cannot read ODE table: {err}") from None
        inner = models.radius() if spec.arclength == "radius" else models.linear(_e1(n))
        rho = models.compose(prof, inner, name=f"R({inner.name})")
    else:
        rng = np.random.default_rng(cfg.seed)
        rho = models.random_cubic(n, rng)
    return rho if cfg.fd.derivatives == "analytic" else rho.without_derivatives()


def fd_config(cfg: ExperimentConfig) -> FdConfig:
    return FdConfig(cfg.fd.step, cfg.fd.richardson)


def checked_grid(cfg: ExperimentConfig, M: ChartManifold) -> np.ndarray:
    pts = grid_points(cfg.grid, M.dim)
    inside = np.asarray(M.domain(pts), dtype=bool)
    if not inside.all():
        bad = pts[~inside][0]
        raise ConfigError(f"grid point {bad.tolist()} lies outside the domain of {M.name}")
    return pts


def _need_dim(n: int) -> None:
    if n <= 2:
        raise ConfigError(f"conformal experiments need dimension n > 2, got {n}")


def two_form_norm(hinv: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Norm of a 2-form with the pairing ``1/2 w_ij w^ij``."""
    sq = 0.5 * np.einsum("...ik,...jl,...ij,...kl->...", hinv, hinv, w, w)
    return np.sqrt(np.maximum(sq, 0.0))


def _residual_tol(cfg: ExperimentConfig, rho: ScalarField) -> float:
    return cfg.tolerances.residual if rho.has_analytic else cfg.tolerances.fd_residual


# -- experiments --------------------------------------------------------------


def cmd_residual(cfg: ExperimentConfig) -> RunReport:
    """Residual surfaces of the vector, 1-form and 2-form conditions over a grid."""
    M = build_manifold(cfg)
    _need_dim(M.dim)
    rho = build_rho(cfg)
    cc = ConformalChange(M, rho)
    fdc = fd_config(cfg)
    pts = checked_grid(cfg, M)
    tol = _residual_tol(cfg, rho)

    big = residual_report(bigrad_residual, cc, pts, fdc)
    bid = residual_report(bidif_residual, cc, pts, fdc, covariant=True)
    cons = evaluate_chunked(lambda p: consecdif_residual(cc, p, fdc), pts)
    cons_norm = two_form_norm(inverse_metric(M, pts), cons)
    tau2 = evaluate_chunked(lambda p: bitension_forward(cc, p, fdc), pts)
    h = metric(M, pts)
    tau2_norm = norm(h, tau2)
    tau_norm = norm(h, tension_forward(cc, pts, fdc))
    dual = norm(np.linalg.inv(h), np.einsum("...ij,...j->...i", h, big.residual_vectors) - bid.residual_vectors)

    rep = RunReport("residual", cfg.echo())
    if cfg.expect == "biharmonic":
        rep.checks += [
            Check.at_most("bigrad_residual", big.max_norm, tol),
            Check.at_most("bidif_residual", bid.max_norm, tol),
            Check.at_most("consecdif_residual", float(cons_norm.max()), cfg.tolerances.fd_residual),
        ]
    else:
        rep.checks.append(Check.above("bitension_nonzero", float(tau2_norm.max()), tol))
    rep.checks.append(Check.at_most("dual_path_gap", float(dual.max()), tol))
    rep.summary = {
        "manifold": M.name,
        "rho": rho.name,
        "points": len(pts),
        "derivatives": "analytic" if rho.has_analytic else "fd",
        "max_bigrad": big.max_norm,
        "max_bidif": bid.max_norm,
        "max_consecdif": float(cons_norm.max()),
        "max_tension": float(tau_norm.max()),
        "max_bitension": float(tau2_norm.max()),
    }
    n = M.dim
    header = [f"x{i + 1}" for i in range(n)] + [f"bigrad{i + 1}" for i in range(n)]
    header += ["bigrad_norm", "bidif_norm", "consecdif_norm", "bitension_norm"]
    rows = np.column_stack([pts, big.residual_vectors, big.norms, bid.norms, cons_norm, tau2_norm])
    rep.tables[""] = CsvTable(header, rows)
    return rep


def _max_substitution(a: float, family: str, n: int, s: np.ndarray) -> float:
    return float(np.max(np.abs(substitution_residual(a, family, n, s))))


def cmd_ansatz(cfg: ExperimentConfig) -> RunReport:
    """Roots of the ansatz quadratic and their substitution residuals.

    Roots of the sign-flipped quadratic are substituted as well, as a guard
    against sign slips in tabulated roots.
    """
    spec = cfg.ansatz
    ar = (ansatz_ex1 if spec.family == "ex1" else ansatz_ex2)(spec.n)
    s = np.linspace(1.0, 2.0, spec.samples)
    rep = RunReport("ansatz", cfg.echo())
    residuals, flipped = [], []
    for a in ar.roots:
        if a == 0.0:
            residuals.append(0.0)
            rep.checks.append(Check(f"root {a:.12g}", INFO, detail="trivial solution y = 0"))
            continue
        r = _max_substitution(a, spec.family, spec.n, s)
        residuals.append(r)
        rep.checks.append(Check.at_most(f"substitution residual at a = {a:.12g}", r, cfg.tolerances.residual))
        flipped.append({"a": -a, "residual": _max_substitution(-a, spec.family, spec.n, s)})
    if not ar.roots:
        detail = "degenerate quadratic, only the trivial solution" if ar.degenerate else "no real roots"
        rep.checks.append(Check("real roots", INFO, ar.discriminant, None, detail))
    rep.summary = dict(ar.summary())
    rep.summary["substitution_residuals"] = residuals
    rep.summary["negated_roots"] = flipped
    rep.summary["message"] = "no real roots" if not ar.roots and not ar.degenerate else ""
    return rep


def _ode_problem(cfg: ExperimentConfig):
    spec = cfg.ode
    n = spec.n if spec.n is not None else cfg.manifold.dim
    if spec.ansatz_root is not None:
        family = "ex1" if spec.problem == "flat" else "ex2"
        roots = (ansatz_ex1 if family == "ex1" else ansatz_ex2)(n).roots
        if spec.ansatz_root >= len(roots):
            raise ConfigError(f"ode.ansatz_root {spec.ansatz_root} out of range ({len(roots)} roots)")
        return ansatz_problem(roots[spec.ansatz_root], family, n, spec.s_range), n
    make = flat_problem if spec.problem == "flat" else radial_problem
    try:
        return make(n, spec.s_range, spec.init), n
    except ValueError as err:
        raise ConfigError(str(err)) from None


def rk4_order(problem, steps) -> float:
    """Observed order from successive halvings of each step."""
    errs = []
    for h in steps:
        coarse, fine = integrate(problem, h), integrate(problem, h / 2)
        errs.append(abs(coarse.y[-1] - fine.y[-1]))
    return observed_order(steps, errs)


def cmd_ode(cfg: ExperimentConfig) -> RunReport:
    """Integrate the reduced ODE, report endpoints, order and the optional manifold residual."""
    spec = cfg.ode
    problem, n = _ode_problem(cfg)
    sol = integrate(problem, spec.step)
    rep = RunReport("ode", cfg.echo())
    y_end, rho_end = float(sol.y[-1]), float(sol.rho[-1])
    if spec.expect_y_end is not None:
        rep.checks.append(Check.at_most("y(s_end)", abs(y_end - spec.expect_y_end), spec.end_tol))
    if spec.expect_rho_end is not None:
        rep.checks.append(Check.at_most("rho(s_end)", abs(rho_end - spec.expect_rho_end), spec.end_tol))
    order = rk4_order(problem, list(spec.order_steps))
    rep.checks.append(Check.at_most("rk4 order deviation from 4", abs(order - 4.0), 0.5))
    rep.checks.append(Check.at_most("grid residual", sol.max_residual, cfg.tolerances.fd_residual))
    rep.summary = {
        "n": n,
        "problem": spec.problem,
        "init": list(problem.init),
        "steps": len(sol.s) - 1,
        "y_end": y_end,
        "rho_end": rho_end,
        "max_grid_residual": sol.max_residual,
        "observed_order": order,
    }
    if spec.end_to_end:
        M = build_manifold(cfg)
        _need_dim(M.dim)
        if M.dim != n:
            raise ConfigError(f"ode.n = {n} differs from manifold.dim = {M.dim}")
        inner = models.radius() if spec.problem == "radial" else models.linear(_e1(n))
        pts = checked_grid(cfg, M)
        s_vals = inner(pts)
        if s_vals.min() < spec.s_range[0] or s_vals.max() > spec.s_range[1]:
            raise ConfigError("grid leaves the integrated range of s")
        rho = conformal_factor_from_solution(sol, inner)
        big = residual_report(bigrad_residual, ConformalChange(M, rho), pts, fd_config(cfg))
        rep.checks.append(Check.at_most("end-to-end bigrad_residual", big.max_norm, cfg.tolerances.fd_residual))
        rep.summary["end_to_end_points"] = len(pts)
        rep.summary["end_to_end_max_bigrad"] = big.max_norm
    rep.tables[""] = CsvTable(["s", "y", "yp", "ypp", "rho"], sol.table())
    return rep


def _iso_field(name: str, n: int) -> ScalarField:
    if name == "linear":
        return models.linear(np.arange(1.0, n + 1.0))
    if name == "radial":
        return models.radius()
    quad = np.zeros((n, n))
    quad[0, 1] = quad[1, 0] = 1.0
    return models.polynomial(quadratic=quad, name="x1*x2")


def cmd_isoparam(cfg: ExperimentConfig) -> RunReport:
    """Both isoparametric checkers on each named function, with fitted profiles."""
    spec = cfg.isoparam
    M = build_manifold(cfg)
    if M.dim < 2:
        raise ConfigError("isoparam needs dimension at least 2")
    pts = checked_grid(cfg, M)
    fdc = fd_config(cfg)
    rep = RunReport("isoparam", cfg.echo())
    for name in spec.functions:
        f = _iso_field(name, M.dim)
        col = collinearity_check(M, f, pts, spec.tol, fdc)
        fit = dependence_fit(M, f, pts, spec.fit_tol, fdc, spec.min_bin)
        want = spec.expect.get(name)
        for label, r in (("collinearity", col), ("dependence", fit)):
            verdict = r.isoparametric
            if want is None or verdict is None:
                rep.checks.append(Check.truth(f"{name}: {label}", verdict))
            else:
                d = max(float(np.max(r.defect_i, initial=0.0)), float(np.max(r.defect_ii, initial=0.0)))
                rep.checks.append(Check(f"{name}: {label}", "pass" if verdict == want else "fail", d, r.tol))
        rep.checks.append(Check.truth(f"{name}: checkers agree", col.isoparametric == fit.isoparametric))
        rep.summary[name] = {
            "collinearity": col.summary(),
            "dependence": fit.summary(),
            "profile": {k: v.tolist() for k, v in fit.profile.items()},
        }
        if fit.profile:
            rep.tables[name] = CsvTable(["f", "gamma", "sigma"], np.column_stack([fit.profile[k] for k in ("f", "gamma", "sigma")]))
    return rep


def _pad(point, n: int) -> np.ndarray:
    p = list(point)[:n]
    return np.asarray(p + [1.0] * (n - len(p)), dtype=float)


def cmd_counterexample_41a(cfg: ExperimentConfig) -> RunReport:
    """``rho = ln x1`` on the half space: biharmonic one way but not the other, except at n = 6."""
    spec, tol = cfg.counterexample, cfg.tolerances.residual
    rep = RunReport("counterexample-41a", cfg.echo())
    for n in spec.dims:
        _need_dim(n)
        cc = ConformalChange(models.half_space(n), models.ln_x1(n))
        pts = np.stack([_pad(p, n) for p in spec.points])
        if np.any(pts[:, 0] <= 0):
            raise ConfigError("counterexample points need x1 > 0")
        J = cc.jet(pts)
        v1 = J.grad_grad_norm2
        v2 = J.grad_norm2[:, None] * J.grad
        e1 = np.eye(n)[0]
        x1 = pts[:, :1]
        err1 = float(np.max(np.abs(v1 + 2.0 / x1**3 * e1)))
        err2 = float(np.max(np.abs(v2 - 1.0 / x1**3 * e1)))
        fwd = np.linalg.norm(bitension_forward(cc, pts), axis=-1).max()
        rev = np.linalg.norm(bitension_reverse(cc, pts), axis=-1).max()
        lhs, rhs = defect_identity(cc, pts)
        gap = float(np.max(np.abs(lhs - rhs)))
        rep.checks += [
            Check.at_most(f"n={n}: grad|grad rho|^2 = -2/x1^3 e1", err1, spec.vector_tol),
            Check.at_most(f"n={n}: |grad rho|^2 grad rho = 1/x1^3 e1", err2, spec.vector_tol),
            Check.at_most(f"n={n}: defect identity", gap, tol),
            Check.at_most(f"n={n}: forward bitension vanishes", fwd, tol),
        ]
        if n == 6:
            rep.checks.append(Check.at_most("n=6: reverse bitension vanishes", rev, tol, "equivalent at n=6"))
        else:
            rep.checks.append(Check.above(f"n={n}: reverse bitension nonzero", rev, tol))
        rep.summary[f"n={n}"] = {
            "points": pts,
            "grad_grad_norm2": v1,
            "grad_norm2_grad": v2,
            "max_forward_bitension": float(fwd),
            "max_reverse_bitension": float(rev),
            "max_identity_gap": gap,
            "verdict": "equivalent at n=6" if n == 6 else "biharmonic one way only",
        }
    return rep


def cmd_submersion(cfg: ExperimentConfig) -> RunReport:
    """Tension and bitension of the projection onto the base, composed with the identity."""
    M = build_manifold(cfg)
    _need_dim(M.dim)
    ps = ProductSubmersion(M, cfg.submersion.fiber_dim)
    cc = ConformalChange(M, build_rho(cfg))
    pts = checked_grid(cfg, ps.total())
    r1, r2 = reduction_check(ps, cc, pts, fd_config(cfg), ORACLE_FD)
    rep = RunReport("submersion", cfg.echo())
    rep.checks += [
        Check.at_most("tension reduction", r1.max_norm, cfg.tolerances.residual),
        Check.at_most("bitension reduction", r2.max_norm, cfg.tolerances.oracle),
    ]
    rep.summary = {
        "total_dim": ps.m,
        "points": len(pts),
        "max_tension_gap": r1.max_norm,
        "max_bitension_gap": r2.max_norm,
        "max_horizontal_defect": float(np.max(np.abs(ps.horizontal_defect(pts)))),
    }
    return rep


RUNNERS: Dict[str, Callable[[ExperimentConfig], RunReport]] = {
    "residual": cmd_residual,
    "ansatz": cmd_ansatz,
    "ode": cmd_ode,
    "isoparam": cmd_isoparam,
    "counterexample-41a": cmd_counterexample_41a,
    "submersion": cmd_submersion,
}
