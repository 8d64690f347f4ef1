"""Experiment configuration: a JSON document validated with pydantic.

Every experiment has a default document; a user file is merged over it key
by key, so a config only needs the entries it changes.  Unknown keys are
rejected at every level.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

SCHEMA_VERSION = 1

EXPERIMENTS = ("residual", "ansatz", "ode", "isoparam", "counterexample-41a", "submersion")


class ConfigError(ValueError):
    """Invalid or unusable configuration (exit code 2)."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ManifoldSpec(_Strict):
    kind: Literal["euclidean", "half_space", "sphere_stereo"] = "euclidean"
    dim: int = Field(3, ge=1, le=12)


class RhoSpec(_Strict):
    preset: Literal[
        "constant", "ln_x1", "linear", "log_linear", "power", "radial_ansatz", "ode_table", "random_cubic"
    ] = "ln_x1"
    value: float = 0.0
    coeffs: Optional[List[float]] = None
    offset: float = 0.0
    scale: float = 1.0
    exponent: float = 2.0
    a: Optional[float] = None
    root: Optional[int] = Field(None, ge=0)
    path: Optional[str] = None
    arclength: Literal["radius", "x1"] = "radius"

    @model_validator(mode="after")
    def _needs(self):
        if self.preset == "radial_ansatz" and (self.a is None) == (self.root is None):
            raise ValueError("radial_ansatz needs exactly one of 'a' or 'root'")
        if self.preset == "ode_table" and not self.path:
            raise ValueError("ode_table needs 'path'")
        return self


Bound = Union[float, List[float]]


class GridSpec(_Strict):
    lower: Bound = 0.5
    upper: Bound = 2.0
    resolution: int = Field(5, ge=0)
    annulus: Optional[Tuple[float, float]] = None

    @field_validator("annulus")
    @classmethod
    def _radii(cls, v):
        if v is not None and not 0.0 <= v[0] <= v[1]:
            raise ValueError("annulus needs 0 <= r_min <= r_max")
        return v


class FdSpec(_Strict):
    step: float = Field(1e-4, gt=0.0, lt=1.0)
    richardson: bool = False
    derivatives: Literal["analytic", "fd"] = "analytic"


class Tolerances(_Strict):
    residual: float = Field(1e-6, gt=0.0)
    fd_residual: float = Field(1e-4, gt=0.0)
    oracle: float = Field(1e-3, gt=0.0)


class AnsatzSpec(_Strict):
    family: Literal["ex1", "ex2"] = "ex2"
    n: int = Field(3, ge=1, le=100)
    samples: int = Field(11, ge=1)


class OdeSpec(_Strict):
    problem: Literal["flat", "radial"] = "flat"
    n: Optional[int] = Field(None, ge=1)
    s_range: Tuple[float, float] = (1.0, 2.0)
    init: Tuple[float, float] = (1.0, -1.0)
    ansatz_root: Optional[int] = Field(None, ge=0)
    step: float = Field(1e-3, gt=0.0)
    expect_y_end: Optional[float] = None
    expect_rho_end: Optional[float] = None
    end_tol: float = Field(1e-6, gt=0.0)
    order_steps: Tuple[float, ...] = (0.04, 0.02, 0.01)
    end_to_end: bool = False

    @field_validator("s_range")
    @classmethod
    def _increasing(cls, v):
        if not v[1] > v[0]:
            raise ValueError("s_range must be increasing")
        return v


class IsoparamSpec(_Strict):
    functions: List[Literal["linear", "radial", "x1x2"]] = ["linear", "radial", "x1x2"]
    expect: Dict[str, bool] = {"linear": True, "radial": True, "x1x2": False}
    tol: float = Field(1e-8, gt=0.0)
    fit_tol: float = Field(1e-6, gt=0.0)
    min_bin: int = Field(5, ge=3)


class CounterexampleSpec(_Strict):
    dims: List[int] = [3, 5, 6]
    points: List[List[float]] = [[1.0, 1.0, 1.0], [2.0, 1.0, 1.0]]
    vector_tol: float = Field(1e-10, gt=0.0)


class SubmersionSpec(_Strict):
    fiber_dim: int = Field(1, ge=1, le=4)


class ExperimentConfig(_Strict):
    schema_: int = Field(SCHEMA_VERSION, alias="schema")
    experiment: Literal["residual", "ansatz", "ode", "isoparam", "counterexample-41a", "submersion"]
    seed: int = 0
    manifold: ManifoldSpec = ManifoldSpec()
    rho: RhoSpec = RhoSpec()
    grid: GridSpec = GridSpec()
    fd: FdSpec = FdSpec()
    tolerances: Tolerances = Tolerances()
    expect: Literal["biharmonic", "nonbiharmonic"] = "biharmonic"
    ansatz: AnsatzSpec = AnsatzSpec()
    ode: OdeSpec = OdeSpec()
    isoparam: IsoparamSpec = IsoparamSpec()
    counterexample: CounterexampleSpec = CounterexampleSpec()
    submersion: SubmersionSpec = SubmersionSpec()

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("schema_")
    @classmethod
    def _schema(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v}; expected {SCHEMA_VERSION}")
        return v

    def echo(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


DEFAULTS: Dict[str, dict] = {
    "residual": {
        "manifold": {"kind": "half_space", "dim": 5},
        "rho": {"preset": "ln_x1"},
        "grid": {"lower": 0.5, "upper": 2.0, "resolution": 5},
    },
    "ansatz": {},
    "ode": {
        "manifold": {"kind": "euclidean", "dim": 3},
        "ode": {"problem": "flat", "init": [1.0, -1.0], "expect_y_end": 0.5, "expect_rho_end": math.log(2.0)},
        "grid": {"lower": -2.0, "upper": 2.0, "resolution": 9, "annulus": [1.0, 2.0]},
    },
    "isoparam": {
        "manifold": {"kind": "euclidean", "dim": 3},
        "grid": {"lower": -2.0, "upper": 2.0, "resolution": 7, "annulus": [0.5, 2.0]},
    },
    "counterexample-41a": {"manifold": {"kind": "half_space", "dim": 3}},
    "submersion": {
        "manifold": {"kind": "euclidean", "dim": 3},
        "rho": {"preset": "linear", "coeffs": [1.0, 0.0, 0.0]},
        "grid": {"lower": -0.5, "upper": 0.5, "resolution": 3},
        "submersion": {"fiber_dim": 1},
    },
}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _describe(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def build_config(experiment: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Defaults of ``experiment`` merged with ``overrides``, then validated."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    overrides = dict(overrides or {})
    named = overrides.get("experiment", experiment)
    if named != experiment:
        raise ConfigError(f"config is for experiment {named!r}, not {experiment!r}")
    doc = deep_merge(DEFAULTS[experiment], overrides)
    doc["experiment"] = experiment
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as err:
        raise ConfigError(_describe(err)) from None


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def _bounds(value: Bound, dim: int, what: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(dim, arr[0])
    if arr.shape != (dim,):
        raise ConfigError(f"grid.{what} needs 1 or {dim} entries, got {arr.size}")
    return arr


def grid_points(spec: GridSpec, dim: int) -> np.ndarray:
    """Tensor grid in lexicographic order, optionally restricted to an annulus."""
    if spec.resolution == 0:
        raise ConfigError("grid is empty: resolution is 0")
    lo, hi = _bounds(spec.lower, dim, "lower"), _bounds(spec.upper, dim, "upper")
    if np.any(hi < lo):
        raise ConfigError("grid.upper must not be below grid.lower")
    axes = [np.linspace(a, b, spec.resolution) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    if spec.annulus is not None:
        r = np.linalg.norm(pts, axis=-1)
        pts = pts[(r >= spec.annulus[0]) & (r <= spec.annulus[1])]
    if len(pts) == 0:
        raise ConfigError("grid is empty after the annulus restriction")
    return pts
