"""Scenario configuration: JSON schema, validation and object builders.

A scenario is a JSON document naming a geometry, a motion, material
parameters and a velocity family from fixed registries.  Nothing is parsed
as an expression; every field is a named closed-form family.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import evolving as ev
from . import fields as fl
from . import surface as sf
from .weak_form import MaterialParams

SCHEMA_VERSION = "1.0"


class ConfigError(ValueError):
    """Schema or semantic violation in a scenario config; ``path`` is a JSON pointer."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path or "/"
        self.message = message


_vec = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}
_pos = {"type": "number", "exclusiveMinimum": 0}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "twophase scenario",
    "type": "object",
    "required": ["name", "domain", "geometry", "motion", "material", "velocity"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_\\-]+$"},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "domain": {
            "type": "object",
            "required": ["lower", "upper"],
            "additionalProperties": False,
            "properties": {"lower": _vec, "upper": _vec},
        },
        "geometry": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["circle", "ellipse", "sphere", "ellipsoid", "fourier_curve"]},
                "center": _vec,
                "radius": _pos,
                "semi_axes": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 3},
                "angle": {"type": "number"},
                "r0": _pos,
                "cos_coeffs": {"type": "array", "items": {"type": "number"}},
                "sin_coeffs": {"type": "array", "items": {"type": "number"}},
                "nodes": {"type": "integer", "minimum": 8},
                "n_theta": {"type": "integer", "minimum": 4},
                "n_phi": {"type": "integer", "minimum": 8},
            },
        },
        "motion": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["identity", "translation", "rotation", "shear", "sine_shear", "dilation"]},
                "T": _pos,
                "velocity": _vec,
                "omega": {"type": "number"},
                "center": _vec,
                "axis": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                "rate": {"type": "number"},
                "amplitude": {"type": "number"},
                "wavenumber": {"type": "number"},
            },
        },
        "material": {
            "type": "object",
            "required": ["beta1", "beta2", "mu1", "mu2", "sigma"],
            "additionalProperties": False,
            "properties": {
                "beta1": _pos,
                "beta2": _pos,
                "mu1": _pos,
                "mu2": _pos,
                "sigma": {"type": "number", "minimum": 0},
            },
        },
        "velocity": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["zero", "uniform", "rigid_rotation", "simple_shear", "taylor_green",
                                  "rankine", "random_divfree"]},
                "value": _vec,
                "omega": {"type": "number"},
                "center": _vec,
                "rate": {"type": "number"},
                "nu": _pos,
                "amplitude": {"type": "number"},
                "k": _pos,
                "radius": _pos,
                "seed": {"type": "integer", "minimum": 0},
                "modes": {"type": "integer", "minimum": 1},
            },
        },
        "weak_solution": {"type": "boolean"},
        "audit": {"type": "boolean"},
        "battery": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "radius": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                "variant": {"enum": ["open", "closed_at_zero"]},
                "anchored": {"type": "boolean"},
            },
        },
        "resolution": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "time_dt": _pos,
                "fd_dt": _pos,
                "grid_h": _pos,
                "pressure_h": _pos,
                "pressure_levels": {"type": "array", "items": _pos, "minItems": 3},
                "surface_M": {"type": "integer", "minimum": 8},
            },
        },
        "expected": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"pressure_jump": {"type": "number"}},
        },
        "checks": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
    },
}

DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "seed": 20240601,
    "weak_solution": False,
    "audit": False,
    "battery": {"count": 6, "radius": [0.5, 0.8], "variant": "open", "anchored": True},
    "resolution": {"time_dt": 0.1, "fd_dt": 1e-3, "grid_h": 1 / 256, "pressure_h": 1 / 128,
                   "pressure_levels": [1 / 16, 1 / 32, 1 / 64], "surface_M": 256},
    "expected": {},
    "tolerances": {},
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate(config: dict) -> dict:
    """Schema and semantic validation; returns the config merged with defaults."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _pointer(err.absolute_path))
    cfg = _merge(DEFAULTS, config)
    _semantic_checks(cfg)
    return cfg


def _dim_of(cfg) -> int:
    return 3 if cfg["geometry"]["kind"] in ("sphere", "ellipsoid") else 2


def _semantic_checks(cfg: dict) -> None:
    m = cfg["material"]
    if m["beta1"] > m["beta2"]:
        raise ConfigError("invariant beta1 <= beta2 violated (inner phase must be the lighter one)",
                          "/material/beta1")
    if m["beta1"] == m["beta2"] and m["mu1"] != m["mu2"]:
        raise ConfigError("equal densities need equal viscosities", "/material/mu2")
    dim = _dim_of(cfg)
    lo, hi = np.asarray(cfg["domain"]["lower"], float), np.asarray(cfg["domain"]["upper"], float)
    if lo.size != dim or hi.size != dim:
        raise ConfigError(f"domain corners must have {dim} components", "/domain")
    if np.any(hi <= lo):
        raise ConfigError("upper corner must exceed lower corner", "/domain/upper")
    res = cfg["resolution"]
    if len(res["pressure_levels"]) < 3:
        raise ConfigError("a convergence study needs at least three levels", "/resolution/pressure_levels")
    rad = cfg["battery"]["radius"]
    if rad[0] >= rad[1]:
        raise ConfigError("battery radius range must be increasing", "/battery/radius")
    try:
        scen = Scenario(cfg)
        traj = scen.trajectory()
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc), "/geometry") from exc
    margin = float(rad[1])
    for t in traj.times:
        g = traj.surface(t)
        gap = min(float(np.min(g.nodes - lo)), float(np.min(hi - g.nodes)))
        if gap < margin:
            raise ConfigError(
                f"interface at t={t:g} is {gap:.3g} from the box; need margin >= support radius {margin:g}",
                "/domain",
            )
    from .checks import CATALOG

    for i, cid in enumerate(cfg.get("checks", [])):
        if cid not in CATALOG:
            raise ConfigError(f"unknown check id {cid!r}", f"/checks/{i}")
    for cid in cfg["tolerances"]:
        if cid not in CATALOG:
            raise ConfigError(f"tolerance given for unknown check id {cid!r}", f"/tolerances/{cid}")


# -- builders -----------------------------------------------------------------


def build_surface(geo: dict, m: int | None = None):
    kind = geo["kind"]
    nodes = int(m or geo.get("nodes", 256))
    if kind == "circle":
        return sf.circle(geo.get("center", (0.0, 0.0)), geo.get("radius", 1.0), nodes)
    if kind == "ellipse":
        a, b = geo.get("semi_axes", (1.5, 0.7))
        return sf.ellipse(geo.get("center", (0.0, 0.0)), a, b, nodes, geo.get("angle", 0.0))
    if kind == "fourier_curve":
        return sf.fourier_curve(geo.get("center", (0.0, 0.0)), geo.get("r0", 1.0), geo.get("cos_coeffs", ()),
                                geo.get("sin_coeffs", ()), nodes)
    nt, nph = geo.get("n_theta", 64), geo.get("n_phi", 128)
    if kind == "sphere":
        return sf.sphere(geo.get("center", (0.0, 0.0, 0.0)), geo.get("radius", 1.0), nt, nph)
    if kind == "ellipsoid":
        return sf.Ellipsoid(geo.get("center", (0.0, 0.0, 0.0)), geo.get("semi_axes", (1.2, 1.0, 0.8)), nt, nph)
    raise KeyError(f"unknown geometry kind {kind!r}")


def build_motion(mot: dict, dim: int):
    kind = mot["kind"]
    T = float(mot.get("T", 1.0))
    zero = (0.0,) * dim
    if kind == "identity":
        return ev.Identity(dim, T)
    if kind == "translation":
        return ev.Translation(mot.get("velocity", zero), T)
    if kind == "rotation":
        return ev.Rotation(mot.get("omega", 1.0), mot.get("center", zero), mot.get("axis", (0.0, 0.0, 1.0)), T)
    if kind == "shear":
        return ev.Shear(mot.get("rate", 0.5), dim, T)
    if kind == "sine_shear":
        return ev.SineShear(mot.get("amplitude", 0.2), mot.get("wavenumber", 1.0), dim, T)
    if kind == "dilation":
        return ev.Dilation(mot.get("rate", 0.2), mot.get("center", zero), T)
    raise KeyError(f"unknown motion kind {kind!r}")


def build_velocity(vel: dict, dim: int):
    kind = vel["kind"]
    if kind == "zero":
        return fl.ZeroVelocity(dim)
    if kind == "uniform":
        return fl.UniformVelocity(vel.get("value", (0.0,) * dim))
    if kind == "rigid_rotation":
        return fl.RigidRotation(vel.get("omega", 1.0), vel.get("center", (0.0, 0.0)))
    if kind == "simple_shear":
        return fl.SimpleShear(vel.get("rate", 0.5), dim)
    if kind == "taylor_green":
        return fl.TaylorGreen(vel.get("nu", 0.1), vel.get("amplitude", 1.0), vel.get("k", 1.0))
    if kind == "rankine":
        return fl.RankineVortex(vel.get("omega", 1.0), vel.get("radius", 1.0), vel.get("center", (0.0, 0.0)))
    if kind == "random_divfree":
        return fl.RandomDivFree(vel.get("seed", 0), vel.get("modes", 4), vel.get("amplitude", 1.0))
    raise KeyError(f"unknown velocity kind {kind!r}")


@dataclass
class Scenario:
    """Validated config with cached builders."""

    config: dict

    def __post_init__(self):
        self._cache: dict[str, Any] = {}

    @property
    def name(self) -> str:
        return self.config["name"]

    @property
    def dim(self) -> int:
        return _dim_of(self.config)

    @property
    def seed(self) -> int:
        return int(self.config["seed"])

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.config["domain"]["lower"], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.config["domain"]["upper"], dtype=float)

    @property
    def resolution(self) -> dict:
        return self.config["resolution"]

    @property
    def weak_solution(self) -> bool:
        return bool(self.config["weak_solution"])

    def _cached(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    def surface(self, m: int | None = None):
        m = m or self.resolution.get("surface_M")
        return self._cached(("surface", m), lambda: build_surface(self.config["geometry"], m))

    def diffeo(self):
        return self._cached("diffeo", lambda: build_motion(self.config["motion"], self.dim))

    def velocity(self):
        return self._cached("velocity", lambda: build_velocity(self.config["velocity"], self.dim))

    def params(self) -> MaterialParams:
        m = self.config["material"]
        return MaterialParams(m["beta1"], m["beta2"], m["mu1"], m["mu2"], m["sigma"])

    def trajectory(self, m: int | None = None) -> ev.BulkTrajectory:
        return self._cached(("traj", m), lambda: ev.BulkTrajectory(self.surface(m), self.diffeo(), self.lower,
                                                                   self.upper))

    def battery(self, rng: np.random.Generator, count: int | None = None, variant: str | None = None):
        b = self.config["battery"]
        anchors = self.surface().nodes if b["anchored"] else None
        return fl.test_battery(rng, count or b["count"], self.lower, self.upper, self.diffeo().T,
                               tuple(b["radius"]), anchors, variant or b["variant"], self.dim)


# -- registry -------------------------------------------------------------------


def builtin_names() -> list[str]:
    root = resources.files("twophase") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin_path(name: str) -> Path:
    root = resources.files("twophase") / "configs"
    path = root / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"no built-in scenario named {name!r}")
    return Path(str(path))


def load_config(source, overrides: dict | None = None) -> dict:
    """Read a config from a path, a built-in name or a dict; apply overrides; validate."""
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        path = Path(source)
        if not path.exists() and not str(source).endswith(".json"):
            path = builtin_path(str(source))
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    for key, val in (overrides or {}).items():
        _set_path(raw, key, val)
    return validate(raw)


def _set_path(cfg: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def load_scenario(source, overrides: dict | None = None) -> Scenario:
    return Scenario(load_config(source, overrides))
