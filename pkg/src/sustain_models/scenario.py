"""Scenario documents: parsing, validation, serialization and overrides.

A scenario is a JSON object describing one run::

    {
      "schema_version": 1,
      "name": "lorenz-demo",
      "model": "lorenz",
      "parameters": {"sigma": 10.0, "rho": 28.0, "beta": 2.6666666666666665,
                     "initial_state": [1.0, 1.0, 1.0]},
      "time_grid": {"t0": 0.0, "t1": 50.0, "step": 0.01},
      "units": {"time": "dimensionless"}
    }

Unknown keys are errors. Validation reports every violation with its dotted
field path instead of stopping at the first one.
"""

from __future__ import annotations

import copy
import difflib
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

from .errors import SustainModelsError

SCHEMA_VERSION = 1

MODELS = (
    "lorenz",
    "eco-simple",
    "eco-generalized",
    "transport",
    "abatement",
    "eroei",
    "crime-ode",
    "crime-control",
    "sweep",
    "indicators",
)
STOCHASTIC_MODELS = ("eco-generalized",)
TRAJECTORY_MODELS = ("lorenz", "eco-simple", "eco-generalized", "eroei", "crime-ode")
SWEEP_FAMILIES = ("lorenz", "eco-simple", "crime-ode")

_MISSING = object()


@dataclass(frozen=True)
class Issue:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}" if self.path else self.message


class ScenarioError(SustainModelsError):
    """Scenario could not be parsed or failed validation (CLI exit status 1)."""

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [Issue("", issues)]
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


# ---------------------------------------------------------------------------
# schema primitives


def _join(path, key):
    return f"{path}.{key}" if path else str(key)


class Num:
    CHECKS = {
        "any": (lambda v: True, "a finite number"),
        "positive": (lambda v: v > 0, "a positive number"),
        "nonneg": (lambda v: v >= 0, "a non-negative number"),
        "efficiency": (lambda v: 0 < v <= 1, "a number in (0, 1]"),
    }

    def __init__(self, check="any", default=_MISSING):
        self.check = check
        self.default = default

    def validate(self, value, path, issues):
        ok, desc = self.CHECKS[self.check]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            issues.append(Issue(path, f"expected {desc}, got {json.dumps(value)}"))
            return None
        v = float(value)
        if not math.isfinite(v) or not ok(v):
            issues.append(Issue(path, f"must be {desc} (got {value!r})"))
            return None
        return v


class Int:
    def __init__(self, minimum=None, default=_MISSING, optional=False):
        self.minimum = minimum
        self.default = default
        self.optional = optional

    def validate(self, value, path, issues):
        if value is None and self.optional:
            return None
        if isinstance(value, bool) or not (isinstance(value, int) or
                                           (isinstance(value, float) and value.is_integer())):
            issues.append(Issue(path, f"expected an integer, got {json.dumps(value)}"))
            return None
        v = int(value)
        if self.minimum is not None and v < self.minimum:
            issues.append(Issue(path, f"must be an integer >= {self.minimum} (got {v})"))
            return None
        return v


class Bool:
    def __init__(self, default=_MISSING):
        self.default = default

    def validate(self, value, path, issues):
        if not isinstance(value, bool):
            issues.append(Issue(path, f"expected true or false, got {json.dumps(value)}"))
            return None
        return value


class Str:
    def __init__(self, choices=None, default=_MISSING):
        self.choices = choices
        self.default = default

    def validate(self, value, path, issues):
        if not isinstance(value, str) or not value:
            issues.append(Issue(path, f"expected a non-empty string, got {json.dumps(value)}"))
            return None
        if self.choices is not None and value not in self.choices:
            near = difflib.get_close_matches(value, self.choices, n=1, cutoff=0.0)
            hint = f"; did you mean {near[0]!r}?" if near else ""
            issues.append(Issue(path, f"unknown value {value!r}; expected one of "
                                      f"{', '.join(self.choices)}{hint}"))
            return None
        return value


class Vec:
    def __init__(self, check="any", length=None, min_length=1, default=_MISSING):
        self.item = Num(check)
        self.length = length
        self.min_length = min_length
        self.default = default

    def validate(self, value, path, issues):
        if not isinstance(value, list):
            issues.append(Issue(path, f"expected a list of numbers, got {json.dumps(value)}"))
            return None
        if self.length is not None and len(value) != self.length:
            issues.append(Issue(path, f"expected {self.length} numbers, got {len(value)}"))
            return None
        if len(value) < self.min_length:
            issues.append(Issue(path, f"expected at least {self.min_length} numbers"))
            return None
        before = len(issues)
        out = [self.item.validate(v, _join(path, i), issues) for i, v in enumerate(value)]
        return out if len(issues) == before else None


class NumOrVec:
    """A scalar broadcast over the grid or an explicit per-cell list."""

    def __init__(self, check="nonneg", default=_MISSING):
        self.num = Num(check)
        self.vec = Vec(check)
        self.default = default

    def validate(self, value, path, issues):
        if isinstance(value, list):
            return self.vec.validate(value, path, issues)
        return self.num.validate(value, path, issues)


class Obj:
    def __init__(self, fields, default=_MISSING, open_keys=None):
        self.fields = fields
        self.default = default
        self.open_keys = open_keys  # spec applied to keys not listed in ``fields``

    def validate(self, value, path, issues):
        if not isinstance(value, dict):
            issues.append(Issue(path, f"expected an object, got {json.dumps(value)}"))
            return None
        out = {}
        for key in value:
            if key not in self.fields and self.open_keys is None:
                near = difflib.get_close_matches(key, list(self.fields), n=1, cutoff=0.0)
                hint = f"; nearest valid key is {near[0]!r}" if near else ""
                issues.append(Issue(_join(path, key), f"unknown key{hint}"))
        for key, spec in self.fields.items():
            if key in value:
                v = spec.validate(value[key], _join(path, key), issues)
                if v is not None:
                    out[key] = v
            elif spec.default is not _MISSING:
                if spec.default is not None:
                    out[key] = copy.deepcopy(spec.default)
            else:
                issues.append(Issue(_join(path, key), "required field is missing"))
        if self.open_keys is not None:
            for key in value:
                if key not in self.fields:
                    v = self.open_keys.validate(value[key], _join(path, key), issues)
                    if v is not None:
                        out[key] = v
        return out


class ListOf:
    def __init__(self, item, min_length=1, default=_MISSING):
        self.item = item
        self.min_length = min_length
        self.default = default

    def validate(self, value, path, issues):
        if not isinstance(value, list):
            issues.append(Issue(path, f"expected a list, got {json.dumps(value)}"))
            return None
        if len(value) < self.min_length:
            issues.append(Issue(path, f"expected at least {self.min_length} entries"))
            return None
        return [self.item.validate(v, _join(path, i), issues) for i, v in enumerate(value)]


class Raw:
    """Any JSON object; validated later by a dedicated routine."""

    def __init__(self, default=_MISSING):
        self.default = default

    def validate(self, value, path, issues):
        if not isinstance(value, dict):
            issues.append(Issue(path, f"expected an object, got {json.dumps(value)}"))
            return None
        return value


# ---------------------------------------------------------------------------
# per-model parameter schemas

INITIAL_FIELD = Obj({
    "kind": Str(("uniform", "gaussian", "delta", "values")),
    "value": Num("nonneg", default=None),
    "center": Num("any", default=None),
    "width": Num("positive", default=None),
    "amplitude": Num("nonneg", default=None),
    "weight": Num("nonneg", default=None),
    "values": Vec("nonneg", default=None),
})
_INITIAL_REQUIRES = {
    "uniform": ("value",),
    "gaussian": ("center", "width", "amplitude"),
    "delta": ("center", "weight"),
    "values": ("values",),
}

LORENZ = {
    "sigma": Num("positive"),
    "rho": Num("positive"),
    "beta": Num("positive"),
    "initial_state": Vec("any", length=3),
    "lyapunov": Obj({
        "total_time": Num("positive"),
        "renormalization_interval": Num("positive", default=0.1),
        "transient": Num("nonneg", default=None),
        "step": Num("positive", default=0.001),
        "separation": Num("positive", default=1e-8),
        "seed": Int(default=0),
    }, default=None),
}
ECO_SIMPLE = {
    "r": Num("positive"),
    "c": Num("positive"),
    "b": Num("positive"),
    "m": Num("positive"),
    "initial_state": Vec("nonneg", length=2),
}
ECO_GENERALIZED = {
    "r_x": Num("positive"),
    "delta": Num("efficiency"),
    "m": Num("positive"),
    "attack_rate": Num("nonneg", default=0.1),
    "noise_x": Num("nonneg", default=0.0),
    "noise_y": Num("nonneg", default=0.0),
    "resources": ListOf(Obj({
        "capacity": Num("positive"),
        "supply": Num("nonneg", default=0.0),
        "depletion_rate": Num("nonneg", default=0.0),
    })),
    "initial_state": Obj({
        "x": Num("nonneg"),
        "y": Num("nonneg"),
        "R": Vec("nonneg"),
    }),
}
TRANSPORT = {
    "velocity": Num("any", default=0.0),
    "diffusivity": Num("nonneg", default=0.0),
    "source": NumOrVec("nonneg", default=0.0),
    "removal": NumOrVec("nonneg", default=0.0),
    "reaction": Obj({
        "kind": Str(("none", "linear-decay"), default="none"),
        "rate": Num("nonneg", default=0.0),
    }, default={"kind": "none", "rate": 0.0}),
    "initial": INITIAL_FIELD,
}
ABATEMENT = {
    "sources": ListOf(Obj({
        "baseline": Num("nonneg"),
        "cost_coefficient": Num("positive"),
        "max_reduction": Num("nonneg", default=None),
    })),
    "emission_limit": Num("nonneg"),
}
EROEI = {
    "eta": Num("positive"),
    "kappa": Num("positive"),
    "n": Num("positive"),
    "beta": Num("nonneg"),
    "E_i0": Num("positive"),
    "R_max": Num("positive"),
    "R0": Num("positive"),
}
CRIME_ODE = {
    "a": Num("any"),
    "b": Num("nonneg"),
    "c": Num("nonneg"),
    "d": Num("nonneg"),
    "inputs": Obj({
        "u1": Num("nonneg", default=0.0),
        "u2": Num("nonneg", default=0.0),
        "trust": Num("nonneg", default=0.0),
    }, default={"u1": 0.0, "u2": 0.0, "trust": 0.0}),
    "initial_state": Num("nonneg"),
}
CRIME_CONTROL = {
    "diffusivity": Num("nonneg"),
    "alpha": Num("positive"),
    "growth": Obj({"r": Num("any"), "K": Num("positive")}),
    "budget": Num("positive"),
    "initial": INITIAL_FIELD,
    "initial_control": Num("nonneg", default=0.0),
    "optimizer": Obj({
        "iterations": Int(minimum=0, default=200),
        "step": Num("positive", default=1.0),
    }, default={"iterations": 200, "step": 1.0}),
}
SWEEP = {
    "family": Str(SWEEP_FAMILIES),
    "base": Raw(),
    "parameter": Str(),
    "range": Vec("any", length=2),
    "samples": Int(minimum=2),
    "seeds": ListOf(Vec("any"), min_length=0, default=[]),
    "attractor_time": Num("positive", default=None),
    "parallel": Bool(default=False),
}
INDICATORS = {
    "source": Raw(),
    "component": Str(),
    "window": Int(minimum=3),
}

PARAMETERS = {
    "lorenz": LORENZ,
    "eco-simple": ECO_SIMPLE,
    "eco-generalized": ECO_GENERALIZED,
    "transport": TRANSPORT,
    "abatement": ABATEMENT,
    "eroei": EROEI,
    "crime-ode": CRIME_ODE,
    "crime-control": CRIME_CONTROL,
    "sweep": SWEEP,
    "indicators": INDICATORS,
}

UNITS = {
    "lorenz": ("time",),
    "eco-simple": ("time", "population"),
    "eco-generalized": ("time", "population", "resource"),
    "transport": ("time", "length", "concentration"),
    "abatement": ("emissions", "cost"),
    "eroei": ("time", "energy"),
    "crime-ode": ("time",),
    "crime-control": ("time", "length", "density"),
}

# trajectory column names per model, used by indicator projections and outputs
COMPONENTS = {
    "lorenz": ("x", "y", "z"),
    "eco-simple": ("N1", "N2"),
    "eroei": ("R", "E_o", "E_i", "eroei"),
    "crime-ode": ("x",),
}

NEEDS_TIME = ("lorenz", "eco-simple", "eco-generalized", "transport", "eroei",
              "crime-ode", "crime-control")
NEEDS_SPACE = ("transport", "crime-control")

TIME_GRID = Obj({"t0": Num("any", default=0.0), "t1": Num("any"), "step": Num("positive")})
SPATIAL_GRID = Obj({
    "x0": Num("any", default=0.0),
    "x1": Num("any"),
    "cells": Int(minimum=3),
    "boundary": Str(("zero-flux", "periodic", "absorbing"), default="zero-flux"),
})
OUTPUT = Obj({
    "table": Str(),
    "series": ListOf(Str(), min_length=1, default=None),
    "every": Int(minimum=1, default=1),
})


def units_for(model: str, parameters: dict | None = None) -> tuple[str, ...] | None:
    """Quantities needing a unit annotation; None when the underlying model is unknown."""
    if model == "sweep":
        family = (parameters or {}).get("family")
        return UNITS[family] if family in SWEEP_FAMILIES else None
    if model == "indicators":
        src = (parameters or {}).get("source")
        inner = src.get("model") if isinstance(src, dict) else None
        return UNITS[inner] if inner in TRAJECTORY_MODELS else None
    return UNITS[model]


# ---------------------------------------------------------------------------
# the scenario value


@dataclass(frozen=True)
class Scenario:
    name: str
    model: str
    parameters: dict
    time_grid: dict | None = None
    spatial_grid: dict | None = None
    seed: int | None = None
    units: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def stochastic(self) -> bool:
        return is_stochastic(self.model, self.parameters)

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "name": self.name,
            "model": self.model,
            "parameters": copy.deepcopy(self.parameters),
            "units": dict(self.units),
            "outputs": copy.deepcopy(self.outputs),
        }
        if self.time_grid is not None:
            d["time_grid"] = dict(self.time_grid)
        if self.spatial_grid is not None:
            d["spatial_grid"] = dict(self.spatial_grid)
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; independent of key order in the source file."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def is_stochastic(model, parameters) -> bool:
    if model in STOCHASTIC_MODELS:
        return True
    if model == "indicators" and isinstance(parameters.get("source"), dict):
        return parameters["source"].get("model") in STOCHASTIC_MODELS
    return False


def serialize_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n"


TOP_LEVEL = ("schema_version", "name", "model", "parameters", "time_grid", "spatial_grid",
             "seed", "units", "outputs")


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document.

    Raises
    ------
    ScenarioError
        Carrying every violation found; JSON syntax errors report line and
        column.
    """
    return scenario_from_dict(load_document(text))


def load_document(text: str):
    """Decode JSON text, reporting syntax errors with line and column."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([Issue("", f"JSON syntax error at line {exc.lineno}, "
                                       f"column {exc.colno}: {exc.msg}")]) from None


def scenario_from_dict(doc: Any) -> Scenario:
    issues: list[Issue] = []
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    for key in doc:
        if key not in TOP_LEVEL:
            near = difflib.get_close_matches(key, TOP_LEVEL, n=1, cutoff=0.0)
            issues.append(Issue(key, f"unknown key; nearest valid key is {near[0]!r}"))

    version = doc.get("schema_version", _MISSING)
    if version is _MISSING:
        issues.append(Issue("schema_version", "required field is missing"))
    elif version != SCHEMA_VERSION or isinstance(version, bool):
        issues.append(Issue("schema_version", f"unsupported schema version {version!r}; "
                                              f"this toolkit reads version {SCHEMA_VERSION}"))

    model = Str(MODELS).validate(doc["model"], "model", issues) if "model" in doc else None
    if "model" not in doc:
        issues.append(Issue("model", "required field is missing"))
    name = doc.get("name", model or "scenario")
    name = Str().validate(name, "name", issues)

    if model is None:
        raise ScenarioError(issues)

    body = _validate_body(model, doc, "", issues, top_level=True)
    if issues:
        raise ScenarioError(issues)
    return Scenario(name=name, model=model, schema_version=SCHEMA_VERSION, **body)


def _validate_body(model, doc, prefix, issues, top_level):
    """Validate parameters, grids, seed, units and outputs of one model run."""
    params_raw = doc.get("parameters", _MISSING)
    if params_raw is _MISSING:
        issues.append(Issue(_join(prefix, "parameters"), "required field is missing"))
        params = None
    else:
        params = Obj(PARAMETERS[model]).validate(params_raw, _join(prefix, "parameters"), issues)

    tg = sg = None
    if model in NEEDS_TIME:
        if "time_grid" in doc:
            tg = TIME_GRID.validate(doc["time_grid"], _join(prefix, "time_grid"), issues)
            if tg is not None and "t1" in tg and "step" in tg:
                _check_time_grid(tg, _join(prefix, "time_grid"), issues)
        else:
            issues.append(Issue(_join(prefix, "time_grid"), f"required for model {model!r}"))
    elif "time_grid" in doc:
        issues.append(Issue(_join(prefix, "time_grid"), f"not used by model {model!r}"))
    if model in NEEDS_SPACE:
        if "spatial_grid" in doc:
            sg = SPATIAL_GRID.validate(doc["spatial_grid"], _join(prefix, "spatial_grid"), issues)
            if sg is not None and "x1" in sg and not sg["x1"] > sg["x0"]:
                issues.append(Issue(_join(prefix, "spatial_grid.x1"), "must exceed x0"))
        else:
            issues.append(Issue(_join(prefix, "spatial_grid"), f"required for model {model!r}"))
    elif "spatial_grid" in doc:
        issues.append(Issue(_join(prefix, "spatial_grid"), f"not used by model {model!r}"))

    seed = None
    stochastic = params is not None and is_stochastic(model, params)
    if "seed" in doc and doc["seed"] is not None:
        seed = Int().validate(doc["seed"], _join(prefix, "seed"), issues)
        if seed is not None and not stochastic and params is not None:
            issues.append(Issue(_join(prefix, "seed"), f"model {model!r} is deterministic; "
                                                       "remove the seed"))
    elif stochastic:
        issues.append(Issue(_join(prefix, "seed"), f"required: model {model!r} is stochastic"))

    if params is not None:
        _cross_checks(model, params, sg, _join(prefix, "parameters"), issues)

    body = {"parameters": params, "time_grid": tg, "spatial_grid": sg, "seed": seed}
    if not top_level:
        return body

    needed = units_for(model, params)
    units = {}
    raw_units = doc.get("units", {})
    if not isinstance(raw_units, dict):
        issues.append(Issue("units", "expected an object mapping quantities to unit strings"))
        raw_units = {}
    for key, v in raw_units.items():
        if needed is None:
            # underlying model invalid and already reported; keep well-formed entries
            if isinstance(v, str) and v.strip():
                units[key] = v
        elif key not in needed:
            near = difflib.get_close_matches(key, needed, n=1, cutoff=0.0)
            hint = f"; nearest valid key is {near[0]!r}" if near else ""
            issues.append(Issue(_join("units", key), f"unknown quantity{hint}"))
        elif not isinstance(v, str) or not v.strip():
            issues.append(Issue(_join("units", key), "unit annotation must be a non-empty string"))
        else:
            units[key] = v
    for key in needed or ():
        if key not in raw_units:
            issues.append(Issue(_join("units", key), "unit annotation required"))
    body["units"] = units
    body["outputs"] = _validate_outputs(model, doc.get("outputs", _MISSING), params, issues)
    return body


def _check_time_grid(tg, path, issues):
    from .numerics import TimeGrid

    try:
        TimeGrid(tg["t0"], tg["t1"], tg["step"])
    except ValueError as exc:
        issues.append(Issue(path, str(exc)))


def _cross_checks(model, p, sg, path, issues):
    """Invariants spanning several fields, plus a trial build of the typed objects."""
    if model == "abatement":
        for i, s in enumerate(p.get("sources") or []):
            if s and s.get("max_reduction") is not None and "baseline" in s \
                    and s["max_reduction"] > s["baseline"]:
                issues.append(Issue(_join(path, f"sources.{i}.max_reduction"),
                                    "must not exceed the baseline emissions"))
    elif model == "eroei":
        if "R0" in p and "R_max" in p and p["R0"] > p["R_max"]:
            issues.append(Issue(_join(path, "R0"), "must lie in (0, R_max]"))
    elif model == "eco-generalized":
        res = p.get("resources")
        init = p.get("initial_state")
        if res and init and "R" in init and len(init["R"]) != len(res):
            issues.append(Issue(_join(path, "initial_state.R"),
                                f"expected {len(res)} resource levels, got {len(init['R'])}"))
    elif model in ("transport", "crime-control"):
        init = p.get("initial")
        if init and "kind" in init:
            for key in _INITIAL_REQUIRES[init["kind"]]:
                if key not in init:
                    issues.append(Issue(_join(path, f"initial.{key}"),
                                        f"required for initial kind {init['kind']!r}"))
            if sg is not None and init["kind"] == "values" and "values" in init \
                    and len(init["values"]) != sg["cells"]:
                issues.append(Issue(_join(path, "initial.values"),
                                    f"expected {sg['cells']} values, got {len(init['values'])}"))
        if model == "transport" and sg is not None:
            for key in ("source", "removal"):
                v = p.get(key)
                if isinstance(v, list) and len(v) != sg["cells"]:
                    issues.append(Issue(_join(path, key),
                                        f"expected {sg['cells']} values, got {len(v)}"))
    elif model == "sweep":
        _check_sweep(p, path, issues)
    elif model == "indicators":
        _check_indicators(p, path, issues)


def _check_sweep(p, path, issues):
    family = p.get("family")
    if family is None:
        return
    # the base record is the family's parameters without run-specific settings
    spec = {k: v for k, v in PARAMETERS[family].items() if k not in ("initial_state", "lyapunov")}
    numeric = [k for k, v in spec.items() if isinstance(v, Num)]
    base = p.get("base")
    if isinstance(base, dict):
        checked = Obj(spec).validate(base, _join(path, "base"), issues)
        if checked is not None:
            p["base"] = checked
    param = p.get("parameter")
    if param is not None:
        if param.startswith("parameters."):
            param = param[len("parameters."):]
            p["parameter"] = param
        if param not in numeric:
            issues.append(Issue(_join(path, "parameter"),
                                f"{param!r} is not a numeric parameter of {family!r}; "
                                f"choose one of {', '.join(numeric)}"))
    rng = p.get("range")
    if rng is not None and rng[0] == rng[1]:
        issues.append(Issue(_join(path, "range"), "range endpoints must differ"))
    dim = {"lorenz": 3, "eco-simple": 2, "crime-ode": 1}[family]
    for i, s in enumerate(p.get("seeds") or []):
        if s is not None and len(s) != dim:
            issues.append(Issue(_join(path, f"seeds.{i}"), f"expected {dim} coordinates"))


def _check_indicators(p, path, issues):
    src = p.get("source")
    if not isinstance(src, dict):
        return
    spath = _join(path, "source")
    for key in src:
        if key not in ("model", "parameters", "time_grid", "seed"):
            near = difflib.get_close_matches(key, ("model", "parameters", "time_grid", "seed"),
                                             n=1, cutoff=0.0)
            issues.append(Issue(_join(spath, key), f"unknown key; nearest valid key is {near[0]!r}"))
    model = Str(TRAJECTORY_MODELS).validate(src.get("model"), _join(spath, "model"), issues)
    if model is None:
        return
    body = _validate_body(model, {k: v for k, v in src.items() if k != "model"}, spath, issues,
                          top_level=False)
    norm = {"model": model, "parameters": body["parameters"], "time_grid": body["time_grid"]}
    if body["seed"] is not None:
        norm["seed"] = body["seed"]
    p["source"] = norm
    comp = p.get("component")
    if comp is not None and body["parameters"] is not None:
        names = component_names(model, body["parameters"])
        if comp not in names:
            issues.append(Issue(_join(path, "component"),
                                f"unknown component {comp!r}; expected one of {', '.join(names)}"))


def component_names(model, parameters) -> tuple[str, ...]:
    if model == "eco-generalized":
        n = len(parameters.get("resources") or [])
        return ("x", "y") + tuple(f"R{i + 1}" for i in range(n))
    return COMPONENTS[model]


def _validate_outputs(model, raw, params, issues):
    from .runner import TABLES

    tables = TABLES[model](params or {})
    if raw is _MISSING:
        return [{"table": name, "every": 1} for name in tables]
    reqs = ListOf(OUTPUT, min_length=1).validate(raw, "outputs", issues)
    if reqs is None:
        return []
    out = []
    for i, req in enumerate(reqs):
        if req is None or "table" not in req:
            continue
        name = req["table"]
        if name not in tables:
            near = difflib.get_close_matches(name, list(tables), n=1, cutoff=0.0)
            issues.append(Issue(f"outputs.{i}.table",
                                f"unknown table {name!r} for model {model!r}; "
                                f"nearest is {near[0]!r}"))
            continue
        if req.get("series") is not None:
            cols = tables[name]
            for s in req["series"]:
                if s is not None and s not in cols:
                    issues.append(Issue(f"outputs.{i}.series",
                                        f"unknown series {s!r}; table {name!r} has "
                                        f"{', '.join(cols)}"))
        entry = {"table": name, "every": req.get("every", 1)}
        if req.get("series") is not None:
            entry["series"] = req["series"]
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# overrides


def parse_value(text: str):
    """Override values are JSON where they parse as JSON, strings otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``path=value`` assignments to a raw scenario document (before validation).

    Paths are dotted; list elements are addressed by integer segments. The
    parent of the assigned key must already exist.
    """
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ScenarioError([Issue(item, "override must have the form path=value")])
        path, text = item.split("=", 1)
        path = path.strip()
        parts = path.split(".")
        if not path or any(not p for p in parts):
            raise ScenarioError([Issue(path, "malformed override path")])
        node = doc
        for i, part in enumerate(parts[:-1]):
            node = _descend(node, part, ".".join(parts[: i + 1]))
        last = parts[-1]
        value = parse_value(text)
        if isinstance(node, list):
            idx = _index(node, last, path)
            node[idx] = value
        elif isinstance(node, dict):
            node[last] = value
        else:
            raise ScenarioError([Issue(path, "cannot assign inside a scalar value")])
    return doc


def _index(node, part, path):
    try:
        idx = int(part)
    except ValueError:
        raise ScenarioError([Issue(path, f"{part!r} is not a list index")]) from None
    if not -len(node) <= idx < len(node):
        raise ScenarioError([Issue(path, f"index {idx} out of range")])
    return idx


def _descend(node, part, path):
    if isinstance(node, list):
        return node[_index(node, part, path)]
    if isinstance(node, dict):
        if part not in node:
            raise ScenarioError([Issue(path, "no such field in the scenario")])
        return node[part]
    raise ScenarioError([Issue(path, "cannot descend into a scalar value")])


def get_path(doc: dict, path: str):
    node = doc
    for i, part in enumerate(path.split(".")):
        node = _descend(node, part, ".".join(path.split(".")[: i + 1]))
    return node
