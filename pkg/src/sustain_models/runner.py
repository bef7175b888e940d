"""Execute validated scenarios and persist their outputs.

Every run writes one CSV per output table plus a ``run.json`` record holding
the scenario digest, toolkit version, timestamps, output checksums and clamp
counts. Numbers are written in shortest round-trip form, so identical
scenarios give byte-identical CSV files.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .climate import (LorenzParams, LyapunovSettings, lorenz_equilibria, lorenz_family,
                      max_lyapunov, simulate_lorenz)
from .ecosystem import (GeneralizedEcoParams, Resource, SimpleEcoParams, simple_family,
                        simulate_generalized, simulate_simple)
from .energy import EroeiParams, simulate_depletion
from .errors import ModelError
from .indicators import SweepSettings, bifurcation_sweep, lag1_autocorrelation, rolling_variance
from .numerics import SpatialGrid1D, TimeGrid
from .pollution import (AbatementProblem, AbatementSource, ConcentrationField, TransportConfig,
                        linear_decay, optimize_abatement, simulate_transport, total_mass)
from .scenario import Scenario, component_names
from .socio import (ControlField, ControlProblem, CrimeInputs, CrimeOdeParams, LogisticGrowth,
                    crime_equilibrium, crime_family, forward_crime_pde, optimize_police,
                    project_budget, simulate_crime_ode)

RECORD_NAME = "run.json"


def _tables_lorenz(p):
    t = {"trajectory": ("t", "x", "y", "z"), "equilibria": ("x", "y", "z")}
    if p.get("lyapunov"):
        t["lyapunov"] = ("exponent",)
    return t


def _tables_generalized(p):
    n = len(p.get("resources") or [])
    return {"trajectory": ("t", "x", "y") + tuple(f"R{i + 1}" for i in range(n))}


def _tables_crime_ode(p):
    t = {"trajectory": ("t", "x")}
    if p.get("a", 0.0) != 0.0:
        t["equilibrium"] = ("x_star", "stable")
    return t


TABLES = {
    "lorenz": _tables_lorenz,
    "eco-simple": lambda p: {"trajectory": ("t", "N1", "N2", "V")},
    "eco-generalized": _tables_generalized,
    "transport": lambda p: {"snapshots": ("t", "x", "C"), "mass": ("t", "mass")},
    "abatement": lambda p: {
        "allocations": ("source", "baseline", "reduction", "emission", "marginal_cost"),
        "summary": ("total_cost", "multiplier", "total_emission", "emission_limit"),
        "objective_history": ("iteration", "multiplier", "cost", "total_emission"),
    },
    "eroei": lambda p: {"trajectory": ("t", "R", "E_o", "E_i", "eroei")},
    "crime-ode": _tables_crime_ode,
    "crime-control": lambda p: {
        "crime": ("t", "x", "C"),
        "control": ("t", "x", "P"),
        "objective_history": ("iteration", "objective"),
    },
    "sweep": lambda p: {
        "sweep": ("parameter", "equilibria", "leading_sign", "leading_eigenvalue",
                  "attractor_bound", "failed_seeds"),
        "transitions": ("lo", "hi", "count_change", "stability_change"),
    },
    "indicators": lambda p: {
        "series": ("t", "value"),
        "indicators": ("t", "variance", "lag1_autocorrelation"),
    },
}

@dataclass
class OutputTable:
    name: str
    columns: tuple[str, ...]
    rows: np.ndarray
    block_column: str | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(-1, len(self.columns)) if rows.size else rows.reshape(0, len(self.columns))
        if rows.shape[1] != len(self.columns):
            raise ValueError(f"table {self.name!r}: {rows.shape[1]} values per row for "
                             f"{len(self.columns)} columns")
        self.rows = rows

    def select(self, series, every: int) -> "OutputTable":
        cols = list(self.columns)
        if series is not None:
            keep = [c for c in cols if c in series or c == self.block_column
                    or (c == "t" and "t" in cols)]
        else:
            keep = cols
        idx = [cols.index(c) for c in keep]
        rows = self.rows[:, idx]
        if every > 1 and self.block_column is None:
            rows = rows[::every]
        return OutputTable(self.name, tuple(keep), rows, self.block_column)


def format_number(v: float) -> str:
    """Shortest round-trip text; integers without a fraction, non-finite as nan/inf."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def table_to_csv(table: OutputTable) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([format_number(v) for v in row])
    return buf.getvalue().encode("utf-8")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    return header, data.reshape(-1, len(header))


@dataclass
class RunRecord:
    scenario_name: str
    model: str
    scenario_digest: str
    toolkit_version: str
    backend: str
    seed: int | None
    started: str
    finished: str | None = None
    status: str = "running"
    error: str | None = None
    outputs: list = field(default_factory=list)
    clamp_events: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "RunRecord":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


class RunFailed(ModelError):
    """A model error raised while running a scenario; carries the written record."""

    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def time_grid(d) -> TimeGrid:
    return TimeGrid(d["t0"], d["t1"], d["step"])


def spatial_grid(d) -> SpatialGrid1D:
    return SpatialGrid1D(d["x0"], d["x1"], d["cells"], d["boundary"])


def initial_field(spec, grid: SpatialGrid1D) -> np.ndarray:
    x = grid.centers
    kind = spec["kind"]
    if kind == "uniform":
        return np.full(grid.cells, spec["value"])
    if kind == "gaussian":
        return spec["amplitude"] * np.exp(-0.5 * ((x - spec["center"]) / spec["width"]) ** 2)
    if kind == "delta":
        out = np.zeros(grid.cells)
        j = int(np.clip(np.floor((spec["center"] - grid.x0) / grid.dx), 0, grid.cells - 1))
        out[j] = spec["weight"] / grid.dx
        return out
    return np.asarray(spec["values"], dtype=float)


def execute(scenario: Scenario) -> tuple[dict[str, OutputTable], dict, dict]:
    """Run a scenario without touching the file system.

    Returns ``(tables, clamp_events, details)``.
    """
    runner = _RUNNERS[scenario.model]
    return runner(scenario)


def _run_lorenz(sc):
    p = sc.parameters
    params = LorenzParams(p["sigma"], p["rho"], p["beta"])
    traj = simulate_lorenz(params, p["initial_state"], time_grid(sc.time_grid))
    tables = {
        "trajectory": OutputTable("trajectory", ("t", "x", "y", "z"),
                                  np.column_stack([traj.times, traj.states])),
        "equilibria": OutputTable("equilibria", ("x", "y", "z"),
                                  np.array([tuple(e) for e in lorenz_equilibria(params)])),
    }
    details = {}
    if p.get("lyapunov"):
        ly = p["lyapunov"]
        settings = LyapunovSettings(ly["total_time"], ly["renormalization_interval"],
                                    ly.get("transient"), ly["step"], ly["separation"])
        lam = max_lyapunov(params, p["initial_state"], settings, seed=ly["seed"])
        tables["lyapunov"] = OutputTable("lyapunov", ("exponent",), np.array([[lam]]))
        details["lyapunov"] = lam
    return tables, {"trajectory": traj.clamp_events}, details


def _run_eco_simple(sc):
    p = sc.parameters
    params = SimpleEcoParams(p["r"], p["c"], p["b"], p["m"])
    traj = simulate_simple(params, p["initial_state"], time_grid(sc.time_grid))
    n1, n2 = traj.states[:, 0], traj.states[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        v = params.b * n1 - params.m * np.log(n1) + params.c * n2 - params.r * np.log(n2)
    v = np.where((n1 > 0) & (n2 > 0), v, np.nan)
    rows = np.column_stack([traj.times, traj.states, v])
    return ({"trajectory": OutputTable("trajectory", ("t", "N1", "N2", "V"), rows)},
            {"trajectory": traj.clamp_events}, {})


def generalized_params(p) -> GeneralizedEcoParams:
    return GeneralizedEcoParams(
        r_x=p["r_x"], delta=p["delta"], m=p["m"],
        resources=tuple(Resource(r["capacity"], r["supply"], r["depletion_rate"])
                        for r in p["resources"]),
        attack_rate=p["attack_rate"], noise_x=p["noise_x"], noise_y=p["noise_y"])


def _run_eco_generalized(sc):
    p = sc.parameters
    params = generalized_params(p)
    init = p["initial_state"]
    y0 = [init["x"], init["y"], *init["R"]]
    traj = simulate_generalized(params, y0, time_grid(sc.time_grid), sc.seed)
    cols = component_names("eco-generalized", p)
    return ({"trajectory": OutputTable("trajectory", ("t",) + cols,
                                       np.column_stack([traj.times, traj.states]))},
            {"trajectory": traj.clamp_events}, {})


def _snapshot_every(sc, table):
    for req in sc.outputs:
        if req["table"] == table:
            return req.get("every", 1)
    return 1


def _run_transport(sc):
    p = sc.parameters
    grid = spatial_grid(sc.spatial_grid)
    reaction = None
    if p["reaction"]["kind"] == "linear-decay":
        reaction = linear_decay(p["reaction"]["rate"])
    config = TransportConfig(grid, p["velocity"], p["diffusivity"], p["source"], p["removal"],
                             reaction)
    c0 = ConcentrationField(initial_field(p["initial"], grid), grid)
    snaps = simulate_transport(config, c0, time_grid(sc.time_grid),
                               every=_snapshot_every(sc, "snapshots"))
    x = grid.centers
    rows = np.vstack([np.column_stack([np.full(grid.cells, s.time), x, s.values]) for s in snaps])
    mass = np.array([[s.time, total_mass(s)] for s in snaps])
    return ({"snapshots": OutputTable("snapshots", ("t", "x", "C"), rows, "t"),
             "mass": OutputTable("mass", ("t", "mass"), mass)},
            {"snapshots": snaps[-1].clamp_events}, {})


def abatement_problem(p) -> AbatementProblem:
    return AbatementProblem(
        tuple(AbatementSource(s["baseline"], s["cost_coefficient"], s.get("max_reduction"))
              for s in p["sources"]),
        p["emission_limit"])


def _run_abatement(sc):
    problem = abatement_problem(sc.parameters)
    sol = optimize_abatement(problem)
    base = np.array([s.baseline for s in problem.sources])
    alloc = np.column_stack([np.arange(1, len(base) + 1), base, sol.reductions,
                             base - sol.reductions, sol.marginal_costs(problem)])
    total = float(np.sum(base - sol.reductions))
    hist = np.array([[i, *h] for i, h in enumerate(sol.history)])
    return ({
        "allocations": OutputTable("allocations", TABLES["abatement"]({})["allocations"], alloc),
        "summary": OutputTable("summary", TABLES["abatement"]({})["summary"],
                               np.array([[sol.total_cost, sol.multiplier, total,
                                          problem.emission_limit]])),
        "objective_history": OutputTable("objective_history",
                                         TABLES["abatement"]({})["objective_history"], hist),
    }, {}, {"total_cost": sol.total_cost, "multiplier": sol.multiplier})


def _run_eroei(sc):
    p = sc.parameters
    params = EroeiParams(p["eta"], p["kappa"], p["n"], p["beta"], p["E_i0"], p["R_max"])
    tr = simulate_depletion(params, p["R0"], time_grid(sc.time_grid))
    rows = np.column_stack([tr.times, tr.R, tr.E_o, tr.E_i, tr.eroei])
    return ({"trajectory": OutputTable("trajectory", ("t", "R", "E_o", "E_i", "eroei"), rows)},
            {"trajectory": tr.clamp_events}, {})


def crime_inputs(p) -> CrimeInputs:
    i = p["inputs"]
    return CrimeInputs.constant(i["u1"], i["u2"], i["trust"])


def _run_crime_ode(sc):
    p = sc.parameters
    params = CrimeOdeParams(p["a"], p["b"], p["c"], p["d"])
    inputs = crime_inputs(p)
    traj = simulate_crime_ode(params, inputs, p["initial_state"], time_grid(sc.time_grid))
    tables = {"trajectory": OutputTable("trajectory", ("t", "x"),
                                        np.column_stack([traj.times, traj.states]))}
    if params.a != 0:
        eq = crime_equilibrium(params, inputs)
        tables["equilibrium"] = OutputTable("equilibrium", ("x_star", "stable"),
                                            np.array([[eq.x_star, float(eq.stable)]]))
    return tables, {"trajectory": traj.clamp_events}, {}


def control_problem(sc) -> tuple[ControlProblem, float]:
    p = sc.parameters
    grid = spatial_grid(sc.spatial_grid)
    problem = ControlProblem(grid, time_grid(sc.time_grid), initial_field(p["initial"], grid),
                             p["alpha"], p["diffusivity"],
                             LogisticGrowth(p["growth"]["r"], p["growth"]["K"]))
    return problem, p["budget"]


def _run_crime_control(sc):
    p = sc.parameters
    problem, budget = control_problem(sc)
    grid = problem.domain
    P0 = project_budget(np.full(problem.shape, p["initial_control"]), budget, grid.dx)
    initial = ControlField(P0, budget, grid.dx)
    res = optimize_police(problem, initial, budget, p["optimizer"]["iterations"],
                          p["optimizer"]["step"])
    sol = forward_crime_pde(problem, res.control)
    t = problem.horizon.times
    x = grid.centers
    tt = np.repeat(t, grid.cells)
    xx = np.tile(x, t.shape[0])
    hist = np.column_stack([np.arange(len(res.history)), res.history])
    return ({
        "crime": OutputTable("crime", ("t", "x", "C"),
                             np.column_stack([tt, xx, sol.values.reshape(-1)]), "t"),
        "control": OutputTable("control", ("t", "x", "P"),
                               np.column_stack([tt, xx, res.control.values.reshape(-1)]), "t"),
        "objective_history": OutputTable("objective_history", ("iteration", "objective"), hist),
    }, {"crime": sol.clamp_events}, {"status": res.status, "iterations": res.iterations,
                                     "objective": res.history[-1]})


def sweep_family(family, base, parameter):
    if family == "lorenz":
        return lorenz_family(LorenzParams(base["sigma"], base["rho"], base["beta"]), parameter), 3
    if family == "eco-simple":
        return simple_family(SimpleEcoParams(base["r"], base["c"], base["b"], base["m"]),
                             parameter), 2
    params = CrimeOdeParams(base["a"], base["b"], base["c"], base["d"])
    return crime_family(params, crime_inputs(base), parameter), 1


def _run_sweep(sc):
    p = sc.parameters
    family, dim = sweep_family(p["family"], p["base"], p["parameter"])
    settings = SweepSettings(seeds=tuple(tuple(s) for s in p["seeds"]), dim=dim,
                             attractor_time=p.get("attractor_time"), parallel=p["parallel"])
    res = bifurcation_sweep(family, p["range"][0], p["range"][1], p["samples"], settings)
    rows = np.array([[s.parameter, s.count, s.leading_sign, s.leading_eigenvalue,
                      s.attractor_bound, s.failed_seeds] for s in res.samples])
    trans = np.array([[t.lo, t.hi, float("count" in t.kind), float("stability" in t.kind)]
                      for t in res.transitions]).reshape(-1, 4)
    cols = TABLES["sweep"]({})
    return ({"sweep": OutputTable("sweep", cols["sweep"], rows),
             "transitions": OutputTable("transitions", cols["transitions"], trans)},
            {}, {"transitions": [[t.lo, t.hi] for t in res.transitions]})


def _run_indicators(sc):
    p = sc.parameters
    src = p["source"]
    sub = Scenario(name=sc.name, model=src["model"], parameters=src["parameters"],
                   time_grid=src["time_grid"], seed=src.get("seed", sc.seed))
    tables, clamps, _ = execute(sub)
    traj = tables["trajectory"]
    col = list(traj.columns).index(p["component"])
    t = traj.rows[:, 0]
    x = traj.rows[:, col]
    var = rolling_variance(x, p["window"], t)
    ac = lag1_autocorrelation(x, p["window"], t)
    return ({"series": OutputTable("series", ("t", "value"), np.column_stack([t, x])),
             "indicators": OutputTable("indicators", ("t", "variance", "lag1_autocorrelation"),
                                       np.column_stack([var.times, var.values, ac.values]))},
            clamps, {})


_RUNNERS = {
    "lorenz": _run_lorenz,
    "eco-simple": _run_eco_simple,
    "eco-generalized": _run_eco_generalized,
    "transport": _run_transport,
    "abatement": _run_abatement,
    "eroei": _run_eroei,
    "crime-ode": _run_crime_ode,
    "crime-control": _run_crime_control,
    "sweep": _run_sweep,
    "indicators": _run_indicators,
}


def run_scenario(scenario: Scenario, out_dir) -> RunRecord:
    """Run ``scenario``, write its CSV tables and ``run.json`` into ``out_dir``.

    Raises
    ------
    RunFailed
        If the model raises; the failure reason is recorded in ``run.json``
        before re-raising.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record = RunRecord(scenario.name, scenario.model, scenario.digest(), __version__, BACKEND,
                       scenario.seed, _now())
    try:
        tables, clamps, details = execute(scenario)
    except (ModelError, ValueError, ZeroDivisionError) as exc:
        record.status = "failed"
        record.error = f"{type(exc).__name__}: {exc}"
        record.finished = _now()
        if hasattr(exc, "min_total_emission"):
            record.details["min_total_emission"] = exc.min_total_emission
        _write(out / RECORD_NAME, record.to_json().encode("utf-8"))
        raise RunFailed(f"scenario {scenario.name!r} ({scenario.model}): {exc}", record) from exc

    for req in scenario.outputs:
        table = tables.get(req["table"])
        if table is None:
            continue
        table = table.select(req.get("series"), req.get("every", 1))
        data = table_to_csv(table)
        fname = f"{table.name}.csv"
        _write(out / fname, data)
        record.outputs.append({
            "table": table.name,
            "path": fname,
            "columns": list(table.columns),
            "rows": int(table.rows.shape[0]),
            "block_column": table.block_column,
            "sha256": hashlib.sha256(data).hexdigest(),
            "bytes": len(data),
        })
    record.clamp_events = {k: int(v) for k, v in clamps.items()}
    record.details.update(details)
    record.status = "ok"
    record.finished = _now()
    _write(out / RECORD_NAME, record.to_json().encode("utf-8"))
    return record


def _write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
