"""Command-line entry point.

Exit status: 0 on success, 1 for usage or validation errors (including a
missing scenario file), 2 when a model fails at runtime.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import sys
from pathlib import Path

import numpy as np

from .errors import ModelError
from .runner import RECORD_NAME, RunRecord, read_csv, run_scenario
from .scenario import (ScenarioError, SWEEP_FAMILIES, apply_overrides, is_stochastic,
                       load_document, scenario_from_dict)

OPTIMIZATION_MODELS = ("abatement", "crime-control")


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the command; SUPPRESS keeps a
    # subcommand from resetting a value given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--out", metavar="DIR", help="output directory (default: ./runs/<name>)")
    common.add_argument("--set", metavar="PATH=VALUE", action="append",
                        dest="overrides", help="override a scenario field by dotted path")
    common.add_argument("--seed", type=int, help="random seed for stochastic models")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress messages")

    p = argparse.ArgumentParser(prog="sustain-models", parents=[common],
                                description="Scenario-driven sustainability models.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run a scenario")
    r.add_argument("scenario")
    s = sub.add_parser("sweep", parents=[common], help="sweep one parameter for transitions")
    s.add_argument("scenario")
    s.add_argument("spec", metavar="NAME:LO:HI:COUNT")
    o = sub.add_parser("optimize", parents=[common],
                       help="solve an abatement or crime-control scenario")
    o.add_argument("scenario")
    d = sub.add_parser("plotdata", parents=[common], help="export gnuplot data from a run")
    d.add_argument("run_dir")
    d.add_argument("series", help="comma-separated column names, e.g. x,z")
    d.add_argument("--table", default=None, help="table to read (default: first table with every series)")
    return p


def _fail(msg: str, code: int) -> int:
    print(f"sustain-models: error: {msg}", file=sys.stderr)
    return code


def _say(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def _load(path: str):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"scenario file not found: {p}")
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read scenario file {p}: {exc}") from None
    return load_document(text)


def _apply_seed(doc, seed, args):
    if seed is None or not isinstance(doc, dict):
        return doc
    params = doc.get("parameters")
    model = doc.get("model")
    if isinstance(params, dict) and is_stochastic(model, params):
        doc["seed"] = seed
    elif model == "lorenz" and isinstance(params, dict) and isinstance(params.get("lyapunov"), dict):
        params["lyapunov"]["seed"] = seed
    else:
        _say(args, f"note: model {model!r} is deterministic; --seed ignored")
    return doc


def _prepare(args, doc):
    doc = apply_overrides(doc, args.overrides)
    return _apply_seed(doc, args.seed, args)


def _out_dir(args, scenario):
    return Path(args.out) if args.out else Path("runs") / scenario.name


def _execute(args, doc) -> int:
    scenario = scenario_from_dict(doc)
    out = _out_dir(args, scenario)
    record = run_scenario(scenario, out)
    _say(args, f"{scenario.model} run '{scenario.name}' finished: "
               f"{len(record.outputs)} tables in {out}")
    return 0


def cmd_run(args) -> int:
    return _execute(args, _prepare(args, _load(args.scenario)))


def cmd_optimize(args) -> int:
    doc = _prepare(args, _load(args.scenario))
    model = doc.get("model") if isinstance(doc, dict) else None
    if model not in OPTIMIZATION_MODELS:
        raise UsageError(f"optimize needs an abatement or crime-control scenario, got {model!r}")
    return _execute(args, doc)


def parse_sweep_spec(spec: str):
    parts = spec.split(":")
    if len(parts) != 4 or not parts[0]:
        raise UsageError(f"malformed sweep spec {spec!r}; expected NAME:LO:HI:COUNT")
    name = parts[0]
    try:
        lo, hi = float(parts[1]), float(parts[2])
        count = int(parts[3])
    except ValueError:
        raise UsageError(f"malformed sweep spec {spec!r}; LO and HI must be numbers "
                         "and COUNT an integer") from None
    if count < 2:
        raise UsageError(f"sweep needs at least 2 samples (got {count})")
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo == hi:
        raise UsageError("sweep range must be finite with LO != HI")
    return name, lo, hi, count


def _default_seeds(initial, dim):
    """Newton starting points: the run's initial state plus a lattice of sign corners."""
    seeds = []
    scale = 1.0
    if initial is not None:
        start = np.atleast_1d(np.asarray(initial, dtype=float))
        if start.shape == (dim,) and np.all(np.isfinite(start)):
            seeds.append(start.tolist())
            scale = max(1.0, float(np.max(np.abs(start))))
    for signs in itertools.product((-1.0, 1.0), repeat=dim):
        seeds.append([scale * s for s in signs])
    return seeds


def sweep_document(doc, name, lo, hi, count) -> dict:
    """Turn a model scenario (or a sweep scenario) into a sweep over ``name``."""
    if not isinstance(doc, dict):
        raise UsageError("scenario document must be a JSON object")
    model = doc.get("model")
    if name.startswith("parameters."):
        name = name[len("parameters."):]
    if model == "sweep":
        out = copy.deepcopy(doc)
        params = out.setdefault("parameters", {})
        params.update({"parameter": name, "range": [lo, hi], "samples": count})
        return out
    if model not in SWEEP_FAMILIES:
        raise UsageError(f"cannot sweep model {model!r}; sweeps support "
                         f"{', '.join(SWEEP_FAMILIES)}")
    params = doc.get("parameters")
    if not isinstance(params, dict):
        raise UsageError("scenario has no parameters object")
    if name not in params:
        raise UsageError(f"no parameter {name!r} in the scenario")
    value = params[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"parameter {name!r} is not a numeric field")
    base = {k: v for k, v in params.items() if k not in ("initial_state", "lyapunov")}
    dim = {"lorenz": 3, "eco-simple": 2, "crime-ode": 1}[model]
    out = {
        "schema_version": doc.get("schema_version"),
        "name": f"{doc.get('name', model)}-sweep-{name}",
        "model": "sweep",
        "parameters": {
            "family": model,
            "base": base,
            "parameter": name,
            "range": [lo, hi],
            "samples": count,
            "seeds": _default_seeds(params.get("initial_state"), dim),
        },
        "units": doc.get("units", {}),
    }
    return out


def cmd_sweep(args) -> int:
    name, lo, hi, count = parse_sweep_spec(args.spec)
    doc = apply_overrides(_load(args.scenario), args.overrides)
    return _execute(args, sweep_document(doc, name, lo, hi, count))


def _blocks(rows, col):
    if col is None:
        return [rows]
    keys = rows[:, col]
    cuts = np.flatnonzero(keys[1:] != keys[:-1]) + 1
    return np.split(rows, cuts)


def cmd_plotdata(args) -> int:
    run_dir = Path(args.run_dir)
    rec_path = run_dir / RECORD_NAME
    if not rec_path.is_file():
        raise UsageError(f"no run record found: {rec_path}")
    record = RunRecord.load(rec_path)
    series = [s.strip() for s in args.series.split(",") if s.strip()]
    if not series:
        raise UsageError("empty series selection")
    entries = [o for o in record.outputs if args.table in (None, o["table"])]
    if args.table and not entries:
        raise UsageError(f"no table {args.table!r} in run; available: "
                         f"{', '.join(o['table'] for o in record.outputs)}")
    chosen = next((o for o in entries if all(s in o["columns"] for s in series)), None)
    if chosen is None:
        avail = sorted({c for o in entries for c in o["columns"]})
        raise UsageError(f"unknown series {', '.join(s for s in series if s not in avail) or args.series!r}"
                         f"; available series: {', '.join(avail)}")
    header, data = read_csv(run_dir / chosen["path"])
    idx = [header.index(s) for s in series]
    block = chosen.get("block_column")
    bcol = header.index(block) if block in header else None

    from .runner import format_number

    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{chosen['table']}_{'_'.join(series)}"
    lines = [f"# {' '.join(series)}"]
    blocks = _blocks(data, bcol)
    for i, rows in enumerate(blocks):
        if i:
            lines += ["", ""]
        if bcol is not None:
            lines.append(f"# {block} = {format_number(rows[0, bcol])}")
        lines += [" ".join(format_number(v) for v in row[idx]) for row in rows]
    (out / f"{stem}.dat").write_text("\n".join(lines) + "\n", encoding="utf-8")

    using = ":".join(str(i + 1) for i in range(len(series)))
    plot = "splot" if len(series) == 3 else "plot"
    if len(series) == 1:
        using = "0:1"
    script = [
        f"# {record.scenario_name} ({record.model}): {chosen['table']}",
        f"set xlabel '{series[0] if len(series) > 1 else 'row'}'",
        f"set ylabel '{series[1] if len(series) > 1 else series[0]}'",
    ]
    if len(series) == 3:
        script.append(f"set zlabel '{series[2]}'")
    if bcol is not None and len(blocks) > 1:
        script.append(f"{plot} for [i=0:{len(blocks) - 1}] '{stem}.dat' index i using {using} "
                      f"with lines title sprintf('block %d', i)")
    else:
        script.append(f"{plot} '{stem}.dat' using {using} with lines title '{chosen['table']}'")
    (out / f"{stem}.gp").write_text("\n".join(script) + "\n", encoding="utf-8")
    _say(args, f"wrote {out / (stem + '.dat')} and {out / (stem + '.gp')}")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "optimize": cmd_optimize,
            "plotdata": cmd_plotdata}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are status 1 here
        return 0 if exc.code == 0 else 1
    for key, default in (("out", None), ("overrides", []), ("seed", None), ("quiet", False)):
        if not hasattr(args, key):
            setattr(args, key, default)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(str(exc), 1)
    except ScenarioError as exc:
        lines = "\n  ".join(str(i) for i in exc.issues)
        return _fail(f"invalid scenario:\n  {lines}", 1)
    except ModelError as exc:
        return _fail(str(exc), 2)

