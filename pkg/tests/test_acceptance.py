"""Acceptance gate: nine criteria, each printed as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import brute_force_abatement, diffuse_delta  # noqa: E402
from sustain_models.cli import main as cli_main  # noqa: E402
from sustain_models.climate import (LorenzParams, LyapunovSettings, lorenz_equilibria,  # noqa: E402
                                    lorenz_family, lorenz_rhs, max_lyapunov, simulate_lorenz)
from sustain_models.ecosystem import (SimpleEcoParams, liebig_factor, lv_conserved,  # noqa: E402
                                      simulate_simple)
from sustain_models.energy import EroeiParams, simulate_depletion  # noqa: E402
from sustain_models.errors import InfeasibleProblemError  # noqa: E402
from sustain_models.indicators import (SweepSettings, bifurcation_sweep,  # noqa: E402
                                       lag1_autocorrelation)
from sustain_models.numerics import SpatialGrid1D, TimeGrid, integrate_ode  # noqa: E402
from sustain_models.pollution import (AbatementProblem, ConcentrationField,  # noqa: E402
                                      TransportConfig, cfl_check, optimize_abatement,
                                      simulate_transport, total_mass)
from sustain_models.scenario import parse_scenario, serialize_scenario  # noqa: E402
from sustain_models.socio import (ControlField, ControlProblem, CrimeInputs,  # noqa: E402
                                  CrimeOdeParams, LogisticGrowth, adjoint_gradient,
                                  control_objective, crime_family, optimize_police)

SCEN = Path(__file__).parent.parent / "scenarios"


def report(number, title, checks):
    """Print one line for the criterion and return whether every check passed."""
    ok = all(passed for _, passed in checks)
    detail = "; ".join(f"{name} {'ok' if passed else 'FAILED'}" for name, passed in checks)
    print(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})")
    return ok


def _emit(capsys, number, title, checks):
    with capsys.disabled():
        print()
        ok = report(number, title, checks)
    assert ok, f"criterion {number} failed: {checks}"


# ---------------------------------------------------------------------------


def criterion_1():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        p = LorenzParams(*rng.uniform([0.1, 0.1, 0.1], [30.0, 60.0, 10.0]))
        for e in lorenz_equilibria(p):
            worst = max(worst, float(np.max(np.abs(lorenz_rhs(e, p)))))

    stable = LorenzParams(10.0, 0.5, 8.0 / 3.0)
    norms = []
    for _ in range(20):
        d = rng.standard_normal(3)
        y0 = d / np.linalg.norm(d) * rng.uniform() ** (1 / 3)
        norms.append(np.linalg.norm(simulate_lorenz(stable, y0, TimeGrid(0, 50, 0.01)).final))

    classic = LorenzParams(10.0, 28.0, 8.0 / 3.0)
    lams = [max_lyapunov(classic, [1.0, 1.0, 1.0], LyapunovSettings(), seed=s) for s in range(5)]
    return [
        (f"equilibrium residual {worst:.1e} < 1e-12", worst < 1e-12),
        (f"rho=0.5 final norm {max(norms):.1e} < 1e-6", max(norms) < 1e-6),
        (f"lyapunov {min(lams):.3f}..{max(lams):.3f} in 0.9+-0.15",
         all(0.75 <= lam <= 1.05 for lam in lams)),
    ]


def criterion_2():
    errs = [abs(integrate_ode(lambda t, y: -y, [1.0], TimeGrid(0, 1, h)).final[0] - math.exp(-1))
            for h in (0.1, 0.05, 0.025)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    return [(f"error ratio {r:.2f} within 16+-20%", 12.8 <= r <= 19.2) for r in ratios]


def _orbit_period(p, y0):
    """Time for the polar angle about the coexistence point to advance by 2 pi."""
    eq = p.coexistence
    tr = simulate_simple(p, y0, TimeGrid(0, 200, 1e-3))
    ang = np.unwrap(np.arctan2(tr.states[:, 1] - eq.N2, tr.states[:, 0] - eq.N1))
    k = int(np.argmax(np.abs(ang - ang[0]) >= 2 * np.pi))
    return tr, k


def criterion_3():
    rng = np.random.default_rng(303)
    worst = 0.0
    orbits_closed = True
    for _ in range(10):
        p = SimpleEcoParams(*rng.uniform([0.5, 0.05, 0.01, 0.2], [2.0, 0.5, 0.2, 1.5]))
        eq = p.coexistence
        y0 = [eq.N1 * rng.uniform(0.4, 1.6), eq.N2 * rng.uniform(0.4, 1.6)]
        tr, k = _orbit_period(p, y0)
        orbits_closed &= k > 0
        v = np.array([lv_conserved(s, p) for s in tr.states[: k + 1]])
        worst = max(worst, float(np.max(np.abs(v - v[0])) / abs(v[0])))

    min_ok = zero_ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 10))
        R = rng.uniform(0, 100, n)
        K = rng.uniform(0.1, 100, n)
        f = liebig_factor(R, K)
        min_ok &= f == np.min(R / K) and bool(np.all(f <= R / K))
        R[rng.integers(0, n)] = 0.0
        zero_ok &= liebig_factor(R, K) == 0.0
    return [
        ("every draw completes an orbit", bool(orbits_closed)),
        (f"first-integral drift {worst:.1e} < 1e-6", worst < 1e-6),
        ("liebig min-dominance", bool(min_ok)),
        ("liebig zero-annihilation", bool(zero_ok)),
    ]


def criterion_4():
    rng = np.random.default_rng(404)
    g = SpatialGrid1D(0.0, 1.0, 64, "zero-flux")
    cfg = TransportConfig(g, velocity=0.3, diffusivity=0.01)
    c0 = ConcentrationField(rng.uniform(0, 1, 64), g)
    dt = cfl_check(cfg, 1.0).max_dt
    final = simulate_transport(cfg, c0, TimeGrid(0, 10**4 * dt, dt), every=10**4)[-1]
    dmass = abs(total_mass(final) - total_mass(c0))

    grid, num, exact = diffuse_delta(200)
    linf = float(np.max(np.abs(num - exact)))

    def l2(cells):
        gr, n, e = diffuse_delta(cells)
        return math.sqrt(float(np.sum((n - e) ** 2)) * gr.dx)

    ratio = l2(100) / l2(200)
    return [
        (f"|dmass| {dmass:.1e} < 1e-10 over 1e4 steps", dmass < 1e-10),
        (f"heat-kernel Linf {linf:.1e} < 1e-3", linf < 1e-3),
        (f"L2 refinement ratio {ratio:.2f} >= 3", ratio >= 3.0),
    ]


def criterion_5():
    rng = np.random.default_rng(505)
    worst_gap = 0.0
    kkt_worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 4))
        base = rng.uniform(1, 10, n).round(3)
        coeffs = rng.uniform(0.5, 5, n).round(3)
        limit = float(rng.uniform(0.05, 0.95) * base.sum())
        prob = AbatementProblem.quadratic(base, coeffs, limit)
        sol = optimize_abatement(prob)
        oracle = brute_force_abatement(list(base), list(coeffs), limit, list(base))
        worst_gap = max(worst_gap, abs(sol.total_cost - oracle))
        free = (sol.reductions > 1e-12) & (sol.reductions < base - 1e-12)
        mc = sol.marginal_costs(prob)[free]
        if mc.size:
            kkt_worst = max(kkt_worst, float(np.max(np.abs(mc - sol.multiplier))))

    infeasible_ok = True
    for _ in range(10):
        base = rng.uniform(1, 10, 3)
        caps = base * rng.uniform(0.1, 0.9, 3)
        floor = float(np.sum(base - caps))
        try:
            optimize_abatement(AbatementProblem.quadratic(base, [1, 1, 1], 0.5 * floor, caps))
            infeasible_ok = False
        except InfeasibleProblemError as exc:
            infeasible_ok &= abs(exc.min_total_emission - floor) <= 1e-9 * floor
    return [
        (f"cost gap to grid oracle {worst_gap:.1e} <= 1e-4", worst_gap <= 1e-4),
        (f"equal marginals {kkt_worst:.1e} <= 1e-6", kkt_worst <= 1e-6),
        ("infeasible caps rejected with minimum emission", bool(infeasible_ok)),
    ]


def criterion_6():
    p = EroeiParams(eta=1.5, kappa=0.1, n=1.0, beta=0.0, E_i0=1.0, R_max=100.0)
    tr = simulate_depletion(p, 100.0, TimeGrid(0, 20, 0.01))
    exact = 100.0 * np.exp(-(p.kappa / p.eta) * tr.times)
    rel = float(np.max(np.abs(tr.R - exact) / exact))

    q = EroeiParams(eta=0.8, kappa=0.02, n=1.5, beta=0.05, E_i0=2.0, R_max=50.0)
    tq = simulate_depletion(q, 50.0, TimeGrid(0, 10, 0.01))
    h = np.diff(tq.times)
    produced = math.fsum(0.5 * h * (tq.E_o[1:] + tq.E_o[:-1]))
    depleted = q.eta * (tq.R[0] - tq.R[-1])
    book = abs(depleted - produced) / produced
    return [
        (f"exponential match {rel:.1e} < 1e-6", rel < 1e-6),
        (f"bookkeeping identity {book:.1e} < 1e-6", book < 1e-6),
    ]


def criterion_7():
    grid = SpatialGrid1D(0.0, 1.0, 16)
    prob = ControlProblem(grid, TimeGrid(0.0, 0.32, 0.01), 1 + 0.5 * np.sin(np.pi * grid.centers),
                          alpha=0.01, diffusivity=0.05, growth=LogisticGrowth(1.0, 2.0))
    assert prob.shape == (33, 16)  # 32 steps
    rng = np.random.default_rng(707)
    P = rng.uniform(0, 0.3, prob.shape)
    g = adjoint_gradient(prob, P, representation="euclidean")
    idx = [tuple(int(rng.integers(0, n)) for n in prob.shape) for _ in range(20)]
    fd = []
    for i in idx:
        e = 1e-6
        Pp, Pm = P.copy(), P.copy()
        Pp[i] += e
        Pm[i] -= e
        fd.append((control_objective(prob, Pp) - control_objective(prob, Pm)) / (2 * e))
    fd = np.array(fd)
    rel = float(np.linalg.norm(np.array([g[i] for i in idx]) - fd) / np.linalg.norm(fd))

    budget = 0.3
    feasible = []

    def check(it, Pk, J):
        feasible.append(ControlField(Pk, budget, grid.dx).is_feasible(1e-8))

    res = optimize_police(prob, ControlField.zeros(prob, budget), iterations=200, step=0.1,
                          tol=0.0, callback=check)
    hist = np.array(res.history)
    return [
        (f"adjoint vs FD relative L2 {rel:.1e} < 1e-4", rel < 1e-4),
        (f"objective non-increasing over {res.iterations} accepted steps ({res.status})",
         bool(np.all(np.diff(hist) <= 0)) and hist[-1] < hist[0]),
        (f"all {len(feasible)} iterates feasible", all(feasible) and len(feasible) == len(hist)),
    ]


def criterion_8():
    seeds = ((1.0, 1.0, 1.0), (-1.0, -1.0, 1.0), (2.0, 2.0, 2.0), (-2.0, -2.0, 2.0))
    lor = bifurcation_sweep(lorenz_family(LorenzParams(10.0, 28.0, 8.0 / 3.0)), 0.5, 1.5, 11,
                            SweepSettings(seeds=seeds, dim=3))
    crime = bifurcation_sweep(crime_family(CrimeOdeParams(0.0, 0.2, 0.1, 0.3),
                                           CrimeInputs.constant(2.0, 0.5, 0.5)),
                              -1.0, 1.0, 11, SweepSettings(seeds=((1.0,),), dim=1))
    noise = np.random.default_rng(808).standard_normal(10_000)
    ac = float(lag1_autocorrelation(noise, noise.size).values[0])
    return [
        (f"lorenz: {len(lor.transitions)} transition containing rho=1",
         len(lor.transitions) == 1 and lor.transitions[0].contains(1.0)),
        ("crime-ODE: flagged intervals contain a=0",
         bool(crime.transitions) and all(t.contains(0.0) for t in crime.transitions)),
        (f"white-noise lag-1 |{ac:.3f}| <= 0.05", abs(ac) <= 0.05),
    ]


def criterion_9(tmp):
    tmp = Path(tmp)
    identical = True
    for name in ("lorenz", "eco-generalized", "transport"):
        for run in ("a", "b"):
            if cli_main(["run", str(SCEN / f"{name}.json"), "--out", str(tmp / name / run),
                         "--quiet"]) != 0:
                identical = False
        for csv in sorted((tmp / name / "a").glob("*.csv")):
            identical &= csv.read_bytes() == (tmp / name / "b" / csv.name).read_bytes()

    code_ok = cli_main(["run", str(SCEN / "lorenz.json"), "--out", str(tmp / "ok"), "-q"]) == 0
    code_bad = cli_main(["run", str(SCEN / "lorenz.json"), "--set", "parameters.beta=-1",
                         "--out", str(tmp / "bad"), "-q"]) == 1
    code_inf = cli_main(["optimize", str(SCEN / "abatement.json"), "--out", str(tmp / "inf"),
                         "--set", "parameters.sources.0.max_reduction=1",
                         "--set", "parameters.sources.1.max_reduction=1", "-q"]) == 2

    examples = sorted(SCEN.glob("*.json"))
    round_trip = bool(examples)
    for path in examples:
        sc = parse_scenario(path.read_text())
        round_trip &= parse_scenario(serialize_scenario(sc)) == sc
    return [
        ("repeat runs byte-identical", bool(identical)),
        ("exit 0 on success", code_ok),
        ("exit 1 on validation failure", code_bad),
        ("exit 2 on infeasible optimization", code_inf),
        (f"round-trip on {len(examples)} example scenarios", bool(round_trip)),
    ]


CRITERIA = [
    (1, "Lorenz correctness", criterion_1),
    (2, "RK4 integrator order", criterion_2),
    (3, "ecosystem conservation and Liebig law", criterion_3),
    (4, "transport solver", criterion_4),
    (5, "abatement optimizer", criterion_5),
    (6, "EROEI model", criterion_6),
    (7, "crime optimal control", criterion_7),
    (8, "tipping diagnostics", criterion_8),
]


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, capsys):
    _emit(capsys, number, title, fn())


def test_criterion_9(tmp_path, capsys):
    _emit(capsys, 9, "reproducibility and CLI contract", criterion_9(tmp_path))


if __name__ == "__main__":
    import tempfile

    results = [report(n, t, fn()) for n, t, fn in CRITERIA]
    with tempfile.TemporaryDirectory() as d:
        results.append(report(9, "reproducibility and CLI contract", criterion_9(d)))
    sys.exit(0 if all(results) else 1)
