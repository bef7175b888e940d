"""Pollutant transport and emission-control optimization.

Transport solves ``dC/dt + v dC/dx = D d2C/dx2 + S - R_rem + Q(C)`` on a 1-D
cell-centred grid with explicit Euler in time, first-order upwind advection
and a central Laplacian. Abatement allocates reductions ``x_i`` across
sources to meet an emission cap at least total cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CFLViolationError, InfeasibleProblemError, ModelError
from .numerics import SpatialGrid1D, TimeGrid, laplacian_1d, upwind_advection_1d

CFL_SAFETY = 0.9

Reaction = Callable[[np.ndarray], np.ndarray]


def linear_decay(k: float) -> Reaction:
    """First-order loss ``Q(C) = -k C``."""
    return lambda c: -k * c


def _as_field(value, grid: SpatialGrid1D, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (grid.cells,)).copy()
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and non-negative everywhere")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TransportConfig:
    grid: SpatialGrid1D
    velocity: float = 0.0
    diffusivity: float = 0.0
    source: np.ndarray | float = 0.0
    removal: np.ndarray | float = 0.0
    reaction: Reaction | None = None

    def __post_init__(self):
        if not math.isfinite(self.velocity):
            raise ValueError("velocity must be finite")
        if not (math.isfinite(self.diffusivity) and self.diffusivity >= 0):
            raise ValueError(f"diffusivity must be non-negative (got {self.diffusivity})")
        object.__setattr__(self, "source", _as_field(self.source, self.grid, "source"))
        object.__setattr__(self, "removal", _as_field(self.removal, self.grid, "removal"))


@dataclass(frozen=True, eq=False)
class ConcentrationField:
    values: np.ndarray
    grid: SpatialGrid1D
    time: float = 0.0
    clamp_events: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (self.grid.cells,):
            raise ValueError(f"field has {v.shape[0]} values for a grid of {self.grid.cells} cells")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("concentrations must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class CflReport:
    ok: bool
    max_dt: float
    binding: str | None  # "advection", "diffusion" or None when unconstrained

    def __bool__(self):
        return self.ok


def cfl_check(config: TransportConfig, dt: float) -> CflReport:
    """Stability guard for the explicit upwind/central scheme.

    The admissible step is ``0.9 / (|v|/dx + 2D/dx**2)``, which keeps every
    update coefficient non-negative when advection and diffusion act together.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive (got {dt})")
    dx = config.grid.dx
    adv = abs(config.velocity) / dx
    dif = 2.0 * config.diffusivity / dx**2
    rate = adv + dif
    if rate == 0:
        return CflReport(True, math.inf, None)
    max_dt = CFL_SAFETY / rate
    binding = "advection" if adv >= dif else "diffusion"
    # grid steps are differences of node times and may exceed the nominal step by rounding
    return CflReport(dt <= max_dt * (1.0 + 1e-9), max_dt, binding)


def total_mass(field: ConcentrationField) -> float:
    return float(np.sum(field.values) * field.grid.dx)


def transport_rate(values: np.ndarray, config: TransportConfig) -> np.ndarray:
    """Right-hand side ``-v dC/dx + D d2C/dx2 + S - R_rem + Q(C)``."""
    grid = config.grid
    rate = config.source - config.removal
    if config.velocity != 0.0:
        rate = rate - upwind_advection_1d(values, config.velocity, grid.dx, grid.boundary)
    if config.diffusivity != 0.0:
        rate = rate + config.diffusivity * laplacian_1d(values, grid.dx, grid.boundary)
    if config.reaction is not None:
        q = np.broadcast_to(np.asarray(config.reaction(values), dtype=float), values.shape)
        if not np.all(np.isfinite(q)):
            raise ModelError("reaction term Q(C) returned non-finite values")
        rate = rate + q
    return rate


def step_transport(field: ConcentrationField, config: TransportConfig, dt: float) -> ConcentrationField:
    """One explicit Euler step; negative results are clamped to zero and counted."""
    if field.grid != config.grid:
        raise ValueError("field and configuration use different grids")
    report = cfl_check(config, dt)
    if not report.ok:
        raise CFLViolationError(
            f"dt={dt} exceeds the {report.binding} stability limit {report.max_dt}",
            report.max_dt, report.binding)
    new = field.values + dt * transport_rate(field.values, config)
    neg = new < 0
    clamps = int(neg.sum())
    if clamps:
        new[neg] = 0.0
    return ConcentrationField(new, field.grid, field.time + dt, field.clamp_events + clamps)


def simulate_transport(
    config: TransportConfig,
    initial: ConcentrationField,
    grid: TimeGrid,
    every: int = 1,
) -> list[ConcentrationField]:
    """Snapshots every ``every`` steps, always including the initial and final fields."""
    if every < 1:
        raise ValueError("snapshot cadence must be at least 1")
    report = cfl_check(config, grid.step)
    if not report.ok:
        raise CFLViolationError(
            f"step {grid.step} exceeds the {report.binding} stability limit {report.max_dt}",
            report.max_dt, report.binding)
    f = ConcentrationField(initial.values, initial.grid, grid.t0, initial.clamp_events)
    snaps = [f]
    times = grid.times
    steps = grid.steps
    n = steps.shape[0]
    for k in range(n):
        f = step_transport(f, config, steps[k])
        # pin the clock to the grid so snapshot times carry no drift
        f = ConcentrationField(f.values, f.grid, float(times[k + 1]), f.clamp_events)
        if (k + 1) % every == 0 or k == n - 1:
            snaps.append(f)
    return snaps


def linear_reduction(E0: float, R: float) -> float:
    """Emissions after control ``E0 * (1 - R)`` for a reduction rate ``R`` in [0, 1]."""
    if not (0.0 <= R <= 1.0):
        raise ValueError(f"reduction rate must lie in [0, 1] (got {R})")
    if not E0 >= 0:
        raise ValueError(f"baseline emissions must be non-negative (got {E0})")
    return E0 * (1.0 - R)


@dataclass(frozen=True)
class AbatementSource:
    """An emitter with baseline ``baseline`` and cost ``cost_coefficient * x**2``.

    ``cost``/``marginal_cost`` replace the quadratic curve with any convex cost
    whose marginal is strictly increasing on ``[0, max_reduction]``.
    """

    baseline: float
    cost_coefficient: float = 1.0
    max_reduction: float | None = None
    cost: Callable[[float], float] | None = field(default=None, compare=False)
    marginal_cost: Callable[[float], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.baseline) and self.baseline >= 0):
            raise ValueError(f"baseline emissions must be non-negative (got {self.baseline})")
        if not (math.isfinite(self.cost_coefficient) and self.cost_coefficient > 0):
            raise ValueError(f"cost coefficient must be positive (got {self.cost_coefficient})")
        if self.max_reduction is None:
            object.__setattr__(self, "max_reduction", self.baseline)
        if not (0 <= self.max_reduction <= self.baseline):
            raise ValueError(
                f"max reduction must lie in [0, baseline={self.baseline}] (got {self.max_reduction})")
        if (self.cost is None) != (self.marginal_cost is None):
            raise ValueError("custom cost and marginal_cost must be given together")

    @property
    def quadratic(self) -> bool:
        return self.cost is None

    def cost_at(self, x: float) -> float:
        return self.cost_coefficient * x * x if self.cost is None else float(self.cost(x))

    def marginal_at(self, x: float) -> float:
        return 2.0 * self.cost_coefficient * x if self.marginal_cost is None else float(self.marginal_cost(x))

    def reduction_at_price(self, price: float) -> float:
        """Reduction at which the marginal cost equals ``price`` (clipped to the feasible range)."""
        if self.quadratic:
            return min(max(price / (2.0 * self.cost_coefficient), 0.0), self.max_reduction)
        if self.marginal_at(0.0) >= price:
            return 0.0
        if self.marginal_at(self.max_reduction) <= price:
            return self.max_reduction
        lo, hi = 0.0, self.max_reduction
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if self.marginal_at(mid) < price:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AbatementProblem:
    sources: tuple[AbatementSource, ...]
    emission_limit: float

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.sources:
            raise ValueError("at least one emission source is required")
        if not (math.isfinite(self.emission_limit) and self.emission_limit >= 0):
            raise ValueError(f"emission limit must be non-negative (got {self.emission_limit})")

    @classmethod
    def quadratic(cls, baselines: Sequence[float], cost_coefficients: Sequence[float],
                  emission_limit: float, max_reductions: Sequence[float] | None = None):
        if max_reductions is None:
            max_reductions = list(baselines)
        if not (len(baselines) == len(cost_coefficients) == len(max_reductions)):
            raise ValueError("baselines, cost coefficients and max reductions differ in length")
        return cls(tuple(AbatementSource(float(e), float(c), float(x))
                         for e, c, x in zip(baselines, cost_coefficients, max_reductions)),
                   float(emission_limit))

    @property
    def baseline_total(self) -> float:
        return math.fsum(s.baseline for s in self.sources)

    @property
    def min_total_emission(self) -> float:
        return math.fsum(s.baseline - s.max_reduction for s in self.sources)


@dataclass(frozen=True, eq=False)
class AbatementSolution:
    reductions: np.ndarray
    total_cost: float
    multiplier: float
    history: tuple[tuple[float, float, float], ...] = ()  # (multiplier, cost, total emission)

    def emissions(self, problem: AbatementProblem) -> np.ndarray:
        return np.array([s.baseline for s in problem.sources]) - self.reductions

    def marginal_costs(self, problem: AbatementProblem) -> np.ndarray:
        return np.array([s.marginal_at(x) for s, x in zip(problem.sources, self.reductions)])


def _allocation(problem, price):
    return np.array([s.reduction_at_price(price) for s in problem.sources])


def _cost(problem, x):
    return math.fsum(s.cost_at(float(v)) for s, v in zip(problem.sources, x))


def optimize_abatement(problem: AbatementProblem, *, max_iter: int = 200) -> AbatementSolution:
    """Least-cost reductions meeting ``sum(E_i - x_i) <= E_limit``.

    Bisects on the shadow price of the cap: at price ``lam`` each source abates
    until its marginal cost reaches ``lam``. For quadratic costs the price is
    then solved exactly on the final active set.

    Raises
    ------
    InfeasibleProblemError
        If even maximal abatement leaves total emissions above the cap; the
        error carries the minimum achievable total.
    """
    min_total = problem.min_total_emission
    if min_total > problem.emission_limit + 1e-12 * max(1.0, problem.baseline_total):
        raise InfeasibleProblemError(
            f"emission limit {problem.emission_limit} is below the minimum achievable "
            f"total emission {min_total}", min_total)
    required = problem.baseline_total - problem.emission_limit
    n = len(problem.sources)
    if required <= 0:
        return AbatementSolution(np.zeros(n), 0.0, 0.0, ((0.0, 0.0, problem.baseline_total),))

    caps = np.array([s.max_reduction for s in problem.sources])
    lo = 0.0
    hi = max(s.marginal_at(s.max_reduction) for s in problem.sources)
    history = []
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        x = _allocation(problem, mid)
        total = math.fsum(x)
        history.append((mid, _cost(problem, x), problem.baseline_total - total))
        if total < required:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    price = hi
    x = _allocation(problem, price)

    if all(s.quadratic for s in problem.sources):
        inv = np.array([1.0 / (2.0 * s.cost_coefficient) for s in problem.sources])
        free = (x > 0) & (x < caps)
        if free.any():
            saturated = math.fsum(caps[~free & (x >= caps)])
            price = (required - saturated) / math.fsum(inv[free])
            x = np.where(free, price * inv, np.where(x >= caps, caps, 0.0))
            x = np.minimum(np.maximum(x, 0.0), caps)
    x = np.minimum(np.maximum(x, 0.0), caps)
    return AbatementSolution(x, _cost(problem, x), float(price), tuple(history))
