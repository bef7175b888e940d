"""Crime dynamics: a linear rate equation and a reaction-diffusion model with
optimal police deployment.

The rate model is ``dx/dt = a x - b T(t) - c u2(t) + d u1(t)`` with community
trust ``T``, police presence ``u2`` and unemployment ``u1``.

The spatial model is ``dC/dt = D d2C/dx2 + R(C) - P(x, t)``, controlled by the
deployment ``P`` to minimise ``int int C**2 + alpha P**2 dx dt`` subject to
``P >= 0`` and ``int P dx <= P_max`` at every time node. The control problem
is discretized first and then differentiated, so the adjoint gradient is the
exact gradient of the discrete objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CFLViolationError, DegenerateModelError
from .numerics import SpatialGrid1D, TimeGrid, Trajectory, integrate_ode, laplacian_1d
from .pollution import TransportConfig, cfl_check


@dataclass(frozen=True)
class CrimeOdeParams:
    a: float  # natural growth rate
    b: float = 0.0  # sensitivity to community trust
    c: float = 0.0  # sensitivity to police presence
    d: float = 0.0  # sensitivity to unemployment

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise ValueError("growth rate a must be finite")
        for name in ("b", "c", "d"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"CrimeOdeParams.{name} must be non-negative (got {v})")


def _constant(value):
    value = float(value)
    return lambda t: value


@dataclass(frozen=True)
class CrimeInputs:
    """Driving signals as functions of time; build constant ones with :meth:`constant`."""

    u1: Callable[[float], float]
    u2: Callable[[float], float]
    trust: Callable[[float], float]
    is_constant: bool = False

    @classmethod
    def constant(cls, u1: float = 0.0, u2: float = 0.0, trust: float = 0.0) -> "CrimeInputs":
        for name, v in (("u1", u1), ("u2", u2), ("trust", trust)):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"input {name} must be non-negative (got {v})")
        return cls(_constant(u1), _constant(u2), _constant(trust), True)


def crime_ode_rhs(x: float, t: float, params: CrimeOdeParams, inputs: CrimeInputs) -> float:
    return (params.a * x - params.b * inputs.trust(t) - params.c * inputs.u2(t)
            + params.d * inputs.u1(t))


@dataclass(frozen=True)
class CrimeEquilibrium:
    x_star: float
    stable: bool


def crime_equilibrium(params: CrimeOdeParams, inputs: CrimeInputs) -> CrimeEquilibrium:
    """Rest point under constant inputs; stable exactly when ``a < 0``."""
    if not inputs.is_constant:
        raise ValueError("equilibrium analysis needs constant inputs")
    if params.a == 0:
        raise DegenerateModelError("a = 0: the rate equation has no isolated equilibrium")
    forcing = params.b * inputs.trust(0.0) + params.c * inputs.u2(0.0) - params.d * inputs.u1(0.0)
    return CrimeEquilibrium(forcing / params.a, params.a < 0)


def simulate_crime_ode(params: CrimeOdeParams, inputs: CrimeInputs, x0: float, grid: TimeGrid) -> Trajectory:
    """RK4 run; the crime rate is clamped at zero and clamp events counted."""
    return integrate_ode(lambda t, y: np.array([crime_ode_rhs(y[0], t, params, inputs)]),
                         [float(x0)], grid, nonnegative=True)


def crime_family(base: CrimeOdeParams, inputs: CrimeInputs, parameter: str = "a"):
    if parameter not in ("a", "b", "c", "d"):
        raise ValueError(f"unknown crime-rate parameter {parameter!r}")

    def family(value):
        kw = {"a": base.a, "b": base.b, "c": base.c, "d": base.d, parameter: float(value)}
        p = CrimeOdeParams(**kw)
        return lambda y: np.array([crime_ode_rhs(y[0], 0.0, p, inputs)])

    return family


@dataclass(frozen=True)
class LogisticGrowth:
    """``R(C) = r C (1 - C / K)``."""

    r: float
    K: float

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise ValueError("growth rate r must be finite")
        if not (math.isfinite(self.K) and self.K > 0):
            raise ValueError(f"carrying capacity K must be positive (got {self.K})")

    def __call__(self, c):
        return self.r * c * (1.0 - c / self.K)

    def derivative(self, c):
        return self.r * (1.0 - 2.0 * c / self.K)


@dataclass(frozen=True, eq=False)
class ControlProblem:
    domain: SpatialGrid1D
    horizon: TimeGrid
    initial: np.ndarray
    alpha: float
    diffusivity: float = 0.0
    growth: LogisticGrowth = LogisticGrowth(0.0, 1.0)

    def __post_init__(self):
        c0 = np.array(self.initial, dtype=float).reshape(-1)
        if c0.shape != (self.domain.cells,):
            raise ValueError(f"initial field has {c0.shape[0]} values for {self.domain.cells} cells")
        if not np.all(np.isfinite(c0)) or np.any(c0 < 0):
            raise ValueError("initial crime density must be finite and non-negative")
        c0.setflags(write=False)
        object.__setattr__(self, "initial", c0)
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive (got {self.alpha})")
        if not (math.isfinite(self.diffusivity) and self.diffusivity >= 0):
            raise ValueError(f"diffusivity must be non-negative (got {self.diffusivity})")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.horizon.n_steps + 1, self.domain.cells)

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid-in-time times midpoint-in-space weights, shape ``(nodes, 1)``."""
        h = self.horizon.steps
        w = np.zeros(h.shape[0] + 1)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        return (w * self.domain.dx)[:, None]


@dataclass(frozen=True, eq=False)
class ControlField:
    """Police deployment ``P`` at every (time node, cell)."""

    values: np.ndarray
    budget: float
    dx: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("control values must be a (time nodes, cells) array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if not (math.isfinite(self.budget) and self.budget > 0):
            raise ValueError(f"budget P_max must be positive (got {self.budget})")

    @classmethod
    def zeros(cls, problem: ControlProblem, budget: float) -> "ControlField":
        return cls(np.zeros(problem.shape), budget, problem.domain.dx)

    def usage(self) -> np.ndarray:
        """``int P dx`` at each time node."""
        return self.values.sum(axis=1) * self.dx

    def is_feasible(self, tol: float = 1e-8) -> bool:
        return bool(np.all(self.values >= 0) and np.all(self.usage() <= self.budget + tol))


def project_budget(values, budget: float, dx: float) -> np.ndarray:
    """Euclidean projection of each row onto ``{p >= 0, sum(p) * dx <= budget}``.

    Rows whose positive part already fits are clipped at zero; the others are
    projected onto the scaled simplex by water-filling.
    """
    p = np.array(values, dtype=float)
    rows = p.reshape(-1, p.shape[-1])
    cap = budget / dx
    out = np.maximum(rows, 0.0)
    over = out.sum(axis=1) > cap
    for i in np.flatnonzero(over):
        u = np.sort(rows[i])[::-1]
        css = np.cumsum(u) - cap
        j = np.arange(1, u.shape[0] + 1)
        k = np.flatnonzero(u - css / j > 0)[-1]
        theta = css[k] / (k + 1)
        out[i] = np.maximum(rows[i] - theta, 0.0)
    return out.reshape(p.shape)


@dataclass(frozen=True, eq=False)
class CrimeSolution:
    times: np.ndarray
    values: np.ndarray  # (time nodes, cells)
    clamp_events: int
    unclamped: np.ndarray  # mask of entries not reset by the clamp


def _check_control(problem: ControlProblem, control) -> np.ndarray:
    P = control.values if isinstance(control, ControlField) else np.asarray(control, dtype=float)
    if P.shape != problem.shape:
        raise ValueError(f"control has shape {P.shape}, problem grid is {problem.shape}")
    return P


def forward_crime_pde(problem: ControlProblem, control) -> CrimeSolution:
    """Explicit Euler solve; negative densities are clamped to zero and counted."""
    P = _check_control(problem, control)
    grid = problem.domain
    h = problem.horizon.steps
    if problem.diffusivity > 0:
        report = cfl_check(TransportConfig(grid, 0.0, problem.diffusivity), float(h.max()))
        if not report.ok:
            raise CFLViolationError(
                f"time step {h.max()} exceeds the diffusion stability limit {report.max_dt}",
                report.max_dt, report.binding)
    C = np.empty(problem.shape)
    keep = np.ones(problem.shape, dtype=bool)
    C[0] = problem.initial
    clamps = 0
    for k in range(h.shape[0]):
        c = C[k]
        rate = problem.growth(c) - P[k]
        if problem.diffusivity > 0:
            rate = rate + problem.diffusivity * laplacian_1d(c, grid.dx, grid.boundary)
        nxt = c + h[k] * rate
        neg = nxt < 0
        if neg.any():
            clamps += int(neg.sum())
            nxt[neg] = 0.0
            keep[k + 1] = ~neg
        C[k + 1] = nxt
    return CrimeSolution(problem.horizon.times, C, clamps, keep)


def control_objective(problem: ControlProblem, control, crime=None) -> float:
    """Quadrature of ``C**2 + alpha P**2`` over space and time."""
    P = _check_control(problem, control)
    if crime is None:
        crime = forward_crime_pde(problem, P)
    C = crime.values if isinstance(crime, CrimeSolution) else np.asarray(crime, dtype=float)
    w = problem.quadrature_weights()
    return float(np.sum(w * (C * C + problem.alpha * P * P)))


def adjoint_gradient(problem: ControlProblem, control, *, representation: str = "l2") -> np.ndarray:
    """Gradient of :func:`control_objective` with respect to the control.

    One forward solve and one backward adjoint sweep (terminal adjoint set by
    the final-time cost, linearized growth ``R'(C)``, diffusion operator).

    Parameters
    ----------
    representation : {"l2", "euclidean"}
        ``"euclidean"`` returns the partial derivatives with respect to each
        stored control value. ``"l2"`` (default) divides by the quadrature
        weights, giving the gradient in the discrete L2 inner product, which
        reads ``2 alpha P - adjoint``.
    """
    if representation not in ("l2", "euclidean"):
        raise ValueError(f"unknown representation {representation!r}")
    P = _check_control(problem, control)
    sol = forward_crime_pde(problem, P)
    C = sol.values
    grid = problem.domain
    h = problem.horizon.steps
    w = problem.quadrature_weights()
    K = h.shape[0]
    grad = 2.0 * problem.alpha * w * P
    lam = 2.0 * w[K] * C[K]
    for k in range(K - 1, -1, -1):
        mu = np.where(sol.unclamped[k + 1], lam, 0.0)
        grad[k] -= h[k] * mu
        back = problem.growth.derivative(C[k]) * mu
        if problem.diffusivity > 0:
            # the ghost-cell Laplacian is symmetric for all three boundary types
            back = back + problem.diffusivity * laplacian_1d(mu, grid.dx, grid.boundary)
        lam = 2.0 * w[k] * C[k] + mu + h[k] * back
    if representation == "l2":
        return grad / w
    return grad


@dataclass(frozen=True, eq=False)
class PoliceOptimizationResult:
    control: ControlField
    history: tuple[float, ...]
    status: str  # "max-iterations", "converged" or "stalled"
    iterations: int


def optimize_police(
    problem: ControlProblem,
    initial: ControlField,
    budget: float | None = None,
    iterations: int = 200,
    step: float = 1.0,
    *,
    max_backtracks: int = 40,
    sufficient_decrease: float = 1e-4,
    tol: float = 1e-12,
    callback: Callable[[int, np.ndarray, float], None] | None = None,
) -> PoliceOptimizationResult:
    """Projected gradient descent with backtracking on the deployment ``P``.

    Every iterate is projected onto ``{P >= 0, int P dx <= budget}`` per time
    node. A trial step is accepted only if it lowers the objective by at least
    ``sufficient_decrease / step * |P_new - P|**2`` (weighted norm), so the
    objective history never increases. After an accepted step the trial step
    length doubles; after a rejection it halves.

    ``callback(iteration, P, objective)`` is called with the starting control
    (iteration 0) and after every accepted step.
    """
    budget = initial.budget if budget is None else float(budget)
    P = _check_control(problem, initial)
    if not ControlField(P, budget, problem.domain.dx).is_feasible():
        raise ValueError("initial control violates P >= 0 or the per-node budget")
    w = problem.quadrature_weights()
    dx = problem.domain.dx
    J = control_objective(problem, P)
    history = [J]
    if callback is not None:
        callback(0, P, J)
    status = "max-iterations"
    s = float(step)
    done = 0
    for it in range(iterations):
        g = adjoint_gradient(problem, P)
        for _ in range(max_backtracks):
            trial = project_budget(P - s * g, budget, dx)
            diff = float(np.sum(w * (trial - P) ** 2))
            if diff <= tol * max(1.0, float(np.sum(w * P * P))):
                status = "converged"
                break
            Jt = control_objective(problem, trial)
            if Jt <= J - sufficient_decrease / s * diff:
                break
            s *= 0.5
        else:
            status = "stalled"
            break
        if status == "converged":
            break
        P, J = trial, Jt
        history.append(J)
        done = it + 1
        if callback is not None:
            callback(done, P, J)
        s *= 2.0
    return PoliceOptimizationResult(ControlField(P, budget, dx), tuple(history), status, done)
