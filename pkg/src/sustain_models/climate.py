"""Lorenz convection model: simulation, equilibria and chaos diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _backend
from .errors import IntegrationError
from .numerics import TimeGrid, Trajectory, integrate_ode, make_rng, rk4_step


@dataclass(frozen=True)
class LorenzParams:
    sigma: float
    rho: float
    beta: float

    def __post_init__(self):
        for name in ("sigma", "rho", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"LorenzParams.{name} must be a positive finite number (got {v})")


class LorenzState(NamedTuple):
    x: float
    y: float
    z: float


def lorenz_rhs(state, params: LorenzParams) -> np.ndarray:
    """Time derivative ``(sigma(y-x), x(rho-z)-y, xy-beta z)``."""
    x, y, z = (float(v) for v in state)
    return np.array([
        params.sigma * (y - x),
        x * (params.rho - z) - y,
        x * y - params.beta * z,
    ])


def lorenz_equilibria(params: LorenzParams) -> list[LorenzState]:
    """Origin, plus the symmetric convective pair when ``rho > 1``."""
    eqs = [LorenzState(0.0, 0.0, 0.0)]
    if params.rho > 1:
        q = math.sqrt(params.beta * (params.rho - 1))
        z = params.rho - 1
        eqs.append(LorenzState(q, q, z))
        eqs.append(LorenzState(-q, -q, z))
    return eqs


def _check_state(y0):
    y = np.asarray(y0, dtype=float).reshape(-1)
    if y.shape != (3,) or not np.all(np.isfinite(y)):
        raise ValueError(f"Lorenz state must be three finite numbers (got {y0!r})")
    return y


def simulate_lorenz(params: LorenzParams, y0, grid: TimeGrid) -> Trajectory:
    y = _check_state(y0)
    states = _backend.kernels.lorenz_rk4(params.sigma, params.rho, params.beta, y, grid.steps)
    bad = ~np.all(np.isfinite(states), axis=1)
    if bad.any():
        k = int(np.argmax(bad))
        raise IntegrationError("Lorenz trajectory diverged", t=float(grid.times[k - 1]),
                               state=states[k - 1])
    return Trajectory(grid.times, states)


@dataclass(frozen=True, eq=False)
class SeparationSeries:
    times: np.ndarray
    separation: np.ndarray


def divergence_experiment(params: LorenzParams, y0, perturbation, grid: TimeGrid) -> SeparationSeries:
    """Euclidean distance between runs from ``y0`` and ``y0 + perturbation``."""
    y = _check_state(y0)
    d = np.asarray(perturbation, dtype=float).reshape(-1)
    if d.shape != (3,) or not np.linalg.norm(d) > 0:
        raise ValueError("perturbation must be a non-zero 3-vector")
    a = simulate_lorenz(params, y, grid)
    b = simulate_lorenz(params, y + d, grid)
    return SeparationSeries(grid.times, np.linalg.norm(b.states - a.states, axis=1))


@dataclass(frozen=True)
class LyapunovSettings:
    """Two-trajectory estimator settings (times in model time units).

    ``transient`` defaults to 10% of ``total_time``.
    """

    total_time: float = 200.0
    renormalization_interval: float = 0.1
    transient: float | None = None
    step: float = 0.001
    separation: float = 1e-8

    def __post_init__(self):
        if not (self.step > 0 and self.renormalization_interval >= self.step):
            raise ValueError("need step > 0 and renormalization_interval >= step")
        if not self.separation > 0:
            raise ValueError("separation must be positive")
        if not self.total_time > self.transient_time:
            raise ValueError("total_time must exceed the discarded transient")

    @property
    def transient_time(self) -> float:
        return 0.1 * self.total_time if self.transient is None else self.transient


def max_lyapunov(
    params: LorenzParams,
    y0,
    settings: LyapunovSettings = LyapunovSettings(),
    *,
    direction=None,
    seed: int | None = None,
    rhs: Callable[[float, np.ndarray], np.ndarray] | None = None,
) -> float:
    """Largest Lyapunov exponent by Benettin-style renormalization.

    The reference orbit is advanced through the transient first; a companion
    orbit is then kept at distance ``settings.separation`` by rescaling every
    renormalization interval, and the mean log growth rate is returned.

    Parameters
    ----------
    direction : array-like, optional
        Initial offset direction. If omitted, a random unit direction drawn
        with ``seed`` (default 0) is used.
    rhs : callable, optional
        Replaces the Lorenz vector field (``rhs(t, y)``); runs through the
        generic integrator instead of the compiled kernel.
    """
    y = _check_state(y0)
    if direction is None:
        direction = make_rng(0 if seed is None else seed).standard_normal(3)
    u = np.asarray(direction, dtype=float).reshape(-1)
    norm = np.linalg.norm(u)
    if u.shape != (3,) or not norm > 0:
        raise ValueError("direction must be a non-zero 3-vector")
    offset = u / norm * settings.separation

    h = settings.step
    n_transient = int(round(settings.transient_time / h))
    n_renorm = max(1, int(round(settings.renormalization_interval / h)))
    n_intervals = int((settings.total_time - settings.transient_time) / (n_renorm * h))
    if n_intervals < 1:
        raise ValueError("total_time too short for one renormalization interval")

    if rhs is None:
        total, done = _backend.kernels.lorenz_lyapunov(params.sigma, params.rho, params.beta, y,
                                                       offset, h, n_transient, n_renorm,
                                                       n_intervals)
    else:
        total, done = _lyapunov_generic(rhs, y, offset, h, n_transient, n_renorm, n_intervals)
    if done < n_intervals:
        raise IntegrationError("trajectories became non-finite during Lyapunov estimation",
                               t=(n_transient + done * n_renorm) * h)
    return total / (n_intervals * n_renorm * h)


def _lyapunov_generic(rhs, y, offset, h, n_transient, n_renorm, n_intervals):
    t = 0.0
    for _ in range(n_transient):
        y = rk4_step(rhs, t, y, h)
        t += h
    d0 = float(np.linalg.norm(offset))
    p = y + offset
    total = 0.0
    for j in range(n_intervals):
        for _ in range(n_renorm):
            y = rk4_step(rhs, t, y, h)
            p = rk4_step(rhs, t, p, h)
            t += h
        delta = p - y
        d = float(np.linalg.norm(delta))
        if not (math.isfinite(d) and d > 0):
            return total, j
        total += math.log(d / d0)
        p = y + delta * (d0 / d)
    return total, n_intervals


def lorenz_family(base: LorenzParams, parameter: str = "rho"):
    """Autonomous right-hand side family ``value -> f(y)`` varying one parameter of ``base``."""
    name = parameter
    if name not in ("sigma", "rho", "beta"):
        raise ValueError(f"unknown Lorenz parameter {name!r}")

    def family(value):
        kw = {"sigma": base.sigma, "rho": base.rho, "beta": base.beta, name: float(value)}
        p = LorenzParams(**kw)
        return lambda y: lorenz_rhs(y, p)

    return family


def integrate_lorenz_generic(params: LorenzParams, y0, grid: TimeGrid) -> Trajectory:
    """Lorenz run through the generic integrator; reference for the kernel."""
    return integrate_ode(lambda t, y: lorenz_rhs(y, params), _check_state(y0), grid)
