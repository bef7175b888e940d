"""Predator-prey dynamics.

Two models live here: the classical two-species Lotka-Volterra system and a
generalized system in which prey growth is capped by the scarcest of several
resources (Liebig's law of the minimum), with additive noise on the prey and
predator equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _backend
from .errors import IntegrationError, ModelError
from .numerics import TimeGrid, Trajectory, euler_maruyama


def _positive(obj, names):
    for name in names:
        v = getattr(obj, name)
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{type(obj).__name__}.{name} must be positive (got {v})")


@dataclass(frozen=True)
class SimpleEcoParams:
    r: float  # prey growth
    c: float  # predation
    b: float  # conversion
    m: float  # predator mortality

    def __post_init__(self):
        _positive(self, ("r", "c", "b", "m"))

    @property
    def coexistence(self) -> "EcoState":
        return EcoState(self.m / self.b, self.r / self.c)


class EcoState(NamedTuple):
    N1: float
    N2: float


def simple_rhs(state, params: SimpleEcoParams) -> np.ndarray:
    n1, n2 = (float(v) for v in state)
    return np.array([
        params.r * n1 - params.c * n1 * n2,
        params.b * n1 * n2 - params.m * n2,
    ])


def lv_conserved(state, params: SimpleEcoParams) -> float:
    """First integral ``b N1 - m ln N1 + c N2 - r ln N2``; constant along orbits."""
    n1, n2 = (float(v) for v in state)
    if not (n1 > 0 and n2 > 0):
        raise ValueError(f"conserved quantity needs N1 > 0 and N2 > 0 (got {n1}, {n2})")
    return params.b * n1 - params.m * math.log(n1) + params.c * n2 - params.r * math.log(n2)


def _check_populations(y0, dim):
    y = np.asarray(y0, dtype=float).reshape(-1)
    if y.shape != (dim,) or not np.all(np.isfinite(y)) or np.any(y < 0):
        raise ValueError(f"expected {dim} finite non-negative values (got {y0!r})")
    return y


def simulate_simple(params: SimpleEcoParams, y0, grid: TimeGrid) -> Trajectory:
    """RK4 run of the two-species model; negative populations are clamped to 0."""
    y = _check_populations(y0, 2)
    states, clamps = _backend.kernels.lotka_volterra_rk4(params.r, params.c, params.b, params.m,
                                                y, grid.steps)
    bad = ~np.all(np.isfinite(states), axis=1)
    if bad.any():
        k = int(np.argmax(bad))
        raise IntegrationError("predator-prey trajectory diverged",
                               t=float(grid.times[k - 1]), state=states[k - 1])
    return Trajectory(grid.times, states, clamp_events=clamps)


def simple_family(base: SimpleEcoParams, parameter: str):
    if parameter not in ("r", "c", "b", "m"):
        raise ValueError(f"unknown predator-prey parameter {parameter!r}")

    def family(value):
        kw = {"r": base.r, "c": base.c, "b": base.b, "m": base.m, parameter: float(value)}
        p = SimpleEcoParams(**kw)
        return lambda y: simple_rhs(y, p)

    return family


def liebig_factor(R: Sequence[float], K: Sequence[float]) -> float:
    """``min_i R_i / K_i``: growth is set by the scarcest resource."""
    r = np.asarray(R, dtype=float).reshape(-1)
    k = np.asarray(K, dtype=float).reshape(-1)
    if r.shape[0] == 0 or k.shape[0] == 0:
        raise ValueError("liebig_factor needs at least one resource")
    if r.shape != k.shape:
        raise ValueError(f"{r.shape[0]} resource levels but {k.shape[0]} capacities")
    if np.any(k <= 0):
        raise ValueError("resource capacities must be positive")
    return float(np.min(r / k))


@dataclass(frozen=True)
class Resource:
    """One limiting resource.

    ``depletion`` overrides the default consumption ``depletion_rate * x * R/K``;
    it is called as ``depletion(x, y, R_i)``.
    """

    capacity: float
    supply: float = 0.0
    depletion_rate: float = 0.0
    depletion: Callable[[float, float, float], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.capacity) and self.capacity > 0):
            raise ValueError(f"resource capacity must be positive (got {self.capacity})")
        if not (math.isfinite(self.supply) and self.supply >= 0):
            raise ValueError(f"resource supply must be non-negative (got {self.supply})")
        if not (math.isfinite(self.depletion_rate) and self.depletion_rate >= 0):
            raise ValueError(f"depletion rate must be non-negative (got {self.depletion_rate})")

    def depletion_at(self, x, y, level):
        if self.depletion is not None:
            return self.depletion(x, y, level)
        return self.depletion_rate * x * (level / self.capacity)


@dataclass(frozen=True)
class GeneralizedEcoParams:
    """Resource-limited predator-prey parameters.

    ``predation`` overrides the default mass-action rate ``attack_rate * x * y``;
    it is called as ``predation(x, y, R)`` with ``R`` the resource vector.
    """

    r_x: float
    delta: float
    m: float
    resources: tuple[Resource, ...]
    attack_rate: float = 0.1
    noise_x: float = 0.0
    noise_y: float = 0.0
    predation: Callable[[float, float, np.ndarray], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "resources", tuple(self.resources))
        _positive(self, ("r_x", "m"))
        if not (0 < self.delta <= 1):
            raise ValueError(f"conversion efficiency delta must lie in (0, 1] (got {self.delta})")
        if not self.resources:
            raise ValueError("at least one resource is required")
        for name in ("attack_rate", "noise_x", "noise_y"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be non-negative (got {v})")

    @property
    def capacities(self) -> np.ndarray:
        return np.array([res.capacity for res in self.resources])

    def predation_at(self, x, y, R):
        if self.predation is not None:
            return self.predation(x, y, R)
        return self.attack_rate * x * y


@dataclass(frozen=True)
class GeneralizedEcoState:
    x: float
    y: float
    R: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "R", tuple(float(v) for v in self.R))
        if self.x < 0 or self.y < 0 or any(v < 0 for v in self.R):
            raise ValueError("populations and resources must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, *self.R], dtype=float)


def _unpack(state, n_resources):
    if isinstance(state, GeneralizedEcoState):
        state = state.as_array()
    s = np.asarray(state, dtype=float).reshape(-1)
    if s.shape != (2 + n_resources,):
        raise ValueError(f"state must hold x, y and {n_resources} resource levels")
    return s


def generalized_rhs(state, params: GeneralizedEcoParams) -> np.ndarray:
    """Deterministic drift of the resource-limited system (noise excluded).

    Returns ``(dx/dt, dy/dt, dR_1/dt, ..., dR_n/dt)``.

    Raises
    ------
    ModelError
        If the predation or a depletion rate is negative or non-finite.
    """
    n = len(params.resources)
    s = _unpack(state, n)
    x, y, R = s[0], s[1], s[2:]
    g = float(params.predation_at(x, y, R))
    if not (math.isfinite(g) and g >= 0):
        raise ModelError(f"predation rate must be finite and non-negative (got {g} at x={x}, y={y})")
    growth = params.r_x * x * liebig_factor(R, params.capacities)
    out = np.empty(2 + n)
    out[0] = growth - g
    out[1] = params.delta * g - params.m * y
    for i, res in enumerate(params.resources):
        phi = float(res.depletion_at(x, y, R[i]))
        if not (math.isfinite(phi) and phi >= 0):
            raise ModelError(f"depletion of resource {i + 1} must be finite and non-negative (got {phi})")
        out[2 + i] = res.supply - phi
    return out


def simulate_generalized(params: GeneralizedEcoParams, y0, grid: TimeGrid, seed: int) -> Trajectory:
    """Euler-Maruyama sample path; noise acts on the prey and predator equations only.

    Negative components are clamped to zero after each step and counted.
    """
    n = len(params.resources)
    y = _unpack(y0, n)
    _check_populations(y, 2 + n)
    amp = np.zeros(2 + n)
    amp[0] = params.noise_x
    amp[1] = params.noise_y
    return euler_maruyama(
        lambda t, s: generalized_rhs(s, params),
        lambda t, s: amp,
        y,
        grid,
        seed,
        nonnegative=True,
    )
