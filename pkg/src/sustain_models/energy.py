"""Energy return on energy invested (EROEI) and scalar energy metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import IntegrationError
from .numerics import TimeGrid


def eroei_static(usable: float, expended: float) -> float:
    """Usable energy acquired per unit of energy expended to get it."""
    if not expended > 0:
        raise ZeroDivisionError(f"energy expended must be positive (got {expended})")
    if not usable > 0:
        raise ValueError(f"usable energy must be positive (got {usable})")
    return usable / expended


def capacity_factor(actual_output: float, max_potential: float) -> float:
    if not max_potential > 0:
        raise ValueError(f"maximum potential output must be positive (got {max_potential})")
    if actual_output < 0:
        raise ValueError(f"actual output must be non-negative (got {actual_output})")
    if actual_output > max_potential:
        raise ValueError(f"actual output {actual_output} exceeds maximum potential {max_potential}")
    return actual_output / max_potential


def carbon_intensity(emissions: float, energy: float) -> float:
    """Emissions per unit of energy produced (units follow the inputs, e.g. g/kWh)."""
    if not energy > 0:
        raise ValueError(f"energy produced must be positive (got {energy})")
    if emissions < 0:
        raise ValueError(f"emissions must be non-negative (got {emissions})")
    return emissions / energy


@dataclass(frozen=True)
class EroeiParams:
    eta: float  # extraction efficiency
    kappa: float  # output proportionality
    n: float  # output nonlinearity in the remaining resource
    beta: float  # investment scaling
    E_i0: float  # initial investment rate
    R_max: float  # initial total resource

    def __post_init__(self):
        for name in ("eta", "kappa", "n", "E_i0", "R_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"EroeiParams.{name} must be positive (got {v})")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"EroeiParams.beta must be non-negative (got {self.beta})")


class EroeiRates(NamedTuple):
    dR_dt: float
    E_o: float
    E_i: float
    eroei: float


def eroei_rhs(R: float, params: EroeiParams) -> EroeiRates:
    if R < 0:
        raise ValueError(f"remaining resource must be non-negative (got {R})")
    E_o = params.kappa * R**params.n
    E_i = params.E_i0 + params.beta * (params.R_max - R)
    return EroeiRates(-E_o / params.eta, E_o, E_i, E_o / E_i)


@dataclass(frozen=True, eq=False)
class EroeiTrajectory:
    times: np.ndarray
    R: np.ndarray
    E_o: np.ndarray
    E_i: np.ndarray
    eroei: np.ndarray
    clamp_events: int = 0


def simulate_depletion(params: EroeiParams, R0: float, grid: TimeGrid) -> EroeiTrajectory:
    """RK4 run of the depletion ODE ``dR/dt = -kappa R**n / eta``.

    ``R`` is clamped at zero once exhausted and output stays zero from then on.
    Output, investment and EROEI series are evaluated from ``R`` at each node.
    """
    if not (0 < R0 <= params.R_max):
        raise ValueError(f"initial resource must lie in (0, R_max={params.R_max}] (got {R0})")
    k = params.kappa / params.eta
    n = params.n

    def f(r):
        # stage values can dip below zero when n < 1 and the resource runs out
        return -k * max(r, 0.0) ** n

    times = grid.times
    R = np.empty(times.shape[0])
    R[0] = r = float(R0)
    clamps = 0
    for i, h in enumerate(grid.steps):
        k1 = f(r)
        k2 = f(r + 0.5 * h * k1)
        k3 = f(r + 0.5 * h * k2)
        k4 = f(r + h * k3)
        r = r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(r):
            raise IntegrationError("depletion run became non-finite", t=float(times[i]), state=R[i])
        if r < 0:
            r = 0.0
            clamps += 1
        R[i + 1] = r
    E_o = params.kappa * R**n
    E_i = params.E_i0 + params.beta * (params.R_max - R)
    return EroeiTrajectory(times, R, E_o, E_i, E_o / E_i, clamps)
