"""Integration and discretization kernels shared by every model module."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _backend
from ._backend import ABSORBING, PERIODIC, ZERO_FLUX
from .errors import IntegrationError

MAX_STEPS = 10**8
BOUNDARIES = ("zero-flux", "periodic", "absorbing")
_BOUNDARY_CODES = {"zero-flux": ZERO_FLUX, "periodic": PERIODIC, "absorbing": ABSORBING}

Rhs = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on ``[t0, t1]``; the last step is shortened to land on ``t1``."""

    t0: float
    t1: float
    step: float

    def __post_init__(self):
        for name in ("t0", "t1", "step"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"TimeGrid.{name} must be finite")
        if not self.t1 > self.t0:
            raise ValueError(f"TimeGrid requires t1 > t0 (got t0={self.t0}, t1={self.t1})")
        if not self.step > 0:
            raise ValueError(f"TimeGrid.step must be positive (got {self.step})")
        n = self._count()
        if n > MAX_STEPS:
            raise ValueError(f"TimeGrid has {n} steps, more than the limit of {MAX_STEPS}")

    def _count(self) -> int:
        ratio = (self.t1 - self.t0) / self.step
        nearest = round(ratio)
        # absorb representation error such as 1/0.01 = 100.00000000000001
        if nearest >= 1 and abs(ratio - nearest) <= 1e-9 * nearest:
            return int(nearest)
        return int(math.ceil(ratio))

    @property
    def n_steps(self) -> int:
        return self._count()

    @property
    def times(self) -> np.ndarray:
        n = self.n_steps
        t = self.t0 + self.step * np.arange(n + 1, dtype=float)
        t[-1] = self.t1
        return t

    @property
    def steps(self) -> np.ndarray:
        """Step sizes; all equal to ``step`` except possibly the last."""
        n = self.n_steps
        h = np.full(n, float(self.step))
        h[-1] = self.t1 - (self.t0 + self.step * (n - 1))
        return h


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped sequence of state vectors.

    ``clamp_events`` counts how many state components were reset to zero by a
    non-negativity rule during the run.
    """

    times: np.ndarray
    states: np.ndarray
    clamp_events: int = 0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.ndim != 1 or times.shape[0] < 1:
            raise ValueError("Trajectory needs at least one time")
        if states.shape[0] != times.shape[0]:
            raise ValueError(f"{times.shape[0]} times but {states.shape[0]} states")
        if np.any(np.diff(times) <= 0):
            raise ValueError("Trajectory times must be strictly increasing")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self):
        return self.times.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def component(self, i: int) -> np.ndarray:
        return self.states[:, i]


@dataclass(frozen=True)
class SpatialGrid1D:
    """Cell-centred grid of ``cells`` cells on ``[x0, x1]``."""

    x0: float
    x1: float
    cells: int
    boundary: str = "zero-flux"

    def __post_init__(self):
        if not (math.isfinite(self.x0) and math.isfinite(self.x1)) or not self.x1 > self.x0:
            raise ValueError(f"SpatialGrid1D requires finite x1 > x0 (got {self.x0}, {self.x1})")
        if int(self.cells) != self.cells or self.cells < 3:
            raise ValueError(f"SpatialGrid1D needs an integer number of cells >= 3 (got {self.cells})")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}; expected one of {BOUNDARIES}")

    @property
    def dx(self) -> float:
        return (self.x1 - self.x0) / self.cells

    @property
    def length(self) -> float:
        return self.x1 - self.x0

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.cells) + 0.5) * self.dx


def _check_finite(values, t, state, what):
    if not np.all(np.isfinite(values)):
        raise IntegrationError(f"non-finite {what}", t=t, state=np.array(state, copy=True))


def rk4_step(rhs: Rhs, t: float, state, h: float) -> np.ndarray:
    """Advance ``state`` by one classical fourth-order Runge-Kutta step.

    Raises
    ------
    IntegrationError
        If any stage evaluation of ``rhs`` is not finite.
    """
    if not h > 0:
        raise ValueError(f"step must be positive (got {h})")
    y = np.asarray(state, dtype=float)
    k1 = np.asarray(rhs(t, y), dtype=float)
    _check_finite(k1, t, y, "right-hand side")
    k2 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k1), dtype=float)
    _check_finite(k2, t, y, "right-hand side")
    k3 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k2), dtype=float)
    _check_finite(k3, t, y, "right-hand side")
    k4 = np.asarray(rhs(t + h, y + h * k3), dtype=float)
    _check_finite(k4, t, y, "right-hand side")
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def euler_step(rhs: Rhs, t: float, state, h: float) -> np.ndarray:
    y = np.asarray(state, dtype=float)
    f = np.asarray(rhs(t, y), dtype=float)
    _check_finite(f, t, y, "right-hand side")
    return y + h * f


def _nonneg_mask(nonnegative, dim):
    if nonnegative is False or nonnegative is None:
        return None
    if nonnegative is True:
        return np.ones(dim, dtype=bool)
    mask = np.asarray(nonnegative, dtype=bool)
    if mask.shape != (dim,):
        raise ValueError(f"nonnegative mask has shape {mask.shape}, state has dimension {dim}")
    return mask if mask.any() else None


def _clamp(y, mask):
    neg = mask & (y < 0)
    count = int(neg.sum())
    if count:
        y = y.copy()
        y[neg] = 0.0
    return y, count


def integrate_ode(
    rhs: Rhs,
    y0,
    grid: TimeGrid,
    *,
    method: str = "rk4",
    nonnegative: bool | Sequence[bool] = False,
) -> Trajectory:
    """Fixed-step integration of ``dy/dt = rhs(t, y)`` over ``grid``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> dy/dt``.
    y0 : array-like
        Initial state; stored unchanged as the first trajectory state.
    grid : TimeGrid
    method : {"rk4", "euler"}
        ``"euler"`` is the explicit Euler reference scheme.
    nonnegative : bool or sequence of bool
        Components clamped at zero after every step; each reset is counted in
        ``Trajectory.clamp_events``.
    """
    if method == "rk4":
        stepper = rk4_step
    elif method == "euler":
        stepper = euler_step
    else:
        raise ValueError(f"unknown method {method!r}")
    y = np.array(y0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    mask = _nonneg_mask(nonnegative, y.shape[0])
    times = grid.times
    steps = grid.steps
    states = np.empty((times.shape[0], y.shape[0]))
    states[0] = y
    clamps = 0
    for k, h in enumerate(steps):
        y = stepper(rhs, times[k], y, h)
        if mask is not None:
            y, c = _clamp(y, mask)
            clamps += c
        states[k + 1] = y
    return Trajectory(times, states, clamp_events=clamps)


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator (numpy's portable, documented bit generator)."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def euler_maruyama(
    drift: Rhs,
    noise_amplitude: Rhs,
    y0,
    grid: TimeGrid,
    seed: int,
    *,
    nonnegative: bool | Sequence[bool] = False,
) -> Trajectory:
    """One Euler-Maruyama sample path with additive diagonal Gaussian noise.

    Each step applies ``y + h*drift(t, y) + amp(t, y) * sqrt(h) * Z`` with
    ``Z`` standard normal, drawn from a PCG64 stream seeded with ``seed``.
    The same seed and inputs reproduce the path bit for bit.
    """
    y = np.array(y0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    dim = y.shape[0]
    mask = _nonneg_mask(nonnegative, dim)
    rng = make_rng(seed)
    times = grid.times
    steps = grid.steps
    states = np.empty((times.shape[0], dim))
    states[0] = y
    clamps = 0
    for k, h in enumerate(steps):
        t = times[k]
        f = np.asarray(drift(t, y), dtype=float)
        _check_finite(f, t, y, "drift")
        g = np.broadcast_to(np.asarray(noise_amplitude(t, y), dtype=float), (dim,))
        _check_finite(g, t, y, "noise amplitude")
        z = rng.standard_normal(dim)
        y = y + h * f
        y = y + g * (math.sqrt(h) * z)
        if mask is not None:
            y, c = _clamp(y, mask)
            clamps += c
        states[k + 1] = y
    return Trajectory(times, states, clamp_events=clamps)


def _boundary_code(boundary) -> int:
    if isinstance(boundary, SpatialGrid1D):
        boundary = boundary.boundary
    try:
        return _BOUNDARY_CODES[boundary]
    except KeyError:
        raise ValueError(f"unknown boundary {boundary!r}; expected one of {BOUNDARIES}") from None


def laplacian_1d(values, dx: float, boundary: str = "zero-flux") -> np.ndarray:
    """Second-order central Laplacian with ghost cells.

    Zero-flux mirrors the edge cell into its ghost, absorbing uses a zero
    ghost, periodic wraps around.
    """
    u = np.asarray(values, dtype=float)
    if u.ndim != 1 or u.shape[0] < 3:
        raise ValueError("laplacian_1d needs a 1-D field with at least 3 cells")
    if not dx > 0:
        raise ValueError(f"dx must be positive (got {dx})")
    return _backend.kernels.laplacian_1d(u, float(dx), _boundary_code(boundary))


def upwind_advection_1d(values, velocity: float, dx: float, boundary: str = "zero-flux") -> np.ndarray:
    """First-order upwind approximation of ``velocity * dC/dx``."""
    u = np.asarray(values, dtype=float)
    if u.ndim != 1 or u.shape[0] < 3:
        raise ValueError("upwind_advection_1d needs a 1-D field with at least 3 cells")
    if not dx > 0:
        raise ValueError(f"dx must be positive (got {dx})")
    return _backend.kernels.upwind_1d(u, float(velocity), float(dx), _boundary_code(boundary))
