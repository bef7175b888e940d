"""Tipping-point diagnostics: bifurcation sweeps and early-warning statistics."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .numerics import TimeGrid, Trajectory, integrate_ode

RhsFamily = Callable[[float], Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class WindowSeries:
    """Statistic over trailing windows; ``times[j]`` is the end of window ``j``."""

    times: np.ndarray
    values: np.ndarray
    window: int


def _series(series, times):
    if isinstance(series, Trajectory):
        if series.dim != 1:
            raise ValueError("pass one component of a multi-dimensional trajectory")
        times = series.times if times is None else times
        series = series.states[:, 0]
    x = np.asarray(series, dtype=float).reshape(-1)
    t = np.arange(x.shape[0], dtype=float) if times is None else np.asarray(times, dtype=float)
    if t.shape != x.shape:
        raise ValueError("times and values differ in length")
    return t, x


def rolling_variance(series, window: int, times=None) -> WindowSeries:
    """Unbiased sample variance over each trailing window of ``window`` samples."""
    t, x = _series(series, times)
    if window < 2:
        raise ValueError("window must be at least 2 samples")
    if window > x.shape[0]:
        raise ValueError(f"window {window} exceeds series length {x.shape[0]}")
    v = sliding_window_view(x, window).var(axis=1, ddof=1)
    return WindowSeries(t[window - 1:], v, window)


def lag1_autocorrelation(series, window: int, times=None) -> WindowSeries:
    """Pearson correlation between successive values in each trailing window.

    Windows where either lagged half has zero variance yield NaN.
    """
    t, x = _series(series, times)
    if window < 3:
        raise ValueError("window must be at least 3 samples")
    if window > x.shape[0]:
        raise ValueError(f"window {window} exceeds series length {x.shape[0]}")
    w = sliding_window_view(x, window)
    a = w[:, :-1] - w[:, :-1].mean(axis=1, keepdims=True)
    b = w[:, 1:] - w[:, 1:].mean(axis=1, keepdims=True)
    den = np.sqrt((a * a).sum(axis=1) * (b * b).sum(axis=1))
    num = (a * b).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    r = np.clip(r, -1.0, 1.0)
    return WindowSeries(t[window - 1:], r, window)


@dataclass(frozen=True)
class SweepSettings:
    """Equilibrium search settings.

    ``seeds`` are Newton starting points in addition to the origin. A sample
    counts as unstable when the leading eigenvalue real part exceeds
    ``instability_tol``; marginal cases count as stable.
    """

    seeds: tuple[tuple[float, ...], ...] = ()
    dim: int | None = None
    max_newton_iter: int = 100
    residual_tol: float = 1e-10
    merge_tol: float = 1e-6
    instability_tol: float = 1e-8
    attractor_time: float | None = None
    attractor_step: float = 0.01
    parallel: bool = False


@dataclass(frozen=True)
class SampleSummary:
    parameter: float
    equilibria: tuple[tuple[float, ...], ...]
    leading_eigenvalue: float  # max real part over all equilibria; NaN if none found
    attractor_bound: float
    failed_seeds: int

    @property
    def count(self) -> int:
        return len(self.equilibria)

    @property
    def leading_sign(self) -> int:
        """+1 if some equilibrium is unstable, -1 if all are stable, 0 if none was found."""
        if not self.equilibria:
            return 0
        return 1 if self.leading_eigenvalue > 0 else -1


@dataclass(frozen=True)
class Transition:
    lo: float
    hi: float
    kind: str  # "count", "stability" or "count+stability"

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class SweepResult:
    parameters: np.ndarray = field(compare=False)
    samples: tuple[SampleSummary, ...]
    transitions: tuple[Transition, ...]


def numerical_jacobian(f, x) -> np.ndarray:
    """Central differences with step ``1e-6 * (1 + |x_j|)``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    J = np.empty((n, n))
    for j in range(n):
        e = 1e-6 * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += e
        xm[j] -= e
        J[:, j] = (np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / (2.0 * e)
    return J


def damped_newton(f, x0, *, max_iter: int = 100, tol: float = 1e-10, step_tol: float = 1e-10):
    """Newton iteration with step halving; returns ``(root or None, iterations)``.

    A root needs residual ``<= tol``; iteration continues until the Newton
    step is also below ``step_tol * (1 + |x|)`` so that slowly converging
    degenerate roots are located accurately, not just to residual precision.
    """
    x = np.array(x0, dtype=float)
    fx = np.asarray(f(x), dtype=float)
    norm = float(np.linalg.norm(fx))
    for it in range(max_iter):
        if norm == 0.0:
            return x, it
        try:
            dx = np.linalg.solve(numerical_jacobian(f, x), -fx)
        except np.linalg.LinAlgError:
            return (x, it) if norm <= tol else (None, it)
        if not np.all(np.isfinite(dx)):
            return (x, it) if norm <= tol else (None, it)
        if norm <= tol and np.linalg.norm(dx) <= step_tol * (1.0 + np.linalg.norm(x)):
            # the final correction is below the step tolerance; keep it if it helps
            last = x + dx
            fl = float(np.linalg.norm(np.asarray(f(last), dtype=float)))
            return (last, it + 1) if fl <= norm else (x, it)
        lam = 1.0
        while lam > 1e-10:
            trial = x + lam * dx
            ft = np.asarray(f(trial), dtype=float)
            nt = float(np.linalg.norm(ft))
            if np.isfinite(nt) and nt < norm:
                break
            lam *= 0.5
        else:
            # no further decrease possible
            return (x, it) if norm <= tol else (None, it)
        x, fx, norm = trial, ft, nt
    return (x, max_iter) if norm <= tol else (None, max_iter)


def _analyse(family: RhsFamily, value: float, settings: SweepSettings, dim: int) -> SampleSummary:
    f = family(value)
    seeds = [np.zeros(dim)] + [np.asarray(s, dtype=float) for s in settings.seeds]
    roots: list[np.ndarray] = []
    failed = 0
    for s in seeds:
        root, _ = damped_newton(f, s, max_iter=settings.max_newton_iter, tol=settings.residual_tol)
        if root is None:
            failed += 1
            continue
        if all(np.linalg.norm(root - r) > settings.merge_tol for r in roots):
            roots.append(root)
    roots.sort(key=lambda r: tuple(r))
    lead = -math.inf
    for r in roots:
        lead = max(lead, float(np.max(np.linalg.eigvals(numerical_jacobian(f, r)).real)))
    if not roots:
        lead = math.nan
    elif abs(lead) <= settings.instability_tol:
        lead = 0.0
    bound = math.nan
    if settings.attractor_time is not None:
        start = seeds[1] if len(seeds) > 1 else np.full(dim, 0.1)
        traj = integrate_ode(lambda t, y: f(y), start,
                             TimeGrid(0.0, settings.attractor_time, settings.attractor_step))
        half = len(traj) // 2
        bound = float(np.max(np.linalg.norm(traj.states[half:], axis=1)))
    return SampleSummary(float(value), tuple(tuple(float(v) for v in r) for r in roots),
                         lead, bound, failed)


def _kind(a: SampleSummary, b: SampleSummary) -> str | None:
    count = a.count != b.count
    stab = a.leading_sign != b.leading_sign
    if count and stab:
        return "count+stability"
    if count:
        return "count"
    if stab:
        return "stability"
    return None


def bifurcation_sweep(
    family: RhsFamily,
    lo: float,
    hi: float,
    samples: int,
    settings: SweepSettings = SweepSettings(),
) -> SweepResult:
    """Locate equilibria across a parameter range and flag qualitative changes.

    For each of ``samples`` evenly spaced values, equilibria are found by
    damped Newton from the origin and the configured seeds (duplicates merged)
    and classified by the leading eigenvalue of a central-difference Jacobian.
    A transition is flagged between adjacent samples whose equilibrium count
    or stability sign differ. Newton failures are counted per sample.
    """
    if samples < 2:
        raise ValueError("a sweep needs at least 2 samples")
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo == hi:
        raise ValueError("sweep range must be finite with lo != hi")
    lo, hi = min(lo, hi), max(lo, hi)
    values = np.linspace(lo, hi, samples)
    dim = settings.dim
    if dim is None:
        dim = len(settings.seeds[0]) if settings.seeds else 1
    if settings.parallel:
        with ThreadPoolExecutor() as pool:
            summaries = list(pool.map(lambda v: _analyse(family, v, settings, dim), values))
    else:
        summaries = [_analyse(family, v, settings, dim) for v in values]
    transitions = []
    for a, b in zip(summaries, summaries[1:]):
        kind = _kind(a, b)
        if kind:
            transitions.append(Transition(a.parameter, b.parameter, kind))
    return SweepResult(values, tuple(summaries), tuple(transitions))
