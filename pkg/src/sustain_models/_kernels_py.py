"""Pure-Python reference kernels.

Every routine here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same floating-point operation order, so both backends
produce bit-identical results.
"""

from __future__ import annotations

import math

import numpy as np

ZERO_FLUX = 0
PERIODIC = 1
ABSORBING = 2


def _lorenz(sigma, rho, beta, x, y, z):
    return sigma * (y - x), x * (rho - z) - y, x * y - beta * z


def _lorenz_rk4(sigma, rho, beta, x, y, z, h):
    a1, b1, c1 = _lorenz(sigma, rho, beta, x, y, z)
    a2, b2, c2 = _lorenz(sigma, rho, beta,
                         x + 0.5 * h * a1, y + 0.5 * h * b1, z + 0.5 * h * c1)
    a3, b3, c3 = _lorenz(sigma, rho, beta,
                         x + 0.5 * h * a2, y + 0.5 * h * b2, z + 0.5 * h * c2)
    a4, b4, c4 = _lorenz(sigma, rho, beta, x + h * a3, y + h * b3, z + h * c3)
    w = h / 6.0
    return (x + w * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            y + w * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
            z + w * (c1 + 2.0 * c2 + 2.0 * c3 + c4))


def lorenz_rk4(sigma, rho, beta, y0, steps):
    """Integrate the Lorenz system over the given step sizes.

    Returns an array of shape ``(len(steps) + 1, 3)``; row ``k`` is the state
    after ``k`` steps. Integration stops early (remaining rows NaN) if the
    state becomes non-finite.
    """
    steps = np.asarray(steps, dtype=float)
    out = np.full((steps.shape[0] + 1, 3), np.nan)
    x, y, z = float(y0[0]), float(y0[1]), float(y0[2])
    out[0] = (x, y, z)
    for k in range(steps.shape[0]):
        x, y, z = _lorenz_rk4(sigma, rho, beta, x, y, z, float(steps[k]))
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            break
        out[k + 1, 0] = x
        out[k + 1, 1] = y
        out[k + 1, 2] = z
    return out


def lorenz_lyapunov(sigma, rho, beta, y0, offset, h, n_transient, n_renorm,
                    n_intervals):
    """Two-trajectory renormalization sum for the Lorenz system.

    The reference orbit is first advanced ``n_transient`` steps. The companion
    starts at ``reference + offset`` and is pulled back to distance
    ``|offset|`` every ``n_renorm`` steps. Returns ``(sum of log growth
    factors, number of completed intervals)``; the count is short if a state
    went non-finite.
    """
    x, y, z = float(y0[0]), float(y0[1]), float(y0[2])
    for _ in range(n_transient):
        x, y, z = _lorenz_rk4(sigma, rho, beta, x, y, z, h)
    ox, oy, oz = float(offset[0]), float(offset[1]), float(offset[2])
    d0 = math.sqrt(ox * ox + oy * oy + oz * oz)
    px, py, pz = x + ox, y + oy, z + oz
    total = 0.0
    for j in range(n_intervals):
        for _ in range(n_renorm):
            x, y, z = _lorenz_rk4(sigma, rho, beta, x, y, z, h)
            px, py, pz = _lorenz_rk4(sigma, rho, beta, px, py, pz, h)
        dx, dy, dz = px - x, py - y, pz - z
        d = math.sqrt(dx * dx + dy * dy + dz * dz)
        if not (math.isfinite(d) and d > 0.0):
            return total, j
        total += math.log(d / d0)
        s = d0 / d
        px, py, pz = x + dx * s, y + dy * s, z + dz * s
    return total, n_intervals


def _lv(r, c, b, m, n1, n2):
    return r * n1 - c * n1 * n2, b * n1 * n2 - m * n2


def lotka_volterra_rk4(r, c, b, m, y0, steps):
    """RK4 for the two-species predator-prey system with a clamp at zero.

    Returns ``(states, clamp_events)``; states has shape ``(len(steps)+1, 2)``.
    """
    steps = np.asarray(steps, dtype=float)
    out = np.full((steps.shape[0] + 1, 2), np.nan)
    n1, n2 = float(y0[0]), float(y0[1])
    out[0] = (n1, n2)
    clamps = 0
    for k in range(steps.shape[0]):
        h = float(steps[k])
        a1, b1 = _lv(r, c, b, m, n1, n2)
        a2, b2 = _lv(r, c, b, m, n1 + 0.5 * h * a1, n2 + 0.5 * h * b1)
        a3, b3 = _lv(r, c, b, m, n1 + 0.5 * h * a2, n2 + 0.5 * h * b2)
        a4, b4 = _lv(r, c, b, m, n1 + h * a3, n2 + h * b3)
        w = h / 6.0
        n1 = n1 + w * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        n2 = n2 + w * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if not (math.isfinite(n1) and math.isfinite(n2)):
            break
        if n1 < 0.0:
            n1 = 0.0
            clamps += 1
        if n2 < 0.0:
            n2 = 0.0
            clamps += 1
        out[k + 1, 0] = n1
        out[k + 1, 1] = n2
    return out, clamps


def _ghosts(u, boundary):
    n = u.shape[0]
    if boundary == ZERO_FLUX:
        return u[0], u[n - 1]
    if boundary == PERIODIC:
        return u[n - 1], u[0]
    return 0.0, 0.0


def laplacian_1d(u, dx, boundary):
    u = np.ascontiguousarray(u, dtype=float)
    left = np.empty_like(u)
    right = np.empty_like(u)
    left[1:] = u[:-1]
    right[:-1] = u[1:]
    left[0], right[-1] = _ghosts(u, boundary)
    return (left - 2.0 * u + right) / (dx * dx)


def upwind_1d(u, velocity, dx, boundary):
    """First-order upwind ``v du/dx``.

    Periodic and absorbing boundaries take the upstream value from the ghost
    cell. Zero-flux walls carry no advective flux: nothing enters upstream and
    the downstream wall cell keeps what arrives, so mass is conserved.
    """
    u = np.ascontiguousarray(u, dtype=float)
    if velocity == 0.0:
        return np.zeros_like(u)
    wall = boundary == ZERO_FLUX
    if velocity > 0.0:
        prev = np.empty_like(u)
        prev[1:] = u[:-1]
        prev[0] = 0.0 if wall else _ghosts(u, boundary)[0]
        out = velocity * ((u - prev) / dx)
        if wall:
            out[-1] = velocity * ((0.0 - prev[-1]) / dx)
        return out
    nxt = np.empty_like(u)
    nxt[:-1] = u[1:]
    nxt[-1] = 0.0 if wall else _ghosts(u, boundary)[1]
    out = velocity * ((nxt - u) / dx)
    if wall:
        out[0] = velocity * ((nxt[0] - 0.0) / dx)
    return out
