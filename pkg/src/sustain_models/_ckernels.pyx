# cython: language_level=3
"""Compiled kernels; mirrors ``_kernels_py`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, isfinite

cnp.import_array()

cdef enum:
    ZERO_FLUX = 0
    PERIODIC = 1
    ABSORBING = 2

ctypedef struct vec3:
    double x
    double y
    double z


cdef inline vec3 _lorenz(double sigma, double rho, double beta,
                         double x, double y, double z) noexcept nogil:
    cdef vec3 d
    d.x = sigma * (y - x)
    d.y = x * (rho - z) - y
    d.z = x * y - beta * z
    return d


cdef inline vec3 _lorenz_rk4(double sigma, double rho, double beta,
                             vec3 s, double h) noexcept nogil:
    cdef vec3 k1, k2, k3, k4, out
    cdef double w
    k1 = _lorenz(sigma, rho, beta, s.x, s.y, s.z)
    k2 = _lorenz(sigma, rho, beta,
                 s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y, s.z + 0.5 * h * k1.z)
    k3 = _lorenz(sigma, rho, beta,
                 s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y, s.z + 0.5 * h * k2.z)
    k4 = _lorenz(sigma, rho, beta, s.x + h * k3.x, s.y + h * k3.y, s.z + h * k3.z)
    w = h / 6.0
    out.x = s.x + w * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x)
    out.y = s.y + w * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y)
    out.z = s.z + w * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z)
    return out


def lorenz_rk4(double sigma, double rho, double beta, y0, steps):
    cdef const double[::1] hs = np.ascontiguousarray(steps, dtype=np.float64)
    cdef Py_ssize_t n = hs.shape[0], k
    out_arr = np.full((n + 1, 3), np.nan)
    cdef double[:, ::1] out = out_arr
    cdef vec3 s
    s.x = float(y0[0]); s.y = float(y0[1]); s.z = float(y0[2])
    out[0, 0] = s.x; out[0, 1] = s.y; out[0, 2] = s.z
    with nogil:
        for k in range(n):
            s = _lorenz_rk4(sigma, rho, beta, s, hs[k])
            if not (isfinite(s.x) and isfinite(s.y) and isfinite(s.z)):
                break
            out[k + 1, 0] = s.x
            out[k + 1, 1] = s.y
            out[k + 1, 2] = s.z
    return out_arr


def lorenz_lyapunov(double sigma, double rho, double beta, y0, offset,
                    double h, Py_ssize_t n_transient, Py_ssize_t n_renorm,
                    Py_ssize_t n_intervals):
    cdef vec3 s, p
    cdef double ox = float(offset[0]), oy = float(offset[1]), oz = float(offset[2])
    cdef double d0, d, dx, dy, dz, sc, total = 0.0
    cdef Py_ssize_t i, j, done = n_intervals
    s.x = float(y0[0]); s.y = float(y0[1]); s.z = float(y0[2])
    with nogil:
        for i in range(n_transient):
            s = _lorenz_rk4(sigma, rho, beta, s, h)
        d0 = sqrt(ox * ox + oy * oy + oz * oz)
        p.x = s.x + ox; p.y = s.y + oy; p.z = s.z + oz
        for j in range(n_intervals):
            for i in range(n_renorm):
                s = _lorenz_rk4(sigma, rho, beta, s, h)
                p = _lorenz_rk4(sigma, rho, beta, p, h)
            dx = p.x - s.x; dy = p.y - s.y; dz = p.z - s.z
            d = sqrt(dx * dx + dy * dy + dz * dz)
            if not (isfinite(d) and d > 0.0):
                done = j
                break
            total += log(d / d0)
            sc = d0 / d
            p.x = s.x + dx * sc; p.y = s.y + dy * sc; p.z = s.z + dz * sc
    return total, done


def lotka_volterra_rk4(double r, double c, double b, double m, y0, steps):
    cdef const double[::1] hs = np.ascontiguousarray(steps, dtype=np.float64)
    cdef Py_ssize_t n = hs.shape[0], k
    out_arr = np.full((n + 1, 2), np.nan)
    cdef double[:, ::1] out = out_arr
    cdef double n1 = float(y0[0]), n2 = float(y0[1])
    cdef double h, w, a1, b1, a2, b2, a3, b3, a4, b4, u, v
    cdef long clamps = 0
    out[0, 0] = n1; out[0, 1] = n2
    with nogil:
        for k in range(n):
            h = hs[k]
            a1 = r * n1 - c * n1 * n2
            b1 = b * n1 * n2 - m * n2
            u = n1 + 0.5 * h * a1; v = n2 + 0.5 * h * b1
            a2 = r * u - c * u * v
            b2 = b * u * v - m * v
            u = n1 + 0.5 * h * a2; v = n2 + 0.5 * h * b2
            a3 = r * u - c * u * v
            b3 = b * u * v - m * v
            u = n1 + h * a3; v = n2 + h * b3
            a4 = r * u - c * u * v
            b4 = b * u * v - m * v
            w = h / 6.0
            n1 = n1 + w * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            n2 = n2 + w * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            if not (isfinite(n1) and isfinite(n2)):
                break
            if n1 < 0.0:
                n1 = 0.0
                clamps += 1
            if n2 < 0.0:
                n2 = 0.0
                clamps += 1
            out[k + 1, 0] = n1
            out[k + 1, 1] = n2
    return out_arr, int(clamps)


cdef inline void _ghosts(const double[::1] u, int boundary, double* gl, double* gr) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0]
    if boundary == ZERO_FLUX:
        gl[0] = u[0]; gr[0] = u[n - 1]
    elif boundary == PERIODIC:
        gl[0] = u[n - 1]; gr[0] = u[0]
    else:
        gl[0] = 0.0; gr[0] = 0.0


def laplacian_1d(u_in, double dx, int boundary):
    cdef const double[::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], i
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double gl, gr, l, r, dx2 = dx * dx
    _ghosts(u, boundary, &gl, &gr)
    for i in range(n):
        l = u[i - 1] if i > 0 else gl
        r = u[i + 1] if i < n - 1 else gr
        out[i] = (l - 2.0 * u[i] + r) / dx2
    return out_arr


def upwind_1d(u_in, double velocity, double dx, int boundary):
    cdef const double[::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], i
    out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef double gl, gr, nb
    if velocity == 0.0:
        return out_arr
    _ghosts(u, boundary, &gl, &gr)
    cdef bint wall = boundary == ZERO_FLUX
    if wall:
        # zero-flux walls carry no advective flux (see the Python twin)
        gl = 0.0
        gr = 0.0
    for i in range(n):
        if velocity > 0.0:
            nb = u[i - 1] if i > 0 else gl
            if wall and i == n - 1:
                out[i] = velocity * ((0.0 - nb) / dx)
            else:
                out[i] = velocity * ((u[i] - nb) / dx)
        else:
            nb = u[i + 1] if i < n - 1 else gr
            if wall and i == 0:
                out[i] = velocity * ((nb - 0.0) / dx)
            else:
                out[i] = velocity * ((nb - u[i]) / dx)
    return out_arr
