# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures and semantics match ``_pykernels``."""

from libc.math cimport sin, exp, expm1, log, cosh, fabs, isfinite


def sg_bt_sweep(double w0, const double[::1] p, const double[::1] q,
                const double[::1] pm, const double[::1] qm,
                double a, double sigma, double h, double[::1] out):
    cdef Py_ssize_t n = p.shape[0], i
    cdef double ia = 1.0 / a, w, k1, k2, k3, k4, z
    out[0] = w0
    w = w0
    for i in range(n - 1):
        z = w
        k1 = sigma * (a * sin(0.5 * (z + p[i])) + ia * sin(0.5 * (z - p[i]))) - q[i]
        z = w + 0.5 * h * k1
        k2 = sigma * (a * sin(0.5 * (z + pm[i])) + ia * sin(0.5 * (z - pm[i]))) - qm[i]
        z = w + 0.5 * h * k2
        k3 = sigma * (a * sin(0.5 * (z + pm[i])) + ia * sin(0.5 * (z - pm[i]))) - qm[i]
        z = w + h * k3
        k4 = sigma * (a * sin(0.5 * (z + p[i + 1])) + ia * sin(0.5 * (z - p[i + 1]))) - q[i + 1]
        w = w + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not isfinite(w) or fabs(w - p[i + 1]) > 1e6:
            return i + 1
        out[i + 1] = w
    return -1


def sg_leapfrog(double[::1] u, double[::1] v, double dt, double dx, long nsteps,
                int order=2):
    cdef Py_ssize_t n = u.shape[0], i
    cdef long s
    cdef double hdt = 0.5 * dt, r = dt / (dx * dx), r12 = r / 12.0
    for s in range(nsteps):
        for i in range(1, n - 1):
            u[i] += hdt * v[i]
        if order == 4 and n > 4:
            v[1] += r * (u[0] - 2.0 * u[1] + u[2]) - dt * sin(u[1])
            for i in range(2, n - 2):
                v[i] += r12 * (16.0 * (u[i - 1] + u[i + 1]) - (u[i - 2] + u[i + 2])
                               - 30.0 * u[i]) - dt * sin(u[i])
            i = n - 2
            v[i] += r * (u[i - 1] - 2.0 * u[i] + u[i + 1]) - dt * sin(u[i])
        else:
            for i in range(1, n - 1):
                v[i] += r * (u[i - 1] - 2.0 * u[i] + u[i + 1]) - dt * sin(u[i])
        for i in range(1, n - 1):
            u[i] += hdt * v[i]


cdef inline void _toda_force(const double[::1] q, double[::1] f) noexcept nogil:
    cdef Py_ssize_t n = q.shape[0], j
    cdef double left = 0.0, right
    for j in range(n - 1):
        right = expm1(q[j] - q[j + 1])
        f[j] = left - right
        left = right
    f[n - 1] = left


def toda_verlet(double[::1] q, double[::1] p, double dt, long nsteps,
                const double[::1] weights, double[::1] work):
    cdef Py_ssize_t n = q.shape[0], j, k, m = weights.shape[0]
    cdef long s
    cdef double h
    _toda_force(q, work)
    for s in range(nsteps):
        for k in range(m):
            h = weights[k] * dt
            for j in range(n):
                p[j] += 0.5 * h * work[j]
            for j in range(n):
                q[j] += h * p[j]
            _toda_force(q, work)
            for j in range(n):
                p[j] += 0.5 * h * work[j]


def toda_fwd_right(const double[::1] qp, const double[::1] pp, double kappa,
                   double[::1] q, Py_ssize_t start):
    cdef Py_ssize_t n = q.shape[0], j
    cdef double c = 2.0 * cosh(kappa), arg
    for j in range(start, n - 1):
        arg = c - pp[j] - exp(q[j] - qp[j] + kappa)
        if not arg > 0.0:
            return j
        q[j + 1] = qp[j] - kappa - log(arg)
    return -1


def toda_fwd_left(const double[::1] qp, const double[::1] pp, double kappa,
                  double[::1] q, Py_ssize_t start):
    cdef Py_ssize_t j
    cdef double c = 2.0 * cosh(kappa), arg
    for j in range(start - 1, -1, -1):
        arg = c - pp[j] - exp(qp[j] - q[j + 1] - kappa)
        if not arg > 0.0:
            return j
        q[j] = qp[j] - kappa + log(arg)
    return -1


def toda_inv_right(const double[::1] q, const double[::1] p, double kappa,
                   double left, double[::1] qp, Py_ssize_t stop):
    cdef Py_ssize_t j
    cdef double c = 2.0 * cosh(kappa), arg, prev = left
    for j in range(stop + 1):
        arg = c - p[j] - exp(prev - q[j] - kappa)
        if not arg > 0.0:
            return j
        prev = q[j] + kappa - log(arg)
        qp[j] = prev
    return -1


def toda_inv_left(const double[::1] q, const double[::1] p, double kappa,
                  double[::1] qp, Py_ssize_t stop):
    cdef Py_ssize_t n = q.shape[0], j
    cdef double c = 2.0 * cosh(kappa), arg
    for j in range(n - 1, stop, -1):
        arg = c - p[j] - exp(q[j] - qp[j] + kappa)
        if not arg > 0.0:
            return j
        qp[j - 1] = q[j] + kappa + log(arg)
    return -1


def linear_recurrence(const double[::1] E, const double[::1] b, double u0, double[::1] out):
    cdef Py_ssize_t n = E.shape[0], i
    out[0] = u0
    for i in range(n):
        out[i + 1] = E[i] * out[i] + b[i]
