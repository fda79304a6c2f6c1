"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels.pyx``.

Each function has the same signature and in-place semantics as its compiled
twin. Sequential recursions run as scalar loops over Python floats; the time
steppers are vectorized per step.
"""

import math

import numpy as np


def sg_bt_sweep(w0, p, q, pm, qm, a, sigma, h, out):
    p, q, pm, qm = (np.asarray(z).tolist() for z in (p, q, pm, qm))
    ia = 1.0 / a
    sin = math.sin

    def rhs(z, pv, qv):
        return sigma * (a * sin(0.5 * (z + pv)) + ia * sin(0.5 * (z - pv))) - qv

    out[0] = w = w0
    for i in range(len(p) - 1):
        k1 = rhs(w, p[i], q[i])
        k2 = rhs(w + 0.5 * h * k1, pm[i], qm[i])
        k3 = rhs(w + 0.5 * h * k2, pm[i], qm[i])
        k4 = rhs(w + h * k3, p[i + 1], q[i + 1])
        w = w + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not math.isfinite(w) or abs(w - p[i + 1]) > 1e6:
            return i + 1
        out[i + 1] = w
    return -1


def _laplacian(u, order):
    lap = u[:-2] - 2.0 * u[1:-1] + u[2:]
    if order == 4 and u.size > 4:
        lap[1:-1] = (16.0 * (u[1:-3] + u[3:-1]) - (u[:-4] + u[4:]) - 30.0 * u[2:-2]) / 12.0
    return lap


def sg_leapfrog(u, v, dt, dx, nsteps, order=2):
    r = dt / (dx * dx)
    ui, vi = u[1:-1], v[1:-1]
    for _ in range(nsteps):
        ui += 0.5 * dt * vi
        vi += r * _laplacian(u, order) - dt * np.sin(ui)
        ui += 0.5 * dt * vi


def _toda_force(q, f):
    e = np.expm1(q[:-1] - q[1:])
    f[0] = -e[0]
    f[1:-1] = e[:-1] - e[1:]
    f[-1] = e[-1]


def toda_verlet(q, p, dt, nsteps, weights, work):
    _toda_force(q, work)
    for _ in range(nsteps):
        for w in weights:
            h = w * dt
            p += 0.5 * h * work
            q += h * p
            _toda_force(q, work)
            p += 0.5 * h * work


def toda_fwd_right(qp, pp, kappa, q, start):
    c = 2.0 * math.cosh(kappa)
    for j in range(start, len(q) - 1):
        arg = c - pp[j] - math.exp(q[j] - qp[j] + kappa)
        if not arg > 0.0:
            return j
        q[j + 1] = qp[j] - kappa - math.log(arg)
    return -1


def toda_fwd_left(qp, pp, kappa, q, start):
    c = 2.0 * math.cosh(kappa)
    for j in range(start - 1, -1, -1):
        arg = c - pp[j] - math.exp(qp[j] - q[j + 1] - kappa)
        if not arg > 0.0:
            return j
        q[j] = qp[j] - kappa + math.log(arg)
    return -1


def toda_inv_right(q, p, kappa, left, qp, stop):
    c = 2.0 * math.cosh(kappa)
    prev = left
    for j in range(stop + 1):
        arg = c - p[j] - math.exp(prev - q[j] - kappa)
        if not arg > 0.0:
            return j
        prev = q[j] + kappa - math.log(arg)
        qp[j] = prev
    return -1


def toda_inv_left(q, p, kappa, qp, stop):
    c = 2.0 * math.cosh(kappa)
    for j in range(len(q) - 1, stop, -1):
        arg = c - p[j] - math.exp(q[j] - qp[j] + kappa)
        if not arg > 0.0:
            return j
        qp[j - 1] = q[j] + kappa + math.log(arg)
    return -1


def linear_recurrence(E, b, u0, out):
    E, b = np.asarray(E).tolist(), np.asarray(b).tolist()
    u = out[0] = u0
    for i in range(len(E)):
        u = E[i] * u + b[i]
        out[i + 1] = u
