"""Sine-Gordon phase space, evolution and the Backlund transform.

States are pairs ``(u, v = u_t)`` on a uniform grid. The Backlund relation
between ``x = (u, v)`` and ``y = (u', v')`` with parameter ``a`` is the zero
set of

    F1 = u_x + v' - a sin((u+u')/2) - (1/a) sin((u-u')/2)
    F2 = v + u'_x - (1/a) sin((u-u')/2) + a sin((u+u')/2)

Substituting ``u' = 0`` forces the kink

    u = 4 arctan(exp(gamma (x - c t) + delta)),   v = (1/a - a) sech(...)

with ``gamma = (a + 1/a)/2`` and ``c = -(1 - a^2)/(1 + a^2)``: for
``0 < a < 1`` the kink travels to the left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dichotomy import CoefficientProfile, adjoint_solution
from .errors import (
    Blowup,
    CFLViolation,
    DomainTooNarrow,
    GridMismatch,
    InvalidState,
    NoConvergence,
    ResidualTooLarge,
)
from .grid import Field, Grid1D, _diff_array, h1_norm, l2_norm, midpoints, sup_norm

__all__ = [
    "KinkParams",
    "SGState",
    "sg_zero",
    "sg_kink",
    "sg_energy",
    "sg_step",
    "sg_evolve",
    "bt_residual",
    "bt_forward",
    "sg_bt_inverse",
    "sg_alpha",
    "sg_kernel_element",
    "sg_linearized_uv",
    "sg_nondegeneracy",
    "sg_distance",
]

TWO_PI = 2.0 * math.pi
CFL = {2: 0.9, 4: 0.75}  # dt / dx limits per Laplacian order
DIFF_ORDER = 8  # derivative accuracy used inside residuals and energies


@dataclass(frozen=True)
class KinkParams:
    """Backlund parameter ``a`` in (0, 1) and phase ``delta`` of a kink."""

    a: float
    delta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.a < 1.0):
            raise ValueError(f"kink parameter must lie in (0, 1), got a={self.a}")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")

    @property
    def gamma(self) -> float:
        return 0.5 * (self.a + 1.0 / self.a)

    @property
    def speed(self) -> float:
        return -(1.0 - self.a**2) / (1.0 + self.a**2)

    def center(self, t: float = 0.0) -> float:
        """Position where ``u = pi``."""
        return -self.delta / self.gamma + self.speed * t


@dataclass(frozen=True, eq=False)
class SGState:
    """A point ``(u, v)`` of the sine-Gordon phase space on a grid."""

    grid: Grid1D
    u: Field
    v: Field

    def __post_init__(self):
        if not (isinstance(self.u, Field) and isinstance(self.v, Field)):
            object.__setattr__(self, "u", Field(self.grid, self.u))
            object.__setattr__(self, "v", Field(self.grid, self.v))
        if self.u.grid != self.grid or self.v.grid != self.grid:
            raise GridMismatch("u and v must share the state's grid")

    @classmethod
    def from_arrays(cls, grid: Grid1D, u, v) -> "SGState":
        return cls(grid, Field(grid, u), Field(grid, v))

    def boundary_indices(self, tol: float = 0.01) -> tuple[int, int]:
        """Integers ``k`` with the end values of ``u`` within ``tol`` of ``2 pi k``."""
        out = []
        for val in (self.u.samples[0], self.u.samples[-1]):
            k = round(val / TWO_PI)
            if abs(val - TWO_PI * k) > tol:
                raise InvalidState(f"boundary value {val:.6g} is not near a multiple of 2 pi")
            out.append(int(k))
        return out[0], out[1]

    @property
    def kink_index(self) -> int:
        kl, kr = self.boundary_indices()
        return kr - kl

    def __sub__(self, other: "SGState") -> "SGState":
        if other.grid != self.grid:
            raise GridMismatch("states live on different grids")
        return SGState(self.grid, self.u - other.u, self.v - other.v)


def sg_distance(s1: SGState, s2: SGState) -> float:
    """H1 x L2 distance ``sqrt(|u1 - u2|_H1^2 + |v1 - v2|_L2^2)``."""
    d = s1 - s2
    return math.hypot(h1_norm(d.u), l2_norm(d.v))


# --------------------------------------------------------------------------
# special states


def sg_zero(grid: Grid1D) -> SGState:
    z = np.zeros(grid.n)
    return SGState.from_arrays(grid, z, z)


def _kink_arrays(a: float, delta: float, x: np.ndarray, t: float):
    p = KinkParams(a, delta)
    theta = p.gamma * (x - p.speed * t) + delta
    e = np.exp(-np.abs(theta))
    # 4 arctan(e^theta) evaluated without cancellation on either side
    u = np.where(theta < 0, 4.0 * np.arctan(e), TWO_PI - 4.0 * np.arctan(e))
    v = (1.0 / a - a) * 2.0 * e / (1.0 + e * e)
    return u, v


def sg_kink(p: KinkParams, grid: Grid1D, t: float = 0.0) -> SGState:
    """Travelling 1-kink at time ``t``.

    Raises
    ------
    DomainTooNarrow
        If ``u`` is not within 1e-10 of 0 and 2 pi at the two ends.

    Examples
    --------
    >>> s = sg_kink(KinkParams(0.5), Grid1D.symmetric(20.0, 0.01))
    >>> s.kink_index, round(float(s.u.samples[2000]), 12)
    (1, 3.14159265359)
    """
    u, v = _kink_arrays(p.a, p.delta, grid.x, t)
    if abs(u[0]) > 1e-10 or abs(u[-1] - TWO_PI) > 1e-10:
        raise DomainTooNarrow(
            f"kink not resolved to 1e-10 at the ends (u0={u[0]:.3g}, 2pi-un={TWO_PI - u[-1]:.3g})"
        )
    return SGState.from_arrays(grid, u, v)


def sg_energy(s: SGState) -> float:
    """Trapezoid quadrature of ``v^2/2 + u_x^2/2 + (1 - cos u)``."""
    u, v = s.u.samples, s.v.samples
    ux = _diff_array(u, s.grid.dx, DIFF_ORDER)
    dens = 0.5 * v * v + 0.5 * ux * ux + 2.0 * np.sin(0.5 * u) ** 2
    return float(np.trapezoid(dens, dx=s.grid.dx))


# --------------------------------------------------------------------------
# evolution


def _check_dt(dt: float, dx: float, order: int = 2):
    if order not in CFL:
        raise ValueError(f"Laplacian order must be 2 or 4, got {order}")
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    c = CFL[order]
    if dt > c * dx * (1 + 1e-12):
        raise CFLViolation(f"dt={dt} exceeds {c}*dx={c * dx}")


def _advance(u: np.ndarray, v: np.ndarray, dt: float, dx: float, nsteps: int, order: int = 2):
    kernels.sg_leapfrog(u, v, dt, dx, nsteps, order)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise Blowup("non-finite sample during sine-Gordon evolution")


def sg_step(s: SGState, dt: float, order: int = 2) -> SGState:
    """One position-Verlet step for ``u_tt = u_xx - sin u`` with clamped ends.

    ``u_xx`` uses the 3-point centered stencil, or the 5-point one for
    ``order=4`` (3-point next to the clamped ends).

    Raises
    ------
    CFLViolation
        If ``dt > 0.9 dx`` (``0.75 dx`` for ``order=4``).
    Blowup
        On a non-finite sample.
    """
    _check_dt(dt, s.grid.dx, order)
    u = np.array(s.u.samples)
    v = np.array(s.v.samples)
    _advance(u, v, dt, s.grid.dx, 1, order)
    return SGState.from_arrays(s.grid, u, v)


def _schedule(T: float, dt: float, stride: int) -> tuple[int, float]:
    if T < 0:
        raise ValueError("T must be non-negative")
    if int(stride) != stride or stride < 1:
        raise ValueError("sample stride must be a positive integer")
    nsteps = int(math.ceil(T / dt - 1e-9))
    return nsteps, (T / nsteps if nsteps else dt)


def sg_evolve(s: SGState, T: float, dt: float, sample_stride: int = 1,
              order: int = 2) -> list[tuple[float, SGState]]:
    """Evolve to time ``T`` and return ``(t, state)`` every ``sample_stride`` steps.

    The step is shrunk to ``T / ceil(T / dt)`` so that ``T`` is hit exactly;
    the first and last samples are always ``t = 0`` and ``t = T``.
    """
    _check_dt(dt, s.grid.dx, order)
    nsteps, h = _schedule(T, dt, sample_stride)
    out = [(0.0, s)]
    u = np.array(s.u.samples)
    v = np.array(s.v.samples)
    done = 0
    while done < nsteps:
        k = min(sample_stride, nsteps - done)
        _advance(u, v, h, s.grid.dx, k, order)
        done += k
        t = T if done == nsteps else done * h
        out.append((t, SGState.from_arrays(s.grid, u, v)))
    return out


# --------------------------------------------------------------------------
# Backlund transform


def _same_grid(x: SGState, y: SGState):
    if x.grid != y.grid:
        raise GridMismatch("x and y live on different grids")


def bt_residual(x: SGState, y: SGState, a: float, order: int = DIFF_ORDER) -> tuple[Field, Field]:
    """Both components of ``F(x, y, a)``.

    Derivatives use the centered stencil of the given ``order`` (default 8;
    the 2nd-order stencil leaves an O(dx^2) floor of about 2e-4 at dx = 0.01).
    """
    _same_grid(x, y)
    u, v, up, vp = x.u.samples, x.v.samples, y.u.samples, y.v.samples
    dx = x.grid.dx
    sp = np.sin(0.5 * (u + up))
    sm = np.sin(0.5 * (u - up))
    r1 = _diff_array(u, dx, order) + vp - a * sp - sm / a
    r2 = v + _diff_array(up, dx, order) - sm / a + a * sp
    return Field(x.grid, r1), Field(x.grid, r2)


def _residual_sup(x, y, a) -> float:
    r1, r2 = bt_residual(x, y, a)
    return max(sup_norm(r1), sup_norm(r2))


def _sweep(w0, p, q, pm, qm, a, sigma, h):
    c = np.ascontiguousarray
    out = np.empty(p.shape[0])
    bad = kernels.sg_bt_sweep(float(w0), c(p), c(q), c(pm), c(qm), float(a), float(sigma), float(h), out)
    if bad >= 0:
        raise Blowup(f"Backlund sweep left the admissible range at sample {bad}")
    return out


def bt_forward(y: SGState, a: float, delta: float = 0.0, tol: float = 1e-6) -> SGState:
    """Add one kink to ``y`` by integrating the first Backlund row in ``x``.

    ``u`` is integrated with classical RK4 (step ``dx``) from the grid
    midpoint ``m`` outward, with ``u_m = u'_m + 4 arctan(exp(gamma x_m + delta))``;
    ``v`` then follows algebraically from the second row.

    Raises
    ------
    Blowup
        If ``|u - u'|`` exceeds 1e6 during integration.
    ResidualTooLarge
        If the result violates ``F = 0`` by more than ``tol``.
    InvalidState
        If the result does not carry one more kink than ``y``. Over a kink
        of parameter ``a'`` this happens for ``a > a'``: the solution then
        joins the end states as an anti-kink pair or a kink-antikink pair.
    """
    if not 0 < a < 1:
        raise ValueError(f"Backlund parameter must lie in (0, 1), got {a}")
    g = y.grid
    up, vp = y.u.samples, y.v.samples
    pm, qm = midpoints(up), midpoints(vp)
    m = g.n // 2
    gamma = 0.5 * (a + 1.0 / a)
    th = gamma * g.x[m] + delta
    u0 = up[m] + (4.0 * math.atan(math.exp(th)) if th < 0 else TWO_PI - 4.0 * math.atan(math.exp(-th)))
    u = np.empty(g.n)
    u[m:] = _sweep(u0, up[m:], vp[m:], pm[m:], qm[m:], a, 1.0, g.dx)
    u[: m + 1] = _sweep(u0, up[m::-1], vp[m::-1], pm[:m][::-1], qm[:m][::-1], a, 1.0, -g.dx)[::-1]
    upx = _diff_array(up, g.dx, DIFF_ORDER)
    v = -upx + np.sin(0.5 * (u - up)) / a - a * np.sin(0.5 * (u + up))
    x = SGState.from_arrays(g, u, v)
    r = _residual_sup(x, y, a)
    if r > tol:
        raise ResidualTooLarge(f"forward Backlund residual {r:.3e} exceeds {tol:.1e}")
    if x.kink_index != y.kink_index + 1:
        raise InvalidState(
            f"transform with a={a} gives kink index {x.kink_index}, not {y.kink_index + 1}"
        )
    return x


def _midlevel_index(u: np.ndarray) -> int:
    level = 0.5 * (u[0] + u[-1])
    return int(np.argmin(np.abs(u - level)))


def sg_bt_inverse(x: SGState, a_guess: float, max_iter: int = 50, tol: float = 1e-6,
                  anchor: int | None = None) -> tuple[SGState, float]:
    """Remove one kink from ``x``: find ``(y, a)`` with ``F(x, y, a) = 0``.

    The second Backlund row is an ODE for ``u'``. It is integrated inward
    from both ends, the contracting direction on each side, starting from
    the kink-lowered background values ``u'(left) = u(left)`` and
    ``u'(right) = u(right) - 2 pi``. Newton's method on the two unknowns
    ``(a, s)``, with ``s`` the value of ``u'`` at the anchor, drives both
    sweeps to ``s``. ``v'`` then follows from the first row.

    Raises
    ------
    NoConvergence
        If Newton does not converge in ``max_iter`` steps (``x`` is outside
        the neighbourhood where the inverse exists).
    """
    g = x.grid
    u, v = x.u.samples, x.v.samples
    um, vm = midpoints(u), midpoints(v)
    k = _midlevel_index(u) if anchor is None else int(anchor)
    k = min(max(k, 1), g.n - 2)
    left_val, right_val = u[0], u[-1] - TWO_PI

    def sweeps(a):
        lw = _sweep(left_val, u[: k + 1], v[: k + 1], um[:k], vm[:k], a, -1.0, g.dx)
        rw = _sweep(right_val, u[k:][::-1], v[k:][::-1], um[k:][::-1], vm[k:][::-1], a, -1.0, -g.dx)
        return lw, rw[::-1]

    def mismatch(a, s):
        lw, rw = sweeps(a)
        return np.array([lw[-1] - s, rw[0] - s])

    a = float(a_guess)
    lw, rw = sweeps(a)
    s = 0.5 * (lw[-1] + rw[0])
    converged = False
    for _ in range(max_iter):
        F = mismatch(a, s)
        if np.max(np.abs(F)) < 1e-13:
            converged = True
            break
        h = 1e-7
        dF = (mismatch(a + h, s) - mismatch(a - h, s)) / (2 * h)
        J = np.array([[dF[0], -1.0], [dF[1], -1.0]])
        try:
            da, ds = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Jacobian in the inverse Backlund shooting") from exc
        lam = 1.0
        while not 0 < a + lam * da < 1:
            lam *= 0.5
            if lam < 1e-6:
                raise NoConvergence("Newton step leaves the admissible parameter range")
        a_new, s_new = a + lam * da, s + lam * ds
        step = abs(a_new - a)
        a, s = a_new, s_new
        if step < 1e-14 and np.max(np.abs(mismatch(a, s))) < 1e-11:
            converged = True
            break
    if not converged:
        raise NoConvergence(f"inverse Backlund shooting did not converge in {max_iter} steps")
    lw, rw = sweeps(a)
    up = np.concatenate([lw[:-1], [0.5 * (lw[-1] + rw[0])], rw[1:]])
    ux = _diff_array(u, g.dx, DIFF_ORDER)
    vp = -ux + a * np.sin(0.5 * (u + up)) + np.sin(0.5 * (u - up)) / a
    y = SGState.from_arrays(g, up, vp)
    r = _residual_sup(x, y, a)
    if r > tol:
        raise ResidualTooLarge(f"inverse Backlund residual {r:.3e} exceeds {tol:.1e}")
    return y, a


# --------------------------------------------------------------------------
# linearization


def _alpha_array(x: SGState, y: SGState, a: float) -> np.ndarray:
    u, up = x.u.samples, y.u.samples
    return 0.5 * a * np.cos(0.5 * (u + up)) + 0.5 / a * np.cos(0.5 * (u - up))


def _crossing(alpha: np.ndarray) -> int | None:
    s = np.nonzero(np.diff(np.sign(alpha)) != 0)[0]
    if s.size == 0:
        return None
    i = int(s[0])
    return i if abs(alpha[i]) <= abs(alpha[i + 1]) else i + 1


def sg_alpha(x: SGState, y: SGState, a: float) -> CoefficientProfile:
    """Coefficient ``alpha = (a/2) cos((u+u')/2) + (1/(2a)) cos((u-u')/2)``.

    The first Backlund row linearizes in ``u`` to ``phi_x - alpha phi``. The
    declared limits are the end samples, and the anchor is the sample
    nearest the first sign change of alpha (the grid midpoint if none).
    """
    _same_grid(x, y)
    al = _alpha_array(x, y, a)
    k = _crossing(al)
    if k is None:
        k = x.grid.n // 2
    return CoefficientProfile(Field(x.grid, al), float(al[0]), float(al[-1]), k)


def _linear_coeffs(x, y, a):
    u, up = x.u.samples, y.u.samples
    cp_, cm_ = np.cos(0.5 * (u + up)), np.cos(0.5 * (u - up))
    alpha = 0.5 * a * cp_ + 0.5 / a * cm_
    beta = 0.5 * a * cp_ - 0.5 / a * cm_  # d F2 / d u
    return alpha, beta


def sg_linearized_uv(x: SGState, y: SGState, a: float, phi: Field, psi: Field,
                     order: int = DIFF_ORDER) -> tuple[Field, Field]:
    """Apply ``D_(u,v) F(x, y, a)`` to the direction ``(phi, psi)``."""
    _same_grid(x, y)
    alpha, beta = _linear_coeffs(x, y, a)
    ph = phi.samples
    r1 = _diff_array(ph, x.grid.dx, order) - alpha * ph
    r2 = psi.samples + beta * ph
    return Field(x.grid, r1), Field(x.grid, r2)


def sg_kernel_element(x: SGState, y: SGState, a: float) -> tuple[Field, Field]:
    """Kernel of ``D_(u,v) F`` at an approximate zero ``(x, y, a)``.

    ``phi = exp(int alpha)`` comes from the dichotomy module as the adjoint
    solution of the coefficient ``-alpha``, anchored at the kink midpoint;
    the second row then forces ``psi = -beta phi`` with
    ``beta = (a/2) cos((u+u')/2) - (1/(2a)) cos((u-u')/2)``.
    Both are scaled so that ``|phi|_L2 = 1``.
    """
    cp = sg_alpha(x, y, a)
    neg = CoefficientProfile(Field(x.grid, -cp.values), -cp.alpha_minus, -cp.alpha_plus, cp.anchor)
    phi = adjoint_solution(neg).samples
    phi = phi / l2_norm(Field(x.grid, phi))
    _, beta = _linear_coeffs(x, y, a)
    return Field(x.grid, phi), Field(x.grid, -beta * phi)


def _anchor_log(logmu: np.ndarray, alpha: np.ndarray, x: np.ndarray, k: int) -> float:
    """``log mu`` at the exact zero of alpha near sample ``k``.

    A degree-5 polynomial through six samples around the crossing locates
    the zero and integrates alpha from ``x[k]`` to it.
    """
    lo = min(max(k - 2, 0), x.shape[0] - 6)
    xs = x[lo : lo + 6] - x[k]
    c = np.polynomial.Polynomial.fit(xs, alpha[lo : lo + 6], 5, domain=[xs[0], xs[-1]], window=[xs[0], xs[-1]])
    z = 0.0
    dc = c.deriv()
    for _ in range(50):
        step = c(z) / dc(z)
        z -= step
        if abs(step) < 1e-15:
            break
    ci = c.integ()
    return float(logmu[k] + ci(z) - ci(0.0))


def sg_nondegeneracy(x: SGState, y: SGState, a: float) -> float:
    """``int b mu dx`` with ``b = a^-2 sin((u-u')/2) + sin((u+u')/2)``.

    ``mu = exp(int alpha)`` is the adjoint solution of the Case-2 equation
    for ``u'`` (coefficient ``-alpha``), scaled to 1 at the exact zero of
    alpha so the value does not depend on where the grid samples fall.
    """
    cp = sg_alpha(x, y, a)
    al = cp.values
    neg = CoefficientProfile(Field(x.grid, -al), -cp.alpha_minus, -cp.alpha_plus, cp.anchor)
    logmu = np.log(adjoint_solution(neg).samples)
    logmu -= _anchor_log(logmu, al, x.grid.x, cp.anchor)
    u, up = x.u.samples, y.u.samples
    b = np.sin(0.5 * (u - up)) / a**2 + np.sin(0.5 * (u + up))
    return float(np.trapezoid(b * np.exp(logmu), dx=x.grid.dx))
