"""Scalar first-order linear problems with asymptotically constant coefficients.

Continuous problems are ``u' - alpha(x) u = f`` on a :class:`~backlund.grid.Field`,
discrete ones ``u[n+1] - alpha[n] u[n] = f[n]`` on a :class:`~backlund.grid.Seq`.
The sign (continuous) or modulus (discrete) pattern of the limits
``alpha_minus``/``alpha_plus`` sorts them into

* Case 1: solutions decay away from the anchor on both sides. Every ``f``
  has a unique solution with ``u[anchor] = 0``.
* Case 2: the homogeneous problem has no decaying solution, the adjoint has
  one (``mu``), and ``f`` is solvable exactly when ``<f, mu> = 0``.

Every solve runs in the contracting direction of the recursion on each
half-line; the explicit Duhamel quotient ``(u0 + int mu f)/mu`` is only used
for the scalar ``u0``. Integrating factors are accumulated as logarithms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CarrierMismatch, LogOverflow, NotOrthogonal, WrongCase
from .grid import (
    Field,
    Seq,
    _diff_array,
    cell_integrals,
    cumulative_integral,
    h1_norm,
    l2_norm,
    l2_seq,
    midpoints,
)
from .rng import SplitMix64

__all__ = [
    "CoefficientProfile",
    "adjoint_solution",
    "solve_case1_continuous",
    "solve_case2_continuous",
    "solve_case1_discrete",
    "solve_case2_discrete",
    "pairing",
    "ode_residual",
    "recurrence_residual",
    "case1_constant",
    "band_limited_draw",
]

LOG_LIMIT = 700.0
ORTHO_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    """Sampled coefficient ``alpha`` with declared limits and an anchor index.

    Parameters
    ----------
    carrier : Field or Seq
        Samples of alpha. A Field makes the problem continuous.
    alpha_minus, alpha_plus : float
        Declared limits at the left and right ends.
    anchor : int
        Array index of ``x0`` (continuous) or ``n0`` (discrete).
    tail_cap : float
        Upper bound the tail deviations must respect.
    """

    carrier: Field | Seq
    alpha_minus: float
    alpha_plus: float
    anchor: int
    tail_cap: float = 1e6

    def __post_init__(self):
        if not isinstance(self.carrier, (Field, Seq)):
            raise TypeError("carrier must be a Field or a Seq")
        if not 0 <= self.anchor < len(self.carrier):
            raise ValueError(f"anchor {self.anchor} outside the carrier")
        left, right = self.tail_sums
        if not (left <= self.tail_cap and right <= self.tail_cap):
            raise ValueError(f"tail deviations ({left:.3g}, {right:.3g}) exceed cap {self.tail_cap}")

    @property
    def continuous(self) -> bool:
        return isinstance(self.carrier, Field)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.carrier)

    @property
    def case(self) -> int | None:
        """1 or 2 according to the limits, ``None`` for the center cases."""
        am, ap = self.alpha_minus, self.alpha_plus
        if self.continuous:
            if am > 0 > ap:
                return 1
            if am < 0 < ap:
                return 2
        else:
            if abs(am) > 1 > abs(ap):
                return 1
            if abs(am) < 1 < abs(ap):
                return 2
        return None

    @property
    def tail_sums(self) -> tuple[float, float]:
        """Integral (or sum) of ``|alpha - alpha_pm|`` on each side of the anchor."""
        a, k = self.values, self.anchor
        dl = np.abs(a[: k + 1] - self.alpha_minus)
        dr = np.abs(a[k:] - self.alpha_plus)
        if self.continuous:
            dx = self.carrier.grid.dx
            left = np.trapezoid(dl, dx=dx) if dl.size > 1 else 0.0
            right = np.trapezoid(dr, dx=dx) if dr.size > 1 else 0.0
            return float(left), float(right)
        return float(dl[:-1].sum()), float(dr[1:].sum())

    def with_anchor(self, anchor: int) -> "CoefficientProfile":
        return CoefficientProfile(self.carrier, self.alpha_minus, self.alpha_plus, anchor, self.tail_cap)


def _require(cp: CoefficientProfile, case: int, continuous: bool):
    if cp.continuous != continuous:
        kind = "continuous" if continuous else "discrete"
        raise WrongCase(f"expected a {kind} profile")
    if cp.case != case:
        raise WrongCase(
            f"limits ({cp.alpha_minus}, {cp.alpha_plus}) do not satisfy the Case {case} pattern"
        )


def _check_carrier(cp: CoefficientProfile, f):
    if type(f) is not type(cp.carrier):
        raise CarrierMismatch("data and coefficient live on different kinds of carrier")
    ca = cp.carrier.grid if cp.continuous else cp.carrier.window
    cf = f.grid if isinstance(f, Field) else f.window
    if ca != cf:
        raise CarrierMismatch("data and coefficient live on different carriers")


def _log_adjoint(cp: CoefficientProfile) -> np.ndarray:
    a = cp.values
    if cp.continuous:
        logmu = -cumulative_integral(a, cp.carrier.grid.dx, cp.anchor)
    else:
        if np.any(a <= 0):
            raise ValueError("discrete adjoint needs alpha_n > 0")
        la = np.log(a)
        k = cp.anchor
        logmu = np.empty_like(a)
        logmu[k] = 0.0
        # phi_n = phi_{n-1} / alpha_n to the right, phi_{n-1} = alpha_n phi_n to the left
        logmu[k + 1 :] = -np.cumsum(la[k + 1 :])
        logmu[:k] = np.cumsum(la[k:0:-1])[::-1]
    if np.max(np.abs(logmu)) > LOG_LIMIT:
        raise LogOverflow(f"|log mu| reaches {np.max(np.abs(logmu)):.4g} > {LOG_LIMIT}")
    return logmu


def adjoint_solution(cp: CoefficientProfile) -> Field | Seq:
    """Adjoint solution normalized to 1 at the anchor.

    Continuous: ``mu = exp(-int_{x0}^x alpha)``, which solves ``mu' = -alpha mu``.
    Discrete: ``phi[n-1] = alpha[n] phi[n]``.

    Raises
    ------
    LogOverflow
        If ``|log mu|`` exceeds 700 anywhere.
    ValueError
        Discrete profile with a non-positive ``alpha``.
    """
    mu = np.exp(_log_adjoint(cp))
    return type(cp.carrier)(cp.carrier.grid if cp.continuous else cp.carrier.window, mu)


def pairing(b: Field | Seq, mu: Field | Seq) -> float:
    """Trapezoid integral (Field) or plain sum (Seq) of ``b * mu``."""
    if type(b) is not type(mu):
        raise CarrierMismatch("cannot pair a Field with a Seq")
    if isinstance(b, Field):
        if b.grid != mu.grid:
            raise CarrierMismatch("fields live on different grids")
        return float(np.trapezoid(b.samples * mu.samples, dx=b.grid.dx))
    if b.window != mu.window:
        raise CarrierMismatch("sequences live on different windows")
    return float(np.dot(b.values, mu.values))


# --------------------------------------------------------------------------
# continuous


def _rk4_maps(a, am, f, fm, h):
    """Per-cell RK4 map ``u -> E u + b`` for ``u' = a u + f`` with step ``h``."""
    k1 = a[:-1]
    k2 = am * (1 + 0.5 * h * k1)
    k3 = am * (1 + 0.5 * h * k2)
    k4 = a[1:] * (1 + h * k3)
    E = 1 + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    g1 = f[:-1]
    g2 = am * (0.5 * h * g1) + fm
    g3 = am * (0.5 * h * g2) + fm
    g4 = a[1:] * (h * g3) + f[1:]
    b = h / 6 * (g1 + 2 * g2 + 2 * g3 + g4)
    return E, b


def _sweep(a, am, f, fm, h, u0):
    """March ``u' = a u + f`` across the samples in array order.

    ``am`` and ``fm`` are the coefficient and forcing at the cell midpoints;
    they are interpolated once on the full grid so that sweeps starting in
    the interior keep the high-order stencils.
    """
    c = np.ascontiguousarray
    out = np.empty(a.shape[0])
    if a.shape[0] == 1:
        out[0] = u0
        return out
    E, b = _rk4_maps(c(a), c(am), c(f), c(fm), h)
    kernels.linear_recurrence(c(E), c(b), float(u0), out)
    return out


def _halves(a, f, k):
    """Midpoint data and the two half-line slices (right of and left of ``k``)."""
    am, fm = midpoints(a), midpoints(f)
    right = (a[k:], am[k:], f[k:], fm[k:])
    left = (a[k::-1], am[:k][::-1], f[k::-1], fm[:k][::-1])
    return left, right


def _outward(a, f, k, h):
    left, right = _halves(a, f, k)
    u = np.empty(a.shape[0])
    u[k:] = _sweep(*right, h, 0.0)
    u[: k + 1] = _sweep(*left, -h, 0.0)[::-1]
    return u


def solve_case1_continuous(cp: CoefficientProfile, f: Field) -> Field:
    """Solve ``u' - alpha u = f`` with ``u(x0) = 0`` when alpha_- > 0 > alpha_+.

    Both half-lines are integrated away from the anchor, the direction in
    which the homogeneous solution decays, with classical RK4 (step ``dx``).

    Examples
    --------
    >>> g = Grid1D(-10.0, 0.01, 2001)
    >>> cp = CoefficientProfile(g.field(-np.tanh(g.x)), 1.0, -1.0, 1000)
    >>> u = solve_case1_continuous(cp, g.field(1 / np.cosh(g.x)))
    >>> bool(np.allclose(u.samples, g.x / np.cosh(g.x), atol=1e-6))
    True
    """
    _require(cp, 1, True)
    _check_carrier(cp, f)
    u = _outward(cp.values, f.samples, cp.anchor, cp.carrier.grid.dx)
    return Field(f.grid, u)


def solve_case2_continuous(cp: CoefficientProfile, f: Field) -> tuple[Field, float]:
    """Solve ``u' - alpha u = f`` in L2 when alpha_- < 0 < alpha_+.

    Returns the decaying solution and ``u0 = u(x0) = -int_{x0}^inf mu f``.

    Raises
    ------
    NotOrthogonal
        If ``|<f, mu>| > 1e-6 |f| |mu|``: no decaying solution exists.
    """
    _require(cp, 2, True)
    _check_carrier(cp, f)
    mu = adjoint_solution(cp)
    pr = pairing(f, mu)
    if abs(pr) > ORTHO_RTOL * l2_norm(f) * l2_norm(mu):
        raise NotOrthogonal(f"<f, mu> = {pr:.3e} violates the solvability condition")
    a, fs, k, dx = cp.values, f.samples, cp.anchor, f.grid.dx
    n = a.shape[0]
    u = np.empty(n)
    # inward from both ends, where the decaying solution vanishes
    am, fm = midpoints(a), midpoints(fs)
    u[: k + 1] = _sweep(a[: k + 1], am[:k], fs[: k + 1], fm[:k], dx, 0.0)
    right = _sweep(a[k:][::-1], am[k:][::-1], fs[k:][::-1], fm[k:][::-1], -dx, 0.0)[::-1]
    u[k] = 0.5 * (u[k] + right[0])
    u[k + 1 :] = right[1:]
    u0 = -float(np.sum(cell_integrals(mu.samples * fs, dx)[k:]))
    if max(abs(u[0]), abs(u[-1])) > 1e-4:
        raise NotOrthogonal("solution does not decay at the grid ends")
    return Field(f.grid, u), u0


def ode_residual(cp: CoefficientProfile, u: Field, f: Field, order: int = 8) -> float:
    """L2 norm of ``u' - alpha u - f`` with an ``order``-accurate derivative."""
    du = _diff_array(u.samples, u.grid.dx, order)
    r = du - cp.values * u.samples - f.samples
    # the one-sided end differences are first order; leave them out
    return l2_norm(Field(u.grid, np.concatenate([[0.0], r[1:-1], [0.0]])))


# --------------------------------------------------------------------------
# discrete


def solve_case1_discrete(cp: CoefficientProfile, f: Seq) -> Seq:
    """Solve ``u[n+1] - alpha[n] u[n] = f[n]`` with ``u[n0] = 0`` when |alpha_-| > 1 > |alpha_+|.

    Examples
    --------
    >>> w = LatticeWindow(-20, 41)
    >>> al = np.where(w.sites < 0, 2.0, 0.5)
    >>> f = np.where(w.sites == 5, 1.0, 0.0)
    >>> u = solve_case1_discrete(CoefficientProfile(Seq(w, al), 2.0, 0.5, 20), Seq(w, f))
    >>> u.values[w.index_of(7)]
    0.5
    """
    _require(cp, 1, False)
    _check_carrier(cp, f)
    a, fv, k = cp.values, f.values, cp.anchor
    if np.any(a[:k] == 0):
        raise WrongCase("alpha vanishes on the left half-window")
    u = np.empty_like(a)
    # forward from the anchor: u[n+1] = alpha[n] u[n] + f[n]
    kernels.linear_recurrence(np.ascontiguousarray(a[k:-1]), np.ascontiguousarray(fv[k:-1]), 0.0, u[k:])
    # backward from the anchor: u[n] = (u[n+1] - f[n]) / alpha[n]
    ar, fr = a[:k][::-1], fv[:k][::-1]
    back = np.empty(k + 1)
    kernels.linear_recurrence(np.ascontiguousarray(1.0 / ar), np.ascontiguousarray(-fr / ar), 0.0, back)
    u[: k + 1] = back[::-1]
    return Seq(f.window, u)


def solve_case2_discrete(cp: CoefficientProfile, f: Seq) -> tuple[Seq, float]:
    """Solve ``u[n+1] - alpha[n] u[n] = f[n]`` in l2 when |alpha_-| < 1 < |alpha_+|.

    Returns the decaying solution and
    ``u0 = u[n0] = -sum_{n >= n0} phi[n] f[n] / phi[n0 - 1]``.

    Raises
    ------
    NotOrthogonal
        If ``|<f, phi>| > 1e-6 |f| |phi|``.
    """
    _require(cp, 2, False)
    _check_carrier(cp, f)
    phi = adjoint_solution(cp)
    pr = pairing(f, phi)
    if abs(pr) > ORTHO_RTOL * l2_seq(f) * l2_seq(phi):
        raise NotOrthogonal(f"<f, phi> = {pr:.3e} violates the solvability condition")
    a, fv, k = cp.values, f.values, cp.anchor
    n = a.shape[0]
    u = np.empty(n)
    left = np.empty(k + 1)
    kernels.linear_recurrence(np.ascontiguousarray(a[:k]), np.ascontiguousarray(fv[:k]), 0.0, left)
    ar, fr = a[k:-1][::-1], fv[k:-1][::-1]
    right = np.empty(n - k)
    kernels.linear_recurrence(np.ascontiguousarray(1.0 / ar), np.ascontiguousarray(-fr / ar), 0.0, right)
    u[: k + 1] = left
    u[k:] = right[::-1]
    u[k] = 0.5 * (left[-1] + right[-1])
    u0 = -float(np.dot(phi.values[k:], fv[k:])) / a[k]
    return Seq(f.window, u), u0


def recurrence_residual(cp: CoefficientProfile, u: Seq, f: Seq) -> float:
    """l2 norm of ``u[n+1] - alpha[n] u[n] - f[n]`` over the window."""
    a, uv, fv = cp.values, u.values, f.values
    return float(np.linalg.norm(uv[1:] - a[:-1] * uv[:-1] - fv[:-1]))


# --------------------------------------------------------------------------
# empirical Case-1 constant


def band_limited_draw(rng: SplitMix64, x: np.ndarray, n_modes: int = 8, k_max: float = 2.0,
                      width: float = 4.0) -> np.ndarray:
    """Random smooth forcing: a Gaussian-windowed sum of cosines.

    The function depends only on the draw and ``x``, so refining the grid
    samples the same function.
    """
    amp = rng.normal(n_modes)
    k = k_max * rng.uniform(n_modes)
    ph = 2 * np.pi * rng.uniform(n_modes)
    c = (rng.uniform(1)[0] - 0.5) * width
    env = np.exp(-0.5 * ((x - c) / width) ** 2)
    return env * (amp[None, :] * np.cos(np.outer(x, k) + ph[None, :])).sum(axis=1)


def case1_constant(cp: CoefficientProfile, draws: int = 20, seed: int = 0) -> float:
    """Largest ratio ``|u| / |f|`` over a seeded random ensemble of forcings.

    Continuous profiles use ``H1/L2`` with band-limited forcings, discrete
    ones ``l2/l2`` with Gaussian white-noise sequences.
    """
    rng = SplitMix64(seed)
    best = 0.0
    for _ in range(draws):
        if cp.continuous:
            g = cp.carrier.grid
            x0 = g.x[cp.anchor]
            f = Field(g, band_limited_draw(rng, g.x - x0))
            u = solve_case1_continuous(cp, f)
            best = max(best, h1_norm(u) / l2_norm(f))
        else:
            w = cp.carrier.window
            f = Seq(w, rng.normal(w.n))
            u = solve_case1_discrete(cp, f)
            best = max(best, l2_seq(u) / l2_seq(f))
    return best
