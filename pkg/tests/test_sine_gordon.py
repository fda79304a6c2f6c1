import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backlund.errors import CFLViolation, DomainTooNarrow, GridMismatch, InvalidState, NoConvergence
from backlund.grid import Field, Grid1D, diff_x, l2_norm, sup_norm
from backlund.sine_gordon import (
    KinkParams,
    SGState,
    bt_forward,
    bt_residual,
    sg_alpha,
    sg_bt_inverse,
    sg_distance,
    sg_energy,
    sg_evolve,
    sg_kernel_element,
    sg_kink,
    sg_linearized_uv,
    sg_nondegeneracy,
    sg_step,
    sg_zero,
)

# one-step error of the time integrator against a 64x finer reference, dx = 0.01;
# measured 0.343 for dt in {0.008, 0.004, 0.002}
STEP_C = 0.4
# |a - 0.5| / eps for a 1e-3 Gaussian bump in v; measured 0.172
INVERSE_LIPSCHITZ = 0.2


@pytest.fixture(scope="module")
def g():
    return Grid1D.symmetric(30.0, 0.01)


@pytest.fixture(scope="module")
def kink(g):
    return sg_kink(KinkParams(0.5), g)


def sup_pair(fields):
    return max(sup_norm(f) for f in fields)


# ---------------------------------------------------------------- params and states

def test_kink_params():
    p = KinkParams(0.5)
    assert p.gamma == 1.25
    assert abs(p.speed) == pytest.approx(0.6, abs=1e-15)
    # the kink moves to the left (the sign fixed by the residual oracle)
    assert p.speed < 0


@settings(max_examples=50)
@given(st.floats(0.01, 0.99))
def test_kink_params_relation(a):
    p = KinkParams(a)
    assert p.gamma > 1 and 0 < abs(p.speed) < 1
    assert p.gamma * math.sqrt(1 - p.speed**2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("a", [0.0, 1.0, -0.5, 1.5])
def test_kink_params_reject(a):
    with pytest.raises(ValueError):
        KinkParams(a)


def test_zero_state(g):
    z = sg_zero(g)
    assert np.all(z.u.samples == 0) and np.all(z.v.samples == 0)
    assert z.kink_index == 0
    assert sg_energy(z) == 0.0


def test_kink_shape(g, kink):
    assert kink.kink_index == 1
    i = g.index_of(0.0)
    assert abs(kink.u.samples[i] - math.pi) < 2 * g.dx * 1.25


def test_kink_needs_wide_domain():
    with pytest.raises(DomainTooNarrow):
        sg_kink(KinkParams(0.5), Grid1D.symmetric(5.0, 0.01))


def test_distance(g, kink):
    assert sg_distance(kink, kink) == 0.0
    assert sg_distance(kink, sg_zero(g)) > 0


# ---------------------------------------------------------------- residual

def test_residual_of_zero_pair(g):
    z = sg_zero(g)
    for a in (0.3, 0.7):
        assert sup_pair(bt_residual(z, z, a)) == 0.0


def test_kink_solves_the_transform(g, kink):
    assert sup_pair(bt_residual(kink, sg_zero(g), 0.5)) < 1e-8


@pytest.mark.parametrize("t", [0.0, 1.7])
def test_kink_solves_the_transform_while_moving(g, t):
    s = sg_kink(KinkParams(0.5), g, t)
    assert sup_pair(bt_residual(s, sg_zero(g), 0.5)) < 1e-8


def test_traveling_kink_solves_the_field_equation():
    # u_tt - u_xx + sin u with u_tt from the traveling-wave form c^2 u_xx
    g = Grid1D.symmetric(30.0, 0.01)
    p = KinkParams(0.5)
    u = sg_kink(p, g).u
    uxx = diff_x(diff_x(u, 8), 8).samples
    r = (p.speed**2 - 1) * uxx + np.sin(u.samples)
    assert np.max(np.abs(r[8:-8])) < 1e-8


def test_residual_needs_shared_grid(kink):
    with pytest.raises(GridMismatch):
        bt_residual(kink, sg_zero(Grid1D.symmetric(30.0, 0.02)), 0.5)


# ---------------------------------------------------------------- energy

def test_kink_energy(g, kink):
    p = KinkParams(0.5)
    assert sg_energy(kink) == pytest.approx(8 * p.gamma, abs=1e-6)
    # regression constant at dx = 0.01 on [-30, 30]
    assert sg_energy(kink) == pytest.approx(10.000000000000007, abs=1e-10)


def test_energy_is_translation_invariant(g, kink):
    shifted = sg_kink(KinkParams(0.5, 2.0), g)
    assert sg_energy(shifted) == pytest.approx(sg_energy(kink), abs=1e-8)


# ---------------------------------------------------------------- evolution

def test_step_fixed_points(g):
    z = sg_zero(g)
    s = sg_step(z, 0.005)
    assert np.all(s.u.samples == 0) and np.all(s.v.samples == 0)
    c = SGState.from_arrays(g, np.full(g.n, 2 * math.pi), np.zeros(g.n))
    s = sg_step(c, 0.005)
    np.testing.assert_array_equal(s.u.samples, c.u.samples)
    assert sup_norm(s.v) < 1e-12


@pytest.mark.parametrize("dt", [0.008, 0.004, 0.002])
def test_step_local_error(g, kink, dt):
    one = sg_step(kink, dt)
    ref = sg_evolve(kink, dt, dt / 64, 10**6)[-1][1]
    err = max(sup_norm(one.u - ref.u), sup_norm(one.v - ref.v))
    assert err < STEP_C * dt**3


def test_step_against_exact_kink(g, kink):
    dt = 0.005
    s = sg_step(kink, dt)
    assert sg_distance(s, sg_kink(KinkParams(0.5), g, dt)) < 1e-5


def test_cfl(g, kink):
    with pytest.raises(CFLViolation):
        sg_step(kink, 0.0091)
    with pytest.raises(CFLViolation):
        sg_step(kink, 0.0076, order=4)
    sg_step(kink, 0.009)
    sg_step(kink, 0.0075, order=4)
    with pytest.raises(ValueError):
        sg_step(kink, 0.001, order=6)


def test_evolve_zero_horizon(kink):
    out = sg_evolve(kink, 0.0, 0.005)
    assert len(out) == 1 and out[0][1] is kink


def test_evolve_hits_end_time(kink):
    out = sg_evolve(kink, 0.1, 0.003, sample_stride=7)
    assert out[0][0] == 0.0 and out[-1][0] == 0.1
    assert all(t1 > t0 for (t0, _), (t1, _) in zip(out, out[1:]))


def test_evolve_energy_and_index():
    g = Grid1D.symmetric(40.0, 0.05)
    s = sg_kink(KinkParams(0.5), g)
    out = sg_evolve(s, 50.0, 0.045, 100)
    e0 = sg_energy(s)
    drift = max(abs(sg_energy(st_) - e0) for _, st_ in out) / e0
    assert drift < 1e-3
    assert all(st_.kink_index == 1 for _, st_ in out)


def test_evolve_converges_at_second_order():
    p = KinkParams(0.5)
    errs = []
    for dx in (0.05, 0.025):
        g = Grid1D.symmetric(40.0, dx)
        end = sg_evolve(sg_kink(p, g), 10.0, 0.9 * dx, 10**6)[-1][1]
        errs.append(sg_distance(end, sg_kink(p, g, 10.0)))
    assert errs[0] < 1e-2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_fourth_order_laplacian_is_more_accurate():
    p = KinkParams(0.5)
    g = Grid1D.symmetric(40.0, 0.05)
    exact = sg_kink(p, g, 5.0)
    e2 = sg_distance(sg_evolve(sg_kink(p, g), 5.0, 0.005, 10**6)[-1][1], exact)
    e4 = sg_distance(sg_evolve(sg_kink(p, g), 5.0, 0.005, 10**6, order=4)[-1][1], exact)
    assert e4 < e2 / 10


def test_conjugation_invariance():
    g = Grid1D.symmetric(40.0, 0.05)
    x, y = sg_kink(KinkParams(0.5), g), sg_zero(g)
    r0 = sup_pair(bt_residual(x, y, 0.5))
    xs = sg_evolve(x, 20.0, 0.045, 50)
    ys = sg_evolve(y, 20.0, 0.045, 50)
    worst = max(sup_pair(bt_residual(a, b, 0.5)) for (_, a), (_, b) in zip(xs, ys))
    assert worst < max(10 * r0, 5 * g.dx**2)


# ---------------------------------------------------------------- forward and inverse

def test_forward_from_zero_is_the_kink(g, kink):
    x = bt_forward(sg_zero(g), 0.5)
    assert x.kink_index == 1
    assert max(sup_norm(x.u - kink.u), sup_norm(x.v - kink.v)) < 1e-8


def test_forward_phase(g):
    x = bt_forward(sg_zero(g), 0.5, 2.0)
    k = sg_kink(KinkParams(0.5, 2.0), g)
    assert sup_norm(x.u - k.u) < 1e-8


def test_forward_adds_a_kink(g):
    y = sg_kink(KinkParams(0.7), g)
    x = bt_forward(y, 0.4)
    assert x.kink_index == 2
    assert sup_pair(bt_residual(x, y, 0.4)) < 1e-6


@pytest.mark.parametrize("a", [0.5, 0.7])
def test_forward_with_larger_parameter_is_refused(g, a):
    with pytest.raises(InvalidState):
        bt_forward(sg_kink(KinkParams(0.4), g), a)


def test_forward_rejects_parameter(g):
    with pytest.raises(ValueError):
        bt_forward(sg_zero(g), 1.2)


@pytest.mark.parametrize("delta", [0.0, 3.0])
def test_inverse_of_kink(g, delta):
    y, a = sg_bt_inverse(sg_kink(KinkParams(0.5, delta), g), 0.6)
    assert a == pytest.approx(0.5, abs=1e-6)
    assert sg_distance(y, sg_zero(g)) < 1e-6


def test_inverse_is_lipschitz(g, kink):
    eps = 1e-3
    x = SGState.from_arrays(g, kink.u.samples, kink.v.samples + eps * np.exp(-g.x**2))
    y, a = sg_bt_inverse(x, 0.6)
    assert sup_pair(bt_residual(x, y, a)) < 1e-6
    assert abs(a - 0.5) < INVERSE_LIPSCHITZ * eps


@pytest.mark.parametrize("a", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("base", ["zero", "kink"])
def test_forward_then_inverse(g, a, base):
    # a kink can only be added over one with a larger parameter
    y = sg_zero(g) if base == "zero" else sg_kink(KinkParams(0.8), g)
    x = bt_forward(y, a)
    y2, a2 = sg_bt_inverse(x, a + 0.05)
    assert a2 == pytest.approx(a, abs=1e-5)
    assert sup_norm(y2.u - y.u) < 1e-5 and sup_norm(y2.v - y.v) < 1e-5


def test_inverse_fails_far_from_kinks(g):
    # a step in u with a large velocity bump is nowhere near a kink
    x = SGState.from_arrays(g, 2 * math.pi * (g.x > 0), 3.0 * np.exp(-g.x**2 / 50))
    with pytest.raises(NoConvergence):
        sg_bt_inverse(x, 0.5, max_iter=5)


# ---------------------------------------------------------------- linearization

def test_alpha_of_zero_pair(g):
    cp = sg_alpha(sg_zero(g), sg_zero(g), 0.5)
    np.testing.assert_allclose(cp.values, 1.25, rtol=1e-15)


def test_alpha_of_kink_pair(g, kink):
    cp = sg_alpha(kink, sg_zero(g), 0.5)
    assert cp.alpha_minus == pytest.approx(1.25, abs=1e-6)
    assert cp.alpha_plus == pytest.approx(-1.25, abs=1e-6)
    assert np.count_nonzero(np.diff(np.sign(cp.values)) != 0) == 1


def test_kernel_element(g, kink):
    y = sg_zero(g)
    phi, psi = sg_kernel_element(kink, y, 0.5)
    assert l2_norm(phi) == pytest.approx(1.0, abs=1e-12)
    assert np.all(phi.samples > 0)
    assert phi.samples[0] < 1e-6 and phi.samples[-1] < 1e-6
    r = sg_linearized_uv(kink, y, 0.5, phi, psi)
    assert sup_pair(r) < 1e-4


def test_linearization_matches_finite_differences(g, kink):
    y = sg_zero(g)
    phi = Field(g, np.exp(-g.x**2))
    psi = Field(g, np.sin(g.x) * np.exp(-g.x**2))
    h = 1e-6
    plus = SGState(g, kink.u + phi * h, kink.v + psi * h)
    minus = SGState(g, kink.u - phi * h, kink.v - psi * h)
    fd = [(p - m) * (1 / (2 * h)) for p, m in zip(bt_residual(plus, y, 0.5), bt_residual(minus, y, 0.5))]
    lin = sg_linearized_uv(kink, y, 0.5, phi, psi)
    for a, b in zip(fd, lin):
        assert sup_norm(a - b) < 1e-6


def test_nondegeneracy_closed_form(g, kink):
    # int b mu = 4 / a for the kink over the zero state
    assert sg_nondegeneracy(kink, sg_zero(g), 0.5) == pytest.approx(8.0, abs=1e-8)


@pytest.mark.parametrize("a", [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
def test_nondegeneracy_positive(a):
    g = Grid1D.symmetric(40.0, 0.01)
    val = sg_nondegeneracy(sg_kink(KinkParams(a), g), sg_zero(g), a)
    assert val > 0
    assert val == pytest.approx(4 / a, rel=1e-8)


def test_nondegeneracy_phase_invariant(g, kink):
    a = sg_nondegeneracy(kink, sg_zero(g), 0.5)
    b = sg_nondegeneracy(sg_kink(KinkParams(0.5, 1.3), g), sg_zero(g), 0.5)
    assert b == pytest.approx(a, abs=1e-8)
