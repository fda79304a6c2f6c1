import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backlund.errors import LogDomain, ResidualTooLarge, WindowMismatch, WindowTooNarrow
from backlund.grid import LatticeWindow, Seq, sup_norm
from backlund.toda import (
    SolitonParams,
    TodaState,
    _logcosh,
    toda_alpha,
    toda_bt_forward,
    toda_bt_inverse,
    toda_bt_residual,
    toda_distance,
    toda_energy,
    toda_evolve,
    toda_multisoliton,
    toda_phase,
    toda_soliton,
    toda_step,
    toda_vacuum,
)

# regression constants, kappa = 1 soliton on [-100, 100]
SOLITON_ENERGY = 1.6268604078470186  # equals sinh(2) - 2
# |kappa - 1| / eps for a 1e-3 Gaussian bump in p; measured 0.293
INVERSE_LIPSCHITZ = 0.35


@pytest.fixture(scope="module")
def w():
    return LatticeWindow.centered(100)


@pytest.fixture(scope="module")
def sol(w):
    return toda_soliton(SolitonParams(1.0), w)


def sup_pair(pair):
    return max(sup_norm(s) for s in pair)


def peaks(r, thr):
    """Sub-site positions of the local maxima of ``r`` above ``thr``."""
    i = np.nonzero((r[1:-1] > r[:-2]) & (r[1:-1] >= r[2:]) & (r[1:-1] > thr))[0] + 1
    a, b, c = r[i - 1], r[i], r[i + 1]
    return i + 0.5 * (a - c) / (a - 2 * b + c)


# ---------------------------------------------------------------- params and states

@settings(max_examples=50)
@given(st.floats(0.05, 3.0))
def test_soliton_params(kappa):
    sp = SolitonParams(kappa)
    assert sp.speed > 1
    assert sp.speed * kappa == pytest.approx(math.sinh(kappa), rel=1e-12)
    assert sp.drop == 2 * kappa


def test_soliton_params_reject():
    with pytest.raises(ValueError):
        SolitonParams(0.0)
    with pytest.raises(ValueError):
        SolitonParams(1.0, math.inf)


def test_vacuum(w):
    v = toda_vacuum(w)
    assert np.all(v.q.values == 0) and np.all(v.p.values == 0)
    assert toda_energy(v) == 0.0
    s = toda_step(v, 0.05)
    assert np.all(s.q.values == 0) and np.all(s.p.values == 0)


def test_state_shapes_must_agree(w):
    with pytest.raises(WindowMismatch):
        TodaState(w, Seq(w, np.zeros(w.n)), Seq(LatticeWindow(0, w.n), np.zeros(w.n)))


# ---------------------------------------------------------------- soliton

def test_raw_closed_form_value():
    # log(cosh(kappa j + gamma) / cosh(kappa (j + 1) + gamma)) at j = 0, kappa = 1
    assert float(_logcosh(0.0) - _logcosh(1.0)) == pytest.approx(-math.log(math.cosh(1.0)), abs=1e-15)
    assert -math.log(math.cosh(1.0)) == pytest.approx(-0.4337808, abs=1e-7)


@pytest.mark.parametrize("kappa", [0.5, 1.0, 1.5])
def test_soliton_solves_the_transform(w, kappa):
    s = toda_soliton(SolitonParams(kappa), w)
    assert sup_pair(toda_bt_residual(s, toda_vacuum(w), kappa)) < 1e-10
    assert abs(s.q_right - s.q_left) == pytest.approx(2 * kappa, abs=1e-10)
    assert s.background_error() < 1e-12


def test_soliton_needs_wide_window():
    with pytest.raises(WindowTooNarrow):
        toda_soliton(SolitonParams(0.3), LatticeWindow.centered(10))


def test_soliton_energy(sol):
    assert toda_energy(sol) == pytest.approx(SOLITON_ENERGY, rel=1e-12)
    assert toda_energy(sol) == pytest.approx(math.sinh(2.0) - 2.0, rel=1e-12)


def test_energy_ignores_global_shift(sol, w):
    s = TodaState.from_arrays(w, sol.q.values + 3.0, sol.p.values, sol.q_left + 3.0, sol.q_right + 3.0)
    assert toda_energy(s) == pytest.approx(toda_energy(sol), rel=1e-14)


def test_phase_of_soliton(w):
    for g in (0.0, 0.3, -2.7):
        s = toda_soliton(SolitonParams(1.0, g), w)
        assert toda_phase(s, toda_vacuum(w), 1.0) == pytest.approx(g, abs=1e-12)


# ---------------------------------------------------------------- evolution

def test_time_reversal(sol, w):
    s = toda_step(sol, 0.05, scheme="verlet")
    back = toda_step(TodaState.from_arrays(w, s.q.values, -s.p.values, s.q_left, s.q_right), 0.05, scheme="verlet")
    assert np.max(np.abs(back.q.values - sol.q.values)) < 1e-12
    assert np.max(np.abs(back.p.values + sol.p.values)) < 1e-12


@pytest.mark.parametrize("scheme", ["verlet", "yoshida4"])
def test_soliton_travels(sol, w, scheme):
    end = toda_evolve(sol, 10.0, 0.01, 10**6, scheme=scheme)[-1][1]
    exact = toda_soliton(SolitonParams(1.0).at(10.0), w)
    assert toda_distance(end, exact) < 1e-3


def test_evolve_zero_horizon(sol):
    out = toda_evolve(sol, 0.0, 0.01)
    assert len(out) == 1 and out[0][1] is sol


def test_time_step_limit(sol):
    with pytest.raises(ValueError):
        toda_step(sol, 0.2)
    with pytest.raises(ValueError):
        toda_step(sol, 0.01, scheme="euler")


def test_long_run_conservation():
    w = LatticeWindow.centered(150)
    s = toda_soliton(SolitonParams(1.0, 40.0), w)
    out = toda_evolve(s, 100.0, 0.01, 500)
    e0 = toda_energy(s)
    m0 = s.p.values.sum()
    for _, st_ in out:
        assert abs(toda_energy(st_) - e0) < 1e-6 * e0
        assert abs(st_.p.values.sum() - m0) < 1e-10
        assert st_.q_right - st_.q_left == s.q_right - s.q_left


def test_soliton_speed(sol):
    out = toda_evolve(sol, 20.0, 0.01, 100)
    t = np.array([t for t, _ in out])
    x = np.array([peaks(st_.r, 0.1)[0] for _, st_ in out])
    speed = np.polyfit(t, x, 1)[0]
    assert speed == pytest.approx(math.sinh(1.0), rel=0.01)


def test_conjugation_invariance(sol, w):
    v = toda_vacuum(w)
    r0 = sup_pair(toda_bt_residual(sol, v, 1.0))
    xs = toda_evolve(sol, 20.0, 0.01, 100)
    ys = toda_evolve(v, 20.0, 0.01, 100)
    worst = max(sup_pair(toda_bt_residual(a, b, 1.0)) for (_, a), (_, b) in zip(xs, ys))
    assert worst < max(10 * r0, 100 * 0.01**2)


# ---------------------------------------------------------------- transform

def test_vacuum_residual_vanishes(w):
    v = toda_vacuum(w)
    for kappa in (0.3, 1.2):
        assert sup_pair(toda_bt_residual(v, v, kappa)) < 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.floats(-5, 5))
def test_residual_uses_differences_only(seed, c):
    w = LatticeWindow.centered(10)
    rng = np.random.default_rng(seed)
    q, p, qp, pp = (0.3 * rng.standard_normal(w.n) for _ in range(4))
    x = TodaState.from_arrays(w, q, p, 0.1, -0.2)
    y = TodaState.from_arrays(w, qp, pp, 0.0, 0.3)
    xs = TodaState.from_arrays(w, q + c, p, 0.1 + c, -0.2 + c)
    ys = TodaState.from_arrays(w, qp + c, pp, c, 0.3 + c)
    for a, b in zip(toda_bt_residual(x, y, 0.7), toda_bt_residual(xs, ys, 0.7)):
        np.testing.assert_allclose(a.values, b.values, rtol=1e-12, atol=1e-12)


def test_forward_from_vacuum_is_the_soliton(w, sol):
    x = toda_bt_forward(toda_vacuum(w), 1.0)
    assert np.max(np.abs(x.q.values - sol.q.values)) < 1e-8
    assert np.max(np.abs(x.p.values - sol.p.values)) < 1e-8
    assert abs(x.q_right - x.q_left) == pytest.approx(2.0, abs=1e-10)


def test_forward_with_phase(w):
    x = toda_bt_forward(toda_vacuum(w), 1.0, gamma_phase=-7.3)
    ref = toda_soliton(SolitonParams(1.0, -7.3), w)
    assert np.max(np.abs(x.q.values - ref.q.values)) < 1e-8


def test_forward_with_explicit_seed(w):
    x = toda_bt_forward(toda_vacuum(w), 1.0, seed=-1.0)
    assert sup_pair(toda_bt_residual(x, toda_vacuum(w), 1.0)) < 1e-8
    assert x.q.values[w.n // 2] == -1.0


def test_forward_rejects_inadmissible_seed(w):
    # the left recursion needs 2 cosh k - e^{-(q - k)} > 0, so q must exceed k - log(2 cosh k)
    with pytest.raises(LogDomain):
        toda_bt_forward(toda_vacuum(w), 1.0, seed=-5.0)


def test_two_soliton(w):
    base = toda_soliton(SolitonParams(0.5), w)
    two = toda_bt_forward(base, 1.0)
    assert sup_pair(toda_bt_residual(two, base, 1.0)) < 1e-8
    assert two.q_left - two.q_right == pytest.approx(3.0, abs=1e-8)


def test_two_soliton_speeds():
    w = LatticeWindow.centered(150)
    two = toda_multisoliton([SolitonParams(0.5), SolitonParams(1.0, -20.0)], w)
    out = toda_evolve(two, 40.0, 0.01, 100)
    t = np.array([t for t, _ in out])
    pos = np.array([peaks(st_.r, 0.05) for _, st_ in out])
    assert pos.shape == (len(out), 2)
    slow = np.polyfit(t, pos[:, 0], 1)[0]
    fast = np.polyfit(t, pos[:, 1], 1)[0]
    assert slow == pytest.approx(math.sinh(0.5) / 0.5, rel=0.02)
    assert fast == pytest.approx(math.sinh(1.0), rel=0.02)


def test_inverse_of_soliton(sol, w):
    y, kappa = toda_bt_inverse(sol, 1.15)
    assert kappa == pytest.approx(1.0, abs=1e-6)
    assert toda_distance(y, toda_vacuum(w)) < 1e-6


def test_inverse_of_two_soliton(w):
    base = toda_soliton(SolitonParams(0.5), w)
    y, kappa = toda_bt_inverse(toda_bt_forward(base, 1.0), 1.1)
    assert kappa == pytest.approx(1.0, abs=1e-6)
    assert toda_distance(y, base) < 1e-5


def test_inverse_is_lipschitz(sol, w):
    eps = 1e-3
    x = TodaState.from_arrays(w, sol.q.values, sol.p.values + eps * np.exp(-w.sites**2 / 2.0),
                              sol.q_left, sol.q_right)
    y, kappa = toda_bt_inverse(x, 1.1)
    assert sup_pair(toda_bt_residual(x, y, kappa)) < 1e-6
    assert abs(kappa - 1.0) < INVERSE_LIPSCHITZ * eps


@pytest.mark.parametrize("base", ["vacuum", "soliton"])
def test_forward_then_inverse(w, base):
    y = toda_vacuum(w) if base == "vacuum" else toda_soliton(SolitonParams(0.5), w)
    y2, kappa = toda_bt_inverse(toda_bt_forward(y, 1.2), 1.0)
    assert kappa == pytest.approx(1.2, abs=1e-5)
    assert np.max(np.abs(y2.q.values - y.q.values)) < 1e-5
    assert np.max(np.abs(y2.p.values - y.p.values)) < 1e-5


def test_forward_residual_gate(w):
    with pytest.raises(ResidualTooLarge):
        toda_bt_forward(toda_vacuum(w), 1.0, tol=0.0)


# ---------------------------------------------------------------- multisoliton and alpha

def test_multisoliton_basics(w):
    assert toda_distance(toda_multisoliton([], w), toda_vacuum(w)) == 0.0
    one = toda_multisoliton([SolitonParams(1.0, 0.4)], w)
    assert np.max(np.abs(one.q.values - toda_soliton(SolitonParams(1.0, 0.4), w).q.values)) < 1e-8
    two = toda_multisoliton([SolitonParams(0.5), SolitonParams(1.0)], w)
    assert abs(two.q_right - two.q_left) == pytest.approx(3.0, abs=1e-8)
    chain = two.meta["chain"]
    for (lo, hi), kappa in zip(zip(chain, chain[1:]), (0.5, 1.0)):
        assert sup_pair(toda_bt_residual(hi, lo, kappa)) < 1e-8


def test_multisoliton_needs_distinct_kappas(w):
    with pytest.raises(ValueError):
        toda_multisoliton([SolitonParams(1.0), SolitonParams(1.0, 3.0)], w)


def test_alpha_of_vacuum(w):
    v = toda_vacuum(w)
    np.testing.assert_allclose(toda_alpha(v, v, 0.7).values, math.exp(1.4), rtol=1e-15)


def test_alpha_limits(sol, w):
    cp = toda_alpha(sol, toda_vacuum(w), 1.0)
    assert cp.alpha_minus == pytest.approx(math.exp(2.0), abs=1e-6)
    assert cp.alpha_plus == pytest.approx(math.exp(-2.0), abs=1e-6)
    assert cp.case == 1


@pytest.mark.parametrize("kappa", [0.5, 1.0])
def test_alpha_tails_are_summable(kappa):
    sums = []
    for half in (100, 200):
        w = LatticeWindow.centered(half)
        cp = toda_alpha(toda_soliton(SolitonParams(kappa), w), toda_vacuum(w), kappa)
        sums.append(cp.tail_sums)
    assert np.all(np.isfinite(sums))
    np.testing.assert_allclose(sums[0], sums[1], atol=1e-8)
