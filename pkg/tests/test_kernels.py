"""The compiled kernels and the numpy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backlund import _pykernels, kernels
from backlund.grid import midpoints

ck = pytest.importorskip("backlund._ckernels")


def test_active_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.sg_leapfrog is (ck.sg_leapfrog if kernels.BACKEND == "cython" else _pykernels.sg_leapfrog)


def test_env_var_selects_fallback():
    code = "import backlund.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, BACKLUND_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def _both(fn):
    return fn(ck), fn(_pykernels)


@pytest.mark.parametrize("order", [2, 4])
def test_leapfrog_agrees(order):
    rng = np.random.default_rng(1)
    u0, v0 = rng.standard_normal(64), rng.standard_normal(64)

    def run(mod):
        u, v = u0.copy(), v0.copy()
        mod.sg_leapfrog(u, v, 0.01, 0.1, 25, order)
        return np.concatenate([u, v])

    c, p = _both(run)
    np.testing.assert_allclose(c, p, rtol=0, atol=1e-12)
    # clamped ends
    assert c[0] == u0[0] and c[63] == u0[63]


@pytest.mark.parametrize("weights", [[1.0], [1.3512071919596578, -1.7024143839193153, 1.3512071919596578]])
def test_toda_verlet_agrees(weights):
    rng = np.random.default_rng(2)
    q0, p0 = 0.1 * rng.standard_normal(30), 0.1 * rng.standard_normal(30)

    def run(mod):
        q, p = q0.copy(), p0.copy()
        mod.toda_verlet(q, p, 0.01, 50, np.array(weights), np.empty(30))
        return np.concatenate([q, p])

    c, p = _both(run)
    np.testing.assert_allclose(c, p, rtol=0, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 0.9), st.sampled_from([-1.0, 1.0]), st.floats(-3.0, 3.0))
def test_bt_sweep_agrees(a, sigma, w0):
    x = np.linspace(-5, 5, 201)
    p, q = np.sin(x), np.cos(x)

    def run(mod):
        out = np.zeros(201)
        bad = mod.sg_bt_sweep(w0, p, q, midpoints(p), midpoints(q), a, sigma, x[1] - x[0], out)
        return bad, out

    (bc, oc), (bp, op) = _both(run)
    assert bc == bp
    np.testing.assert_allclose(oc, op, rtol=0, atol=1e-12)


def test_bt_sweep_flags_blowup():
    p = np.zeros(11)
    out = np.zeros(11)
    for mod in (ck, _pykernels):
        assert mod.sg_bt_sweep(0.0, p, np.full(11, 1e9), p, np.full(10, 1e9), 0.5, 1.0, 0.1, out) == 1


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 1.5), st.floats(-1.9, -0.1))
def test_toda_forward_sweeps_agree(kappa, seed):
    qp = np.zeros(41)
    pp = np.zeros(41)

    def run(mod):
        q = np.zeros(41)
        q[20] = seed * kappa
        r = mod.toda_fwd_right(qp, pp, kappa, q, 20)
        l = mod.toda_fwd_left(qp, pp, kappa, q, 20)
        return r, l, q

    (rc, lc, qc), (rp, lp, qpy) = _both(run)
    assert (rc, lc) == (rp, lp)
    np.testing.assert_allclose(qc, qpy, rtol=0, atol=1e-13)


def test_toda_sweeps_report_log_domain():
    qp = np.zeros(5)
    pp = np.full(5, 10.0)  # 2 cosh k - p' < 0
    for mod in (ck, _pykernels):
        q = np.zeros(5)
        assert mod.toda_fwd_right(qp, pp, 1.0, q, 2) == 2
        assert mod.toda_inv_right(q, pp, 1.0, 0.0, np.zeros(5), 4) == 0


def test_toda_inverse_sweeps_agree():
    from backlund.grid import LatticeWindow
    from backlund.toda import SolitonParams, toda_soliton

    s = toda_soliton(SolitonParams(0.8, 0.3), LatticeWindow.centered(30))
    q, p = s.q.values, s.p.values

    def run(mod):
        out = np.empty(61)
        a = mod.toda_inv_right(q, p, 0.8, 0.0, out, 30)
        out[-1] = q[-1] + 1.6
        b = mod.toda_inv_left(q, p, 0.8, out, 30)
        return a, b, out

    (ac, bc, oc), (ap, bp, op) = _both(run)
    assert (ac, bc) == (ap, bp) == (-1, -1)
    np.testing.assert_allclose(oc, op, rtol=0, atol=1e-13)
    # the soliton sits on the vacuum
    np.testing.assert_allclose(oc, 0.0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=30), st.floats(-5, 5))
def test_linear_recurrence_agrees(E, u0):
    E = np.array(E)
    b = np.linspace(-1, 1, E.size)

    def run(mod):
        out = np.empty(E.size + 1)
        mod.linear_recurrence(E, b, u0, out)
        return out

    c, p = _both(run)
    np.testing.assert_allclose(c, p, rtol=1e-13, atol=1e-13)
    # direct check
    u = [u0]
    for e, bb in zip(E, b):
        u.append(e * u[-1] + bb)
    np.testing.assert_allclose(c, u, rtol=1e-13, atol=1e-13)


def test_library_results_match_across_backends(monkeypatch):
    from backlund import sine_gordon, toda
    from backlund.grid import Grid1D, LatticeWindow

    def compute():
        g = Grid1D.symmetric(20.0, 0.05)
        kink = sine_gordon.sg_kink(sine_gordon.KinkParams(0.5), g)
        x = sine_gordon.bt_forward(sine_gordon.sg_zero(g), 0.6)
        u = sine_gordon.sg_evolve(kink, 1.0, 0.04, 100)[-1][1].u.samples
        s = toda.toda_multisoliton([toda.SolitonParams(0.5), toda.SolitonParams(1.0, 2.0)], LatticeWindow.centered(40))
        q = toda.toda_evolve(s, 1.0, 0.01, 1000)[-1][1].q.values
        return np.concatenate([x.u.samples, u, q])

    compiled = compute()
    for name in kernels.__all__[1:]:
        monkeypatch.setattr(kernels, name, getattr(_pykernels, name))
    pure = compute()
    np.testing.assert_allclose(compiled, pure, rtol=0, atol=1e-11)
