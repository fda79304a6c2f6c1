"""Compiled vs pure-Python kernels: timings and agreement.

    python benchmarks/bench_kernels.py [--repeat N] [--quick]

Each kernel runs on inputs of the size used by the library (a kink on
[-40, 40] at dx = 0.01, a 201-site Toda window) through both backends.
The table lists the best-of-N wall time per call, the speed-up and the
largest absolute difference between the two outputs. The last two rows are
end-to-end evolutions with the backend switched underneath the library.
"""

import argparse
import time

import numpy as np

from backlund import _pykernels, kernels, sine_gordon, toda
from backlund.grid import Grid1D, LatticeWindow, midpoints

try:
    from backlund import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(quick):
    g = Grid1D.symmetric(40.0, 0.05 if quick else 0.01)
    kink = sine_gordon.sg_kink(sine_gordon.KinkParams(0.5), g)
    u0, v0 = kink.u.samples, kink.v.samples
    w = LatticeWindow.centered(100)
    sol = toda.toda_soliton(toda.SolitonParams(1.0), w)
    q0, p0 = sol.q.values, sol.p.values
    vac = toda.toda_vacuum(w)
    steps = 200 if quick else 2000
    yosh = np.array(toda.SCHEMES["yoshida4"])
    rng = np.random.default_rng(0)
    E = 0.99 + 0.01 * rng.random(g.n - 1)
    b = rng.standard_normal(g.n - 1)
    z = np.zeros(g.n)

    def leapfrog(mod):
        u, v = u0.copy(), v0.copy()
        mod.sg_leapfrog(u, v, 0.9 * g.dx, g.dx, steps // 10)
        return np.concatenate([u, v])

    def verlet(mod):
        q, p = q0.copy(), p0.copy()
        mod.toda_verlet(q, p, 0.01, steps, yosh, np.empty(w.n))
        return np.concatenate([q, p])

    def bt_sweep(mod):
        out = np.empty(g.n)
        mod.sg_bt_sweep(0.0, z, z, midpoints(z), midpoints(z), 0.5, 1.0, g.dx, out)
        return out

    def fwd(mod):
        q = np.empty(w.n)
        q[w.n // 2] = -1.0
        mod.toda_fwd_right(vac.q.values, vac.p.values, 1.0, q, w.n // 2)
        mod.toda_fwd_left(vac.q.values, vac.p.values, 1.0, q, w.n // 2)
        return q

    def inv(mod):
        qp = np.empty(w.n)
        k = w.n // 2
        mod.toda_inv_right(q0, p0, 1.0, 0.0, qp, k)
        qp[-1] = q0[-1] + 2.0
        mod.toda_inv_left(q0, p0, 1.0, qp, k)
        return qp

    def recurrence(mod):
        out = np.empty(g.n)
        mod.linear_recurrence(E, b, 0.0, out)
        return out

    return {
        f"sg_leapfrog ({steps // 10} steps, n={g.n})": leapfrog,
        f"toda_verlet yoshida4 ({steps} steps, n={w.n})": verlet,
        f"sg_bt_sweep (n={g.n})": bt_sweep,
        f"toda_fwd right+left (n={w.n})": fwd,
        f"toda_inv right+left (n={w.n})": inv,
        f"linear_recurrence (n={g.n})": recurrence,
    }


def end_to_end(quick):
    g = Grid1D.symmetric(40.0, 0.05)
    kink = sine_gordon.sg_kink(sine_gordon.KinkParams(0.5), g)
    sol = toda.toda_soliton(toda.SolitonParams(1.0), LatticeWindow.centered(100))
    T = 2.0 if quick else 10.0
    return {
        f"sg_evolve T={T:g}": lambda: sine_gordon.sg_evolve(kink, T, 0.045, 10**6)[-1][1].u.samples,
        f"toda_evolve T={T:g}": lambda: toda.toda_evolve(sol, T, 0.01, 10**6)[-1][1].q.values,
    }


def swap_backend(mod):
    for name in kernels.__all__[1:]:
        setattr(kernels, name, getattr(mod, name))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes, for smoke tests")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the Python backend is available")
        return 1
    rows = []
    for name, fn in cases(args.quick).items():
        tc, oc = best_of(lambda: fn(_ckernels), args.repeat)
        tp, op = best_of(lambda: fn(_pykernels), args.repeat)
        rows.append((name, tc, tp, float(np.max(np.abs(oc - op)))))
    saved = {n: getattr(kernels, n) for n in kernels.__all__[1:]}
    try:
        for name, fn in end_to_end(args.quick).items():
            swap_backend(_ckernels)
            tc, oc = best_of(fn, args.repeat)
            swap_backend(_pykernels)
            tp, op = best_of(fn, args.repeat)
            rows.append((name, tc, tp, float(np.max(np.abs(oc - op)))))
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'cython [s]':>11}  {'python [s]':>11}  {'speed-up':>9}  {'max |diff|':>10}")
    for name, tc, tp, diff in rows:
        print(f"{name:<{width}}  {tc:11.3e}  {tp:11.3e}  {tp / tc:9.1f}  {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
