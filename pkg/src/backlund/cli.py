"""Command-line front end.

    backlund <subcommand> [--config FILE ...] [--out DIR] [--set key=value ...] [--jobs N]

Every subcommand writes one or more tables (CSV by default, floats printed
with 17 significant digits) plus ``summary.json`` into the output directory
and prints a one-line summary. Exit codes: 0 success, 1 configuration
error, 2 numerical failure, 3 the run completed but its pass flag is false.

Several ``--config`` files make a batch: each runs into ``OUT/<file stem>``,
up to ``--jobs`` at a time in separate processes.
"""

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import Config, parse_config
from .dichotomy import CoefficientProfile, adjoint_solution, solve_case1_continuous, solve_case2_continuous
from .errors import ConfigError, NotOrthogonal, NumericalFailure
from .grid import Grid1D, LatticeWindow, sup_norm
from .sine_gordon import (
    KinkParams,
    bt_forward,
    bt_residual,
    sg_bt_inverse,
    sg_energy,
    sg_evolve,
    sg_kink,
    sg_zero,
)
from .stability import (
    ExperimentConfig,
    PerturbationSpec,
    conjugation_residual_series,
    make_perturbation,
    run_stability_experiment,
)
from .toda import (
    SolitonParams,
    toda_bt_forward,
    toda_bt_inverse,
    toda_bt_residual,
    toda_energy,
    toda_evolve,
    toda_multisoliton,
    toda_soliton,
    toda_vacuum,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_FAILED = 0, 1, 2, 3
METRICS = ("sup_distance", "empirical_C", "energy_drift", "max_residual")


# --------------------------------------------------------------------------
# output


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def write_table(path: Path, columns, rows, fmt: str = "csv") -> Path:
    """Write ``rows`` under a header; returns the file written."""
    if fmt == "json":
        path = path.with_suffix(".json")
        data = {"columns": list(columns), "rows": [_jsonable(list(r)) for r in rows]}
        path.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
        return path
    path = path.with_suffix(".csv")
    lines = [",".join(columns)] + [",".join(_cell(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# config helpers


def _grid(cfg: Config) -> Grid1D:
    return Grid1D(cfg["grid.x0"], cfg["grid.dx"], cfg["grid.n"])


def _window(cfg: Config) -> LatticeWindow:
    return LatticeWindow(cfg["lattice.j0"], cfg["lattice.n"])


def _kink(cfg: Config) -> KinkParams:
    return KinkParams(cfg["system.a"], cfg["system.delta"])


def _solitons(cfg: Config) -> list[SolitonParams]:
    return [SolitonParams(k, g) for k, g in zip(cfg["system.kappa"], cfg["system.gamma_phase"])]


def _perturbation(cfg: Config, system: str) -> PerturbationSpec:
    kind = cfg["perturbation.kind"]
    if kind == "auto":
        kind = "gaussian_v" if system == "sg" else "gaussian_q"
    return PerturbationSpec(kind, cfg["perturbation.amplitude"], cfg["perturbation.width"],
                            cfg["perturbation.center"], cfg["perturbation.seed"])


def _toda_base(cfg: Config):
    sps = _solitons(cfg)
    w = _window(cfg)
    return toda_soliton(sps[0], w) if len(sps) == 1 else toda_multisoliton(sps, w)


def _r_full(s) -> np.ndarray:
    q = s.q.values
    return q - np.append(q[1:], s.q_right)


def _kink_center(s) -> float:
    """Position where ``u`` crosses ``pi`` (linear interpolation)."""
    u = s.u.samples - math.pi
    i = np.nonzero((u[:-1] < 0) & (u[1:] >= 0))[0]
    if not i.size:
        return math.nan
    i = int(i[0])
    x = s.grid.x
    return float(x[i] - u[i] * (x[i + 1] - x[i]) / (u[i + 1] - u[i]))


def _sg_profile(s, extra=None):
    cols = ["x", "u", "v"]
    data = [s.grid.x, s.u.samples, s.v.samples]
    for name, arr in (extra or {}).items():
        cols.append(name)
        data.append(arr)
    return cols, list(zip(*data))


def _toda_profile(s, extra=None):
    cols = ["j", "q", "p", "r"]
    data = [s.window.sites, s.q.values, s.p.values, _r_full(s)]
    for name, arr in (extra or {}).items():
        cols.append(name)
        data.append(arr)
    return cols, list(zip(*data))


def _pair_residual(res) -> float:
    return max(sup_norm(res[0]), sup_norm(res[1]))


def _result(tables, passed=True, details=None, **metrics):
    m = {k: metrics.get(k) for k in METRICS}
    return {"tables": tables, "pass": bool(passed), "metrics": m, "details": details or {}}


# --------------------------------------------------------------------------
# subcommands


def cmd_sg_kink(cfg):
    g = _grid(cfg)
    kp = _kink(cfg)
    s = sg_kink(kp, g)
    r = _pair_residual(bt_residual(s, sg_zero(g), kp.a))
    e = sg_energy(s)
    return _result({"profile": _sg_profile(s)}, max_residual=r,
                   details={"energy": e, "energy_closed_form": 8.0 * kp.gamma, "speed": kp.speed})


def cmd_sg_evolve(cfg):
    g = _grid(cfg)
    s0 = make_perturbation(_perturbation(cfg, "sg"), sg_kink(_kink(cfg), g))
    traj = sg_evolve(s0, cfg["experiment.T"], cfg["experiment.dt"], cfg["experiment.stride"],
                     cfg["experiment.order"])
    rows = [(t, sg_energy(s), _kink_center(s)) for t, s in traj]
    e = np.array([r[1] for r in rows])
    drift = float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] != 0 else float(np.max(np.abs(e)))
    return _result({"trajectory": (["t", "energy", "kink_center"], rows),
                    "profile": _sg_profile(traj[-1][1])}, energy_drift=drift)


def cmd_sg_bt(cfg):
    g = _grid(cfg)
    kp = _kink(cfg)
    x = bt_forward(sg_zero(g), kp.a, kp.delta)
    ref = sg_kink(kp, g)
    err = max(sup_norm(x.u - ref.u), sup_norm(x.v - ref.v))
    r = _pair_residual(bt_residual(x, sg_zero(g), kp.a))
    tab = _sg_profile(x, {"u_exact": ref.u.samples, "v_exact": ref.v.samples})
    return _result({"profile": tab}, max_residual=r, details={"sup_error_vs_closed_form": err})


def cmd_sg_bt_inverse(cfg):
    g = _grid(cfg)
    kp = _kink(cfg)
    x = make_perturbation(_perturbation(cfg, "sg"), sg_kink(kp, g))
    y, a = sg_bt_inverse(x, kp.a)
    r = _pair_residual(bt_residual(x, y, a))
    return _result({"profile": _sg_profile(y)}, max_residual=r,
                   details={"recovered_a": a, "a_error": a - kp.a})


def _stability(cfg, system):
    pert = _perturbation(cfg, system)
    common = dict(T=cfg["experiment.T"], dt=cfg["experiment.dt"], stride=cfg["experiment.stride"],
                  c_max=cfg["experiment.c_max"])
    if system == "sg":
        ec = ExperimentConfig("sg", _kink(cfg), pert, grid=_grid(cfg),
                              sg_order=cfg["experiment.order"], **common)
    else:
        ec = ExperimentConfig("toda", tuple(_solitons(cfg)), pert, window=_window(cfg), **common)
    rep = run_stability_experiment(ec)
    names = rep.param_names
    cols = ["t", "branch", "distance"] + names + ["energy", "conjugation_residual", "fit_ok"]
    rows = [[r["t"], r["branch"], r["distance"], *r["params"], r["energy"],
             r["conjugation_residual"], r["fit_ok"]] for r in rep.rows]
    return _result({"report": (cols, rows)}, passed=rep.passed, details=rep.details,
                   sup_distance=rep.sup_distance, empirical_C=rep.empirical_C,
                   energy_drift=rep.energy_drift, max_residual=rep.max_residual)


def cmd_sg_stability(cfg):
    return _stability(cfg, "sg")


def cmd_toda_stability(cfg):
    return _stability(cfg, "toda")


def cmd_toda_soliton(cfg):
    w = _window(cfg)
    sp = _solitons(cfg)[0]
    s = toda_soliton(sp, w)
    r = _pair_residual(toda_bt_residual(s, toda_vacuum(w), sp.kappa))
    return _result({"profile": _toda_profile(s)}, max_residual=r,
                   details={"energy": toda_energy(s), "speed": sp.speed, "drop": s.q_right - s.q_left})


def cmd_toda_evolve(cfg):
    s0 = make_perturbation(_perturbation(cfg, "toda"), _toda_base(cfg))
    traj = toda_evolve(s0, cfg["experiment.T"], cfg["experiment.dt"], cfg["experiment.stride"])
    rows = [(t, toda_energy(s), float(np.sum(s.p.values)), int(s.window.sites[np.argmax(_r_full(s))]))
            for t, s in traj]
    e = np.array([r[1] for r in rows])
    mom = np.array([r[2] for r in rows])
    drift = float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] != 0 else float(np.max(np.abs(e)))
    return _result({"trajectory": (["t", "energy", "momentum", "peak_site"], rows),
                    "profile": _toda_profile(traj[-1][1])}, energy_drift=drift,
                   details={"momentum_drift": float(np.max(np.abs(mom - mom[0])))})


def cmd_toda_bt(cfg):
    w = _window(cfg)
    sp = _solitons(cfg)[0]
    vac = toda_vacuum(w)
    x = toda_bt_forward(vac, sp.kappa, gamma_phase=sp.gamma_phase)
    ref = toda_soliton(sp, w)
    err = max(sup_norm(x.q - ref.q), sup_norm(x.p - ref.p))
    r = _pair_residual(toda_bt_residual(x, vac, sp.kappa))
    tab = _toda_profile(x, {"q_exact": ref.q.values, "p_exact": ref.p.values})
    return _result({"profile": tab}, max_residual=r, details={"sup_error_vs_closed_form": err})


def cmd_toda_multisoliton(cfg):
    sps = _solitons(cfg)
    s = toda_multisoliton(sps, _window(cfg))
    chain = s.meta.get("chain", [s])
    res = [_pair_residual(toda_bt_residual(chain[i + 1], chain[i], sp.kappa))
           for i, sp in enumerate(sps)]
    return _result({"profile": _toda_profile(s)}, max_residual=max(res, default=0.0),
                   details={"chain_residuals": res, "drop": s.q_right - s.q_left,
                            "energy": toda_energy(s)})


def cmd_toda_bt_inverse(cfg):
    sp = _solitons(cfg)[0]
    x = make_perturbation(_perturbation(cfg, "toda"), toda_soliton(sp, _window(cfg)))
    y, k = toda_bt_inverse(x, sp.kappa)
    r = _pair_residual(toda_bt_residual(x, y, k))
    return _result({"profile": _toda_profile(y)}, max_residual=r,
                   details={"recovered_kappa": k, "kappa_error": k - sp.kappa})


def cmd_dichotomy_check(cfg):
    """Closed-form dichotomy cases on the configured grid.

    Case 1: ``alpha = -tanh x``, ``f = sech x``, exact ``u = x sech x`` and
    adjoint ``mu = cosh x``. Case 2: ``alpha = tanh x``,
    ``f = -tanh x sech x``, exact ``u = sech(x) / 2``; ``f = sech x`` must
    be rejected.
    """
    g = _grid(cfg)
    x = g.x
    k = g.index_of(0.0)
    sech = 1.0 / np.cosh(x)
    cp1 = CoefficientProfile(g.field(-np.tanh(x)), 1.0, -1.0, k)
    u1 = np.asarray(solve_case1_continuous(cp1, g.field(sech)))
    mu = np.asarray(adjoint_solution(cp1))
    cp2 = CoefficientProfile(g.field(np.tanh(x)), -1.0, 1.0, k)
    u2, _ = solve_case2_continuous(cp2, g.field(-np.tanh(x) * sech))
    u2 = np.asarray(u2)
    try:
        solve_case2_continuous(cp2, g.field(sech))
        rejected = False
    except NotOrthogonal:
        rejected = True
    errs = {
        "case1_u": float(np.max(np.abs(u1 - x * sech))),
        "case1_mu_relative": float(np.max(np.abs(mu * sech - 1.0))),
        "case2_u": float(np.max(np.abs(u2 - 0.5 * sech))),
    }
    worst = max(errs.values())
    cols = ["x", "u_case1", "u_case1_exact", "mu_case1", "u_case2", "u_case2_exact"]
    rows = list(zip(x, u1, x * sech, mu, u2, 0.5 * sech))
    return _result({"profile": (cols, rows)}, passed=worst < 1e-6 and rejected, max_residual=worst,
                   details={**errs, "non_orthogonal_rejected": rejected})


def cmd_conjugation_check(cfg):
    """Residual of exact BT pairs along simultaneous evolution (both systems)."""
    T, dt, stride = cfg["experiment.T"], cfg["experiment.dt"], cfg["experiment.stride"]
    g = _grid(cfg)
    kp = _kink(cfg)
    sg = conjugation_residual_series(sg_kink(kp, g), sg_zero(g), kp.a, T, dt, stride,
                                     sg_order=cfg["experiment.order"])
    sp = _solitons(cfg)[0]
    w = _window(cfg)
    td = conjugation_residual_series(toda_soliton(sp, w), toda_vacuum(w), sp.kappa, T, dt, stride)
    sg_bound = max(10.0 * sg[0][1], 5.0 * g.dx**2)
    td_bound = max(10.0 * td[0][1], 100.0 * dt**2)
    sg_max = max(r for _, r in sg)
    td_max = max(r for _, r in td)
    rows = [("sg", t, r) for t, r in sg] + [("toda", t, r) for t, r in td]
    return _result({"conjugation": (["system", "t", "residual"], rows)},
                   passed=sg_max <= sg_bound and td_max <= td_bound,
                   max_residual=max(sg_max, td_max),
                   details={"sg_max": sg_max, "sg_bound": sg_bound, "toda_max": td_max,
                            "toda_bound": td_bound})


COMMANDS = {
    "sg-kink": cmd_sg_kink,
    "sg-evolve": cmd_sg_evolve,
    "sg-bt": cmd_sg_bt,
    "sg-bt-inverse": cmd_sg_bt_inverse,
    "sg-stability": cmd_sg_stability,
    "toda-soliton": cmd_toda_soliton,
    "toda-evolve": cmd_toda_evolve,
    "toda-bt": cmd_toda_bt,
    "toda-multisoliton": cmd_toda_multisoliton,
    "toda-bt-inverse": cmd_toda_bt_inverse,
    "toda-stability": cmd_toda_stability,
    "dichotomy-check": cmd_dichotomy_check,
    "conjugation-check": cmd_conjugation_check,
}


# --------------------------------------------------------------------------
# orchestration


def run(command: str, cfg: Config, out_dir=None, quiet: bool = False) -> int:
    """Run one subcommand and write its outputs; returns the exit code."""
    out = Path(out_dir if out_dir is not None else cfg["output.out_dir"])
    t0 = time.perf_counter()
    try:
        res = COMMANDS[command](cfg)
    except NumericalFailure as exc:
        print(f"{command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"{command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    runtime = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    for name, (cols, rows) in res["tables"].items():
        write_table(out / name, cols, rows, cfg["output.format"])
    summary = {
        "command": command,
        "config": cfg.as_dict(),
        "pass": res["pass"],
        "metrics": res["metrics"],
        "runtime_seconds": runtime,
        "details": res["details"],
    }
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2) + "\n", encoding="utf-8")
    if not quiet:
        shown = " ".join(f"{k}={_cell(v)}" for k, v in res["metrics"].items() if v is not None)
        print(f"{command}: pass={str(res['pass']).lower()} {shown} ({runtime:.2f} s) -> {out}")
    return EXIT_OK if res["pass"] else EXIT_FAILED


def _run_job(args):
    command, cfg, out_dir = args
    return run(command, cfg, out_dir)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="backlund", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", action="append", default=[], metavar="FILE",
                    help="configuration file; repeat for a batch")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides output.out_dir)")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides",
                    help="override a config value; use section.key when the key is ambiguous")
    ap.add_argument("--jobs", type=int, default=1, help="parallel workers for a batch")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if len(args.config) <= 1:
            text = Path(args.config[0]).read_text(encoding="utf-8") if args.config else ""
            cfg = parse_config(text, args.overrides)
            return run(args.command, cfg, args.out)
        jobs = []
        for path in args.config:
            cfg = parse_config(Path(path).read_text(encoding="utf-8"), args.overrides)
            base = Path(args.out if args.out is not None else cfg["output.out_dir"])
            jobs.append((args.command, cfg, base / Path(path).stem))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_run_job, jobs))
    else:
        codes = [_run_job(j) for j in jobs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
