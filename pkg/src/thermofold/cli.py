"""Command-line entry point: simulate, calibrate, optimize.

Exit codes: 0 full success, 1 input error, 2 partial result (a run that
stopped early on non-convergence but wrote every converged frame).
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
import json
import sys

import numpy as np

from . import __version__
from .config import SolverConfig, config_from_dict
from .driver import HeatingSchedule, run_coupled, run_miura_comparison
from .errors import PatternError, InfeasibleStartError
from .meshing import triangulate
from .model import load_model, load_model_file, parse_length, parse_angle
from .optimize import (DesignBounds, DesignVector, GripperTask,
                       optimize_gripper)
from .thermal import analytic_1d_temperature, assemble, solve_temperature, \
    structural_temperatures, centerline_average, boundary_outflows
from . import generators, output


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PatternError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleStartError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="thermofold",
        description="Electro-thermal origami folding simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one coupled heating simulation")
    _common_flags(sim)
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="pattern file (JSON)")
    src.add_argument("--generator", help="built-in pattern generator name")
    sim.add_argument("--param", action="append", default=[],
                     metavar="KEY=VALUE", help="generator parameter override")
    sim.add_argument("--power", action="append", default=[], metavar="[CIRCUIT=]W",
                     help="target power; bare value applies to all circuits")
    sim.add_argument("--increments", type=int, default=None)
    sim.add_argument("--deactivate", default="",
                     help="comma-separated crease ids left passive")
    sim.add_argument("--no-gravity", action="store_true")
    sim.add_argument("--no-contact", action="store_true")
    sim.add_argument("--export-mesh", action="store_true",
                     help="write one OBJ triangle mesh per frame")
    sim.add_argument("--thermal-diagnostics", action="store_true")
    sim.add_argument("--compare-substrate", action="store_true",
                     help="paired run with and without the substrate (lifters)")
    sim.set_defaults(func=cmd_simulate)

    cal = sub.add_parser("calibrate",
                         help="sweep the two-panel family against the 1-D oracle")
    _common_flags(cal)
    cal.add_argument("--beta", default=None, help="dissipation angle, e.g. 20deg")
    cal.add_argument("--layers", type=int, default=None)
    cal.add_argument("--t-env-ratio", type=float, default=None)
    cal.set_defaults(func=cmd_calibrate)

    opt = sub.add_parser("optimize", help="gripper coordinate-descent study")
    _common_flags(opt)
    opt.add_argument("--start", default="200um,1000um,1000um,700um",
                     metavar="W,L1,L2,LA")
    opt.add_argument("--l-min", default="500um")
    opt.add_argument("--l-max", default="1500um")
    opt.add_argument("--w-min", default="100um")
    opt.add_argument("--w-max", default="300um")
    opt.add_argument("--la-min", default="500um")
    opt.add_argument("--la-max", default="1500um")
    opt.add_argument("--max-steps", type=int, default=12,
                     help="maximum full coordinate cycles")
    opt.add_argument("--phase-increments", type=int, default=30)
    opt.add_argument("--power-cap", type=float, default=0.12)
    opt.set_defaults(func=cmd_optimize)
    return parser


def _common_flags(p):
    p.add_argument("--out", default="runs/out", help="output directory")
    p.add_argument("--config", default=None, help="JSON solver config overrides")
    p.add_argument("--threads", type=int, default=1)


def _load_config(args) -> SolverConfig:
    overrides = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    cfg = config_from_dict(overrides)
    if getattr(args, "increments", None):
        cfg = replace(cfg, increments=args.increments)
    if getattr(args, "no_gravity", False):
        cfg = replace(cfg, gravity_on=False)
    if getattr(args, "no_contact", False):
        cfg = replace(cfg, contact_on=False)
    return cfg


def _parse_params(pairs):
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise PatternError(f"--param expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def _parse_powers(specs, circuits):
    if not specs:
        return None
    targets = {}
    for spec in specs:
        if "=" in spec:
            cid, val = spec.split("=", 1)
            targets[int(cid)] = float(val)
        else:
            for cid in circuits:
                targets[cid] = float(spec)
    return targets


def cmd_simulate(args) -> int:
    config = _load_config(args)
    if args.input:
        model = load_model_file(args.input)
        source = {"input": args.input}
    else:
        params = _parse_params(args.param)
        model = load_model({"generator": {"name": args.generator,
                                          "params": params}})
        source = {"generator": args.generator, "params": params}

    if args.deactivate:
        ids = [int(s) for s in args.deactivate.split(",") if s.strip()]
        for cid in ids:
            if not 0 <= cid < len(model.creases):
                raise PatternError(f"--deactivate: unknown crease {cid}")
            model.creases[cid] = replace(model.creases[cid], active=False)

    targets = _parse_powers(args.power, model.circuits()) or dict(model.heating)
    schedule = HeatingSchedule(targets=targets, increments=config.increments)

    outdir = output.ensure_outdir(args.out)
    output.write_manifest(outdir, {
        "tool": "thermofold", "version": __version__, "command": "simulate",
        "source": source, "targets_W": {str(k): v for k, v in sorted(targets.items())},
        "deactivated": args.deactivate, "config": config.to_dict(),
        "out": args.out, "determinism": {"seedless": True, "rng": "none"},
    })

    if args.compare_substrate:
        comparison = run_miura_comparison(model, config, schedule)
        _write_run(outdir + "/substrate_off", comparison.result_off, model, args)
        _write_run(outdir + "/substrate_on", comparison.result_on, model, args)
        rows = []
        n = min(len(comparison.lift_off), len(comparison.lift_on))
        for i in range(n):
            fr = comparison.result_on.frames[i]
            rows.append([i, sum(fr.powers.values()), comparison.lift_off[i],
                         comparison.lift_on[i]])
        output.write_csv(outdir + "/comparison.csv",
                         ["frame", "total_power_W", "lift_off_m", "lift_on_m"],
                         rows)
        ok = comparison.result_off.completed and comparison.result_on.completed
        print(f"paired run: {len(rows)} common frames -> {outdir}")
        return 0 if ok else 2

    result = run_coupled(model, config, schedule)
    _write_run(outdir, result, model, args)
    print(f"{result.status}: {len(result.frames)} frames -> {outdir}")
    return 0 if result.completed else 2


def _write_run(outdir, result, model, args):
    output.ensure_outdir(outdir)
    output.write_summary(outdir, result, model)
    mesh = triangulate(model)
    diag_entries = []
    for fr in result.frames:
        output.write_frame_geometry(outdir, fr)
        if getattr(args, "export_mesh", False):
            output.write_frame_obj(outdir, fr, mesh)
    if getattr(args, "thermal_diagnostics", False):
        config = _load_config(args)
        from .driver import CoupledSimulation
        sim = CoupledSimulation(model, config)
        for fr in result.frames:
            system = assemble(sim.mesh, model, fr.coords, sim.env, fr.powers)
            entry = dict(system.diagnostics)
            entry["increment"] = fr.index
            diag_entries.append(entry)
        output.write_thermal_diagnostics(outdir, diag_entries)


def cmd_calibrate(args) -> int:
    config = _load_config(args)
    beta = parse_angle(args.beta, "--beta") if args.beta is not None else None
    outdir = output.ensure_outdir(args.out)
    output.write_manifest(outdir, {
        "tool": "thermofold", "version": __version__, "command": "calibrate",
        "beta": args.beta, "layers": args.layers, "t_env_ratio": args.t_env_ratio,
        "config": config.to_dict(), "out": args.out,
        "determinism": {"seedless": True, "rng": "none"},
    })

    header = ["sweep", "W_over_L", "tc_over_tp", "L1_over_L2", "beta_deg",
              "layers", "T_ave_BH_K", "T_max_BH_K", "T_1D_K", "ratio",
              "env_loss_W"]
    rows = []

    # conduction-only family against the closed-form solution
    for tc_tp in (0.1, 0.5, 1.0):
        for wl in (0.2, 0.4, 0.6, 0.8, 1.0):
            r = _two_panel_point(wl, tc_tp, 1.0, env=None, config=config)
            rows.append(["oracle", wl, tc_tp, 1.0, "", "", r["T_ave"],
                         r["T_max"], r["T_1d"], r["T_ave"] / r["T_1d"], ""])
    for l1_l2 in (0.5, 1.0, 2.0):
        r = _two_panel_point(0.5, 0.1, l1_l2, env=None, config=config)
        rows.append(["oracle-asym", 0.5, 0.1, l1_l2, "", "", r["T_ave"],
                     r["T_max"], r["T_1d"], r["T_ave"] / r["T_1d"], ""])

    # environment parameter study (trend table)
    betas = [np.degrees(beta)] if beta is not None else [0.0, 10.0, 20.0, 30.0]
    layer_counts = [args.layers] if args.layers else [5, 10, 20]
    ratios = [args.t_env_ratio] if args.t_env_ratio else [0.5, 1.5, 3.0]
    for beta_deg in betas:
        for wl in (0.2, 0.6, 1.0):
            env = {"beta_deg": beta_deg, "layers": 10, "ratio": 1.5}
            r = _two_panel_point(wl, 0.1, 1.0, env=env, config=config)
            rows.append(["beta", wl, 0.1, 1.0, beta_deg, 10, r["T_ave"],
                         r["T_max"], "", "", r["env_loss"]])
    # layer and t_env studies run at the calibration geometry (W/L = 3)
    for n_layers in layer_counts:
        env = {"beta_deg": 20.0, "layers": n_layers, "ratio": 1.5}
        r = _two_panel_point(3.0, 0.1, 1.0, env=env, config=config)
        rows.append(["layers", 3.0, 0.1, 1.0, 20.0, n_layers, r["T_ave"],
                     r["T_max"], "", "", r["env_loss"]])
    for ratio in ratios:
        env = {"beta_deg": 20.0, "layers": 10, "ratio": ratio}
        r = _two_panel_point(3.0, 0.1, 1.0, env=env, config=config)
        rows.append([f"t_env:{ratio:g}L", 3.0, 0.1, 1.0, 20.0, 10, r["T_ave"],
                     r["T_max"], "", "", r["env_loss"]])

    output.write_csv(outdir + "/calibration.csv", header, rows)
    oracle_rows = [r for r in rows if r[0] == "oracle"]
    worst = max(abs(r[9] - 1.0) for r in oracle_rows)
    print(f"calibration table -> {outdir}/calibration.csv "
          f"(worst oracle deviation {worst * 100:.2f}%)")
    return 0


def _two_panel_point(wl, tc_tp, l1_l2, env, config):
    """One two-panel solve; returns crease temperatures and references."""
    L = 100e-6
    t_p = 10e-6
    q = 10.0
    L2 = L
    L1 = l1_l2 * L2
    params = {"L": L, "W_over_L": wl, "tc_over_tp": tc_tp, "t_p": t_p,
              "L1": L1, "L2": L2, "k": 1.0, "q": q, "room_T": 0.0}
    if env is not None:
        params.update(env=True, k_env=0.026, layers=env["layers"],
                      beta=f"{env['beta_deg']}deg", t_env_ratio=env["ratio"])
    model = load_model(generators.two_panel(params))
    mesh = triangulate(model, config.crease_divisions)
    system = assemble(mesh, model, np.array(mesh.coords0), model.environment
                      if model.environment and model.environment.enabled else None,
                      {0: q})
    T = solve_temperature(system)
    Ts = structural_temperatures(system, T)
    cl = mesh.crease_centerline_nodes[0]
    out = {"T_ave": centerline_average(mesh, 0, Ts), "T_max": float(np.max(Ts[cl]))}
    oracle = analytic_1d_temperature(L1, L2, L, wl * L, tc_tp * t_p, t_p, 1.0, q,
                                     RT=0.0)
    out["T_1d"] = oracle.T_centerline
    flows = boundary_outflows(system, T)
    out["env_loss"] = flows["environment"]
    return out


def cmd_optimize(args) -> int:
    config = _load_config(args)
    parts = [parse_length(s.strip(), "--start") for s in args.start.split(",")]
    if len(parts) != 4:
        raise PatternError("--start expects W,L1,L2,La")
    start = DesignVector(W=parts[0], L1=parts[1], L2=parts[2], La=parts[3])
    bounds = DesignBounds(
        L_min=parse_length(args.l_min, "--l-min"),
        L_max=parse_length(args.l_max, "--l-max"),
        W_min=parse_length(args.w_min, "--w-min"),
        W_max=parse_length(args.w_max, "--w-max"),
        La_min=parse_length(args.la_min, "--la-min"),
        La_max=parse_length(args.la_max, "--la-max"))
    task = GripperTask(power_cap=args.power_cap,
                       phase_increments=args.phase_increments,
                       ceiling=bounds.temperature_ceiling)

    outdir = output.ensure_outdir(args.out)
    output.write_manifest(outdir, {
        "tool": "thermofold", "version": __version__, "command": "optimize",
        "start_m": list(start.as_tuple()),
        "bounds_m": [bounds.W_min, bounds.W_max, bounds.L_min, bounds.L_max,
                     bounds.La_min, bounds.La_max],
        "max_steps": args.max_steps, "phase_increments": args.phase_increments,
        "power_cap_W": args.power_cap, "config": config.to_dict(),
        "out": args.out, "determinism": {"seedless": True, "rng": "none"},
    })

    executor = None
    if args.threads and args.threads > 1:
        executor = ThreadPoolExecutor(max_workers=args.threads)
    try:
        trace = optimize_gripper(start=start, bounds=bounds,
                                 max_cycles=args.max_steps, task=task,
                                 config=config, executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()

    output.write_optimization_trace(outdir, trace)
    best = trace.best
    print(f"optimize: {trace.simulator_calls} simulations, "
          f"best power {best.objective * 1e3:.3f} mW -> {outdir}/trace.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
