"""Command-line entry point.

Subcommands: evolve, jko-study, sweep, distance, kernel-info, check.
Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, dynamics, experiments, fieldio, jko, kernels, metric, selftest
from .config import build_initial_state, build_params, load_config
from .errors import ConfigError, GcflowError

SCHEMA_VERSION = "diagnostics-ndjson/1"
FIELD_FORMAT = "GCF1"


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def _open_out(out_dir: str, name: str):
    os.makedirs(out_dir, exist_ok=True)
    return open(os.path.join(out_dir, name), "w")


def cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    params = build_params(cfg)
    state = build_initial_state(cfg, params)
    if cfg.h is not None:
        h = cfg.h
    else:
        k_head = 2.0 * np.pi * (cfg.M // 2 - 1) / cfg.L
        h = dynamics.default_h(params, experiments.linearized_rate(k_head, params))
    sink = _open_out(cfg.out_dir, "diag.ndjson") if not args.stdout else sys.stdout

    def emit(step, state, rec):
        if rec is not None:
            print(rec.to_json(), file=sink)

    try:
        if cfg.integrator == "jko":
            traj = jko.jko_evolve(state, cfg.T, cfg.jko, stride=cfg.stride,
                                  observers=[emit])
        else:
            traj = dynamics.evolve(
                state, cfg.T, h, integrator=cfg.integrator, stride=cfg.stride,
                observers=[emit],
            )
    finally:
        if sink is not sys.stdout:
            sink.close()
    if traj.error is not None:
        kind, _, msg = traj.error.partition(": ")
        return _fail(kind, msg, 1)
    final = traj.records[-1]
    print(json.dumps({"t": final.t, "gap": final.gap, "mass": final.mass,
                      "records": len(traj.records)}))
    return 0


def cmd_jko_study(args) -> int:
    cfg = load_config(args.config)
    params = build_params(cfg)
    state = build_initial_state(cfg, params)
    h_list = tuple(float(s) for s in args.h_list.split(","))
    report = experiments.jko_convergence_study(state, cfg.T, h_list,
                                               inner_tol=cfg.jko.inner_tol)
    print(json.dumps({
        "h": [p.h for p in report.points],
        "endpoint_d0": [p.endpoint_d0 for p in report.points],
        "endpoint_d1": [p.endpoint_d1 for p in report.points],
        "sup_d0": [p.sup_d0 for p in report.points],
        "order_d0": report.order_d0,
        "h_ref": report.h_ref,
        "b0": report.b0,
    }))
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if not args.axis.startswith("L="):
        raise ConfigError("--axis", "expected L=<comma-separated values>")
    L_values = tuple(float(s) for s in args.axis[2:].split(","))
    if cfg.kernel.family != "smoothed_indicator":
        raise ConfigError("kernel.family", "sweep supports smoothed_indicator")
    kernel_kw = {
        "amplitude": cfg.kernel.amplitude,
        "radius": cfg.kernel.radius,
        "mollifier_width": cfg.kernel.mollifier_width,
    }
    h = cfg.h if cfg.h is not None else 2e-3
    report = experiments.volume_sweep(
        L_values, cfg.M, kernel_kw, cfg.kappa, cfg.m0, cfg.T, h,
        seed=cfg.seed, amp=cfg.initial.amp, k_c=cfg.initial.k_c, d=cfg.d,
    )
    print(json.dumps(report.to_dict()))
    return 0


def cmd_distance(args) -> int:
    cfg = load_config(args.config)
    params = build_params(cfg)
    na = fieldio.load_binary(args.field_a) if args.field_a.endswith(".bin") \
        else fieldio.load_csv(args.field_a)[0]
    nb = fieldio.load_binary(args.field_b) if args.field_b.endswith(".bin") \
        else fieldio.load_csv(args.field_b)[0]
    h = cfg.h if cfg.h is not None else 1e-3
    d_a = metric.approx_distance(na, nb, h, params)
    rate = metric.RealField(params.grid, (nb.values - na.values) / h)
    _, rep = metric.solve_driving_potential(na, rate, params)
    path = metric.path_distance_upper(na, nb, args.segments, params)
    print(json.dumps({
        "d_a": d_a,
        "path_upper_sq": path.value_sq,
        "segments": path.segments,
        "solver": {"iterations": rep.iterations,
                   "relative_residual": rep.relative_residual},
    }))
    return 0


def cmd_kernel_info(args) -> int:
    cfg = load_config(args.config)
    params = build_params(cfg)
    print(json.dumps(kernels.stats_json(params.kernel)))
    return 0


def cmd_check(args) -> int:
    results = selftest.run_checks()
    ok = True
    for name, passed, detail in results:
        status = "ok" if passed else "FAIL"
        print(f"{status:4s}  {name:24s}  {detail}")
        ok = ok and passed
    print(f"{sum(p for _, p, _ in results)}/{len(results)} checks passed")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gcflow")
    p.add_argument("--version", action="version",
                   version=f"gcflow {__version__} "
                           f"(schema {SCHEMA_VERSION}, fields {FIELD_FORMAT})")
    p.add_argument("--jobs", type=int, default=os.cpu_count(),
                   help="parallelism degree for sweeps (default: logical cores)")
    sub = p.add_subparsers(dest="command")

    sp = sub.add_parser("evolve", help="run one trajectory")
    sp.add_argument("--config", required=True)
    sp.add_argument("--stdout", action="store_true",
                    help="write NDJSON diagnostics to stdout instead of out_dir")
    sp.set_defaults(fn=cmd_evolve)

    sp = sub.add_parser("jko-study", help="h-refinement study of the variational integrator")
    sp.add_argument("--config", required=True)
    sp.add_argument("--h-list", default="4e-3,2e-3,1e-3")
    sp.set_defaults(fn=cmd_jko_study)

    sp = sub.add_parser("sweep", help="volume sweep experiment")
    sp.add_argument("--config", required=True)
    sp.add_argument("--axis", default="L=1,2,4")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("distance", help="metric between two stored fields")
    sp.add_argument("field_a")
    sp.add_argument("field_b")
    sp.add_argument("--config", required=True)
    sp.add_argument("--segments", type=int, default=16)
    sp.set_defaults(fn=cmd_distance)

    sp = sub.add_parser("kernel-info", help="print kernel statistics as JSON")
    sp.add_argument("--config", required=True)
    sp.set_defaults(fn=cmd_kernel_info)

    sp = sub.add_parser("check", help="run the self-test battery")
    sp.set_defaults(fn=cmd_check)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(exc.code or 0) and 2
    if getattr(args, "command", None) is None:
        return _fail("UsageError", "no subcommand given", 2)
    try:
        return args.fn(args)
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), 2)
    except GcflowError as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    except (np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
