"""Command-line front end: ``cap-sweep``, ``simulate`` and ``pullin``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from fringe_mems import capmodel
from fringe_mems.config import ConfigError, RunConfig
from fringe_mems.csvio import cap_sweep_rows, write_cap_sweep, write_trace
from fringe_mems.errors import DomainError, ModelInconsistencyError
from fringe_mems.plant import static_pullin
from fringe_mems.simulator import FAILED, run_closed_loop, settle_metrics

log = logging.getLogger("fringe_mems")

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


def _load(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value", source="--set")
        key, value = item.split("=", 1)
        cfg.set(key.strip(), value)
    return cfg


def cmd_cap_sweep(args) -> int:
    cfg = _load(args)
    geom = cfg.geometry()
    if args.points < 2:
        raise ConfigError("--points must be at least 2", source="--points")
    gaps = capmodel.gap_grid(geom, args.points, args.ratio)
    try:
        rows = list(cap_sweep_rows(geom, gaps))
    except ModelInconsistencyError as exc:
        raise ConfigError(str(exc)) from exc
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        write_cap_sweep(fh, rows)
    i_min = min(range(len(rows)), key=lambda i: rows[i][4])
    c_ref = rows[0][2]
    gap_min, c_min = rows[i_min][0], rows[i_min][4]
    print(f"C_ser_min={c_min:.6g} gap_at_min={gap_min:.6g} rho_s_bar={capmodel.rho_s_bound(c_ref, c_min):.4f}")
    par = cfg.values["parasitics"]
    if par["c_ser_min_F"] is not None:
        rho = capmodel.rho_s_bound(cfg.c_ref(), par["c_ser_min_F"])
        print(f"tabulated C_ref={cfg.c_ref():.6g} C_ser_min={par['c_ser_min_F']:.6g} rho_s_bar={rho:.4f}")
    return 0


def _simulate_one(job):
    cfg_text, setpoint, out = job
    cfg = RunConfig.from_text(cfg_text)
    sc = cfg.scenario(setpoint)
    trace = run_closed_loop(sc)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        write_trace(fh, trace)
    if trace.status == FAILED:
        return setpoint, None, trace.status
    try:
        m = settle_metrics(trace, sc.trajectory)
    except DomainError:
        m = None
    return setpoint, m, trace.status


def _outputs(out: str, setpoints: list[float]) -> list[str]:
    if len(setpoints) == 1:
        return [out]
    if "{setpoint}" in out:
        return [out.format(setpoint=sp) for sp in setpoints]
    os.makedirs(out, exist_ok=True)
    return [os.path.join(out, f"trace_{sp:g}.csv") for sp in setpoints]


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if args.setpoints:
        try:
            setpoints = [float(v) for v in args.setpoints.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse --setpoints {args.setpoints!r}", source="--setpoints") from None
    elif args.setpoint is not None:
        setpoints = [args.setpoint]
    else:
        setpoints = [cfg.values["trajectory"]["y_f"]]
    for sp in setpoints:
        if not 0.0 <= sp <= 1.0:
            raise ConfigError(f"set-point {sp} outside [0, 1]", source="--setpoint")
        cfg.scenario(sp)
    jobs = [(cfg.to_text(), sp, out) for sp, out in zip(setpoints, _outputs(args.out, setpoints))]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_simulate_one, jobs))
    else:
        results = [_simulate_one(j) for j in jobs]
    code = 0
    for sp, m, status in results:
        if m is None:
            print(f"setpoint={sp:g} final_error=nan settle_time=nan status={status}")
        else:
            print(
                f"setpoint={sp:g} final_error={m.final_error:.3e} "
                f"settle_time={m.settle_time:.4g} status={status}"
            )
        if status == FAILED:
            code = EXIT_NUMERICAL
    return code


def cmd_pullin(args) -> int:
    cfg = _load(args)
    for rho in (0.0, cfg.values["controller"]["rho_s_bar"]):
        x_pi, u_pi = static_pullin(rho)
        print(f"rho_s={rho:.4f} x_pi={x_pi:.4f} u_pi={u_pi:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (INI sections)")
    common.add_argument(
        "--set", action="append", metavar="SECTION.KEY=VALUE", help="override a configuration key"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fringe-mems", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cap-sweep", parents=[common], help="capacitance models over a gap sweep")
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--ratio", type=float, default=1e3, help="sweep down to G0/ratio")
    p.set_defaults(func=cmd_cap_sweep)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop set-point run(s)")
    p.add_argument("--out", required=True, help="trace CSV; a directory or {setpoint} pattern for batches")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--setpoint", type=float)
    g.add_argument("--setpoints", help="comma-separated list")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pullin", parents=[common], help="static pull-in point with and without serial parasitic")
    p.set_defaults(func=cmd_pullin)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
