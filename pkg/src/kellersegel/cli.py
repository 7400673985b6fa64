"""Command-line front end.

Subcommands: ``run``, ``converge``, ``sweep``, ``probe-blowup``, ``regime``.
Exit status is 0 on success, 1 for invalid input and 2 for runtime failures.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .diagnostics import regime_report
from .errors import BlowupDetected, RuntimeFailure, ValidationError
from .experiments import blowup_probe, property_sweep, temporal_convergence
from .io import CsvSink, write_snapshot
from .scheme import run

log = logging.getLogger("kellersegel")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _param(text):
    name, sep, values = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=v1,v2,..., got {text!r}")
    return name.strip(), _floats(values)


def _outdir(args, output):
    out = Path(args.out or output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _figure(args, func, report, path):
    if args.no_figures:
        return
    from . import plotting

    getattr(plotting, func)(report, path)
    log.info("wrote %s", path)


def cmd_run(args):
    cfg, output = load_config(args.config)
    out = _outdir(args, output)
    every = output.snapshot_every

    def snapshot(state):
        last = state.n == cfg.n_steps
        if last or (every and state.n % every == 0):
            write_snapshot(state.rho, state.t, out / f"rho_{state.n:06d}.ksf")
            write_snapshot(state.c, state.t, out / f"c_{state.n:06d}.ksf")

    with CsvSink(out / "diag.csv") as sink:
        try:
            result = run(cfg, sink, observer=snapshot)
        except BlowupDetected:
            _figure(args, "plot_diagnostics", sink.records, out / "diagnostics.png")
            raise
    _figure(args, "plot_diagnostics", result.records, out / "diagnostics.png")
    r = result.records[-1]
    print(f"finished {cfg.n_steps} steps: t={r.t:.6g} mass={r.mass:.15g} "
          f"min_rho={r.min_rho:.6g} max_rho={r.max_rho:.6g}")
    return 0


def cmd_converge(args):
    cfg, output = load_config(args.config)
    out = _outdir(args, output)
    report = temporal_convergence(cfg, args.dts, args.p)
    lines = ["dt,p,err_rho,err_c"]
    for p in report.p_list:
        for i, dt in enumerate(report.dts):
            lines.append(f"{dt!r},{p:g},{report.errors[(p, 'rho')][i]!r},{report.errors[(p, 'c')][i]!r}")
    lines.append(f"# T={report.T!r} reference_dt={report.dt_ref!r}")
    for p in report.p_list:
        if report.fitted_orders:
            lines.append(f"# fitted_order p={p:g} rho={report.fitted_orders[(p, 'rho')]!r} "
                         f"c={report.fitted_orders[(p, 'c')]!r}")
    (out / "convergence.csv").write_text("\n".join(lines) + "\n")
    _figure(args, "plot_convergence", report, out / "convergence.png")
    for line in lines[-len(report.p_list):]:
        print(line)
    return 0


def cmd_sweep(args):
    cfg, output = load_config(args.config)
    out = _outdir(args, output)
    grid = dict(args.param)
    report = property_sweep(cfg, grid)
    names = list(grid)
    cols = names + ["passed", "mass_drift", "min_rho_rel", "max_d_energy_rel",
                    "min_e8_slack_rel", "lp_growth", "error"]
    lines = [",".join(cols)]
    for row in report.rows:
        vals = [repr(float(row.point[n])) for n in names]
        vals += [str(int(row.passed)), repr(row.mass_drift), repr(row.min_rho_rel),
                 repr(row.max_d_energy_rel), repr(row.min_e8_slack_rel), repr(row.lp_growth),
                 '"' + row.error.replace('"', "'") + '"' if row.error else ""]
        lines.append(",".join(vals))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    if report.rows:
        _figure(args, "plot_sweep", report, out / "sweep.png")
    print(f"{sum(r.passed for r in report.rows)}/{len(report.rows)} sweep points passed")
    return 0


def cmd_probe(args):
    cfg, output = load_config(args.config)
    out = _outdir(args, output)
    report = blowup_probe(cfg, args.scales)
    summary = ["scale,mass,blew_up,t_blowup,initial_max,final_max"]
    trace = ["scale,time,max_rho"]
    for row in report.rows:
        t_b = "" if row.t_blowup is None else repr(row.t_blowup)
        summary.append(f"{row.scale!r},{row.mass!r},{int(row.blew_up)},{t_b},"
                       f"{row.initial_max!r},{row.final_max!r}")
        trace += [f"{row.scale!r},{t!r},{m!r}" for t, m in row.trace]
    (out / "probe.csv").write_text("\n".join(summary) + "\n")
    (out / "probe_trace.csv").write_text("\n".join(trace) + "\n")
    if report.rows:
        _figure(args, "plot_probe", report, out / "probe.png")
    print(f"threshold 4*pi/(chi*gamma) = {report.threshold:.12g}")
    for line in summary[1:]:
        print(line)
    return 0


def cmd_regime(args):
    cfg, _ = load_config(args.config)
    report = regime_report(cfg.params, cfg.initial_rho.build(cfg.grid))
    for line in report.lines():
        print(line)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="kellersegel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.set_defaults(func=func)
        return p

    def with_out(p):
        p.add_argument("--out", help="output directory (defaults to output.dir)")
        p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
        return p

    with_out(add("run", cmd_run, "run one simulation"))
    p = with_out(add("converge", cmd_converge, "temporal convergence study"))
    p.add_argument("--dts", type=_floats, required=True, help="comma-separated time steps")
    p.add_argument("--p", type=_floats, default=[2.0, 4.0], help="comma-separated exponents")
    p = with_out(add("sweep", cmd_sweep, "property sweep over model parameters"))
    p.add_argument("--param", type=_param, action="append", default=[],
                   help="NAME=v1,v2,... (repeatable)")
    p = with_out(add("probe-blowup", cmd_probe, "blow-up probe across mass scales"))
    p.add_argument("--scales", type=_floats, required=True,
                   help="comma-separated multiples of 4*pi/(chi*gamma)")
    add("regime", cmd_regime, "report the small-mass conditions")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
