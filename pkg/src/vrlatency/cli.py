"""Command line entry point: ``vrlatency {evaluate,optimize,sweep}``.

Exit codes: 0 success, 1 validation failure, 2 runtime or I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import kernels
from .harness import (VARIANTS, HarnessIOError, default_config_path, emit_results,
                      format_results, load_config, parse_rho_grid, parse_variants,
                      run_sweep, symmetric_configuration)
from .latency import end_to_end_report
from .model import ModelError, SpectrumAllocation, UserConfiguration, validate_scenario
from .optimize import (equal_baseline, equal_downlink, equal_uplink, optimize_downlink,
                       optimize_uplink)

log = logging.getLogger("vrlatency")


def _common(p):
    p.add_argument("--config", help="INI config file (default: bundled reference.ini)")
    p.add_argument("--seed", type=int, help="evaluation seed")
    p.add_argument("--opt-seed", type=int, help="seed for the optimizer's SAA draws")
    p.add_argument("--samples", type=int, help="Monte-Carlo samples for evaluation")
    p.add_argument("--saa-t", type=int, help="SAA scenario count T")
    p.add_argument("--iters-k", type=int, help="subgradient iterations K")
    p.add_argument("--step", type=float, help="constant step size beta")
    p.add_argument("--step-scale", type=float, help="scale of the default step size")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json-lines"), default="csv")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def _users_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--rho", type=float, help="cross-type ratio of the symmetric configuration")
    g.add_argument("--counts", help="N11,N12,N21,N22")


def build_parser():
    parser = argparse.ArgumentParser(prog="vrlatency", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="latency report for one configuration")
    _common(ev)
    _users_args(ev)
    ev.add_argument("--variant", choices=VARIANTS[:4], default="equal-both")

    op = sub.add_parser("optimize", help="optimized allocations and the optimizer trace")
    _common(op)
    _users_args(op)

    sw = sub.add_parser("sweep", help="latency versus cross-type ratio")
    _common(sw)
    sw.add_argument("--rho-grid", help="start:stop:step or comma list")
    sw.add_argument("--variants", help=f"comma list from {', '.join(VARIANTS)}")
    sw.add_argument("--timestamp", default="", help="value for the timestamp column")
    return parser


def _settings(args):
    cfg, settings, spec = load_config(args.config or default_config_path())
    validate_scenario(cfg).raise_if_invalid()
    changes = {}
    if args.opt_seed is not None:
        changes["seed"] = args.opt_seed
    if args.saa_t is not None:
        changes["t_samples"] = args.saa_t
    if args.iters_k is not None:
        changes["k_iters"] = args.iters_k
    if args.step is not None:
        changes["step_size"] = args.step
    if args.step_scale is not None:
        changes["step_scale"] = args.step_scale
    settings = replace(settings, **changes)
    spec.opt_seed = settings.seed
    if args.seed is not None:
        spec.eval_seed = args.seed
    if args.samples is not None:
        spec.eval_samples = args.samples
    return cfg, settings, spec


def _users(args, cfg):
    if args.counts:
        users = UserConfiguration.from_flat(*(int(x) for x in args.counts.split(",")))
    else:
        users = symmetric_configuration(cfg.total_users, args.rho)
    users.validate(cfg).raise_if_invalid()
    return users


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise HarnessIOError(f"cannot write {path!r}: {exc}") from exc


def cmd_evaluate(args):
    cfg, settings, spec = _settings(args)
    users = _users(args, cfg)
    up = equal_uplink(users, cfg.bandwidth_up)
    if args.variant in ("optimal-up-only", "optimal-both"):
        up, _ = optimize_uplink(cfg, users, settings)
    if args.variant in ("optimal-dn-only", "optimal-both"):
        dn = optimize_downlink(users, cfg.bandwidth_dn)
    else:
        dn = equal_downlink(users, cfg.bandwidth_dn)
    alloc = SpectrumAllocation(up, dn)
    report = end_to_end_report(cfg, users, alloc, spec.eval_samples, spec.eval_seed,
                               threads=args.threads)
    rows = report.type_records(users)
    for row in rows:
        if "community" in row:
            i, j = row["community"] - 1, row["bs"] - 1
            row["w_up"] = float(alloc.up[i, j])
            row["w_dn"] = float(alloc.dn[i, j])
    # summary row carries every column so csv output stays rectangular
    keys = list(rows[0].keys()) + [k for k in rows[-1] if k not in rows[0]]
    rows = [{k: r.get(k) for k in keys} for r in rows]
    _write(format_results(rows, args.format), args.out)


def cmd_optimize(args):
    cfg, settings, spec = _settings(args)
    users = _users(args, cfg)
    up, trace = optimize_uplink(cfg, users, settings)
    dn = optimize_downlink(users, cfg.bandwidth_dn)
    base = equal_baseline(users, cfg)
    print(f"counts (N11,N12,N21,N22) = {users.flat()}", file=sys.stderr)
    print(f"step size = {trace.step_size:.6g}, best iterate = {trace.best_index} "
          f"of {len(trace.iterates) - 1}", file=sys.stderr)
    print(f"SAA objective: equal {trace.saa_objective[0]:.6g} s, "
          f"best {trace.saa_objective[trace.best_index]:.6g} s", file=sys.stderr)
    for name, grid, ref in (("uplink per user [Hz]", up, base.up),
                            ("downlink per group [Hz]", dn, base.dn)):
        print(name, file=sys.stderr)
        for i in range(2):
            for j in range(2):
                if users.counts[i][j]:
                    print(f"  ({i + 1},{j + 1}): {grid[i, j]:.6g} (equal {ref[i, j]:.6g})",
                          file=sys.stderr)
    _write(format_results(trace.records(), args.format), args.out)


def cmd_sweep(args):
    cfg, settings, spec = _settings(args)
    if args.rho_grid:
        spec.rho_grid = parse_rho_grid(args.rho_grid)
    if args.variants:
        spec.variants = parse_variants(args.variants)
    spec.timestamp = args.timestamp
    records = run_sweep(cfg, spec, settings, threads=args.threads,
                        progress=lambda rho: log.info("rho_c=%.4g done", rho))
    if args.out:
        emit_results(records, args.format, args.out)
    else:
        _write(format_results(records, args.format), None)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("kernel backend: %s", kernels.BACKEND)
    handler = {"evaluate": cmd_evaluate, "optimize": cmd_optimize, "sweep": cmd_sweep}[args.command]
    try:
        handler(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
