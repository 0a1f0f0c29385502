"""Command-line interface: ``mmsupg {run,compare,convergence,validate}``."""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import fileio, norms, problems
from .errors import InvalidArgumentError, MmsupgError
from .metric import MmpdeConfig
from .timestepper import METHODS, RunConfig, normalize_method, run_simulation

log = logging.getLogger("mmsupg")

DEFAULT_LEVELS = (8, 16, 32, 64, 128)   # N = 128 ... 32768 triangles
PROBLEMS = ("example1", "example2", "example3", "linear", "heat")

# config-file keys -> (destination, converter)
_CONFIG_KEYS = {
    "problem": str, "method": str, "n": int, "dt": float, "t_final": float, "T": float,
    "eps": float, "c": float, "flow": str, "theta": float, "gamma": float,
    "mmpde_substeps": int, "sub_steps": int, "init_adapt_cycles": int,
    "output_every": int, "out_dir": str, "alpha": float, "p": float,
    "move_fraction": float, "d_tau": float, "levels": str,
}
_ALIASES = {"T": "t_final", "sub_steps": "mmpde_substeps"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _add_common(p):
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--n", type=int, help="cells per side (N = 2 n^2 triangles)")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--c", type=float, help="layer steepness for example1")
    p.add_argument("--flow", choices=("constant", "time-dependent"))
    p.add_argument("--theta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--mmpde-substeps", dest="mmpde_substeps", type=int)
    p.add_argument("--init-adapt-cycles", dest="init_adapt_cycles", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--output-every", dest="output_every", type=int)
    p.add_argument("--no-timing", dest="no_timing", action="store_true",
                   help="write 0 for wall time so CSV output is reproducible")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="mmsupg", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    run = sub.add_parser("run", help="single method: VTK series and final norms")
    _add_common(run)
    run.add_argument("--method")
    cmp_ = sub.add_parser("compare", help="all four methods at one n, dt")
    _add_common(cmp_)
    conv = sub.add_parser("convergence", help="sweep mesh levels, CSV and slope")
    _add_common(conv)
    conv.add_argument("--method", help="method or comma list (default: all four)")
    conv.add_argument("--levels", help="comma-separated cells per side")
    sub.add_parser("validate", help="run the built-in oracle checks")
    return parser


def _defaults():
    return dict(problem="example1", method="MM-SUPG", n=16, dt=1e-3, t_final=0.5,
                eps=None, c=None, flow=None, theta=0.5, gamma=None, mmpde_substeps=None,
                init_adapt_cycles=5, output_every=0, out_dir="mmsupg-out", no_timing=False,
                alpha=None, p=None, move_fraction=None, d_tau=None, levels=None)


def resolve_options(args):
    """Merge defaults < config file < command-line flags."""
    opts = _defaults()
    if getattr(args, "config", None):
        for key, raw in fileio.read_config(args.config).items():
            if key not in _CONFIG_KEYS:
                raise InvalidArgumentError(f"unknown config key {key!r}")
            try:
                val = _CONFIG_KEYS[key](raw)
            except ValueError as exc:
                raise InvalidArgumentError(f"bad value for {key!r}: {raw!r}") from exc
            opts[_ALIASES.get(key, key)] = val
    for key, val in vars(args).items():
        if key in opts and val is not None and val is not False:
            opts[key] = val
    return opts


def _mmpde(opts):
    kw = {k: opts[k] for k in ("alpha", "p", "gamma", "move_fraction", "d_tau")
          if opts.get(k) is not None}
    if opts.get("mmpde_substeps") is not None:
        kw["sub_steps"] = opts["mmpde_substeps"]
    return MmpdeConfig(**kw)


def _problem(opts):
    return problems.by_name(opts["problem"], eps=opts["eps"], c=opts["c"], flow=opts["flow"])


def _run_config(opts, method, n):
    return RunConfig(method=method, n=n, dt=opts["dt"], T=opts["t_final"],
                     theta=opts["theta"], mmpde=_mmpde(opts),
                     output_every=opts["output_every"],
                     init_adapt_cycles=opts["init_adapt_cycles"])


def _one(opts, method, n):
    """Run one simulation and return an ExperimentResult (picklable for pools)."""
    prob = _problem(opts)
    t0 = time.perf_counter()
    res = run_simulation(prob, _run_config(opts, method, n))
    rep = norms.report(res.final.mesh, res.final.u, prob, res.final.t)
    return fileio.ExperimentResult(method, res.final.mesh.n_elements, opts["dt"],
                                   prob.eps, rep.h1_semi, time.perf_counter() - t0)


def _workers():
    raw = os.environ.get("MM_SUPG_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"MM_SUPG_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise InvalidArgumentError("MM_SUPG_THREADS must be >= 1")
    return n


def _run_many(opts, jobs):
    workers = min(_workers(), len(jobs))
    if workers <= 1:
        return [_one(opts, m, n) for m, n in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_one, opts, m, n) for m, n in jobs]
        return [f.result() for f in futures]


def loglog_slope(h, err):
    """Least-squares slope of log(err) against log(h)."""
    h, err = np.asarray(h, float), np.asarray(err, float)
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def cmd_run(opts, out):
    prob = _problem(opts)
    method = normalize_method(opts["method"])
    cfg = _run_config(opts, method, opts["n"])
    fileio.ensure_dir(opts["out_dir"])
    tag = method.lower()

    def snapshot(state):
        path = os.path.join(opts["out_dir"], f"{opts['problem']}_{tag}_{state.step:06d}.vtk")
        fileio.write_vtk(state.mesh, state.u, path)

    t0 = time.perf_counter()
    res = run_simulation(prob, cfg, observer=snapshot)
    elapsed = time.perf_counter() - t0
    st = res.final
    rep = norms.report(st.mesh, st.u, prob, st.t)
    summary = {
        "problem": opts["problem"], "method": method, "N": st.mesh.n_elements,
        "dt": float(cfg.dt), "t_final": float(st.t), "eps": float(prob.eps),
        "steps": res.steps, "h1": rep.h1_semi, "l2": rep.l2,
        "against_exact": rep.against_exact, "max_abs_u": res.max_abs,
        "seconds": elapsed,
    }
    path = fileio.write_summary(
        summary, os.path.join(opts["out_dir"], f"{opts['problem']}_{tag}_summary.txt"))
    for k, v in summary.items():
        print(f"{k}: {v}", file=out)
    print(f"summary: {path}", file=out)
    return 0


def cmd_compare(opts, out):
    results = _run_many(opts, [(m, opts["n"]) for m in METHODS])
    fileio.ensure_dir(opts["out_dir"])
    path = fileio.write_csv(results, os.path.join(opts["out_dir"], "compare.csv"),
                            timing=not opts["no_timing"])
    for r in fileio.sort_results(results):
        print(f"{r.method:8s} N={r.N:6d} h1={r.h1:.6g} ({r.seconds:.1f}s)", file=out)
    print(f"csv: {path}", file=out)
    return 0


def _parse_levels(text):
    try:
        levels = sorted({int(s) for s in str(text).split(",") if s.strip()})
    except ValueError:
        raise InvalidArgumentError(f"bad --levels value {text!r}")
    if not levels or min(levels) < 1:
        raise InvalidArgumentError("--levels needs positive integers")
    return levels


def cmd_convergence(opts, out):
    levels = _parse_levels(opts["levels"]) if opts.get("levels") else list(DEFAULT_LEVELS)
    method_arg = opts.get("method_list")
    methods = ([normalize_method(m) for m in method_arg.split(",")]
               if method_arg else list(METHODS))
    results = _run_many(opts, [(m, n) for m in methods for n in levels])
    fileio.ensure_dir(opts["out_dir"])
    path = fileio.write_csv(results, os.path.join(opts["out_dir"], "convergence.csv"),
                            timing=not opts["no_timing"])
    for m in methods:
        rows = sorted((r for r in results if r.method == m), key=lambda r: r.N)
        for r in rows:
            print(f"{m:8s} N={r.N:6d} h1={r.h1:.6g}", file=out)
        if len(rows) >= 2:
            h = [1.0 / math.sqrt(r.N / 2.0) for r in rows]
            print(f"{m:8s} slope={loglog_slope(h, [r.h1 for r in rows]):.3f}", file=out)
    print(f"csv: {path}", file=out)
    return 0


def cmd_validate(out):
    from .validation import run_all
    ok = True
    for name, passed, detail in run_all():
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}", file=out)
    return 0 if ok else 1


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False)
                            else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        if args.command == "validate":
            return cmd_validate(out)
        # --method is a list for `convergence`, a single name for `run`
        method = getattr(args, "method", None)
        if args.command == "convergence":
            args.method = None
        opts = resolve_options(args)
        if args.command == "convergence":
            opts["method_list"] = method
        if args.command == "run":
            return cmd_run(opts, out)
        if args.command == "compare":
            return cmd_compare(opts, out)
        return cmd_convergence(opts, out)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 2
    except InvalidArgumentError as exc:
        print(f"mmsupg: error: {exc}", file=sys.stderr)
        return 2
    except (MmsupgError, ArithmeticError) as exc:
        print(f"mmsupg: solver failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"mmsupg: I/O failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
