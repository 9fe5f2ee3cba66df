"""``peakfit`` command line: fit, extract, simulate, bench.

Exit codes: 0 success, 1 input or configuration error, 2 EM stopped at
``--maxit`` without converging.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .bench import DEFAULT_SIZES, run_benchmark
from .datasets import available, load_dataset, read_csv_column
from .em import EMConfig, fit_two_component, fit_with_dual_init, prepare
from .errors import PeakfitError
from .sequential import SequentialConfig, fit_sequential
from .simulate import GRAMMAR_HINT, parse_mixture, sample_mixture

REPORT_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1); 2 is reserved for non-convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _resolve_seed(flag):
    if flag is not None:
        return flag
    env = os.environ.get("PEAKFIT_SEED")
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise PeakfitError(f"PEAKFIT_SEED must be an integer, got {env!r}") from None


def _load_input(args):
    if args.dataset and args.input:
        raise PeakfitError("give either an input CSV or --dataset, not both")
    if args.dataset:
        ds = load_dataset(args.dataset, rainfall_transform=args.rainfall_transform)
        return ds.values, f"dataset:{ds.name}", ds.transform
    if not args.input:
        raise PeakfitError(f"no input: give a CSV path or --dataset ({', '.join(available())})")
    return read_csv_column(args.input, args.column), args.input, "none"


def fingerprint(values) -> dict:
    y = np.ascontiguousarray(values, dtype="<f8")
    return {"n": int(y.size), "min": float(y.min()), "max": float(y.max()),
            "sha256": hashlib.sha256(y.tobytes()).hexdigest()}


def _em_config(args, seed) -> EMConfig:
    return EMConfig(h=args.h, grid_size=args.grid_size, tol=args.tol, maxit=args.maxit, seed=seed)


def _config_echo(ctx, cfg: EMConfig, **extra) -> dict:
    return {"h": ctx.bandwidth.h, "grid_size": ctx.grid.m, "delta": ctx.grid.delta,
            "grid_x0": ctx.grid.x0, "tol": cfg.tol, "maxit": cfg.maxit, "seed": cfg.seed, **extra}


def _write_density(path, grid, background, mixture, extra=None):
    cols = {"x": grid.nodes, "background": background, "mixture": mixture, **(extra or {})}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([repr(float(v)) for v in row])


def _emit(report: dict, out):
    text = json.dumps(report, indent=2, allow_nan=False)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _base_report(command, argv, y, source, transform):
    return {"report_version": REPORT_VERSION, "tool_version": __version__, "command": command,
            "argv": list(argv), "input": {"source": source, "transform": transform, **fingerprint(y)}}


def cmd_fit(args, argv) -> int:
    y, source, transform = _load_input(args)
    cfg = _em_config(args, _resolve_seed(args.seed))
    ctx = prepare(y, cfg)
    fit = fit_with_dual_init(y, cfg) if args.dual_init else fit_two_component(y, cfg, _ctx=ctx)
    report = _base_report("fit", argv, y, source, transform)
    report["config"] = _config_echo(ctx, cfg, dual_init=bool(args.dual_init))
    report["result"] = {
        "kind": "two_component", "pi0": fit.pi0, "mu": fit.mu, "sigma": fit.sigma,
        "iterations": fit.iterations, "converged": bool(fit.converged), "loglik": fit.loglik,
        "init": fit.init,
    }
    if args.dump_density:
        bg = fit.background.values
        mix = fit.pi0 * fit.theta.pdf(fit.grid.nodes) + (1 - fit.pi0) * bg
        _write_density(args.dump_density, fit.grid, bg, mix,
                       {"parametric": fit.pi0 * fit.theta.pdf(fit.grid.nodes)})
        report["density_dump"] = args.dump_density
    _emit(report, args.out)
    return EXIT_OK if fit.converged else EXIT_NOT_CONVERGED


def cmd_extract(args, argv) -> int:
    y, source, transform = _load_input(args)
    cfg = _em_config(args, _resolve_seed(args.seed))
    ctx = prepare(y, cfg)
    overlap = args.overlap_stop if args.overlap_stop > 0 else None
    scfg = SequentialConfig(em=cfg, alpha_stop=args.alpha_stop, overlap_stop=overlap)
    res = fit_sequential(y, args.max_stages, scfg)
    report = _base_report("extract", argv, y, source, transform)
    report["config"] = _config_echo(ctx, cfg, max_stages=args.max_stages, alpha_stop=args.alpha_stop,
                                    overlap_stop=args.overlap_stop)
    stages = [{"stage": s.stage, "mu": s.theta.mu, "sigma": s.theta.sigma,
               "alpha_within_stage": s.alpha_within_stage, "alpha_global": s.alpha_global,
               "iterations": s.iterations, "converged": bool(s.converged),
               "loglik": float(s.loglik_trace[-1]) if s.loglik_trace.size else 0.0}
              for s in res.stages]
    report["result"] = {"kind": "sequential", "stop_reason": res.stop_reason.value,
                        "message": res.message, "total_parametric_mass": res.total_parametric_mass,
                        "stages": stages}
    if args.dump_density:
        x = ctx.grid.nodes
        bg = res.stages[-1].background.values
        parts = {f"peak{s.stage}": s.alpha_global * s.theta.pdf(x) for s in res.stages}
        mix = (1 - res.total_parametric_mass) * bg + sum(parts.values())
        _write_density(args.dump_density, ctx.grid, bg, mix, parts)
        report["density_dump"] = args.dump_density
    _emit(report, args.out)
    return EXIT_OK if all(s["converged"] for s in stages) else EXIT_NOT_CONVERGED


def cmd_simulate(args, argv) -> int:
    spec = parse_mixture(args.mix)
    if args.n < 1:
        raise PeakfitError("--n must be at least 1")
    y = sample_mixture(spec, args.n, _resolve_seed(args.seed))
    lines = ["y"] + [repr(float(v)) for v in y]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_sizes(text):
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise PeakfitError(f"--sizes must be comma-separated integers, got {text!r}") from None
    if not sizes or min(sizes) < 10:
        raise PeakfitError("--sizes needs integers >= 10")
    return sizes


def cmd_bench(args, argv) -> int:
    sizes = _parse_sizes(args.sizes) if args.sizes else list(DEFAULT_SIZES)
    spec = parse_mixture(args.mix) if args.mix else None
    cfg = EMConfig(h=args.h, grid_size=args.grid_size, tol=args.tol, maxit=args.maxit,
                   seed=_resolve_seed(args.seed))
    if args.repeats < 3:
        raise PeakfitError("--repeats must be at least 3")
    rep = run_benchmark(sizes, spec, cfg, repeats=args.repeats, parallel=args.parallel)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rep.to_csv())
    else:
        sys.stdout.write(rep.to_csv())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json() + "\n")
    for r in rep.rows:
        if r.error:
            print(f"warning: n={r.n}: {r.error}", file=sys.stderr)
    return EXIT_OK


def _add_em_flags(p):
    p.add_argument("--h", type=float, default=None, help="KDE bandwidth (default: Silverman's rule)")
    p.add_argument("--grid-size", type=int, default=None, help="grid nodes M (default: automatic)")
    p.add_argument("--tol", type=float, default=1e-6, help="stop when |change in log-lik| < tol")
    p.add_argument("--maxit", type=int, default=500)
    p.add_argument("--seed", type=int, default=None, help="seed (fallback: $PEAKFIT_SEED, then 0)")


def _add_input_flags(p):
    p.add_argument("input", nargs="?", help="CSV file, one value per row")
    p.add_argument("--dataset", choices=available(), help="use a bundled dataset instead")
    p.add_argument("--column", type=int, default=0, help="0-based CSV column (default 0)")
    p.add_argument("--rainfall-transform", default="log1p",
                   help="rainfall scale: log1p, identity or scale:<c> (default log1p)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--dump-density", metavar="CSV",
                   help="write grid nodes, background and fitted mixture values")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="peakfit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit the dominant peak")
    _add_input_flags(p)
    _add_em_flags(p)
    p.add_argument("--dual-init", action=argparse.BooleanOptionalAction, default=True,
                   help="run EM from both 2-means clusters and keep the larger weight (default on)")

    p = sub.add_parser("extract", help="extract several peaks one stage at a time")
    _add_input_flags(p)
    _add_em_flags(p)
    p.add_argument("--max-stages", type=int, default=3)
    p.add_argument("--alpha-stop", type=float, default=0.05,
                   help="drop a stage whose within-stage weight is below this")
    p.add_argument("--overlap-stop", type=float, default=2.0,
                   help="drop a stage centred within this many sds of an earlier peak (0 disables)")

    p = sub.add_parser("simulate", help="draw a CSV sample from a mixture",
                       epilog=GRAMMAR_HINT)
    p.add_argument("--mix", required=True, help='e.g. "0.6:N(10,1),0.4:N(15,1)"')
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")

    p = sub.add_parser("bench", help="time FFT EM against exact EM")
    _add_em_flags(p)
    p.add_argument("--sizes", help=f"comma-separated n values (default {','.join(map(str, DEFAULT_SIZES))})")
    p.add_argument("--mix", help="mixture to sample (default 0.6:N(10,1),0.4:N(15,1))")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--parallel", action="store_true", help="run sizes in separate processes")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--json", help="also write the report as JSON here")
    return parser


_COMMANDS = {"fit": cmd_fit, "extract": cmd_extract, "simulate": cmd_simulate, "bench": cmd_bench}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, argv)
    except (PeakfitError, OSError) as exc:
        print(f"peakfit: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
