"""Command-line entry point.

Subcommands: simulate, identify, bounds, bench, summarize.  Exit codes:
0 success, 2 flagged-failure rate above threshold, 64 usage error,
65 data-format error.  Relative output paths resolve against
$PARSIMID_OUT_DIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from .bounds import BoundInputs, UniversalConstants, bound_report
from .exceptions import DataFormatError, ParsimIdError
from .lti import (
    InputSpec,
    StateSpaceModel,
    armax_to_ss,
    read_trajectory_csv,
    simulate,
    write_trajectory_csv,
)
from .pipeline import identify
from .realization import suggest_order

EXIT_OK = 0
EXIT_FLAGGED = 2
EXIT_USAGE = 64
EXIT_DATA = 65


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _out_path(path: str) -> str:
    base = os.environ.get("PARSIMID_OUT_DIR")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _load_model(args) -> StateSpaceModel:
    if getattr(args, "model", None):
        with open(args.model) as fh:
            return StateSpaceModel.from_json_dict(json.load(fh))
    return armax_to_ss(args.armax_a, args.armax_b, args.armax_c,
                       args.sigma_e2)


def _add_model_flags(p: _Parser):
    p.add_argument("--model", help="JSON file with A, B, C, K, sigma_e_half")
    p.add_argument("--armax-a", type=float, default=-0.7)
    p.add_argument("--armax-b", type=float, default=1.0)
    p.add_argument("--armax-c", type=float, default=0.5)
    p.add_argument("--sigma-e2", dest="sigma_e2", type=float, default=4.0)


def _add_input_flags(p: _Parser):
    p.add_argument("--input", choices=("white", "colored"), default="white")
    p.add_argument("--sigma-u", dest="sigma_u", type=float, default=1.0)
    p.add_argument("--gain", type=float, default=bench_mod.PAPER_COLORED_GAIN)
    p.add_argument("--a1", type=float, default=bench_mod.PAPER_COLORED_A1)
    p.add_argument("--a2", type=float, default=bench_mod.PAPER_COLORED_A2)


def _input_spec(args, seed: int) -> InputSpec:
    if args.input == "white":
        return InputSpec.white(args.sigma_u, seed)
    return InputSpec.colored_ar2(args.gain, args.a1, args.a2, seed)


def build_parser() -> _Parser:
    parser = _Parser(prog="parsimid")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate the benchmark or a model")
    _add_model_flags(p_sim)
    _add_input_flags(p_sim)
    p_sim.add_argument("--nbar", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)

    p_id = sub.add_parser("identify", help="run the identification pipeline")
    p_id.add_argument("trajectory", help="trajectory CSV")
    p_id.add_argument("--p", type=int, required=True)
    p_id.add_argument("--f", type=int, required=True)
    p_id.add_argument("--order", type=int, required=True)
    p_id.add_argument("--weighting", default="moesp",
                      choices=("okid", "n4sid", "moesp", "ivm", "cva"))
    p_id.add_argument("--realization", default="moesp",
                      choices=("moesp", "cva"))
    p_id.add_argument("--allow-rank-deficient", action="store_true",
                      help="replace the PE gate by a minimum-norm solve "
                           "(noise-free records)")
    p_id.add_argument("--bounds", action="store_true",
                      help="print the oracle bound report (needs --true-model)")
    p_id.add_argument("--true-model",
                      help="JSON file with the true model for oracle bounds")
    p_id.add_argument("--delta", type=float, default=0.05)
    p_id.add_argument("--sigma-u", dest="sigma_u", type=float, default=1.0)

    p_b = sub.add_parser("bounds", help="evaluate finite-sample quantities")
    _add_model_flags(p_b)
    p_b.add_argument("--p", type=int, required=True)
    p_b.add_argument("--f", type=int, required=True)
    p_b.add_argument("--i", type=int, default=None,
                     help="regression block index (default: f)")
    p_b.add_argument("--n", type=int, default=None,
                     help="Hankel column count")
    p_b.add_argument("--nbar", type=int, default=None,
                     help="record length (alternative to --n)")
    p_b.add_argument("--delta", type=float, default=0.05)
    p_b.add_argument("--beta", type=float, default=None)
    p_b.add_argument("--sigma-u", dest="sigma_u", type=float, default=1.0)
    p_b.add_argument("--csv", help="also write the report as key,value CSV")

    p_bench = sub.add_parser("bench", help="run a Monte-Carlo experiment")
    p_bench.add_argument("--experiment", choices=bench_mod.EXPERIMENTS)
    p_bench.add_argument("--config", help="key = value config file")
    p_bench.add_argument("--nbar-grid")
    p_bench.add_argument("--p-grid")
    p_bench.add_argument("--f", type=int)
    p_bench.add_argument("--order", type=int)
    p_bench.add_argument("--weightings")
    p_bench.add_argument("--realizations")
    p_bench.add_argument("--trials", type=int)
    p_bench.add_argument("--seed", type=int)
    p_bench.add_argument("--input", choices=("white", "colored"))
    p_bench.add_argument("--sigma-u", dest="sigma_u", type=float)
    p_bench.add_argument("--jobs", type=int)
    p_bench.add_argument("--timing", action="store_true")
    p_bench.add_argument("--max-failure-rate", type=float)
    p_bench.add_argument("--out")

    p_sum = sub.add_parser("summarize", help="aggregate a trial CSV")
    p_sum.add_argument("input")
    p_sum.add_argument("output")
    return parser


def _fmt_complex(z: complex) -> str:
    if abs(z.imag) < 1e-14:
        return format(z.real, ".10g")
    return f"{z.real:.10g}{z.imag:+.10g}j"


def _cmd_simulate(args) -> int:
    model = _load_model(args)
    traj = simulate(model, args.nbar, _input_spec(args, args.seed),
                    args.seed + bench_mod.NOISE_SEED_OFFSET)
    out = _out_path(args.out)
    write_trajectory_csv(traj, out)
    print(f"wrote {traj.nbar} samples to {out}")
    return EXIT_OK


def _cmd_identify(args) -> int:
    traj = read_trajectory_csv(args.trajectory)
    rank_tol = 0.0 if args.allow_rank_deficient else None
    result = identify(traj, p=args.p, f=args.f, n_x=args.order,
                      weighting=args.weighting,
                      realizations=(args.realization,), rank_tol=rank_tol)
    est = result.systems[args.realization]
    eigs = sorted(est.eigenvalues(), key=lambda z: (z.real, z.imag))
    mk = est.markov(5)
    lines = [
        f"order          {args.order}",
        f"weighting      {args.weighting}",
        f"realization    {args.realization}",
        "eigenvalues    " + " ".join(_fmt_complex(z) for z in eigs),
        "C              " + " ".join(format(v, ".10g")
                                     for v in np.ravel(est.c)),
        "markov[0:5]    " + " ".join(format(v, ".10g")
                                     for v in mk.ravel()),
        "singular_vals  " + " ".join(
            format(v, ".10g") for v in result.balanced.singular_values),
    ]
    lines.append(f"order_gap_hint {suggest_order(result.balanced.singular_values)}"
                 " (diagnostic only; --order is always used)")
    print("\n".join(lines))
    if args.bounds:
        if not args.true_model:
            raise DataFormatError("--bounds requires --true-model")
        with open(args.true_model) as fh:
            model = StateSpaceModel.from_json_dict(json.load(fh))
        inputs = BoundInputs(model=model, sigma_u=args.sigma_u, p=args.p,
                             f=args.f, i=args.f, n=result.bundle.n,
                             delta=args.delta)
        report = bound_report(inputs, estimate=result.estimate,
                              pair=result.pair, bundle=result.bundle)
        print()
        print("\n".join(report.lines()))
    return EXIT_OK


def _cmd_bounds(args) -> int:
    model = _load_model(args)
    if (args.n is None) == (args.nbar is None):
        raise DataFormatError("provide exactly one of --n and --nbar")
    i = args.f if args.i is None else args.i
    n = args.n if args.n is not None else args.nbar - args.p - args.f + 1
    inputs = BoundInputs(model=model, sigma_u=args.sigma_u, p=args.p,
                         f=args.f, i=i, n=n, delta=args.delta,
                         beta=args.beta, constants=UniversalConstants())
    report = bound_report(inputs)
    print("\n".join(report.lines()))
    if args.csv:
        path = _out_path(args.csv)
        with open(path, "w", newline="") as fh:
            fh.write("key,value\n")
            for key, val in report.csv_rows():
                fh.write(f"{key},{val}\n")
        print(f"\nwrote {path}")
    return EXIT_OK


_BENCH_OVERRIDES = {
    "experiment": ("experiment", str),
    "nbar_grid": ("nbar_grid", lambda s: tuple(int(v) for v in s.split(","))),
    "p_grid": ("p_grid", lambda s: tuple(int(v) for v in s.split(","))),
    "f": ("f", int),
    "order": ("order", int),
    "weightings": ("weightings", lambda s: tuple(s.split(","))),
    "realizations": ("realizations", lambda s: tuple(s.split(","))),
    "trials": ("trials", int),
    "seed": ("base_seed", int),
    "input": ("input_kind", str),
    "sigma_u": ("sigma_u", float),
    "jobs": ("jobs", int),
    "max_failure_rate": ("max_failure_rate", float),
    "out": ("out", str),
}


def _cmd_bench(args) -> int:
    settings: dict = {}
    if args.config:
        for key, val in bench_mod.parse_config_file(args.config).items():
            if key not in _BENCH_OVERRIDES:
                raise DataFormatError(f"unknown config key {key!r}")
            name, conv = _BENCH_OVERRIDES[key]
            settings[name] = conv(val)
    for key, (name, conv) in _BENCH_OVERRIDES.items():
        val = getattr(args, key, None)
        if val is not None:
            settings[name] = val if not isinstance(val, str) else conv(val)
    if args.timing:
        settings["timing"] = True
    if "experiment" not in settings:
        raise DataFormatError("an experiment must be named "
                              "(--experiment or config)")
    settings.setdefault("out", f"{settings['experiment']}.csv")
    settings["out"] = _out_path(settings["out"])
    defaults = _experiment_defaults(settings["experiment"])
    defaults.update(settings)
    cfg = bench_mod.ExperimentConfig(**defaults)
    records, failure_rate = bench_mod.run_experiment(cfg)
    print(f"wrote {len(records)} rows to {cfg.out} "
          f"(failure rate {failure_rate:.4f})")
    if failure_rate > cfg.max_failure_rate:
        print(f"failure rate exceeds threshold {cfg.max_failure_rate}",
              file=sys.stderr)
        return EXIT_FLAGGED
    return EXIT_OK


def _experiment_defaults(experiment: str) -> dict:
    if experiment == "sweetspot":
        return dict(experiment=experiment, out="",
                    nbar_grid=(500, 1500, 2500),
                    p_grid=tuple(range(2, 31, 4)), f=7,
                    weightings=("okid",), realizations=("moesp", "cva"))
    if experiment == "kappa":
        return dict(experiment=experiment, out="",
                    nbar_grid=(500, 1000, 1500, 2000, 2500), p_grid=(7,), f=7,
                    weightings=("okid", "moesp", "cva"),
                    realizations=("moesp", "cva"))
    return dict(experiment=experiment, out="",
                nbar_grid=(500, 1000, 2000, 4000, 8000), p_grid=(7,), f=7,
                weightings=("okid", "moesp", "cva"),
                realizations=("moesp", "cva"))


def _cmd_summarize(args) -> int:
    out = _out_path(args.output)
    rows = bench_mod.summarize(args.input, out)
    print(f"wrote {len(rows)} summary rows to {out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "identify": _cmd_identify,
    "bounds": _cmd_bounds,
    "bench": _cmd_bench,
    "summarize": _cmd_summarize,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except DataFormatError as exc:
        loc = f" (line {exc.line})" if exc.line else ""
        print(f"parsimid: data error{loc}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"parsimid: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParsimIdError as exc:
        print(f"parsimid: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
