"""Command-line entry point: ``mcmpb {fit,simulate,pmf,grid,study}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import competitors, core, inference, queue, report
from .datasets import FIXTURES, load
from .optimize import ConvergenceError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 2, 3, 4

MODELS = ("mcmpb", "cmpb", "bb", "nb", "cmp")


class UsageError(Exception):
    pass


def _n_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n must be 'auto' or an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("--n must be positive")
    return value


def _range_arg(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must look like LO:HI, got {text!r}") from None
    if not lo <= hi:
        raise argparse.ArgumentTypeError("range needs LO <= HI")
    return lo, hi


def run_fit(data, model: str, n, min_expected=None) -> inference.FitReport:
    bounded = model in ("mcmpb", "cmpb", "bb")
    if not bounded and n != "auto":
        raise UsageError(f"--n does not apply to the unbounded {model} model")
    if bounded and n != "auto" and n < data.max_value:
        raise inference.DataError(f"--n {n} is smaller than the largest observed count {data.max_value}")
    kw = {"min_expected": min_expected}
    fixed = None if n == "auto" else n
    if model == "mcmpb":
        if fixed is None:
            return inference.fit_profile_n(data, **kw)
        return inference.fit_fixed_n(data, fixed, **kw)
    if model == "cmpb":
        return competitors.fit_cmpb(data, n=fixed, **kw)
    if model == "bb":
        return competitors.fit_bb(data, n=fixed, **kw)
    if model == "nb":
        return competitors.fit_nb(data, **kw)
    return competitors.fit_cmp(data, **kw)


def cmd_fit(args) -> int:
    data = load(args.dataset, True if args.truncated else None)
    models = MODELS if args.model == "all" else (args.model,)
    reports = []
    for m in models:
        # with --model all, --n only reaches the bounded-support models
        n = args.n if m in ("mcmpb", "cmpb", "bb") or args.model != "all" else "auto"
        reports.append(run_fit(data, m, n, args.min_expected))
    for r in reports:
        print(report.render_table(r))
        print()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.dumps(reports if len(reports) > 1 else reports[0]))
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        spec = queue.QueueSpec(args.n, args.alpha, args.beta, args.mu, args.lambda_rate)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    exact = queue.stationary_exact(spec)
    traj = queue.simulate(spec, args.horizon, seed=args.seed)
    tv = queue.total_variation(exact, traj.occupancy)
    if args.json:
        print(json.dumps({
            "exact": exact.tolist(),
            "occupancy": traj.occupancy.tolist(),
            "events": traj.events,
            "total_variation": tv,
        }, indent=2))
    else:
        print(f"{'state':>6} {'exact':>14} {'simulated':>14}")
        for x, (e, o) in enumerate(zip(exact, traj.occupancy)):
            print(f"{x:>6d} {e:>14.6g} {o:>14.6g}")
        print(f"events = {traj.events}   total variation = {tv:.6g}")
    return EXIT_OK


def _params(args) -> core.McmpbParams:
    try:
        params = core.McmpbParams(args.n, args.alpha, args.beta, args.psi)
        core.check_caps(params)
    except core.ParameterError as exc:
        raise UsageError(str(exc)) from None
    return params


def cmd_pmf(args) -> int:
    params = _params(args)
    if args.reflect:
        params = core.reflect(params)
    table = core.build_table(params)
    print(f"# n={params.n} alpha={params.alpha:.12g} beta={params.beta:.12g} psi={params.psi:.12g}")
    print("x,pmf,cdf")
    for x in range(params.n + 1):
        print(f"{x},{table.pmf[x]:.12g},{table.cdf[x]:.12g}")
    if args.moments:
        m = core.moments(table)
        mod = core.classify_modality(table)
        print(f"# mean={m.mean:.12g} variance={m.variance:.12g}")
        print(f"# dispersion={m.dispersion_index:.12g} skewness={m.skewness:.12g} "
              f"kurtosis={m.kurtosis_excess:.12g}")
        print(f"# modality={mod.kind} modes={','.join(map(str, mod.modes))}")
        print(f"# log_concave={core.log_concavity_check(table)}")
    return EXIT_OK


def grid_values(n: int, psi: float, alpha_range, beta_range, step: float, index: str):
    if not step > 0:
        raise UsageError("--step must be positive")
    for lo, hi in (alpha_range, beta_range):
        if max(abs(lo), abs(hi)) > core.PARAM_CAP:
            raise UsageError(f"grid ranges must stay within +/-{core.PARAM_CAP:g}")
    alphas = np.arange(alpha_range[0], alpha_range[1] + step / 2, step)
    betas = np.arange(beta_range[0], beta_range[1] + step / 2, step)
    rows = []
    for a in alphas:
        for b in betas:
            a_r, b_r = round(float(a), 12), round(float(b), 12)
            rows.append((a_r, b_r, core.shape_index(core.McmpbParams(n, a_r, b_r, psi), index)))
    return rows


def cmd_grid(args) -> int:
    try:
        core.McmpbParams(args.n, 0.0, 0.0, args.psi)
    except core.ParameterError as exc:
        raise UsageError(str(exc)) from None
    rows = grid_values(args.n, args.psi, args.alpha_range, args.beta_range, args.step, args.index)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["alpha", "beta", args.index])
    for a, b, v in rows:
        w.writerow([f"{a:.6g}", f"{b:.6g}", f"{v:.12g}"])
    return EXIT_OK


def cmd_study(args) -> int:
    configs = [inference.StudyConfig(p, N, args.reps)
               for p in inference.STUDY_PARAMS for N in args.sizes]
    results = inference.simulation_study(configs, seed=args.seed, workers=args.workers)
    print(f"{'config':>28} {'N':>6} {'param':>6} {'bias':>9} {'mse':>9} {'covered':>8} {'fails':>6}")
    for r in results:
        p = r.config.params
        tag = f"({p.alpha:g}, {p.beta:g}, {p.psi:g})"
        for name in inference.PARAM_NAMES:
            print(f"{tag:>28} {r.config.N:>6d} {name:>6} {r.bias[name]:>9.4f} {r.mse[name]:>9.4f} "
                  f"{r.coverage[name]:>8d} {r.failures:>6d}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcmpb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to a count-frequency dataset")
    p.add_argument("dataset", help=f"CSV path or a bundled fixture ({', '.join(FIXTURES)})")
    p.add_argument("--model", choices=MODELS + ("all",), default="mcmpb")
    p.add_argument("--n", type=_n_arg, default="auto", help="'auto' (profile likelihood) or an integer")
    p.add_argument("--truncated", action="store_true", help="treat the data as zero-truncated")
    p.add_argument("--min-expected", type=float, default=None,
                   help="merge chi-square cells until each expected count reaches this")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="simulate the finite-capacity queue")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--lambda", dest="lambda_rate", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=1e5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pmf", help="tabulate the pmf and cdf")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--psi", type=float, required=True)
    p.add_argument("--reflect", action="store_true", help="tabulate the law of n - X")
    p.add_argument("--moments", action="store_true")
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser("grid", help="dispersion/skewness/kurtosis over an (alpha, beta) grid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--psi", type=float, default=0.0)
    p.add_argument("--alpha-range", type=_range_arg, default=(0.0, 2.0))
    p.add_argument("--beta-range", type=_range_arg, default=(0.0, 2.0))
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--index", choices=("dispersion", "skewness", "kurtosis"), default="dispersion")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("study", help="Monte Carlo study of the ML estimates")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--sizes", type=int, nargs="+", default=[100, 500, 1000])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mcmpb: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"mcmpb: no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (inference.DataError, OSError) as exc:
        print(f"mcmpb: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
