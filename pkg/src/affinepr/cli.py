"""Command-line entry point ``affinepr``.

Exit codes: 0 success, 2 invalid arguments, 3 solver breakdown, 4 check failure
(1 for I/O errors).
"""
import argparse
import csv
import json
import sys

from .checks import SUITES
from .ensemble import CDP, GAUSSIAN, derive_seed, generate, measure, random_signal
from .exceptions import InvalidArgumentError
from .lab import (
    CONVERGENCE,
    CONVERGENCE_HEADER,
    SUCCESS_RATE,
    ExperimentSpec,
    _fmt,
    convergence_experiment,
    success_rate_experiment,
    write_results,
)
from .newton import FULLBATCH, RESAMPLED, SolverConfig, run

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_BREAKDOWN = 3
EXIT_CHECK = 4


def build_parser():
    parser = argparse.ArgumentParser(prog="affinepr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one synthetic instance")
    solve.add_argument("--model", choices=[GAUSSIAN, CDP], required=True)
    solve.add_argument("--n", type=int, required=True)
    rows = solve.add_mutually_exclusive_group()
    rows.add_argument("--m", type=int)
    rows.add_argument("--m-over-n", type=float)
    rows.add_argument("--L", type=int)
    solve.add_argument("--b-mag", type=float, required=True)
    solve.add_argument("--b-phase", type=float, default=0.0)
    solve.add_argument("--seed", type=int, required=True)
    solve.add_argument("--max-iters", type=int, required=True)
    solve.add_argument("--tol", type=float, required=True)
    solve.add_argument("--mode", choices=[FULLBATCH, RESAMPLED], default=FULLBATCH)
    solve.add_argument("--T", type=int, help="number of resampling blocks")
    solve.add_argument("--trace", help="write the iteration trace as CSV")

    exp = sub.add_parser("experiment", help="run a convergence or success-rate experiment")
    exp.add_argument("kind", choices=[CONVERGENCE, SUCCESS_RATE])
    exp.add_argument("--config", required=True, help="ExperimentSpec JSON file")
    exp.add_argument("--out", required=True, help="output directory")

    chk = sub.add_parser("check", help="run an oracle suite")
    chk.add_argument("suite", choices=sorted(SUITES))
    chk.add_argument("--n", type=int)
    chk.add_argument("--seed", type=int, default=0)
    return parser


def _solve(args):
    if args.model == GAUSSIAN:
        if args.L is not None:
            raise InvalidArgumentError("--L applies to the cdp model")
        if args.m is None and args.m_over_n is None:
            raise InvalidArgumentError("the gaussian model needs --m or --m-over-n")
        m = args.m if args.m is not None else int(round(args.n * args.m_over_n))
        L = None
    else:
        if args.L is None:
            raise InvalidArgumentError("the cdp model needs --L")
        m, L = None, args.L
    if args.mode == RESAMPLED and args.T is None:
        raise InvalidArgumentError("--mode resampled needs --T")
    config = SolverConfig(mode=args.mode, max_iters=args.max_iters, tol=args.tol,
                          b_magnitude=args.b_mag, b_phase=args.b_phase,
                          n_blocks=args.T, seed=args.seed)
    x = random_signal(args.n, derive_seed(args.seed, 1))
    ens = generate(args.model, args.n, derive_seed(args.seed, 0), m=m, L=L, b=config.b)
    trace = run(ens, measure(ens, x), config, x=x)

    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CONVERGENCE_HEADER)
            for rec in trace.records:
                writer.writerow([_fmt(v) for v in (0, rec.k, rec.rel_err, rec.f, rec.grad_norm)])
    summary = {
        "model": args.model,
        "n": args.n,
        "m": ens.m,
        "iterations": trace.n_iter,
        "stop_reason": trace.stop_reason,
        "rel_err": trace.final_rel_err,
        "f": trace.records[-1].f,
    }
    print(json.dumps(summary))
    if trace.stop_reason == "breakdown":
        print(trace.error, file=sys.stderr)
        return EXIT_BREAKDOWN
    return EXIT_OK


def _experiment(args):
    spec = ExperimentSpec.from_json(args.config)
    if spec.kind != args.kind:
        raise InvalidArgumentError(f"config kind {spec.kind!r} does not match {args.kind!r}")
    if spec.kind == CONVERGENCE:
        result = convergence_experiment(spec)
        s = result.summary
        print(f"trials={s['trials']} successes={s['successes']} "
              f"breakdowns={s['breakdowns']} order={s['convergence_order']:.3f}")
    else:
        result = success_rate_experiment(spec)
        for pt in result.points:
            print(f"param={pt.param:g} rate={pt.rate:.3f} +/- {pt.ci_halfwidth:.3f}")
    for path in write_results(result, args.out):
        print(f"wrote {path}")
    return EXIT_OK


def _check(args):
    suite = SUITES[args.suite]
    kwargs = {"seed": args.seed}
    if args.n is not None:
        kwargs["n"] = args.n
    failed = False
    for name, value, limit, passed in suite(**kwargs):
        print(f"{'PASS' if passed else 'FAIL'} {name}: {value:.3e} (limit {limit:.1e})")
        failed |= not passed
    return EXIT_CHECK if failed else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"solve": _solve, "experiment": _experiment, "check": _check}
    try:
        return handlers[args.command](args)
    except InvalidArgumentError as exc:
        print(f"affinepr: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"affinepr: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
