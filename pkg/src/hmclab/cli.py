"""Command-line entry point.

Subcommands wire the library into reproducible experiments:

    simulate-hmc   per-replica chaos coefficients, normalized, to CSV/JSON
    simulate-cbe   per-replica circular-ensemble secular coefficients to CSV
    constants      Dickman density, Kingman CDF and the C_delta / A constants
    verify         run the acceptance suite (exit 0 iff every criterion passes)

Every command writes a RunReport JSON next to its data output.  Exit codes:
0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import acceptance
from .ewens import a_constant, c_delta_closed, c_delta_integral, kingman_cdf, p_theta_density
from .moments import second_moment
from .rng import Lane, StreamKey
from .report import (
    RunReport,
    write_coefficients_csv,
    write_coefficients_json,
    write_table_csv,
)
from .series import coefficient_ensemble
from .cbe import cbe_secular_ensemble
from .stats import mean_estimate


def _seed(text: str) -> int:
    """Decimal or 0x-hex seed."""
    try:
        return int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from exc


def _float_list(text: str):
    return [float(x) for x in text.split(",") if x]


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="hmclab", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="command", required=True)

    hmc = sub.add_parser("simulate-hmc", help="sample chaos coefficients c_n per replica")
    hmc.add_argument("--theta", type=float, required=True, help="inverse temperature in (0, 1]")
    hmc.add_argument("--n", type=int, required=True, help="coefficient index (n >= 0)")
    hmc.add_argument("--ell", type=int, default=0, help="also emit c_{n+1}..c_{n+ell}")
    hmc.add_argument("--samples", type=int, required=True, help="number of replicas")
    hmc.add_argument("--seed", type=_seed, default=acceptance.DEFAULT_SEED,
                     help="decimal or 0x-hex (default %(default)s)")
    hmc.add_argument("--out", required=True, help="output data file")
    hmc.add_argument("--format", choices=("csv", "json"), default="csv")
    hmc.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                     help="worker threads over replica chunks (default: machine parallelism)")

    cbe = sub.add_parser("simulate-cbe", help="sample secular coefficients of the circular ensemble")
    cbe.add_argument("--beta", type=float, required=True, help="inverse temperature beta > 0")
    cbe.add_argument("--N", type=int, required=True, help="matrix size")
    cbe.add_argument("--nmax", type=int, required=True, help="largest coefficient index (<= N)")
    cbe.add_argument("--samples", type=int, required=True)
    cbe.add_argument("--seed", type=_seed, default=acceptance.DEFAULT_SEED)
    cbe.add_argument("--out", required=True)

    cons = sub.add_parser("constants", help="tabulate p_theta, F_theta, C_delta and A")
    cons.add_argument("--theta", type=float, required=True)
    cons.add_argument("--delta", type=_float_list, default=[0.1], help="comma-separated deltas")
    cons.add_argument("--epsilon", type=_float_list, default=[0.1], help="comma-separated epsilons")
    cons.add_argument("--ymax", type=float, default=16.0, help="table range for p_theta")
    cons.add_argument("--out", required=True, help="constants CSV; density/CDF tables go alongside")

    ver = sub.add_parser(
        "verify",
        help="run acceptance criteria",
        description=(
            "Suites: identities = deterministic identity checks (criteria 1, 4, 6); "
            "limits = statistical limit-theorem checks (2, 3, 5, 7, 8, 9, 10, 12); "
            "cbe = circular-ensemble checks (11); all = everything. "
            "Level quick divides Monte Carlo sample counts by 10 (floor 200) and "
            "changes nothing else; level full uses the documented sample counts."
        ),
    )
    ver.add_argument("--suite", choices=sorted(acceptance.SUITES), default="all")
    ver.add_argument("--level", choices=("quick", "full"), default="full")
    ver.add_argument("--seed", type=_seed, default=acceptance.DEFAULT_SEED)
    ver.add_argument("--out", default=None, help="optional RunReport JSON path")
    return top


def _cmd_simulate_hmc(args) -> int:
    if not 0.0 < args.theta <= 1.0:
        print(f"error: --theta must lie in (0, 1], got {args.theta}", file=sys.stderr)
        return 2
    if args.n < 0 or args.samples < 1 or args.ell < 0:
        print("error: need --n >= 0, --ell >= 0 and --samples >= 1", file=sys.stderr)
        return 2
    report = RunReport(command="simulate-hmc", params=vars(args).copy()).start()
    key = StreamKey(args.seed, lane=Lane.HMC)
    indices = list(range(args.n, args.n + args.ell + 1))
    if args.n == 0 and args.ell == 0:
        matrix = np.ones((args.samples, 1), dtype=np.complex128)
    else:
        matrix = coefficient_ensemble(
            args.theta, args.n + args.ell, args.samples, key, keep=indices, threads=args.threads
        )
    norm = np.sqrt(second_moment(args.n, args.theta)) if args.theta > 0 else 1.0
    matrix = matrix / norm
    if args.format == "csv":
        write_coefficients_csv(args.out, matrix, indices)
    else:
        write_coefficients_json(args.out, matrix, indices)
    report.artifact_paths.append(args.out)
    report.add_estimate("mean_sq_modulus_normalized", mean_estimate(np.abs(matrix[:, 0]) ** 2))
    report.finish().write(args.out + ".report.json")
    return 0


def _cmd_simulate_cbe(args) -> int:
    if args.beta <= 0 or args.N < 1 or args.samples < 1:
        print("error: need --beta > 0, --N >= 1 and --samples >= 1", file=sys.stderr)
        return 2
    if not 0 <= args.nmax <= args.N:
        print(f"error: --nmax must lie in [0, N], got {args.nmax}", file=sys.stderr)
        return 2
    report = RunReport(command="simulate-cbe", params=vars(args).copy()).start()
    key = StreamKey(args.seed, lane=Lane.CBE)
    matrix = cbe_secular_ensemble(args.N, args.beta, args.nmax, args.samples, key)
    write_coefficients_csv(args.out, matrix, list(range(args.nmax + 1)))
    report.artifact_paths.append(args.out)
    if args.nmax >= 1:
        report.add_estimate("mean_sq_modulus_c1", mean_estimate(np.abs(matrix[:, 1]) ** 2))
    report.finish().write(args.out + ".report.json")
    return 0


def _cmd_constants(args) -> int:
    if not 0.0 < args.theta <= 1.0:
        print(f"error: --theta must lie in (0, 1], got {args.theta}", file=sys.stderr)
        return 2
    for d in args.delta:
        if not 0.0 < d <= 1.0:
            print(f"error: delta values must lie in (0, 1], got {d}", file=sys.stderr)
            return 2
    need = max((1.0 - d) / d for d in args.delta)
    y_max = max(args.ymax, need + 2.0, 1.0 / min(args.delta) + 1.0)
    report = RunReport(command="constants", params=vars(args).copy()).start()
    table = p_theta_density(args.theta, y_max=y_max)

    density_path = args.out + ".density.csv"
    table.to_csv(density_path)
    report.artifact_paths.append(density_path)

    xs = np.linspace(0.01, 1.0, 100)
    cdf_path = args.out + ".kingman.csv"
    write_table_csv(cdf_path, {"x": xs, "F_theta": [kingman_cdf(args.theta, x, table) for x in xs]})
    report.artifact_paths.append(cdf_path)

    rows = {"theta": [], "delta": [], "epsilon": [], "c_delta_integral": [], "c_delta_closed": [], "a_constant": []}
    for d in args.delta:
        ci = c_delta_integral(args.theta, d, table)
        cc = c_delta_closed(args.theta, d, table)
        for eps in args.epsilon:
            rows["theta"].append(args.theta)
            rows["delta"].append(d)
            rows["epsilon"].append(eps)
            rows["c_delta_integral"].append(ci)
            rows["c_delta_closed"].append(cc)
            rows["a_constant"].append(a_constant(args.theta, d, eps, table) if d < 1.0 else 0.0)
    write_table_csv(args.out, {k: np.asarray(v) for k, v in rows.items()})
    report.artifact_paths.append(args.out)
    report.finish().write(args.out + ".report.json")
    return 0


def _cmd_verify(args) -> int:
    report = RunReport(command="verify", params=vars(args).copy()).start()
    results = acceptance.run_suite(args.suite, seed=args.seed, level=args.level, echo=print)
    ok = all(r.passed for r in results)
    for r in results:
        report.params.setdefault("criteria", {})[str(r.index)] = r.passed
    report.finish()
    if args.out:
        report.write(args.out)
    print(f"suite {args.suite!r} ({args.level}): {'ALL PASS' if ok else 'FAILURES PRESENT'}")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {
        "simulate-hmc": _cmd_simulate_hmc,
        "simulate-cbe": _cmd_simulate_cbe,
        "constants": _cmd_constants,
        "verify": _cmd_verify,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
