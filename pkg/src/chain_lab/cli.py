"""Command-line front end: ``chain-lab <subcommand> ...``.

Exit codes: 0 success, 1 invalid input, 2 internal verification failure.
"""

import argparse
import contextlib
from concurrent.futures import ThreadPoolExecutor
import json
import math
import os
import sys

import numpy as np

from . import _jit
from .chain_model import ChainParams, build_stiffness, energy, random_state
from .dynamics import (
    fit_decay,
    integrate,
    max_stable_dt,
    sample_exact,
    theoretical_decay_rate,
    write_trajectory_csv,
)
from .exceptions import ChainLabError, DegenerateFitError, VerificationError
from .number_theory import (
    D,
    average_report_json,
    cumulative_average,
    growth_scan,
    write_scan_csv,
)
from .spectral import (
    closed_form_spectrum,
    krylov_dim,
    numeric_spectrum,
    project,
    split_subspaces,
    subspace_angle,
    zero_component_count,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VERIFY = 2

SCAN_WARN = 10**6
SCAN_LIMIT = 10**7
DIM_LIMIT = 5000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return format(float(x), ".17g")


def worker_count():
    raw = os.environ.get("CHAIN_LAB_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        count = int(raw)
    except ValueError:
        raise UsageError(f"CHAIN_LAB_THREADS must be an integer, got {raw!r}")
    if count < 1:
        raise UsageError("CHAIN_LAB_THREADS must be >= 1")
    return count


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_rows(header, rows, fmt, out):
    with _output(out) as fh:
        if fmt == "json":
            json.dump([dict(zip(header, r)) for r in rows], fh, indent=2)
            fh.write("\n")
        else:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in r) + "\n")


def _params(args):
    return ChainParams(args.N, args.n, args.alpha, args.omega0, args.omega1)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_dim(args):
    N = args.N_pos if args.N_pos is not None else args.N
    if N is None:
        raise UsageError("dim needs N")
    n_arg = args.n_pos if args.n_pos is not None else args.n
    if N < 1:
        raise UsageError(f"N must be >= 1, got {N}")
    if args.all_n or n_arg is None:
        sites = list(range(1, N + 1))
    else:
        if not 1 <= n_arg <= N:
            raise UsageError(f"need 1 <= n <= N, got n={n_arg}, N={N}")
        sites = [n_arg]
    if args.verify and N > DIM_LIMIT:
        raise UsageError(f"--verify is limited to N <= {DIM_LIMIT}")

    header = ["N", "n", "D"]
    rows = [[N, n, D(N, n)] for n in sites]
    failed = False
    if args.verify:
        V = np.ascontiguousarray(build_stiffness(ChainParams(N, 1, args.alpha, args.omega0, args.omega1)))
        workers = worker_count()
        _jit.set_threads(workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ranks = list(pool.map(lambda n: krylov_dim(V, n), sites))
        header += ["spectral", "krylov", "agree"]
        for row, n, m in zip(rows, sites, ranks):
            spectral = 2 * zero_component_count(N, n)
            kry = 2 * N - 2 * m
            agree = row[2] == spectral == kry
            failed |= not agree
            row += [spectral, kry, "agree" if agree else "DISAGREE"]
    _emit_rows(header, rows, args.format, args.out)
    if failed:
        print("dimension cross-check failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_scan(args):
    N_max = args.N_max
    if N_max < 2:
        raise UsageError("N_max must be >= 2")
    if N_max > SCAN_LIMIT:
        raise UsageError(f"N_max={N_max} exceeds the resource guard {SCAN_LIMIT}")
    if N_max > SCAN_WARN:
        print(f"warning: scanning N_max={N_max} needs ~{24 * N_max // 2**20} MiB", file=sys.stderr)
    epsilons = args.eps or [0.5]
    scan = growth_scan(N_max, epsilons)
    with _output(args.out) as fh:
        if args.format == "json":
            summary = {
                "N_max": N_max,
                "epsilons": {f"{e:g}": {"max": scan[e]["max"], "argmax": scan[e]["argmax"]} for e in epsilons},
            }
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        else:
            write_scan_csv(scan, epsilons, fh)
    return EXIT_OK


def cmd_avg(args):
    if args.N0 < 2:
        raise UsageError("N0 must be >= 2")
    if args.N0 > SCAN_LIMIT:
        raise UsageError(f"N0={args.N0} exceeds the resource guard {SCAN_LIMIT}")
    report = cumulative_average(args.N0, method=args.method)
    with _output(args.out) as fh:
        if args.format == "csv":
            fh.write("N0,cumulative,ratio_to_log\n")
            fh.write(f"{report.N0},{_fmt(report.cumulative)},{_fmt(report.ratio_to_log)}\n")
        else:
            fh.write(average_report_json(report) + "\n")
    return EXIT_OK


def cmd_spectrum(args):
    params = _params(args)
    V = build_stiffness(params)
    closed = closed_form_spectrum(params)
    numeric = numeric_spectrum(V)
    rows = []
    for k in range(params.N):
        angle = subspace_angle(closed.eigenvectors[:, k], numeric.eigenvectors[:, k])
        rows.append([k, float(closed.eigenvalues[k]), float(numeric.eigenvalues[k]), float(angle)])
    rel = np.abs(closed.eigenvalues - numeric.eigenvalues) / np.abs(numeric.eigenvalues)
    summary = {
        "max_eigenvalue_rel_diff": float(rel.max()),
        "max_subspace_angle": max(r[3] for r in rows),
        "closed_form_residual": closed.residual(V),
    }
    with _output(args.out) as fh:
        if args.format == "json":
            json.dump({"modes": [dict(zip(["k", "lambda_closed", "lambda_numeric", "angle"], r)) for r in rows], **summary},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        else:
            fh.write("k,lambda_closed,lambda_numeric,angle\n")
            for r in rows:
                fh.write(f"{r[0]},{_fmt(r[1])},{_fmt(r[2])},{_fmt(r[3])}\n")
    print(" ".join(f"{k}={_fmt(v)}" for k, v in summary.items()), file=sys.stderr)
    return EXIT_OK


def _run_trajectory(args, default_project):
    params = _params(args)
    V = build_stiffness(params)
    split = split_subspaces(params)
    c2_theory = theoretical_decay_rate(params, split)
    psi = random_state(params.N, args.seed)
    psi_zero, psi_minus = project(psi, split, V)
    mode = args.project or default_project
    if mode == "zero":
        psi = psi_zero
    elif mode == "minus":
        psi = psi_minus
    t_end = args.t_end if args.t_end is not None else 40.0 / c2_theory
    dt = args.dt
    if args.method == "rk4":
        traj = integrate(params, psi, t_end, dt)
    else:
        if dt is None:
            dt = max_stable_dt(params)
        if not dt > 0:
            raise UsageError("dt must be > 0")
        steps = max(1, math.ceil(t_end / dt - 1e-9))
        traj = sample_exact(params, psi, np.linspace(0.0, t_end, steps + 1))
    conserved_part, _ = project(psi, split, V)
    try:
        fit = fit_decay(traj, args.skip_fraction)
    except DegenerateFitError:
        fit = None
    H0 = float(traj.energies[0])
    summary = {
        "N": params.N,
        "n": params.n,
        "alpha": params.alpha,
        "omega0": params.omega0,
        "omega1": params.omega1,
        "seed": args.seed,
        "project": mode,
        "method": args.method,
        "t_end": float(t_end),
        "samples": len(traj),
        "H0": H0,
        "H_final": float(traj.energies[-1]),
        "H_conserved": energy(conserved_part, V),
        "H_ratio": float(traj.energies[-1] / H0) if H0 > 0 else 0.0,
        "c2_theory": c2_theory,
        "c2_fit": fit.c2_hat if fit else None,
        "r_squared": fit.r_squared if fit else None,
    }
    return params, traj, summary


def _print_summary(summary, fmt):
    if fmt == "json":
        print(json.dumps(summary, indent=2))
    else:
        for key, value in summary.items():
            print(f"{key},{_fmt(value) if isinstance(value, float) else value}")


def cmd_simulate(args):
    _, traj, summary = _run_trajectory(args, "none")
    if args.out:
        with _output(args.out) as fh:
            write_trajectory_csv(traj, fh, coords=args.coords)
    _print_summary(summary, args.format)
    return EXIT_OK


def cmd_decay(args):
    _, traj, summary = _run_trajectory(args, "minus")
    if summary["c2_fit"] is not None:
        summary["c2_rel_error"] = abs(summary["c2_fit"] / summary["c2_theory"] - 1.0)
    if args.out:
        with _output(args.out) as fh:
            write_trajectory_csv(traj, fh, coords=args.coords)
    _print_summary(summary, args.format)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_chain_flags(p, with_site=True):
    p.add_argument("--N", type=int, required=True, help="number of particles")
    if with_site:
        p.add_argument("--n", type=int, default=1, help="dissipating particle (1-based)")
    else:
        p.set_defaults(n=1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--omega0", type=float, default=1.0)
    p.add_argument("--omega1", type=float, default=1.0)


def _add_output_flags(p, default_format):
    p.add_argument("--format", choices=["csv", "json"], default=default_format)
    p.add_argument("--out", metavar="PATH", default=None)


def _add_trajectory_flags(p, default_project):
    _add_chain_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-end", dest="t_end", type=float, default=None,
                   help="default 40 / c2_theory")
    p.add_argument("--dt", type=float, default=None,
                   help="default 0.1 / sqrt(lambda_max)")
    p.add_argument("--project", choices=["zero", "minus", "none"], default=default_project)
    p.add_argument("--method", choices=["exact", "rk4"], default="exact",
                   help="exact propagator sampled every dt, or fixed-step RK4")
    p.add_argument("--skip-fraction", dest="skip_fraction", type=float, default=0.5)
    p.add_argument("--coords", action="store_true", help="include q and p columns in the CSV")
    p.add_argument("--format", choices=["csv", "json"], default="json", help="summary format")
    p.add_argument("--out", metavar="PATH", default=None, help="trajectory CSV")


def build_parser():
    parser = _Parser(prog="chain-lab", description="Damped harmonic chain laboratory.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dim", help="dimension of the conserved subspace")
    p.add_argument("N_pos", nargs="?", type=int, metavar="N")
    p.add_argument("n_pos", nargs="?", type=int, metavar="n")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--all-n", dest="all_n", action="store_true")
    p.add_argument("--verify", action="store_true", help="cross-check with spectral and Krylov counts")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--omega0", type=float, default=1.0)
    p.add_argument("--omega1", type=float, default=1.0)
    _add_output_flags(p, "csv")
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("scan", help="S(N) and S(N)/N^eps for N <= N_max")
    p.add_argument("N_max", type=int)
    p.add_argument("--eps", type=float, action="append", help="repeatable; default 0.5")
    _add_output_flags(p, "csv")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("avg", help="cumulative average of S(N)/N and its ratio to ln N0")
    p.add_argument("N0", type=int)
    p.add_argument("--method", choices=["divisor", "brute"], default="divisor")
    _add_output_flags(p, "json")
    p.set_defaults(func=cmd_avg)

    p = sub.add_parser("spectrum", help="closed-form vs numeric spectrum of V")
    _add_chain_flags(p, with_site=False)
    _add_output_flags(p, "csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", help="evolve a seeded Gaussian state")
    _add_trajectory_flags(p, "none")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decay", help="fit the decay rate on L- against theory")
    _add_trajectory_flags(p, "minus")
    p.set_defaults(func=cmd_decay)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if os.environ.get("CHAIN_LAB_THREADS"):
            _jit.set_threads(worker_count())
        return args.func(args)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (UsageError, ChainLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
