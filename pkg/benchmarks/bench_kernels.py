"""Time the numba and numpy flavours of each hot kernel on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case is run once untimed (JIT compile / cache load), then ``--repeat``
times; the best wall time is reported along with the numpy/numba speedup.
Outputs of the two flavours are compared before timing.
"""

import argparse
import time

import numpy as np

from chain_lab import kernels
from chain_lab.chain_model import ChainParams, build_stiffness, random_state
from chain_lab.dynamics import max_stable_dt
from chain_lab.spectral import RANK_TOL


def _rk4_case(N, nsteps):
    p = ChainParams(N, (N + 1) // 2)
    psi = random_state(N, 0).vector
    args = (psi[:N].copy(), psi[N:].copy(), 1.0, 1.0, 1.0, p.site, max_stable_dt(p), nsteps)
    return f"rk4 N={N} steps={nsteps}", "rk4", args


def _krylov_case(N):
    # sweep every site, as the dimension check does
    V = build_stiffness(ChainParams(N))
    return f"krylov_rank N={N} all sites", "krylov_rank", [(V, s, RANK_TOL) for s in range(N)]


CASES = [
    _rk4_case(16, 20_000),
    _rk4_case(128, 5_000),
    _krylov_case(64),
    _krylov_case(200),
    ("odd_gcd_sums_brute N_max=3000", "odd_gcd_sums_brute", (3000,)),
    ("odd_gcd_sums_divisor N_max=1e6", "odd_gcd_sums_divisor", (10**6,)),
]


def _run(func, args):
    if isinstance(args, list):
        return [func(*a) for a in args]
    return func(*args)


def _best(func, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        _run(func, args)
        best = min(best, time.perf_counter() - t0)
    return best


def _same(a, b):
    if isinstance(a, tuple):
        return all(np.allclose(x, y, rtol=1e-12, atol=1e-12) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'case':<36}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for label, name, case_args in CASES:
        fast = kernels.IMPLEMENTATIONS["numba"][name]
        slow = kernels.IMPLEMENTATIONS["numpy"][name]
        if not _same(_run(fast, case_args), _run(slow, case_args)):
            raise SystemExit(f"{label}: flavours disagree")
        t_fast = _best(fast, case_args, args.repeat)
        t_slow = _best(slow, case_args, args.repeat)
        print(f"{label:<36}{t_fast:>12.4f}{t_slow:>12.4f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
