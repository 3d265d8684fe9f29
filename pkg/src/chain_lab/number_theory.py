"""Dimension of the conserved subspace as gcd(N, 2n - 1) - 1, and its averages."""

from dataclasses import asdict, dataclass
from fractions import Fraction
import csv
import json
import math

import numpy as np

from . import kernels


@dataclass(frozen=True)
class DimensionTable:
    N: int
    values: tuple  # D_1(N), ..., D_N(N)

    @property
    def S(self):
        return Fraction(sum(self.values), self.N)


@dataclass(frozen=True)
class AverageReport:
    N0: int
    cumulative: float
    ratio_to_log: float


def D(N, n):
    """dim L0 for chain length N with friction on particle n."""
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    return math.gcd(N, 2 * n - 1) - 1


def dimension_table(N):
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    odd = 2 * np.arange(1, N + 1, dtype=np.int64) - 1
    return DimensionTable(N, tuple(int(v) for v in np.gcd(N, odd) - 1))


def odd_gcd_sums(N_max, method="divisor"):
    """int64 array ``g`` with g[N] = sum_{n=1}^{N} gcd(N, 2n - 1), g[0] = 0.

    ``divisor`` regroups the sum by odd divisors of N: with m the odd part
    of N, the odd numbers 2n - 1 sweep every residue mod m exactly N/m
    times, so g[N] = (N/m) * sum_{d | m} d * phi(m/d).  ``brute`` evaluates
    every gcd.
    """
    if N_max < 0:
        raise ValueError(f"N_max must be >= 0, got {N_max}")
    if method == "divisor":
        return kernels.odd_gcd_sums_divisor(int(N_max))
    if method == "brute":
        return kernels.odd_gcd_sums_brute(int(N_max))
    raise ValueError(f"unknown method {method!r}")


def S(N):
    """Mean of D_n(N) over n = 1..N, as an exact fraction."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    total = sum(math.gcd(N, 2 * n - 1) for n in range(1, N + 1)) - N
    return Fraction(total, N)


def S_values(N_max, method="divisor"):
    """Float array with S[N] for N = 1..N_max (S[0] is set to 0)."""
    g = odd_gcd_sums(N_max, method)
    N = np.arange(N_max + 1, dtype=np.int64)
    out = np.zeros(N_max + 1)
    out[1:] = (g[1:] - N[1:]) / N[1:]
    return out


def _cumulative_terms(N0, method):
    g = odd_gcd_sums(N0, method)
    return [(int(g[N]) - N, N * N) for N in range(1, N0 + 1)]


def cumulative_average(N0, method="divisor", exact=False):
    """(1/N0) * sum_{N <= N0} S(N)/N, reported with its ratio to ln N0.

    Each term (g[N] - N) / N^2 is formed from exact integers; ``exact=True``
    returns the cumulative value as a Fraction instead of a float.
    """
    if N0 < 2:
        raise ValueError(f"N0 must be >= 2, got {N0}")
    terms = _cumulative_terms(N0, method)
    if exact:
        total = sum((Fraction(a, b) for a, b in terms), Fraction(0))
        value = total / N0
        return AverageReport(N0, value, value / Fraction(math.log(N0)))
    value = math.fsum(a / b for a, b in terms) / N0
    return AverageReport(N0, value, value / math.log(N0))


def growth_scan(N_max, epsilons, method="divisor"):
    """For each eps: max over N <= N_max of S(N)/N^eps, its argmax, and the running max.

    Returns ``{"S": S-array, eps: {"max", "argmax", "running_max"}}``.
    """
    if N_max < 2:
        raise ValueError(f"N_max must be >= 2, got {N_max}")
    s = S_values(N_max, method)
    N = np.arange(N_max + 1, dtype=np.float64)
    table = {"S": s}
    for eps in epsilons:
        if not eps > 0:
            raise ValueError(f"epsilon must be > 0, got {eps!r}")
        ratio = np.zeros(N_max + 1)
        ratio[1:] = s[1:] / N[1:] ** eps
        running = np.maximum.accumulate(ratio)
        arg = int(np.argmax(ratio))
        table[eps] = {"max": float(ratio[arg]), "argmax": arg, "ratio": ratio, "running_max": running}
    return table


def _fmt(x):
    return format(float(x), ".17g")


def write_dimension_csv(tables, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["N", "n", "D"])
    for table in tables:
        for n, d in enumerate(table.values, start=1):
            writer.writerow([table.N, n, d])


def write_scan_csv(scan, epsilons, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["N", "S"] + [f"S_over_Neps_{eps:g}" for eps in epsilons])
    s = scan["S"]
    for N in range(1, s.size):
        writer.writerow([N, _fmt(s[N])] + [_fmt(scan[eps]["ratio"][N]) for eps in epsilons])


def average_report_json(report):
    data = asdict(report)
    data = {k: (float(v) if isinstance(v, Fraction) else v) for k, v in data.items()}
    return json.dumps(data, indent=2, sort_keys=True)
