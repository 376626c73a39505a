"""Self-check suite run by ``runsapprox verify``.

Each check returns a :class:`CheckResult`.  Every check runs even after an
earlier one fails, so one run reports all failing invariants.  ``inject_fault`` corrupts one
computation route on purpose, which the suite must then catch.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional

from .core import RunsPattern, TrialParams, mean_formula, s_nk
from .distributions import (
    moments_recursive,
    pgf_recursive,
    pmf_closed_row,
    pmf_recursive,
    tv_consecutive,
    tv_consecutive_expansion,
    waiting_pgf,
    waiting_pgf_uncorrected,
    waiting_pmf,
)
from .embedding import EmbeddingChain, build_chain, iter_pmf_embedding
from .oracle import brute_force_pmf, verify_bound
from .stein import (
    BOUNDS,
    gibbs_stein_expectation,
    negative_binomial_spec,
    poisson_spec,
    pseudo_binomial_spec,
    stein_residual,
)

FAULTS = ("A",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass(frozen=True)
class Grid:
    n_max: int = 18
    k_values: tuple = (1, 2, 3)
    p_values: tuple = (Fraction(1, 5), Fraction(1, 2), Fraction(4, 5))

    def cells(self):
        for k1, k2 in itertools.product(self.k_values, self.k_values):
            for p in self.p_values:
                yield RunsPattern(k1, k2), TrialParams.from_p(p)


def corrupt_chain(chain: EmbeddingChain) -> EmbeddingChain:
    """Redirect the failure transition out of ``(.,0)`` one state too far.

    Rows stay stochastic, so only a distributional comparison can notice.
    """
    row0 = list(chain.A[0])
    row0[1], row0[2] = row0[2], row0[1]
    return replace(chain, A=(tuple(row0),) + chain.A[1:])


def check_four_way(grid: Grid, fault: Optional[str] = None) -> CheckResult:
    for pattern, params in grid.cells():
        chain = build_chain(params, pattern)
        if fault == "A":
            chain = corrupt_chain(chain)
        table = pmf_recursive(grid.n_max, params, pattern)
        try:
            embedded = list(iter_pmf_embedding(chain, grid.n_max))
        except RuntimeError as exc:
            return CheckResult("four-way PMF agreement", False, f"{pattern} p={params.p}: {exc}")
        for n in range(grid.n_max + 1):
            rec = table[n].probs
            routes = {
                "embedding": embedded[n].probs,
                "closed": pmf_closed_row(n, params, pattern).probs,
                "brute": brute_force_pmf(n, params, pattern).pmf.probs,
            }
            for name, probs in routes.items():
                if probs != rec:
                    return CheckResult("four-way PMF agreement", False,
                                       f"{name} differs at k1={pattern.k1} k2={pattern.k2} "
                                       f"p={params.p} n={n}")
    return CheckResult("four-way PMF agreement", True)


def check_normalization(n_max: int = 200) -> CheckResult:
    for k1, k2, p in [(1, 1, 0.5), (2, 3, 0.3), (3, 4, 0.89)]:
        pattern, params = RunsPattern(k1, k2), TrialParams.from_p(p)
        table = pmf_recursive(n_max, params, pattern)
        for n in range(n_max + 1):
            dev = abs(math.fsum(table[n].probs) - 1)
            if dev > 1e-12:
                return CheckResult("PGF normalization", False, f"k=({k1},{k2}) n={n} dev={dev:.3g}")
        if abs(sum(pgf_recursive(n_max, params, pattern)) - 1) > 1e-12:
            return CheckResult("PGF normalization", False, f"polynomial route k=({k1},{k2})")
    return CheckResult("PGF normalization", True)


def check_waiting() -> CheckResult:
    for k1, k2, p in [(1, 1, Fraction(1, 2)), (2, 1, Fraction(3, 10)), (1, 2, Fraction(7, 10))]:
        pattern, params = RunsPattern(k1, k2), TrialParams.from_p(p)
        for r in range(1, 6):
            if waiting_pgf(r, params, pattern, 1) != 1:
                return CheckResult("waiting-time law", False, f"M_{r}(1) != 1")
            if waiting_pgf_uncorrected(r, params, pattern, 1) != 1 / params.q:
                return CheckResult("waiting-time law", False, f"H_{r}(1) != 1/q")
        table = pmf_recursive(20, params, pattern)
        for r in (1, 2):
            f = waiting_pmf(r, 20, params, pattern).probs
            for n in range(21):
                if sum(f[: n + 1]) != sum(table[n].probs[r:]):
                    return CheckResult("waiting-time law", False, f"duality r={r} n={n}")
    return CheckResult("waiting-time law", True)


def check_moments(grid: Grid) -> CheckResult:
    for pattern, params in grid.cells():
        k = pattern.k
        mu = moments_recursive(grid.n_max, 4, params, pattern)
        table = pmf_recursive(grid.n_max, params, pattern)
        for n in range(grid.n_max + 1):
            for j in range(5):
                if mu[n][j] != table[n].moment(j):
                    return CheckResult("moment identities", False, f"{pattern} n={n} j={j}")
            if n >= k + 1 and mu[n][1] != mean_formula(n, params, pattern):
                return CheckResult("moment identities", False, f"mean {pattern} n={n}")
            var = mu[n][2] - mu[n][1] ** 2
            if n >= 2 * k + 2 and var != mu[n][1] - s_nk(n, params, pattern):
                return CheckResult("moment identities", False, f"variance {pattern} n={n}")
    return CheckResult("moment identities", True)


def _random_g(rng: random.Random, size: int, support_end=None) -> Callable[[int], float]:
    vals = [0.0] + [rng.uniform(-1, 1) for _ in range(size)]
    if support_end is not None:
        for m in range(support_end + 1, len(vals)):
            vals[m] = 0.0
    return lambda m: vals[m] if 0 <= m < len(vals) else 0.0


def check_stein(seed: int = 0) -> CheckResult:
    rng = random.Random(seed)
    specs = [poisson_spec(2.3), pseudo_binomial_spec(7.4, 0.35), negative_binomial_spec(3.2, 0.6)]
    for spec in specs:
        for _ in range(200):
            g = _random_g(rng, 200, spec.support_end)
            if abs(gibbs_stein_expectation(spec, g)) > 1e-12:
                return CheckResult("Stein identities", False, f"Gibbs operator {spec.family}")
    for (k1, k2), p in itertools.product([(1, 1), (1, 2), (2, 2)], [0.3, 0.5]):
        pattern, params = RunsPattern(k1, k2), TrialParams.from_p(p)
        table = pmf_recursive(15, params, pattern)
        for n in range(pattern.k + 2, 16):
            for spec in specs:
                g = _random_g(rng, 40)
                res = stein_residual(g, n, params, pattern, spec, table)
                if abs(res) > 1e-8:
                    return CheckResult("Stein identities", False,
                                       f"perturbed operator {pattern} p={p} n={n} residual={res:.3g}")
    return CheckResult("Stein identities", True)


def check_bound_validity(n_max: int = 20) -> CheckResult:
    ps = (0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9)
    checked = 0
    for (k1, k2), p in itertools.product(itertools.product((1, 2, 3), repeat=2), ps):
        pattern, params = RunsPattern(k1, k2), TrialParams.from_p(p)
        for n in range(pattern.k + 1, n_max + 1):
            for (family, npar), fn in BOUNDS.items():
                kwargs = {"assume_c7": True} if (family, npar) == ("negative-binomial", 2) else {}
                rep = fn(n, params, pattern, **kwargs)
                if not rep.applicable or rep.bound >= 1:
                    continue
                checked += 1
                margin = verify_bound(rep, n, params, pattern)
                if margin < 0:
                    return CheckResult("bound validity", False,
                                       f"{family}/{npar} k=({k1},{k2}) p={p} n={n} margin={margin:.3g}")
    return CheckResult("bound validity", True, f"{checked} binding bounds checked")


def check_tv_routes(n_max: int = 30) -> CheckResult:
    for (k1, k2), p in itertools.product([(1, 1), (1, 2), (2, 2), (2, 3)], [0.2, 0.5, 0.8]):
        pattern, params = RunsPattern(k1, k2), TrialParams.from_p(p)
        table = pmf_recursive(n_max, params, pattern)
        for n in range(n_max + 1):
            d = abs(tv_consecutive(n, params, pattern, table) - tv_consecutive_expansion(n, params, pattern))
            if d > 1e-10:
                return CheckResult("consecutive TV routes", False, f"k=({k1},{k2}) p={p} n={n} diff={d:.3g}")
    return CheckResult("consecutive TV routes", True)


def run_suite(fault: Optional[str] = None, waiting_only: bool = False,
              grid: Optional[Grid] = None) -> list[CheckResult]:
    """Run every check (or only the waiting-time checks) and collect results."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    if waiting_only:
        return [check_waiting()]
    grid = grid or Grid()
    return [
        check_four_way(grid, fault),
        check_normalization(),
        check_waiting(),
        check_moments(grid),
        check_stein(),
        check_bound_validity(),
        check_tv_routes(),
    ]
