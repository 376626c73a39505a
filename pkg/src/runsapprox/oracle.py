"""Ground-truth engines: exhaustive enumeration, simulation and exact TV.

Sequences are encoded as integers whose bit ``j`` is trial ``j + 1``
(1 = success).  Occurrences are detected by masking fixed-width windows, so
the enumeration of all ``2**n`` sequences is a handful of vectorised passes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special, stats

from .core import Pmf, RunsPattern, TrialParams
from .stein import BoundReport, InapplicableError

ENUMERATION_CAP = 22
TAIL_CUTOFF = 1e-15


# ---------------------------------------------------------------------------
# occurrence counting


def _window_masks(pattern: RunsPattern) -> tuple[int, int, int, int]:
    """``(interior_mask, interior_target, boundary_mask, boundary_target)``.

    Interior window (``k + 2`` trials): success, ``k1`` failures, ``k2``
    successes, failure.  Boundary window (first ``k + 1`` trials): the same
    without the leading success.
    """
    k1, k2, k = pattern.k1, pattern.k2, pattern.k
    ones = (1 << k2) - 1
    interior = (1 << (k + 2)) - 1, 1 | (ones << (k1 + 1))
    boundary = (1 << (k + 1)) - 1, ones << k1
    return interior[0], interior[1], boundary[0], boundary[1]


def count_occurrences(codes: np.ndarray, n: int, pattern: RunsPattern) -> np.ndarray:
    """Count ``M`` for each integer-encoded sequence of length ``n``."""
    codes = np.asarray(codes, dtype=np.int64)
    k = pattern.k
    counts = np.zeros(codes.shape, dtype=np.int64)
    if n < k + 1:
        return counts
    im, it, bm, bt = _window_masks(pattern)
    counts += (codes & bm) == bt
    for start in range(0, n - (k + 2) + 1):
        counts += ((codes >> start) & im) == it
    return counts


def count_by_scan(bits: str, pattern: RunsPattern) -> int:
    """Count ``M`` in a ``'0'/'1'`` string by regular-expression scanning.

    A virtual success is prepended so the left-boundary occurrence needs no
    special case; a lookahead lets occurrences share their final failure.
    """
    rx = re.compile("(?=10{%d}1{%d}0)" % (pattern.k1, pattern.k2))
    return len(rx.findall("1" + bits))


def code_to_bits(code: int, n: int) -> str:
    return "".join("1" if (code >> j) & 1 else "0" for j in range(n))


# ---------------------------------------------------------------------------
# exhaustive enumeration


@dataclass(frozen=True)
class EnumerationResult:
    pmf: Pmf
    n: int
    pattern: RunsPattern
    params: TrialParams
    sequence_count: int


@lru_cache(maxsize=64)
def _count_histogram(n: int, k1: int, k2: int) -> np.ndarray:
    """``H[m, s]`` = number of sequences with ``M = m`` and ``s`` successes."""
    pattern = RunsPattern(k1, k2)
    codes = np.arange(1 << n, dtype=np.int64)
    m = count_occurrences(codes, n, pattern)
    pop = np.zeros_like(codes)
    for j in range(n):
        pop += (codes >> j) & 1
    top = int(m.max()) if n else 0
    hist = np.zeros((top + 1, n + 1), dtype=np.int64)
    np.add.at(hist, (m, pop), 1)
    hist.setflags(write=False)
    return hist


def brute_force_pmf(n: int, params: TrialParams, pattern: RunsPattern) -> EnumerationResult:
    """Exact PMF of ``M`` by visiting all ``2**n`` sequences.

    Sequences are grouped by ``(M, number of successes)`` so each group is
    weighted once by ``p**s q**(n-s)``.  Exact arithmetic is used when the
    parameters are rational.

    Raises
    ------
    ValueError
        If ``n`` exceeds the enumeration cap of 22.
    """
    params.require_probability_model()
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > ENUMERATION_CAP:
        raise ValueError(f"enumeration refused for n={n} > {ENUMERATION_CAP}")
    hist = _count_histogram(n, pattern.k1, pattern.k2)
    p, q = params.p, params.q
    weights = [p ** s * q ** (n - s) for s in range(n + 1)]
    length = n // pattern.k + 1
    probs = []
    for m in range(length):
        if m < hist.shape[0]:
            probs.append(sum((int(c) * w for c, w in zip(hist[m], weights) if c), params.convert(0)))
        else:
            probs.append(params.convert(0))
    return EnumerationResult(Pmf(tuple(probs), n), n, pattern, params, 1 << n)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class SampleEstimate:
    pmf_estimate: Pmf
    stderr: tuple
    trials: int
    seed: int


def monte_carlo_pmf(n: int, trials: int, seed: int, params: TrialParams,
                    pattern: RunsPattern, batch: int = 200_000) -> SampleEstimate:
    """Empirical PMF of ``M`` from ``trials`` simulated sequences.

    Uses numpy's PCG64 generator seeded with ``seed``; batches are drawn in a
    fixed order so the result depends only on ``(seed, trials, batch)``.
    """
    params.require_probability_model()
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    p = float(params.p)
    k = pattern.k
    size = n // k + 1
    hist = np.zeros(size, dtype=np.int64)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        seq = rng.random((b, n)) < p
        hist += np.bincount(_count_matrix(seq, pattern), minlength=size)[:size]
        done += b
    est = hist / trials
    se = np.sqrt(est * (1 - est) / trials)
    return SampleEstimate(Pmf(tuple(float(x) for x in est), n),
                          tuple(float(x) for x in se), trials, seed)


def _count_matrix(seq: np.ndarray, pattern: RunsPattern) -> np.ndarray:
    """Occurrence counts for each row of a boolean (success) matrix."""
    b, n = seq.shape
    k1, k2, k = pattern.k1, pattern.k2, pattern.k
    counts = np.zeros(b, dtype=np.int64)
    if n < k + 1:
        return counts
    body = np.ones((b, n - k), dtype=bool)
    # body[:, e] means trials e .. e+k (0-based) read F^k1 S^k2 F
    for j in range(k1):
        body &= ~seq[:, j: j + n - k]
    for j in range(k1, k):
        body &= seq[:, j: j + n - k]
    body &= ~seq[:, k: n]
    lead = np.ones((b, n - k), dtype=bool)
    lead[:, 1:] = seq[:, : n - k - 1]
    counts += (body & lead).sum(axis=1)
    return counts


# ---------------------------------------------------------------------------
# target laws and total variation


def target_pmf(family: str, alpha: float = None, p: float = None, lam: float = None) -> tuple[list[float], float]:
    """Target PMF evaluated with scipy, and the tail mass it omits.

    Unbounded laws are cut where the remaining tail drops below ``1e-15``.
    """
    if family == "poisson":
        dist = stats.poisson(lam)
    elif family == "negative-binomial":
        dist = stats.nbinom(alpha, p)
    elif family == "pseudo-binomial":
        top = int(np.floor(alpha))
        m = np.arange(top + 1)
        raw = special.binom(alpha, m) * p ** m * (1 - p) ** (alpha - m)
        return list(raw / raw.sum()), 0.0
    else:
        raise ValueError(f"unknown family {family!r}")
    m_top = int(dist.isf(TAIL_CUTOFF)) + 1
    probs = dist.pmf(np.arange(m_top + 1))
    tail = float(dist.sf(m_top))
    return list(probs), tail


def exact_tv(pmf_a: Sequence, pmf_b: Sequence, tail: float = 0.0) -> float:
    """``1/2 sum |a_m - b_m|`` over the union of supports, plus ``tail``.

    ``tail`` is the mass a truncated law omits; adding it keeps the result an
    upper bound on the true distance.
    """
    a = [float(x) for x in pmf_a]
    b = [float(x) for x in pmf_b]
    size = max(len(a), len(b))
    a += [0.0] * (size - len(a))
    b += [0.0] * (size - len(b))
    d = 0.5 * float(np.sum(np.abs(np.array(a) - np.array(b)))) + tail
    return min(d, 1.0)


def report_target(report: BoundReport) -> tuple[list[float], float]:
    if report.family == "poisson":
        return target_pmf("poisson", lam=report.matched["lambda"])
    return target_pmf(report.family, alpha=report.matched["alpha"], p=report.matched["p"])


def verify_bound(report: BoundReport, n: int, params: TrialParams, pattern: RunsPattern) -> float:
    """``bound - d_TV(target, M^n)`` using the enumerated law of ``M^n``.

    A valid bound always leaves a nonnegative margin.  A bound of at least one
    can never fail; callers may treat it as informational.
    """
    if not report.applicable:
        raise InapplicableError("cannot verify an inapplicable report")
    exact = brute_force_pmf(n, params, pattern).pmf
    target, tail = report_target(report)
    return report.bound - exact_tv(exact.probs, target, tail)
