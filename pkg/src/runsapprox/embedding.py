"""Markov-chain embedding of the runs statistic and its level-by-level PMF.

The chain tracks the current suffix of the trial sequence.  State labels, in
index order, are ``(.,0)``, ``(.,1)`` ... ``(.,k1)``, ``(.,k1+)``,
``(.,k1+1)`` ... ``(.,k1+k2)``:

* ``(.,0)``: the last trial was a success that does not extend a partial
  pattern (also the start state);
* ``(.,i)`` for ``1 <= i <= k1``: exactly ``i`` failures after a success;
* ``(.,k1+)``: more than ``k1`` failures, so the current failure run is spoilt;
* ``(.,k1+j)`` for ``1 <= j <= k2``: ``k1`` failures followed by ``j``
  successes.

A failure seen in ``(.,k1+k2)`` completes an occurrence.  That transition is
the only entry of the level-up matrix ``B``; the failure also begins the next
failure run, so it lands in ``(.,1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from ._poly import poly_eval, series_divide
from .core import Pmf, RunsPattern, Scalar, TrialParams, a_of_p


@dataclass(frozen=True)
class EmbeddingChain:
    """Immutable chain description.

    Attributes
    ----------
    pattern, params
        The statistic and trial law the chain was built for.
    labels : tuple of str
        Human-readable state names in index order.
    A, B : tuple of tuple
        Within-level and level-up transition matrices.
    pi0 : tuple
        Initial distribution, the unit vector on ``(.,0)``.
    """

    pattern: RunsPattern
    params: TrialParams
    labels: tuple
    A: tuple
    B: tuple
    pi0: tuple

    @property
    def state_count(self) -> int:
        return len(self.labels)

    def validate(self) -> None:
        """Raise ``ValueError`` unless every row of ``A + B`` sums to one."""
        p, q = self.params.p, self.params.q
        exact = self.params.exact
        nonzero_b = 0
        for i in range(self.state_count):
            row = [x + y for x, y in zip(self.A[i], self.B[i])]
            total = sum(row)
            if (total != 1) if exact else abs(total - 1) > 1e-12:
                raise ValueError(f"row {i} of A+B sums to {total}")
            for x in list(self.A[i]) + list(self.B[i]):
                if x not in (0, p, q):
                    raise ValueError(f"row {i} has an entry outside {{0, p, q}}")
            nonzero_b += sum(1 for x in self.B[i] if x)
        if nonzero_b != 1:
            raise ValueError(f"B must have exactly one nonzero entry, found {nonzero_b}")

    def _sparse(self, matrix) -> list[list[tuple[int, Scalar]]]:
        return [[(j, x) for j, x in enumerate(row) if x] for row in matrix]


def state_labels(pattern: RunsPattern) -> tuple:
    k1, k2 = pattern.k1, pattern.k2
    labels = [f"(.,{i})" for i in range(k1 + 1)]
    labels.append(f"(.,{k1}+)")
    labels += [f"(.,{k1 + j})" for j in range(1, k2 + 1)]
    return tuple(labels)


def build_chain(params: TrialParams, pattern: RunsPattern) -> EmbeddingChain:
    """Build the ``k1 + k2 + 2`` state chain for the statistic ``M``.

    Examples
    --------
    >>> ch = build_chain(TrialParams.from_p(0.5), RunsPattern(1, 1))
    >>> ch.labels
    ('(.,0)', '(.,1)', '(.,1+)', '(.,2)')
    """
    params.require_probability_model()
    k1, k2 = pattern.k1, pattern.k2
    p, q = params.p, params.q
    size = k1 + k2 + 2
    zero = params.convert(0)
    A = [[zero] * size for _ in range(size)]
    B = [[zero] * size for _ in range(size)]
    spoilt = k1 + 1

    def body(j: int) -> int:  # index of (.,k1+j)
        return k1 + 1 + j

    A[0][0], A[0][1] = p, q
    for i in range(1, k1):
        A[i][0], A[i][i + 1] = p, q
    A[k1][spoilt] = q
    A[k1][body(1)] = p
    A[spoilt][0], A[spoilt][spoilt] = p, q
    for j in range(1, k2):
        A[body(j)][1], A[body(j)][body(j + 1)] = q, p
    A[body(k2)][0] = p
    B[body(k2)][1] = q

    pi0 = [zero] * size
    pi0[0] = params.convert(1)
    chain = EmbeddingChain(
        pattern=pattern,
        params=params,
        labels=state_labels(pattern),
        A=tuple(tuple(r) for r in A),
        B=tuple(tuple(r) for r in B),
        pi0=tuple(pi0),
    )
    chain.validate()
    return chain


def iter_pmf_embedding(chain: EmbeddingChain, n_max: int) -> Iterator[Pmf]:
    """Yield the PMF of ``M`` after ``0, 1, ..., n_max`` trials."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    k = chain.pattern.k
    zero = chain.params.convert(0)
    size = chain.state_count
    a_rows = chain._sparse(chain.A)
    b_rows = chain._sparse(chain.B)
    levels = [list(chain.pi0)]
    yield _collapse(levels, 0)
    for n in range(1, n_max + 1):
        top = n // k
        new = [[zero] * size for _ in range(top + 1)]
        for x, vec in enumerate(levels):
            for i, mass in enumerate(vec):
                if not mass:
                    continue
                for j, prob in a_rows[i]:
                    new[x][j] += mass * prob
                if b_rows[i]:
                    if x + 1 > top:
                        raise RuntimeError("level-up past floor(n/k); chain is malformed")
                    for j, prob in b_rows[i]:
                        new[x + 1][j] += mass * prob
        levels = new
        yield _collapse(levels, n)


def _collapse(levels, n: int) -> Pmf:
    return Pmf(tuple(sum(vec) for vec in levels), n)


def pmf_embedding(chain: EmbeddingChain, n: int) -> Pmf:
    """PMF of ``M`` after ``n`` trials, support ``0..floor(n/k)``.

    Examples
    --------
    >>> from fractions import Fraction
    >>> ch = build_chain(TrialParams.from_p(Fraction(1, 2)), RunsPattern(1, 1))
    >>> pmf_embedding(ch, 3).probs
    (Fraction(7, 8), Fraction(1, 8))
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    pmf = None
    for pmf in iter_pmf_embedding(chain, n):
        pass
    return pmf


def double_pgf_series(params: TrialParams, pattern: RunsPattern, t: Scalar, n_max: int) -> list:
    """Coefficients of ``z**0..z**n_max`` in the double generating function at ``t``."""
    a = a_of_p(params, pattern)
    p, q, k = params.p, params.q, pattern.k
    one = params.convert(1)
    t = params.convert(t)
    u = a * (1 - t)
    num = [one] + [0 * one] * (k + 1)
    num[k] += u
    num[k + 1] -= u * q
    den = [one, -one] + [0 * one] * k
    # u z^k (1 - qz)(1 - pz) = u z^k (1 - z + qp z^2)
    den[k] += u
    den[k + 1] -= u
    if k + 2 >= len(den):
        den.append(0 * one)
    den[k + 2] += u * q * p
    return series_divide(num, den, n_max + 1)


def dgf_check(params: TrialParams, pattern: RunsPattern, n_max: int, t) -> float:
    """Largest ``|[z^n] Phi(t, z) - phi_n(t)|`` over ``n <= n_max``.

    ``phi_n`` is evaluated from :func:`pmf_embedding`; the double generating
    function is expanded by power-series division.
    """
    series = double_pgf_series(params, pattern, t, n_max)
    chain = build_chain(params, pattern)
    t = params.convert(t)
    worst = 0.0
    for n, pmf in enumerate(iter_pmf_embedding(chain, n_max)):
        dev = abs(series[n] - poly_eval(pmf.probs, t))
        worst = max(worst, float(dev))
    return worst
