"""Exact law of the runs count M: recursions, closed forms and waiting times.

Every function works in the arithmetic mode of its :class:`TrialParams`.
Terms whose trial count or occurrence index falls outside the support are
read as zero throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from ._poly import poly_add, poly_scale
from .core import (
    Pmf,
    RunsPattern,
    Scalar,
    TrialParams,
    a_of_p,
    multinomial,
)

CLOSED_FORM_DOUBLE_LIMIT = 60


def _sign(e: int) -> int:
    return -1 if e % 2 else 1


@dataclass(frozen=True)
class PmfTable:
    """PMFs of ``M`` for every trial count ``0..n``.

    ``table[nu]`` is the :class:`Pmf` after ``nu`` trials and ``table.p(m, nu)``
    reads a single probability with the zero convention outside the support.
    """

    rows: tuple
    params: TrialParams
    pattern: RunsPattern

    @property
    def n(self) -> int:
        return len(self.rows) - 1

    def __getitem__(self, nu: int) -> Pmf:
        return self.rows[nu]

    def __len__(self) -> int:
        return len(self.rows)

    def p(self, m: int, nu: int) -> Scalar:
        if nu < 0 or nu >= len(self.rows) or m < 0:
            return self.params.convert(0)
        row = self.rows[nu].probs
        return row[m] if m < len(row) else self.params.convert(0)


# ---------------------------------------------------------------------------
# recursions


def pgf_recursive(n: int, params: TrialParams, pattern: RunsPattern) -> list[Scalar]:
    """Coefficients of the PGF ``phi_n(t)`` built by polynomial recursion.

    ``phi_n = phi_{n-1} + a(p)(t-1)[phi_{n-k} - phi_{n-k-1} + qp phi_{n-k-2}]``
    for ``n >= k + 2``, with ``phi_n = 1`` for ``n <= k`` and
    ``phi_{k+1} = 1 + q a(p)(t-1)``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    k = pattern.k
    a = a_of_p(params, pattern)
    one = params.convert(1)
    qa = params.q * a
    polys: list[list] = []
    for nu in range(n + 1):
        if nu <= k:
            polys.append([one] + [0 * one] * (nu // k))
        elif nu == k + 1:
            polys.append([one - qa, qa])
        else:
            inner = poly_add(poly_add(polys[nu - k], poly_scale(polys[nu - k - 1], -one)),
                             poly_scale(polys[nu - k - 2], params.q * params.p))
            # multiply by a(t - 1)
            shifted = [0 * one] + poly_scale(inner, a)
            shifted = poly_add(shifted, poly_scale(inner, -a))
            polys.append(_trim_to(poly_add(polys[nu - 1], shifted), nu // k + 1))
    return polys[n]


def _trim_to(coefs: list, length: int) -> list:
    tail = coefs[length:]
    if any(abs(x) > 1e-12 for x in tail):
        raise ArithmeticError("PGF has mass beyond floor(n/k)")
    return coefs[:length] + [0 * coefs[0]] * (length - len(coefs))


def pmf_recursive(n: int, params: TrialParams, pattern: RunsPattern) -> PmfTable:
    """PMF rows ``0..n`` from the coefficient recursion.

    ``p_{m,n} = p_{m,n-1} - a(p)[(p_{m,n-k} - p_{m-1,n-k})
    - (p_{m,n-k-1} - p_{m-1,n-k-1}) + qp(p_{m,n-k-2} - p_{m-1,n-k-2})]``.

    Decoupled ``(p, q)`` pairs are accepted: the recursion is then evaluated
    as a formula and the rows need not be probability laws.

    Examples
    --------
    >>> from fractions import Fraction
    >>> tab = pmf_recursive(3, TrialParams.from_p(Fraction(1, 2)), RunsPattern(1, 1))
    >>> tab[3].probs
    (Fraction(7, 8), Fraction(1, 8))
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    k = pattern.k
    a = a_of_p(params, pattern)
    qp = params.q * params.p
    one = params.convert(1)
    zero = params.convert(0)
    rows: list[list] = []

    def get(m: int, nu: int):
        if nu < 0 or m < 0:
            return zero
        r = rows[nu]
        return r[m] if m < len(r) else zero

    for nu in range(n + 1):
        if nu <= k:
            rows.append([one] + [zero] * (nu // k))
            continue
        if nu == k + 1:
            qa = params.q * a
            rows.append([one - qa, qa])
            continue
        row = []
        for m in range(nu // k + 1):
            diff = ((get(m, nu - k) - get(m - 1, nu - k))
                    - (get(m, nu - k - 1) - get(m - 1, nu - k - 1))
                    + qp * (get(m, nu - k - 2) - get(m - 1, nu - k - 2)))
            row.append(get(m, nu - 1) - a * diff)
        rows.append(row)
    return PmfTable(tuple(Pmf(tuple(r), nu) for nu, r in enumerate(rows)), params, pattern)


def moments_recursive(n: int, j_max: int, params: TrialParams, pattern: RunsPattern) -> list[list[Scalar]]:
    """Raw moments ``mu[nu][j] = E[(M^nu)**j]`` for ``nu <= n`` and ``j <= j_max``.

    ``mu[nu][0] = 1`` by convention.  For ``j >= 1`` the table is zero up to
    ``nu = k``, equals ``q a(p)`` at ``nu = k + 1``, and then follows
    ``mu_{nu,j} = mu_{nu-1,j} + a(p) sum_{l<j} C(j,l)(mu_{nu-k,l} - mu_{nu-k-1,l} + qp mu_{nu-k-2,l})``.
    """
    if n < 0 or j_max < 1:
        raise ValueError("need n >= 0 and j_max >= 1")
    k = pattern.k
    a = a_of_p(params, pattern)
    qp = params.q * params.p
    one = params.convert(1)
    zero = params.convert(0)
    mu: list[list] = []
    for nu in range(n + 1):
        row = [one]
        for j in range(1, j_max + 1):
            if nu <= k:
                row.append(zero)
            elif nu == k + 1:
                row.append(params.q * a)
            else:
                acc = zero
                for l in range(j):
                    acc += math.comb(j, l) * (mu[nu - k][l] - mu[nu - k - 1][l] + qp * mu[nu - k - 2][l])
                row.append(mu[nu - 1][j] + a * acc)
        mu.append(row)
    return mu


# ---------------------------------------------------------------------------
# closed forms


def _warn_double(n: int, params: TrialParams, what: str) -> None:
    if not params.exact and n > CLOSED_FORM_DOUBLE_LIMIT:
        warnings.warn(
            f"{what} in double precision for n={n} > {CLOSED_FORM_DOUBLE_LIMIT}: "
            "alternating multinomial sums may cancel badly; use exact mode",
            RuntimeWarning,
            stacklevel=3,
        )


@lru_cache(maxsize=None)
def _psi_weights_int(n: int, k: int) -> tuple:
    """Integer pieces of the psi expansion grouped by ``N = l + r + s``.

    Returns a tuple over N of tuples ``(s, signed_multinomial)`` so that
    ``psi_n(t) = sum_N sum_s coef * (qp)**s * (a(p)(t-1))**N``.
    """
    if n < 0:
        return ()
    groups: dict[int, dict[int, int]] = {}
    for s in range(n // (k + 2) + 1):
        for r in range((n - s * (k + 2)) // (k + 1) + 1):
            for l in range((n - s * (k + 2) - r * (k + 1)) // k + 1):
                j0 = n - l * k - r * (k + 1) - s * (k + 2)
                total = j0 + l + r + s
                c = multinomial(total, (j0, l, r, s)) * _sign(r)
                bucket = groups.setdefault(l + r + s, {})
                bucket[s] = bucket.get(s, 0) + c
    top = max(groups) if groups else 0
    return tuple(tuple(sorted(groups.get(N, {}).items())) for N in range(top + 1))


def _psi_weights(n: int, params: TrialParams, pattern: RunsPattern) -> list[Scalar]:
    """``w[N]`` with ``psi_n(t) = sum_N w[N] (t-1)**N``; includes ``a(p)**N``."""
    a = a_of_p(params, pattern)
    qp = params.q * params.p
    out = []
    for N, items in enumerate(_psi_weights_int(n, pattern.k)):
        out.append(sum(c * qp ** s for s, c in items) * a ** N if items else 0 * a)
    return out


def psi_closed(n: int, params: TrialParams, pattern: RunsPattern, t) -> Scalar:
    """Triple multinomial sum ``psi_n(t)``; zero for negative ``n``."""
    if n < 0:
        return params.convert(0)
    t = params.convert(t)
    return sum((w * (t - 1) ** N for N, w in enumerate(_psi_weights(n, params, pattern))),
               params.convert(0))


def pgf_closed(n: int, params: TrialParams, pattern: RunsPattern, t) -> Scalar:
    """``phi_n(t) = psi_n(t) - a(p)(t-1)[psi_{n-k}(t) - q psi_{n-k-1}(t)]``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    _warn_double(n, params, "pgf_closed")
    k = pattern.k
    t = params.convert(t)
    a = a_of_p(params, pattern)
    return (psi_closed(n, params, pattern, t)
            - a * (t - 1) * (psi_closed(n - k, params, pattern, t)
                             - params.q * psi_closed(n - k - 1, params, pattern, t)))


def tilde_p(m: int, n: int, params: TrialParams, pattern: RunsPattern, shift: int = 0) -> Scalar:
    """``sum_N w_n[N] C(N + shift, m) (-1)**(N - m)``.

    With ``shift = 0`` this is the coefficient of ``t**m`` in ``psi_n(t)``;
    a positive shift gives the coefficient in ``(1 - t)**shift psi_n(t)``.
    """
    if n < 0 or m < 0:
        return params.convert(0)
    acc = params.convert(0)
    for N, w in enumerate(_psi_weights(n, params, pattern)):
        if w and m <= N + shift:
            acc += w * math.comb(N + shift, m) * _sign(N - m)
    return acc


def pmf_closed(m: int, n: int, params: TrialParams, pattern: RunsPattern) -> Scalar:
    """``P(M^n = m)`` from the explicit multinomial sums.

    ``p_{m,n} = pt_{m,n} + a(p)[(pt_{m,n-k} - pt_{m-1,n-k}) - q(pt_{m,n-k-1} - pt_{m-1,n-k-1})]``
    where ``pt`` is :func:`tilde_p`.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if m < 0 or m > n // pattern.k:
        raise ValueError(f"m must lie in 0..floor(n/k) = 0..{n // pattern.k}")
    _warn_double(n, params, "pmf_closed")
    k = pattern.k
    a = a_of_p(params, pattern)
    tp = lambda mm, nn: tilde_p(mm, nn, params, pattern)  # noqa: E731
    return tp(m, n) + a * ((tp(m, n - k) - tp(m - 1, n - k))
                           - params.q * (tp(m, n - k - 1) - tp(m - 1, n - k - 1)))


def pmf_closed_row(n: int, params: TrialParams, pattern: RunsPattern) -> Pmf:
    return Pmf(tuple(pmf_closed(m, n, params, pattern) for m in range(n // pattern.k + 1)), n)


# ---------------------------------------------------------------------------
# star tables


@dataclass(frozen=True)
class StarTables:
    """``p_star[m][l]`` and ``p_star_star[m][l]`` for ``l = 1..l_max``.

    Index 0 of the inner lists is unused and holds zero.
    """

    n: int
    l_max: int
    p_star: tuple
    p_star_star: tuple


def _star_value(table: PmfTable, n: int, m: int, l: int) -> Scalar:
    k = table.pattern.k
    q, qp = table.params.q, table.params.q * table.params.p
    P = table.p
    val = P(m, n - k) - P(m, n - k - l)
    for u in range(l):
        val += qp * P(m, n - k - u - 2)
        if u == n - k:
            val -= P(m, n - k - u)
        if u == n - k - 1:
            val += q * P(m, n - k - u - 1)
    return val


def star_tables(n: int, l_max: int, params: TrialParams, pattern: RunsPattern,
                table: PmfTable | None = None) -> StarTables:
    """Evaluate the single- and double-star auxiliary PMF combinations.

    ``p*_{m,n,l} = p_{m,n-k} - p_{m,n-k-l} + sum_{u<l}[qp p_{m,n-k-u-2}
    - p_{m,n-k-u} 1(u=n-k) + q p_{m,n-k-u-1} 1(u=n-k-1)]`` and ``p**`` is the
    same combination applied to ``p*_{m,n,k+.}`` in place of ``p_{m,n-.}``.
    They satisfy ``p_{m,n} = p_{m,n-l} - a(p)(p*_{m,n,l} - p*_{m-1,n,l})``
    whenever ``l <= n``.
    """
    if n < 0 or l_max < 1:
        raise ValueError("need n >= 0 and l_max >= 1")
    if table is None or table.n < n:
        table = pmf_recursive(n, params, pattern)
    k = pattern.k
    q, qp = params.q, params.q * params.p
    zero = params.convert(0)
    m_top = n // k + 1
    cache: dict = {}

    def star(m: int, l: int):
        key = (m, l)
        if key not in cache:
            cache[key] = _star_value(table, n, m, l)
        return cache[key]

    ps, pss = [], []
    for m in range(m_top + 1):
        row_s, row_ss = [zero], [zero]
        for l in range(1, l_max + 1):
            row_s.append(star(m, l))
            val = star(m, k) - star(m, k + l)
            for u in range(l):
                val += qp * star(m, k + u + 2)
                if u == n - k:
                    val -= star(m, k + u)
                if u == n - k - 1:
                    val += q * star(m, k + u + 1)
            row_ss.append(val)
        ps.append(tuple(row_s))
        pss.append(tuple(row_ss))
    return StarTables(n=n, l_max=l_max, p_star=tuple(ps), p_star_star=tuple(pss))


# ---------------------------------------------------------------------------
# consecutive-shift total variation


def tv_consecutive(n: int, params: TrialParams, pattern: RunsPattern,
                   table: PmfTable | None = None) -> Scalar:
    """``d_TV(M^n, M^n + 1) = 1/2 sum_m |p_{m,n} - p_{m-1,n}|`` from the PMF."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if table is None or table.n < n:
        table = pmf_recursive(n, params, pattern)
    row = table[n].probs
    total = abs(row[0]) + abs(row[-1])
    for m in range(1, len(row)):
        total += abs(row[m] - row[m - 1])
    return total / 2


def tv_consecutive_expansion(n: int, params: TrialParams, pattern: RunsPattern) -> Scalar:
    """Same distance via the shifted multinomial sums.

    ``1/2 sum_{m <= n/k + 1} |pt_{m,n,1} + a(p)(pt_{m,n-k,2} - q pt_{m,n-k-1,2})|``.
    Used as an independent cross-check of :func:`tv_consecutive`.  In double
    mode the sums run on the exact rational value of the inputs and are
    rounded once at the end.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    work = params
    if not params.exact:
        work = TrialParams(Fraction(params.p), Fraction(params.q), decoupled=True)
    k = pattern.k
    a = a_of_p(work, pattern)
    total = Fraction(0)
    for m in range(n // k + 2):
        val = (tilde_p(m, n, work, pattern, 1)
               + a * (tilde_p(m, n - k, work, pattern, 2)
                      - work.q * tilde_p(m, n - k - 1, work, pattern, 2)))
        total += abs(val)
    out = total / 2
    return out if params.exact else float(out)


# ---------------------------------------------------------------------------
# waiting time for the r-th occurrence


def _waiting_ratio(t, params: TrialParams, pattern: RunsPattern):
    a = a_of_p(params, pattern)
    p, q, k = params.p, params.q, pattern.k
    body = a * t ** k * (1 - q * t) * (1 - p * t)
    den = 1 - t + body
    if den == 0:
        raise ZeroDivisionError(f"waiting-time PGF has a pole at t={t}")
    return body / den


def _check_pole(t, params: TrialParams) -> None:
    if 1 - params.p * t == 0:
        raise ValueError(f"t = 1/p = {t} is a pole of the waiting-time PGF")


def waiting_pgf(r: int, params: TrialParams, pattern: RunsPattern, t) -> Scalar:
    """PGF of the trial index at which the ``r``-th occurrence completes.

    ``M_r(t) = qt/(1-pt) * (a t^k (1-qt)(1-pt) / (1 - t + a t^k (1-qt)(1-pt)))**r``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    params.require_probability_model()
    t = params.convert(t)
    _check_pole(t, params)
    return params.q * t / (1 - params.p * t) * _waiting_ratio(t, params, pattern) ** r


def waiting_pgf_uncorrected(r: int, params: TrialParams, pattern: RunsPattern, t) -> Scalar:
    """The expression without the leading ``qt`` factor, ``ratio**r / (1 - pt)``.

    It is not a PGF: its value at ``t = 1`` is ``1/q``.  Kept as a regression
    reference.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    t = params.convert(t)
    _check_pole(t, params)
    return _waiting_ratio(t, params, pattern) ** r / (1 - params.p * t)


@dataclass(frozen=True)
class WaitingPmf:
    """``probs[m] = P(W_r = m)`` for ``m = 0..m_max``."""

    probs: tuple
    r: int

    def total(self) -> Scalar:
        return sum(self.probs)


def waiting_pmf(r: int, m_max: int, params: TrialParams, pattern: RunsPattern) -> WaitingPmf:
    """Law of the waiting time ``W_r`` truncated at ``m_max``.

    ``f_1`` starts with ``f_1(k+1) = q a(p)`` and ``f_1(k+2) = qp a(p)`` and
    follows ``f_1(m) = f_1(m-1) - a(p)[f_1(m-k) - f_1(m-k-1) + qp f_1(m-k-2)]``
    from ``m = k + 3``.  For ``r >= 2``, ``f_r`` is driven by ``f_{r-1}``::

        f_r(m) = f_r(m-1) + a(p)[(f_{r-1} - f_r)(m-k) - (f_{r-1} - f_r)(m-k-1)
                                 + qp (f_{r-1} - f_r)(m-k-2)]
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    params.require_probability_model()
    k = pattern.k
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    a = a_of_p(params, pattern)
    p, q = params.p, params.q
    qp = q * p
    zero = params.convert(0)
    size = m_max + 1

    f1 = [zero] * size
    for m in range(k + 1, size):
        if m == k + 1:
            f1[m] = q * a
        elif m == k + 2:
            f1[m] = qp * a
        else:
            f1[m] = f1[m - 1] - a * (f1[m - k] - f1[m - k - 1] + qp * f1[m - k - 2])
    prev = f1
    for rr in range(2, r + 1):
        cur = [zero] * size
        g = lambda seq, i: seq[i] if i >= 0 else zero  # noqa: E731
        for m in range(rr * k + 1, size):
            d = lambda i: g(prev, i) - g(cur, i)  # noqa: E731
            cur[m] = cur[m - 1] + a * (d(m - k) - d(m - k - 1) + qp * d(m - k - 2))
        prev = cur
    return WaitingPmf(tuple(prev), r)


def waiting_moments(r: int, j_max: int, params: TrialParams, pattern: RunsPattern) -> list[list[Scalar]]:
    """Raw moments ``mu[rr][j] = E[W_rr**j]`` for ``rr <= r`` and ``j <= j_max``.

    Row 0 is the point mass at zero.  The printed recursion contains the
    unknown ``mu[rr][j]`` on both sides; it is solved explicitly here.  With
    ``c_d = k**d - (k+1)**d + qp (k+2)**d``::

        a q p mu[1][j] = sum_{l<j} C(j,l) mu[1][l] (1 - a c_{j-l})
                         + q a ((k+1)**j - q (k+2)**j)
        mu[r][j] = mu[r-1][j] + 1/(a q p) sum_{l<j} C(j,l)
                   (mu[r][l] + a c_{j-l} (mu[r-1][l] - mu[r][l]))

    Raises
    ------
    ZeroDivisionError
        If ``a(p) q p`` vanishes (degenerate parameters).
    """
    if r < 1 or j_max < 1:
        raise ValueError("need r >= 1 and j_max >= 1")
    params.require_probability_model()
    k = pattern.k
    a = a_of_p(params, pattern)
    p, q = params.p, params.q
    qp = q * p
    lead = a * qp
    if lead == 0:
        raise ZeroDivisionError("a(p) q p vanishes; waiting-time moments are degenerate")
    one = params.convert(1)
    zero = params.convert(0)
    c = [k ** d - (k + 1) ** d + qp * (k + 2) ** d for d in range(j_max + 1)]
    mu = [[one] + [zero] * j_max]
    row = [one]
    for j in range(1, j_max + 1):
        acc = sum((math.comb(j, l) * row[l] * (1 - a * c[j - l]) for l in range(j)), zero)
        acc += q * a * ((k + 1) ** j - q * (k + 2) ** j)
        row.append(acc / lead)
    mu.append(row)
    for rr in range(2, r + 1):
        prev = mu[-1]
        row = [one]
        for j in range(1, j_max + 1):
            acc = sum((math.comb(j, l) * (row[l] + a * c[j - l] * (prev[l] - row[l]))
                       for l in range(j)), zero)
            row.append(prev[j] + acc / lead)
        mu.append(row)
    return mu
