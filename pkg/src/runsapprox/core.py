"""Parameters, scalar constants and coefficient machinery for (k1, k2)-runs.

Two arithmetic modes are supported.  A computation is *exact* when the success
probability is a :class:`fractions.Fraction` and *double* when it is a float;
every quantity derived from a :class:`TrialParams` inherits that mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

Scalar = Union[float, Fraction]

_PROB_TOL = 1e-15


def to_scalar(value, exact: bool) -> Scalar:
    """Convert ``value`` (str, int, float or Fraction) to the requested mode."""
    if exact:
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"not a finite rational: {value!r}")
            # 0.11 should mean 11/100, not the binary expansion
            return Fraction(repr(value))
        return Fraction(value)
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def _auto_mode(value, exact: bool | None) -> bool:
    if exact is None:
        return isinstance(value, Fraction)
    return exact


@dataclass(frozen=True)
class TrialParams:
    """Bernoulli success probability ``p`` and failure probability ``q``.

    Use :meth:`from_p` or :meth:`from_q`; ``q`` is always derived as ``1 - p``.
    :meth:`decoupled_pair` builds a pair with ``p + q != 1`` for evaluating the
    closed-form bound expressions at arbitrary inputs; such a pair is not a
    probability model and the PMF routes that need one refuse it.
    """

    p: Scalar
    q: Scalar
    decoupled: bool = False

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if type(self.p) is not type(self.q):
            raise TypeError("p and q must share one arithmetic mode")
        if not self.decoupled:
            if self.exact and self.p + self.q != 1:
                raise ValueError("p + q must equal 1")
            if not self.exact and abs(self.p + self.q - 1) > _PROB_TOL:
                raise ValueError("p + q must equal 1")

    @classmethod
    def from_p(cls, p, exact: bool | None = None) -> "TrialParams":
        """Build from ``p``; ``exact=None`` picks exact mode for Fraction input."""
        p = to_scalar(p, _auto_mode(p, exact))
        return cls(p, 1 - p)

    @classmethod
    def from_q(cls, q, exact: bool | None = None) -> "TrialParams":
        p = 1 - to_scalar(q, _auto_mode(q, exact))
        return cls(p, 1 - p)

    @classmethod
    def decoupled_pair(cls, p, q, exact: bool | None = None) -> "TrialParams":
        exact = _auto_mode(p, exact)
        return cls(to_scalar(p, exact), to_scalar(q, exact), decoupled=True)

    @property
    def exact(self) -> bool:
        return isinstance(self.p, Fraction)

    def require_probability_model(self) -> None:
        if self.decoupled:
            raise ValueError("this computation needs p + q = 1; got a decoupled (p, q) pair")

    def convert(self, value) -> Scalar:
        return to_scalar(value, self.exact)


@dataclass(frozen=True)
class RunsPattern:
    """Exactly ``k1`` failures followed by exactly ``k2`` successes."""

    k1: int
    k2: int
    k: int = field(init=False)

    def __post_init__(self):
        for name in ("k1", "k2"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        object.__setattr__(self, "k", self.k1 + self.k2)


@dataclass(frozen=True)
class Pmf:
    """Probabilities indexed from 0 for the count after ``n`` trials."""

    probs: tuple
    n: int

    def __getitem__(self, m: int) -> Scalar:
        return self.probs[m]

    def __len__(self) -> int:
        return len(self.probs)

    def get(self, m: int):
        if 0 <= m < len(self.probs):
            return self.probs[m]
        return 0

    def total(self) -> Scalar:
        return sum(self.probs)

    def moment(self, j: int) -> Scalar:
        return sum((m ** j) * x for m, x in enumerate(self.probs))

    def as_floats(self) -> list[float]:
        return [float(x) for x in self.probs]


# ---------------------------------------------------------------------------
# scalar constants


def a_of_p(params: TrialParams, pattern: RunsPattern) -> Scalar:
    """Probability weight ``q**k1 * p**k2`` of one pattern body."""
    return params.q ** pattern.k1 * params.p ** pattern.k2


def mean_formula(n: int, params: TrialParams, pattern: RunsPattern) -> Scalar:
    """``q[1 + (n-k-1)p] a(p)``; equals E[M] for n >= k+1."""
    p, q, k = params.p, params.q, pattern.k
    return q * (1 + (n - k - 1) * p) * a_of_p(params, pattern)


def s_nk(n: int, params: TrialParams, pattern: RunsPattern) -> Scalar:
    """Mean minus variance of M.

    The closed form agrees with the exact variance for ``n >= 2k + 2`` only.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p, q, k = params.p, params.q, pattern.k
    a = a_of_p(params, pattern)
    poly = ((n * (2 * k + 3) - (3 * k + 5) * (k + 1)) * q * q * p * p
            - 2 * (k + 1) * q ** 3
            + (2 * n - 2 * k + 1) * q * q
            - 2 * (n - 2 * k) * q)
    return poly * a * a


def variance_formula(n: int, params: TrialParams, pattern: RunsPattern) -> Scalar:
    return mean_formula(n, params, pattern) - s_nk(n, params, pattern)


def delta_consts(params: TrialParams, pattern: RunsPattern) -> tuple[Scalar, Scalar]:
    """Return ``(delta, delta1)``."""
    p, q, k = params.p, params.q, pattern.k
    base = 1 + q + q * p
    delta = 2 + q + base * (k + 1)
    delta1 = (2 + q + base * (2 * k + 1)) * (k + 1)
    return delta, delta1


def power_ratio(k: int, num_exp: int, den_exp: int, exact: bool) -> Scalar:
    """``(k+1)**num_exp / (k+2)**den_exp`` without overflow in double mode."""
    if exact:
        return Fraction(k + 1) ** num_exp / Fraction(k + 2) ** den_exp
    return math.exp(num_exp * math.log(k + 1) - den_exp * math.log(k + 2))


def c_const(i: int, n: int, pattern: RunsPattern, exact: bool = False) -> Scalar:
    """Constant ``c^(i)_{n,k}`` for ``i`` in 1..6."""
    k = pattern.k
    r = lambda a, b: power_ratio(k, a, b, exact)  # noqa: E731
    if i == 1:
        return n - 2 * k - 2 + r(n - k, n - k - 1)
    if i == 2:
        return n - 3 * k + k * r(n - 2 * k, n - 2 * k)
    if i == 3:
        return n - 5 * k + k * (n * k + 6 * k + 4 - k * k) * r(n - 3 * k - 1, n - 3 * k + 1)
    if i == 4:
        return (n * (3 * k + 1) - (11 * k * k + 9 * k + 2)
                + (2 * n * k + k * k + 7 * k + 2) * r(n - 2 * k, n - 2 * k))
    if i == 5:
        return (n - 2 * k - 2) * (k + 1) + r(n - k + 1, n - k - 1)
    if i == 6:
        return (n * (k * k + 3 * k + 20) - (17 * k ** 3 + 63 * k * k + 72 * k + 24)
                + 2 * (n + 3 * k + 6) * r(n - k + 1, n - k - 1))
    raise ValueError(f"c constant defined for i in 1..6 only, got {i}")


# ---------------------------------------------------------------------------
# derivative-recursion constants a_i, b_i, d_i


@dataclass(frozen=True)
class SequenceConstants:
    """``a_i``, ``d_i`` and the ``b_i`` rules for a fixed trial count ``n``."""

    n: int
    a_coeffs: tuple
    d_limits: tuple
    q: Scalar
    k: int

    def b(self, i: int, x: int) -> Scalar:
        if i == 1:
            return x + 1
        if i == 3:
            return x
        if i == 2:
            if x == self.k + 1:
                return -self.q * (self.k + 2)
            return x + 1 - self.q
        raise ValueError(f"i must be 1, 2 or 3, got {i}")

    def terms(self):
        """Yield ``(i, a_i, d_i)`` for i = 1, 2, 3."""
        for i in (1, 2, 3):
            yield i, self.a_coeffs[i - 1], self.d_limits[i - 1]


def sequence_constants(n: int, params: TrialParams, pattern: RunsPattern) -> SequenceConstants:
    k = pattern.k
    return SequenceConstants(
        n=n,
        a_coeffs=(1, -1, params.q * params.p),
        d_limits=(n - k - 2, n - k - 1, n - k - 2),
        q=params.q,
        k=k,
    )


# ---------------------------------------------------------------------------
# C_s(t) and its t-coefficients B_s(l)


def multinomial(total: int, parts: Sequence[int]) -> int:
    """Exact multinomial coefficient; zero when any part is negative."""
    if any(x < 0 for x in parts) or sum(parts) != total:
        return 0
    out = math.factorial(total)
    for x in parts:
        out //= math.factorial(x)
    return out


def _sign(e: int) -> int:
    return -1 if e % 2 else 1


def _cs_terms(s: int, k: int):
    """Yield ``(l, m, weight_numerator, j0, N)`` for the C_s(t) double sum."""
    for l in range(s // k + 1):
        for m in range((s - l * k) // (k + 1) + 1):
            j0 = s - l * k - m * (k + 1)
            total = s - l * (k - 1) - m * k
            yield l, m, multinomial(total, (j0, l, m)), j0, total


def poly_C(s: int, params: TrialParams, pattern: RunsPattern) -> list[Scalar]:
    """Coefficients of ``C_s`` in powers of ``u = a(p)(t - 1)``.

    ``C_s(t)`` is the coefficient of ``z**s`` in
    ``1 / ((k+2) - (k+1) z - a(p)(t-1) z**k (2 - z))``.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    k = pattern.k
    exact = params.exact
    coefs = [params.convert(0)] * (s // k + 1)
    for l, m, mult, j0, total in _cs_terms(s, k):
        term = mult * power_ratio(k, j0, total + 1, exact) * _sign(m) * 2 ** l
        coefs[l + m] += term
    return coefs


@lru_cache(maxsize=None)
def _coeff_B_cached(s: int, l: int, a: Scalar, k: int, exact: bool) -> Scalar:
    total_out = Fraction(0) if exact else 0.0
    for ll in range(s // k + 1):
        r_hi = (s - ll * k) // (k + 1)
        for r in range(max(0, l - ll), r_hi + 1):
            j0 = s - ll * k - r * (k + 1)
            total = s - ll * (k - 1) - r * k
            mult = multinomial(total, (j0, ll, r)) * math.comb(ll + r, l)
            total_out += (mult * power_ratio(k, j0, total + 1, exact)
                          * _sign(ll - l) * 2 ** ll * a ** (ll + r))
    return total_out


def coeff_B(s: int, l: int, params: TrialParams, pattern: RunsPattern) -> Scalar:
    """Coefficient of ``t**l`` in ``C_s(t)``.

    Summation indices whose printed lower limits go negative are clamped at
    zero; the dropped terms carry a vanishing multinomial or binomial factor.
    """
    k = pattern.k
    if s < 0 or l < 0:
        raise ValueError("s and l must be >= 0")
    if l > s // k:
        raise ValueError(f"l={l} exceeds floor(s/k)={s // k}; the coefficient is zero")
    return _coeff_B_cached(s, l, a_of_p(params, pattern), k, params.exact)


def u_basis_to_t(coefs_u: Sequence[Scalar], a: Scalar) -> list[Scalar]:
    """Rewrite ``sum c_j (a(t-1))**j`` as coefficients of powers of ``t``."""
    out = [0 * a] * len(coefs_u)
    for j, c in enumerate(coefs_u):
        if not c:
            continue
        scale = c * a ** j
        for m in range(j + 1):
            out[m] += scale * math.comb(j, m) * _sign(j - m)
    return out
