"""Stein operators, moment matching and total-variation bounds for M.

Target laws are written as discrete Gibbs measures
``gamma(m) ∝ w**m * prod_{i<m}(ratio_a + ratio_b * i) / m!``; Poisson,
pseudo-binomial and negative binomial laws are the three instances used.

Each ``bound_*`` function evaluates a fixed closed-form bound and returns a
:class:`BoundReport`.  A report whose hypotheses fail carries ``bound=None``
and ``applicable=False``; it is never a silent zero.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional

from .core import (
    RunsPattern,
    Scalar,
    TrialParams,
    a_of_p,
    c_const,
    coeff_B,
    delta_consts,
    mean_formula,
    s_nk,
    sequence_constants,
)
from .distributions import PmfTable, pmf_recursive, tv_consecutive

GIBBS_TAIL = 1e-17


class InapplicableError(ValueError):
    """A bound or matching step was requested outside its hypotheses."""


# ---------------------------------------------------------------------------
# Gibbs measures


@dataclass(frozen=True)
class GibbsSpec:
    """Gibbs measure with affine ratio ``e^{U(m+1)-U(m)} = ratio_a + ratio_b*m``.

    ``support_end`` is the last support point or ``None`` for an unbounded
    support.
    """

    w: float
    ratio_a: float
    ratio_b: float
    support_end: Optional[int] = None
    family: str = "gibbs"

    def ratio(self, m: int) -> float:
        return self.ratio_a + self.ratio_b * m

    def in_support(self, m: int) -> bool:
        return m >= 0 and (self.support_end is None or m <= self.support_end)


def poisson_spec(lam: float) -> GibbsSpec:
    if not lam > 0:
        raise ValueError("Poisson mean must be positive")
    return GibbsSpec(w=float(lam), ratio_a=1.0, ratio_b=0.0, family="poisson")


def pseudo_binomial_spec(alpha: float, p: float) -> GibbsSpec:
    """Binomial form with real ``alpha`` truncated to ``0..floor(alpha)``."""
    if not alpha > 0 or not 0 < p < 1:
        raise ValueError("need alpha > 0 and 0 < p < 1")
    if math.floor(alpha) < 1:
        raise ValueError("floor(alpha) must be at least 1")
    return GibbsSpec(w=float(p / (1 - p)), ratio_a=float(alpha), ratio_b=-1.0,
                     support_end=math.floor(alpha), family="pseudo-binomial")


def negative_binomial_spec(alpha: float, p: float) -> GibbsSpec:
    """``P(X=m) = Gamma(alpha+m)/(Gamma(alpha) m!) p**alpha (1-p)**m``."""
    if not alpha > 0 or not 0 < p < 1:
        raise ValueError("need alpha > 0 and 0 < p < 1")
    return GibbsSpec(w=float(1 - p), ratio_a=float(alpha), ratio_b=1.0,
                     family="negative-binomial")


def gibbs_log_weights(spec: GibbsSpec) -> list[float]:
    """Unnormalized ``log gamma(m)`` from ``gamma(m+1)/gamma(m) = w*ratio(m)/(m+1)``.

    An unbounded support is cut once the neglected tail, bounded by a
    geometric series, falls below ``1e-17`` times the mode weight.
    """
    logs = [0.0]
    m = 0
    while spec.support_end is None or m < spec.support_end:
        r = spec.ratio(m)
        if r < 0:
            raise ValueError(f"negative ratio {r} at m={m} inside the support")
        if r == 0:
            break
        logs.append(logs[-1] + math.log(spec.w * r) - math.log(m + 1))
        m += 1
        if spec.support_end is None:
            # later ratios w(a+bm)/(m+1) are monotone towards w*b, so the
            # remaining tail is dominated by a geometric series with this rate
            rate = max(spec.w * spec.ratio(m) / (m + 1), spec.w * spec.ratio_b)
            if rate < 1 and logs[-1] - max(logs) < math.log(GIBBS_TAIL * (1 - rate)):
                break
    return logs


def gibbs_table(spec: GibbsSpec, m_max: Optional[int] = None) -> list[float]:
    """Normalized ``gamma(0), gamma(1), ...``, optionally cut at ``m_max``."""
    logs = gibbs_log_weights(spec)
    top = max(logs)
    vals = [math.exp(x - top) for x in logs]
    total = math.fsum(vals)
    out = [v / total for v in vals]
    return out if m_max is None else out[: m_max + 1]


def gibbs_pmf(spec: GibbsSpec, m: int) -> float:
    """``gamma(m)``; zero outside the support."""
    if not spec.in_support(m):
        return 0.0
    table = gibbs_table(spec, m_max=max(m, 0))
    return table[m] if m < len(table) else 0.0


def stein_apply(spec: GibbsSpec, g: Callable[[int], float], m: int) -> float:
    """``w (ratio_a + ratio_b m) g(m+1) - m g(m)``."""
    return spec.w * spec.ratio(m) * g(m + 1) - m * g(m)


def gibbs_stein_expectation(spec: GibbsSpec, g: Callable[[int], float]) -> float:
    """``E_gamma[stein_apply(spec, g, X)]``; zero up to rounding for admissible ``g``."""
    table = gibbs_table(spec)
    return math.fsum(gm * stein_apply(spec, g, m) for m, gm in enumerate(table))


# ---------------------------------------------------------------------------
# perturbed operator for M


def _shift_sums(g, n: int, params: TrialParams, pattern: RunsPattern,
                table: PmfTable, offset: int) -> Scalar:
    """``sum_i a_i sum_s b_i(n-s) sum_l B_s(l) sum_m g(m+l+offset) p_{m,n-k-s-i+1}``."""
    k = pattern.k
    consts = sequence_constants(n, params, pattern)
    total = params.convert(0)
    for i, a_i, d_i in consts.terms():
        for s in range(d_i + 1):
            b = consts.b(i, n - s)
            if not b:
                continue
            nu = n - k - s - i + 1
            row = table[nu].probs
            inner = params.convert(0)
            for l in range(s // k + 1):
                B = coeff_B(s, l, params, pattern)
                inner += B * sum(g(m + l + offset) * pm for m, pm in enumerate(row))
            total += a_i * b * inner
    return total


def perturbed_expectation(g, n: int, params: TrialParams, pattern: RunsPattern,
                          spec: GibbsSpec, table: Optional[PmfTable] = None) -> Scalar:
    """Expectation of the correction term of the Stein operator for ``M^n``.

    ``E[U g] = a(p) S_1 - ratio_a w E[g(M+1)] - w ratio_b a(p) S_2`` where
    ``S_j`` are the shifted sums of :func:`_shift_sums` with offsets 1 and 2.
    Adding ``E[A_gamma g(M^n)]`` gives zero for every ``g``.
    """
    if n < pattern.k + 2:
        raise ValueError("the perturbed operator needs n >= k + 2")
    if table is None or table.n < n:
        table = pmf_recursive(n, params, pattern)
    a = a_of_p(params, pattern)
    w, ra, rb = (params.convert(x) for x in (spec.w, spec.ratio_a, spec.ratio_b))
    row = table[n].probs
    out = a * _shift_sums(g, n, params, pattern, table, 1)
    out -= ra * w * sum(g(m + 1) * pm for m, pm in enumerate(row))
    if rb:
        out -= w * rb * a * _shift_sums(g, n, params, pattern, table, 2)
    return out


def stein_residual(g, n: int, params: TrialParams, pattern: RunsPattern,
                   spec: GibbsSpec, table: Optional[PmfTable] = None) -> Scalar:
    """``E[A_gamma g(M^n)] + E[U g(M^n)]`` (zero when the operator is exact)."""
    if table is None or table.n < n:
        table = pmf_recursive(n, params, pattern)
    w, ra, rb = (params.convert(x) for x in (spec.w, spec.ratio_a, spec.ratio_b))
    row = table[n].probs
    main = sum((w * (ra + rb * m) * g(m + 1) - m * g(m)) * pm for m, pm in enumerate(row))
    return main + perturbed_expectation(g, n, params, pattern, spec, table)


# ---------------------------------------------------------------------------
# moment matching


def match_poisson(n: int, params: TrialParams, pattern: RunsPattern) -> Scalar:
    """Poisson mean ``lambda = q[1 + (n-k-1)p] a(p)``, the mean of ``M^n``."""
    if n < pattern.k + 1:
        raise InapplicableError("mean formula needs n >= k + 1")
    return mean_formula(n, params, pattern)


def match_one_parameter(n: int, params: TrialParams, pattern: RunsPattern, family: str,
                        alpha=None, p_fixed=None) -> tuple:
    """Match the mean with one of ``(alpha, p)`` held fixed.

    ``family`` is ``"pseudo-binomial"`` (``alpha p = lambda``) or
    ``"negative-binomial"`` (``alpha q / p = lambda``).  Supply at most one of
    ``alpha`` and ``p_fixed``; with neither, ``alpha = floor(n/k)``.

    Returns
    -------
    (alpha, p, convention) : tuple
    """
    if alpha is not None and p_fixed is not None:
        raise ValueError("fix at most one of alpha and p")
    lam = match_poisson(n, params, pattern)
    if alpha is None and p_fixed is None:
        alpha = params.convert(n // pattern.k)
        convention = "alpha=floor(n/k)"
    elif alpha is not None:
        alpha = params.convert(alpha)
        convention = f"alpha={alpha} fixed"
    else:
        p_fixed = params.convert(p_fixed)
        convention = f"p={p_fixed} fixed"
    if alpha is not None and not alpha > 0:
        raise InapplicableError("alpha must be positive")
    if family == "pseudo-binomial":
        if alpha is not None:
            p_out = lam / alpha
            if not 0 < p_out < 1:
                raise InapplicableError(f"matched p={float(p_out)} is not in (0, 1)")
            return alpha, p_out, convention
        return lam / p_fixed, p_fixed, convention
    if family == "negative-binomial":
        if alpha is not None:
            return alpha, alpha / (alpha + lam), convention
        return lam * p_fixed / (1 - p_fixed), p_fixed, convention
    raise ValueError(f"unknown family {family!r}")


def match_two_parameter(n: int, params: TrialParams, pattern: RunsPattern, family: str) -> tuple:
    """Match mean and variance of ``M^n``.

    Pseudo-binomial: ``alpha = lambda**2 / s``, ``p = s / lambda`` (needs s > 0).
    Negative binomial: ``alpha = -lambda**2 / s``, ``p = lambda / (lambda - s)``
    (needs s < 0).  Here ``s = s_nk``.
    """
    lam = match_poisson(n, params, pattern)
    s = s_nk(n, params, pattern)
    if family == "pseudo-binomial":
        if not s > 0:
            raise InapplicableError("pseudo-binomial matching needs s_nk > 0")
        return lam * lam / s, s / lam
    if family == "negative-binomial":
        if not s < 0:
            raise InapplicableError("negative binomial matching needs s_nk < 0")
        return -lam * lam / s, lam / (lam - s)
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# bound reports


@dataclass
class BoundReport:
    """Outcome of one bound evaluation.

    ``bound`` is ``None`` exactly when ``applicable`` is false.  All fields are
    JSON-native so :meth:`to_dict` output round-trips through ``json``.
    """

    family: str
    parameters: int
    k1: int
    k2: int
    n: int
    p: float
    q: float
    matched: dict
    bound: Optional[float]
    n_condition_ok: bool
    snk_sign_ok: bool
    notes: list = field(default_factory=list)

    @property
    def applicable(self) -> bool:
        return self.bound is not None

    @property
    def marker(self) -> str:
        """Cell text for a report without a number.

        ``NA(n)`` or ``NA(s_nk)`` for a failed hypothesis, ``BLOCKED(...)``
        when a needed constant is unavailable, ``""`` for a numeric bound.
        """
        if not self.n_condition_ok:
            return "NA(n)"
        if not self.snk_sign_ok:
            return "NA(s_nk)"
        if self.bound is None:
            blocked = [x for x in self.notes if x.startswith("BLOCKED(")]
            return blocked[0] if blocked else "NA"
        return ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["applicable"] = self.applicable
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def _report(family, parameters, n, params, pattern, **kw) -> BoundReport:
    return BoundReport(family=family, parameters=parameters, k1=pattern.k1, k2=pattern.k2,
                       n=n, p=float(params.p), q=float(params.q), **kw)


def _common(params: TrialParams, pattern: RunsPattern):
    p, q = params.p, params.q
    return p, q, q * p, a_of_p(params, pattern), pattern.k


def bound_poisson_one(n: int, params: TrialParams, pattern: RunsPattern) -> BoundReport:
    """Poisson bound with ``lambda`` equal to the mean; needs ``n >= 3k``."""
    k = pattern.k
    if n < 3 * k:
        return _report("poisson", 1, n, params, pattern, matched={}, bound=None,
                       n_condition_ok=False, snk_sign_ok=True, notes=["requires n >= 3k"])
    p, q, qp, a, k = _common(params, pattern)
    lam = match_poisson(n, params, pattern)
    delta, _ = delta_consts(params, pattern)
    c1 = c_const(1, n, pattern, params.exact)
    c2 = c_const(2, n, pattern, params.exact)
    val = (2 + qp) * a / (q * (1 + (n - k - 1) * p)) * ((n - k) * delta + qp * (k + 1) * c1 + c2)
    return _report("poisson", 1, n, params, pattern, matched={"lambda": float(lam)},
                   bound=float(val), n_condition_ok=True, snk_sign_ok=True)


def bound_pb_one(n: int, params: TrialParams, pattern: RunsPattern,
                 alpha=None, p_fixed=None) -> BoundReport:
    """Pseudo-binomial bound after one-parameter mean matching; needs ``n >= 3k``."""
    k = pattern.k
    if n < 3 * k:
        return _report("pseudo-binomial", 1, n, params, pattern, matched={}, bound=None,
                       n_condition_ok=False, snk_sign_ok=True, notes=["requires n >= 3k"])
    p, q, qp, a, k = _common(params, pattern)
    try:
        alpha_c, p_c, conv = match_one_parameter(n, params, pattern, "pseudo-binomial",
                                                 alpha=alpha, p_fixed=p_fixed)
    except InapplicableError as exc:
        return _report("pseudo-binomial", 1, n, params, pattern, matched={}, bound=None,
                       n_condition_ok=True, snk_sign_ok=True, notes=[str(exc)])
    fl = math.floor(alpha_c)
    matched = {"alpha": float(alpha_c), "p": float(p_c)}
    if fl == 0 or not 0 < p_c < 1:
        return _report("pseudo-binomial", 1, n, params, pattern, matched=matched, bound=None,
                       n_condition_ok=True, snk_sign_ok=True,
                       notes=[conv, "floor(alpha) = 0 or p outside (0,1)"])
    delta, _ = delta_consts(params, pattern)
    c1 = c_const(1, n, pattern, params.exact)
    c2 = c_const(2, n, pattern, params.exact)
    val = ((2 + qp) * a / (fl * p_c * (1 - p_c))
           * ((n - k) * (p_c + delta * a) + qp * (k + 1) * c1 * a + c2 * a))
    return _report("pseudo-binomial", 1, n, params, pattern, matched=matched, bound=float(val),
                   n_condition_ok=True, snk_sign_ok=True, notes=[conv])


def bound_nb_one(n: int, params: TrialParams, pattern: RunsPattern,
                 alpha=None, p_fixed=None) -> BoundReport:
    """Negative binomial bound after one-parameter mean matching; needs ``n >= 3k``."""
    k = pattern.k
    if n < 3 * k:
        return _report("negative-binomial", 1, n, params, pattern, matched={}, bound=None,
                       n_condition_ok=False, snk_sign_ok=True, notes=["requires n >= 3k"])
    p, q, qp, a, k = _common(params, pattern)
    alpha_c, p_c, conv = match_one_parameter(n, params, pattern, "negative-binomial",
                                             alpha=alpha, p_fixed=p_fixed)
    q_c = 1 - p_c
    matched = {"alpha": float(alpha_c), "p": float(p_c)}
    if not alpha_c * q_c > 0:
        return _report("negative-binomial", 1, n, params, pattern, matched=matched, bound=None,
                       n_condition_ok=True, snk_sign_ok=True, notes=[conv, "alpha*q vanishes"])
    delta, _ = delta_consts(params, pattern)
    c1 = c_const(1, n, pattern, params.exact)
    c2 = c_const(2, n, pattern, params.exact)
    val = ((2 + qp) * a / (alpha_c * q_c)
           * ((n - k) * (q_c + delta * p_c * a) + (qp * (k + 1) * c1 + c2) * p_c * a))
    return _report("negative-binomial", 1, n, params, pattern, matched=matched, bound=float(val),
                   n_condition_ok=True, snk_sign_ok=True, notes=[conv])


def _two_param_gate(family: str, n: int, params, pattern, want_positive: bool):
    k = pattern.k
    s = s_nk(n, params, pattern)
    n_ok = n >= 5 * k
    sign_ok = s > 0 if want_positive else s < 0
    if n_ok and sign_ok:
        return None
    notes = []
    if not n_ok:
        notes.append("requires n >= 5k")
    if not sign_ok:
        notes.append("requires s_nk > 0" if want_positive else "requires s_nk < 0")
    return _report(family, 2, n, params, pattern, matched={"s_nk": float(s)}, bound=None,
                   n_condition_ok=n_ok, snk_sign_ok=sign_ok, notes=notes)


def _tv_shift(n_shift: int, params: TrialParams, pattern: RunsPattern) -> Scalar:
    return tv_consecutive(n_shift, params, pattern)


def bound_pb_two(n: int, params: TrialParams, pattern: RunsPattern,
                 floor_alpha: bool = True) -> BoundReport:
    """Pseudo-binomial bound with mean and variance matched.

    Needs ``n >= 5k`` and ``s_nk > 0``.  The leading denominator uses
    ``floor(alpha)`` unless ``floor_alpha`` is false, in which case the raw
    matched ``alpha`` is used (the convention recorded in the notes).
    """
    gate = _two_param_gate("pseudo-binomial", n, params, pattern, True)
    if gate is not None:
        return gate
    p, q, qp, a, k = _common(params, pattern)
    alpha_c, p_c = match_two_parameter(n, params, pattern, "pseudo-binomial")
    q_c = 1 - p_c
    den_alpha = math.floor(alpha_c) if floor_alpha else alpha_c
    matched = {"alpha": float(alpha_c), "p": float(p_c), "s_nk": float(s_nk(n, params, pattern))}
    notes = ["denominator floor(alpha)" if floor_alpha else "denominator raw alpha"]
    if not den_alpha > 0 or not 0 < p_c < 1:
        return _report("pseudo-binomial", 2, n, params, pattern, matched=matched, bound=None,
                       n_condition_ok=True, snk_sign_ok=True,
                       notes=notes + ["floor(alpha) = 0 or p outside (0,1)"])
    delta, delta1 = delta_consts(params, pattern)
    c = {i: c_const(i, n, pattern, params.exact) for i in range(2, 7)}
    tv = _tv_shift(n - 3 * k - 3, params, pattern)
    inner = ((4 * (n - k) * delta1 + (qp + 2 * delta) * c[2] + c[3] + c[4] + qp * qp / 2 * c[6]) * a
             + ((n - k) * delta + c[2] + c[5]) * p_c)
    val = 2 * (2 + qp) * a * a / (den_alpha * p_c * q_c) * inner * tv
    matched["tv_shift"] = float(tv)
    return _report("pseudo-binomial", 2, n, params, pattern, matched=matched, bound=float(val),
                   n_condition_ok=True, snk_sign_ok=True, notes=notes)


C7_NOTE_BLOCKED = "BLOCKED(c7)"
C7_NOTE_ASSUMED = "ASSUMED(c7)"


def bound_nb_two(n: int, params: TrialParams, pattern: RunsPattern,
                 assume_c7: bool = False) -> BoundReport:
    """Negative binomial bound with mean and variance matched.

    Needs ``n >= 5k`` and ``s_nk < 0``.  The expression contains a constant
    ``c7`` that has no available definition.  By default an applicable cell
    is returned with ``bound=None`` and the note ``BLOCKED(c7)``.  With
    ``assume_c7=True`` the constant is replaced by ``c6`` (the constant in the
    same slot of the pseudo-binomial bound) and the note ``ASSUMED(c7)`` is
    attached; this is an extrapolation, not a known result.
    """
    gate = _two_param_gate("negative-binomial", n, params, pattern, False)
    if gate is not None:
        return gate
    p, q, qp, a, k = _common(params, pattern)
    alpha_c, p_c = match_two_parameter(n, params, pattern, "negative-binomial")
    q_c = 1 - p_c
    matched = {"alpha": float(alpha_c), "p": float(p_c), "s_nk": float(s_nk(n, params, pattern))}
    if not assume_c7:
        return _report("negative-binomial", 2, n, params, pattern, matched=matched, bound=None,
                       n_condition_ok=True, snk_sign_ok=True, notes=[C7_NOTE_BLOCKED])
    delta, delta1 = delta_consts(params, pattern)
    c = {i: c_const(i, n, pattern, params.exact) for i in range(3, 7)}
    c7 = c[6]
    tv = _tv_shift(n - 3 * k - 2, params, pattern)
    inner = ((4 * (n - k) * delta1 + (2 * delta + qp) * c[3] + c[4] + qp * c[5] + qp * qp / 2 * c7) * p_c * a
             + ((n - k) * delta + c[3] + qp * c[6]) * q_c)
    val = 2 * (2 + qp) * a * a / (alpha_c * q_c) * inner * tv
    matched["tv_shift"] = float(tv)
    return _report("negative-binomial", 2, n, params, pattern, matched=matched, bound=float(val),
                   n_condition_ok=True, snk_sign_ok=True, notes=[C7_NOTE_ASSUMED])


def target_spec(report: BoundReport) -> GibbsSpec:
    """Gibbs description of the matched target law of an applicable report."""
    if not report.applicable:
        raise InapplicableError("report is not applicable")
    if report.family == "poisson":
        return poisson_spec(report.matched["lambda"])
    if report.family == "pseudo-binomial":
        return pseudo_binomial_spec(report.matched["alpha"], report.matched["p"])
    if report.family == "negative-binomial":
        return negative_binomial_spec(report.matched["alpha"], report.matched["p"])
    raise ValueError(f"unknown family {report.family!r}")


BOUNDS = {
    ("poisson", 1): bound_poisson_one,
    ("pseudo-binomial", 1): bound_pb_one,
    ("negative-binomial", 1): bound_nb_one,
    ("pseudo-binomial", 2): bound_pb_two,
    ("negative-binomial", 2): bound_nb_two,
}
