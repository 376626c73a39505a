from fractions import Fraction

import mpmath
import pytest

from runsapprox.core import (
    RunsPattern,
    TrialParams,
    a_of_p,
    c_const,
    coeff_B,
    delta_consts,
    multinomial,
    poly_C,
    power_ratio,
    s_nk,
    sequence_constants,
    u_basis_to_t,
)
from runsapprox.oracle import brute_force_pmf


def q_exact(q):
    return TrialParams.from_q(Fraction(q))


def series_oracle(s_max, params, pattern):
    """Coefficients [s][l] of t**l z**s in 1/((k+2) - (k+1)z - a(t-1)z^k(2-z)).

    Plain bivariate long division with polynomial-in-t coefficients.
    """
    k = pattern.k
    a = a_of_p(params, pattern)
    # denominator as {z power: poly in t}
    den = {0: [Fraction(k + 2)], 1: [Fraction(-(k + 1))]}
    # -a(t-1) z^k (2 - z) = (-2a t + 2a) z^k + (a t - a) z^{k+1}
    den[k] = [2 * a, -2 * a]
    den[k + 1] = [-a, a]
    out = []
    for s in range(s_max + 1):
        acc = [Fraction(1)] if s == 0 else [Fraction(0)]
        for j in range(1, s + 1):
            if j not in den:
                continue
            d = den[j]
            prev = out[s - j]
            prod = [Fraction(0)] * (len(d) + len(prev) - 1)
            for i, x in enumerate(d):
                for l, y in enumerate(prev):
                    prod[i + l] += x * y
            size = max(len(acc), len(prod))
            acc = [(acc[i] if i < len(acc) else 0) - (prod[i] if i < len(prod) else 0) for i in range(size)]
        out.append([x / (k + 2) for x in acc])
    return out


def test_trial_params_validation():
    with pytest.raises(ValueError):
        TrialParams.from_p(0.0)
    with pytest.raises(ValueError):
        TrialParams.from_p(1.0)
    with pytest.raises(ValueError):
        TrialParams(0.5, 0.4)
    par = TrialParams.from_q("0.11", exact=True)
    assert par.p == Fraction(89, 100) and par.q + par.p == 1


def test_fraction_input_selects_exact_mode():
    assert TrialParams.from_p(Fraction(1, 3)).exact
    assert not TrialParams.from_p(0.3).exact


def test_decoupled_pair_is_flagged():
    par = TrialParams.decoupled_pair(0.89, 0.13)
    assert par.decoupled
    with pytest.raises(ValueError):
        par.require_probability_model()


@pytest.mark.parametrize("k1,k2", [(0, 1), (2, 0), (-1, 3)])
def test_runs_pattern_rejects_nonpositive(k1, k2):
    with pytest.raises(ValueError):
        RunsPattern(k1, k2)


def test_a_of_p_values():
    assert a_of_p(TrialParams.from_p(0.5), RunsPattern(1, 1)) == 0.25
    assert a_of_p(q_exact("0.11"), RunsPattern(3, 4)) == Fraction(83509922771, 10 ** 14)
    assert a_of_p(TrialParams.from_q(0.11), RunsPattern(3, 4)) == pytest.approx(8.35099e-4, rel=1e-5)


def test_s_nk_signs_table_cells():
    pat = RunsPattern(3, 4)
    assert s_nk(50, TrialParams.from_q(0.11), pat) < 0
    assert s_nk(50, TrialParams.decoupled_pair(0.89, 0.13), pat) > 0


def test_s_nk_matches_enumerated_variance_on_its_domain():
    par, pat = TrialParams.from_p(Fraction(1, 2)), RunsPattern(1, 1)
    for n in (6, 7, 9, 12):
        pmf = brute_force_pmf(n, par, pat).pmf
        mean, m2 = pmf.moment(1), pmf.moment(2)
        assert mean - (m2 - mean * mean) == s_nk(n, par, pat)


def test_s_nk_below_domain_differs():
    # n = 4 < 2k + 2: enumeration gives mean - variance = 9/256, formula 3/256
    par, pat = TrialParams.from_p(Fraction(1, 2)), RunsPattern(1, 1)
    assert s_nk(4, par, pat) == Fraction(3, 256)
    pmf = brute_force_pmf(4, par, pat).pmf
    assert pmf.moment(1) - (pmf.moment(2) - pmf.moment(1) ** 2) == Fraction(9, 256)


def test_delta_consts():
    par = q_exact("0.11")
    delta, delta1 = delta_consts(par, RunsPattern(3, 4))
    assert delta == Fraction(29433, 2500)
    assert float(delta1) == pytest.approx((2.11 + 1.2079 * 15) * 8)
    d_small, _ = delta_consts(TrialParams.from_q(1e-12), RunsPattern(2, 2))
    assert d_small == pytest.approx(2 + 5)


def test_c_const_values():
    pat = RunsPattern(3, 4)
    mpmath.mp.dps = 40
    c1 = mpmath.mpf(34) + mpmath.mpf(8) ** 43 / mpmath.mpf(9) ** 42
    c2 = 29 + 7 * (mpmath.mpf(8) / 9) ** 36
    assert c_const(1, 50, pat) == pytest.approx(float(c1), rel=1e-14)
    assert c_const(2, 50, pat) == pytest.approx(float(c2), rel=1e-14)
    assert c_const(1, 50, pat, exact=True) == 34 + Fraction(8 ** 43, 9 ** 42)
    k = 5
    assert c_const(1, 2 * k + 2, RunsPattern(2, 3), exact=True) == Fraction((k + 1) ** (k + 2), (k + 2) ** (k + 1))


def test_c_const_rejects_index_seven():
    with pytest.raises(ValueError):
        c_const(7, 50, RunsPattern(3, 4))


def test_c_const_positive_beyond_5k():
    for k1, k2 in [(1, 1), (2, 3), (3, 4), (4, 5)]:
        pat = RunsPattern(k1, k2)
        for n in range(5 * pat.k, 5 * pat.k + 60, 7):
            for i in range(1, 6):
                assert c_const(i, n, pat) > 0


def test_c6_sign_changes_above_5k():
    # c6 is negative just above 5k and positive once n is large compared with k
    pat = RunsPattern(1, 1)
    assert c_const(6, 10, pat) < 0
    assert c_const(6, 19, pat) > 0
    for k1, k2 in [(1, 1), (2, 3), (3, 4), (4, 5)]:
        pat = RunsPattern(k1, k2)
        assert c_const(6, 5 * pat.k, pat) < 0
        assert all(c_const(6, n, pat) > 0 for n in range(20 * pat.k, 20 * pat.k + 200))


def test_power_ratio_no_overflow_and_matches_exact():
    assert power_ratio(9, 250, 249, False) == pytest.approx(float(power_ratio(9, 250, 249, True)), rel=1e-12)
    assert power_ratio(9, 4000, 3999, False) > 0


def test_sequence_constants():
    par, pat = TrialParams.from_p(0.3), RunsPattern(2, 1)
    sc = sequence_constants(20, par, pat)
    assert sc.a_coeffs == (1, -1, pytest.approx(0.21))
    assert sc.d_limits == (15, 16, 15)
    assert sc.b(2, pat.k + 1) == pytest.approx(-0.7 * 5)
    assert sc.b(2, 10) == pytest.approx(11 - 0.7)
    assert sc.b(1, 10) == 11 and sc.b(3, 10) == 10


def test_multinomial():
    assert multinomial(5, (2, 2, 1)) == 30
    assert multinomial(3, (4, -1)) == 0


def test_coeff_B_trivial_cases():
    par, pat = TrialParams.from_p(Fraction(2, 5)), RunsPattern(2, 1)
    k = pat.k
    assert coeff_B(0, 0, par, pat) == Fraction(1, k + 2)
    assert coeff_B(1, 0, par, pat) == Fraction(k + 1, (k + 2) ** 2)
    with pytest.raises(ValueError):
        coeff_B(2, 1, par, pat)


@pytest.mark.parametrize("k1,k2,p", [(1, 1, Fraction(1, 2)), (2, 1, Fraction(3, 10)), (2, 3, Fraction(4, 5))])
def test_coeff_B_matches_series_division(k1, k2, p):
    par, pat = TrialParams.from_p(p), RunsPattern(k1, k2)
    s_max = 4 * pat.k + 3
    oracle = series_oracle(s_max, par, pat)
    for s in range(s_max + 1):
        for l in range(s // pat.k + 1):
            assert coeff_B(s, l, par, pat) == (oracle[s][l] if l < len(oracle[s]) else 0)
        # the oracle has no terms beyond floor(s/k)
        assert all(x == 0 for x in oracle[s][s // pat.k + 1:])


def test_coeff_B_double_mode_close_to_series():
    par_f, par_x, pat = TrialParams.from_p(0.3), TrialParams.from_p(Fraction(3, 10)), RunsPattern(2, 2)
    oracle = series_oracle(30, par_x, pat)
    for s in range(31):
        for l in range(s // pat.k + 1):
            assert abs(coeff_B(s, l, par_f, pat) - float(oracle[s][l])) <= 1e-12


def test_poly_C_consistent_with_coeff_B():
    par, pat = TrialParams.from_p(Fraction(1, 3)), RunsPattern(1, 2)
    a = a_of_p(par, pat)
    for s in range(0, 20):
        c_u = poly_C(s, par, pat)
        assert len(c_u) == s // pat.k + 1
        c_t = u_basis_to_t(c_u, a)
        assert c_t == [coeff_B(s, l, par, pat) for l in range(s // pat.k + 1)]
    assert poly_C(0, par, pat) == [Fraction(1, pat.k + 2)]


def test_poly_C_below_k_is_constant():
    par, pat = TrialParams.from_p(Fraction(1, 3)), RunsPattern(2, 3)
    for s in range(pat.k):
        assert len(poly_C(s, par, pat)) == 1


def test_exact_and_double_agree():
    pat = RunsPattern(2, 3)
    px, pf = TrialParams.from_p(Fraction(37, 100)), TrialParams.from_p(0.37)
    for n in (10, 40, 100):
        assert float(s_nk(n, px, pat)) == pytest.approx(s_nk(n, pf, pat), rel=1e-10)
        for i in range(1, 7):
            assert float(c_const(i, n, pat, True)) == pytest.approx(c_const(i, n, pat), rel=1e-10)
    for s in range(0, 30, 3):
        for l in range(s // pat.k + 1):
            assert float(coeff_B(s, l, px, pat)) == pytest.approx(coeff_B(s, l, pf, pat), rel=1e-10, abs=1e-300)
