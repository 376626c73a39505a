from fractions import Fraction

import pytest

from runsapprox.core import RunsPattern, TrialParams, a_of_p
from runsapprox.distributions import pmf_recursive
from runsapprox.embedding import (
    build_chain,
    dgf_check,
    double_pgf_series,
    iter_pmf_embedding,
    pmf_embedding,
)
from runsapprox.oracle import brute_force_pmf
from runsapprox.verify import corrupt_chain


def test_chain_shape_for_k1_k2_equal_one():
    p = Fraction(1, 3)
    ch = build_chain(TrialParams.from_p(p), RunsPattern(1, 1))
    assert ch.state_count == 4
    assert ch.labels == ("(.,0)", "(.,1)", "(.,1+)", "(.,2)")
    assert ch.A[3] == (p, 0, 0, 0)
    assert ch.B[3][1] == 1 - p
    assert sum(1 for row in ch.B for x in row if x) == 1
    assert ch.pi0 == (1, 0, 0, 0)


@pytest.mark.parametrize("k1,k2", [(1, 1), (2, 3), (4, 1)])
def test_rows_stochastic(k1, k2):
    ch = build_chain(TrialParams.from_p(Fraction(2, 7)), RunsPattern(k1, k2))
    for a_row, b_row in zip(ch.A, ch.B):
        assert sum(a_row) + sum(b_row) == 1


def test_decoupled_params_refused():
    with pytest.raises(ValueError):
        build_chain(TrialParams.decoupled_pair(0.89, 0.13), RunsPattern(3, 4))


def test_pmf_small_cases():
    par = TrialParams.from_p(Fraction(1, 2))
    ch = build_chain(par, RunsPattern(1, 1))
    assert pmf_embedding(ch, 3).probs == (Fraction(7, 8), Fraction(1, 8))
    pat = RunsPattern(2, 3)
    ch = build_chain(par, pat)
    for n in range(pat.k + 1):
        pmf = pmf_embedding(ch, n)
        assert pmf.probs[0] == 1 and sum(pmf.probs) == 1
    qa = par.q * a_of_p(par, pat)
    assert pmf_embedding(ch, pat.k + 1).probs == (1 - qa, qa)


def test_matches_brute_force_n8():
    par, pat = TrialParams.from_p(Fraction(1, 2)), RunsPattern(2, 1)
    assert pmf_embedding(build_chain(par, pat), 8).probs == brute_force_pmf(8, par, pat).pmf.probs


def test_support_and_mass():
    par, pat = TrialParams.from_p(0.4), RunsPattern(1, 2)
    for n, pmf in enumerate(iter_pmf_embedding(build_chain(par, pat), 60)):
        assert len(pmf) == n // pat.k + 1
        assert abs(sum(pmf.probs) - 1) < 1e-12


def test_agrees_with_recursion_double():
    par, pat = TrialParams.from_p(0.89), RunsPattern(3, 4)
    table = pmf_recursive(120, par, pat)
    emb = pmf_embedding(build_chain(par, pat), 120)
    assert max(abs(x - y) for x, y in zip(emb.probs, table[120].probs)) < 1e-13


def test_dgf_check():
    assert dgf_check(TrialParams.from_p(0.3), RunsPattern(2, 2), 40, 0.7) <= 1e-10
    assert dgf_check(TrialParams.from_p(Fraction(3, 10)), RunsPattern(2, 1), 25, Fraction(1, 3)) == 0


def test_double_pgf_at_t_one_and_zero():
    par, pat = TrialParams.from_p(Fraction(2, 5)), RunsPattern(1, 2)
    assert double_pgf_series(par, pat, 1, 20) == [1] * 21
    zero_series = double_pgf_series(par, pat, 0, 20)
    table = pmf_recursive(20, par, pat)
    assert zero_series == [table[n][0] for n in range(21)]


def test_corrupted_chain_still_stochastic_but_wrong():
    par, pat = TrialParams.from_p(Fraction(1, 2)), RunsPattern(1, 1)
    bad = corrupt_chain(build_chain(par, pat))
    bad.validate()
    assert pmf_embedding(bad, 6).probs != pmf_recursive(6, par, pat)[6].probs
