"""Randomized invariants over patterns, probabilities and lengths."""

from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from runsapprox.core import RunsPattern, TrialParams
from runsapprox.distributions import pmf_recursive
from runsapprox.embedding import build_chain, pmf_embedding

patterns = st.builds(RunsPattern, st.integers(1, 4), st.integers(1, 4))
rational_p = st.fractions(min_value=Fraction(1, 20), max_value=Fraction(19, 20), max_denominator=20)
float_p = st.floats(min_value=0.01, max_value=0.99)


@settings(max_examples=60, deadline=None)
@given(patterns, rational_p, st.integers(0, 40))
def test_rational_pmf_is_a_distribution(pattern, p, n):
    row = pmf_recursive(n, TrialParams.from_p(p), pattern)[n].probs
    assert sum(row) == 1
    assert all(x >= 0 for x in row)
    assert len(row) == n // pattern.k + 1


@settings(max_examples=60, deadline=None)
@given(patterns, float_p, st.integers(0, 150))
def test_double_pmf_normalized(pattern, p, n):
    row = pmf_recursive(n, TrialParams.from_p(p), pattern)[n].probs
    assert abs(sum(row) - 1) <= 1e-12
    assert min(row) > -1e-15


@settings(max_examples=40, deadline=None)
@given(patterns, rational_p, st.integers(0, 30))
def test_recursion_equals_embedding(pattern, p, n):
    par = TrialParams.from_p(p)
    assert pmf_embedding(build_chain(par, pattern), n).probs == pmf_recursive(n, par, pattern)[n].probs


@settings(max_examples=40, deadline=None)
@given(patterns, rational_p, st.integers(0, 40))
def test_no_occurrence_probability_never_increases(pattern, p, n):
    # an occurrence completed within the first n trials survives a longer run
    table = pmf_recursive(n + 1, TrialParams.from_p(p), pattern)
    assert table[n + 1].probs[0] <= table[n].probs[0]
