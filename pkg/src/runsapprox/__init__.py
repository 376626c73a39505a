"""Exact distribution and Stein-type approximation bounds for (k1, k2)-runs."""

from .core import RunsPattern, TrialParams, Pmf, a_of_p, s_nk

__all__ = ["RunsPattern", "TrialParams", "Pmf", "a_of_p", "s_nk"]
