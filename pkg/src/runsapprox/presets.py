"""Named evaluation grids for the bounds.

The ``paper-table-1`` grid covers ``(k1, k2, n)`` in ``(3,4,50)``,
``(3,5,150)`` and ``(4,5,250)``, the failure probabilities
``q = 0.11 .. 0.14`` and the five bound rows.  Its published values are
reproduced only when the success probability is held at ``p = 0.89`` in every
column (so ``p + q = 1`` only in the first column); the preset therefore
evaluates the bound formulas on decoupled ``(p, q)`` pairs.  The
two-parameter pseudo-binomial row uses the unfloored matched ``alpha`` in its
denominator, which is what the published values correspond to.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import RunsPattern, TrialParams
from .stein import (
    BoundReport,
    bound_nb_one,
    bound_nb_two,
    bound_pb_one,
    bound_pb_two,
    bound_poisson_one,
)

TABLE1_CASES = ((3, 4, 50), (3, 5, 150), (4, 5, 250))
TABLE1_Q = ("0.11", "0.12", "0.13", "0.14")
TABLE1_P = "0.89"
TABLE1_ROWS = (
    ("poisson", 1),
    ("pseudo-binomial", 1),
    ("negative-binomial", 1),
    ("pseudo-binomial", 2),
    ("negative-binomial", 2),
)


@dataclass(frozen=True)
class PresetCell:
    family: str
    parameters: int
    k1: int
    k2: int
    n: int
    q: str
    report: BoundReport


def table1_params(q: str, exact: bool = False) -> TrialParams:
    return TrialParams.decoupled_pair(TABLE1_P if exact else float(TABLE1_P),
                                      q if exact else float(q), exact=exact)


def evaluate_cell(family: str, parameters: int, k1: int, k2: int, n: int, q: str,
                  assume_c7: bool = False) -> BoundReport:
    params = table1_params(q)
    pattern = RunsPattern(k1, k2)
    if (family, parameters) == ("poisson", 1):
        rep = bound_poisson_one(n, params, pattern)
    elif (family, parameters) == ("pseudo-binomial", 1):
        rep = bound_pb_one(n, params, pattern)
    elif (family, parameters) == ("negative-binomial", 1):
        rep = bound_nb_one(n, params, pattern)
    elif (family, parameters) == ("pseudo-binomial", 2):
        rep = bound_pb_two(n, params, pattern, floor_alpha=False)
    elif (family, parameters) == ("negative-binomial", 2):
        rep = bound_nb_two(n, params, pattern, assume_c7=assume_c7)
    else:
        raise ValueError(f"no bound for {family!r} with {parameters} parameters")
    rep.notes.append(f"p held at {TABLE1_P}")
    return rep


def table1(assume_c7: bool = False) -> list[PresetCell]:
    """All 60 cells in table order: case, then bound row, then ``q``."""
    cells = []
    for k1, k2, n in TABLE1_CASES:
        for family, parameters in TABLE1_ROWS:
            for q in TABLE1_Q:
                rep = evaluate_cell(family, parameters, k1, k2, n, q, assume_c7)
                cells.append(PresetCell(family, parameters, k1, k2, n, q, rep))
    return cells


PRESETS = {"paper-table-1": table1}
