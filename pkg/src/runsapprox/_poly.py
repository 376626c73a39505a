"""Small dense polynomial and power-series helpers on Python scalar lists."""

from __future__ import annotations

from typing import Sequence


def poly_add(a: Sequence, b: Sequence) -> list:
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def poly_scale(a: Sequence, c) -> list:
    return [c * x for x in a]


def poly_mul(a: Sequence, b: Sequence) -> list:
    if not a or not b:
        return []
    out = [0 * a[0]] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def poly_eval(a: Sequence, t):
    acc = 0 * t
    for c in reversed(a):
        acc = acc * t + c
    return acc


def series_divide(num: Sequence, den: Sequence, n_terms: int) -> list:
    """First ``n_terms`` coefficients of ``num / den`` as a power series.

    ``den[0]`` must be nonzero.
    """
    if not den or not den[0]:
        raise ZeroDivisionError("series denominator has zero constant term")
    out = []
    d0 = den[0]
    for i in range(n_terms):
        acc = num[i] if i < len(num) else 0 * d0
        for j in range(1, min(i, len(den) - 1) + 1):
            acc -= den[j] * out[i - j]
        out.append(acc / d0)
    return out


def trim(a: Sequence) -> list:
    a = list(a)
    while len(a) > 1 and not a[-1]:
        a.pop()
    return a
