"""Pearson chi-square with tail merging, chi-square tail probabilities, AIC."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Cells are merged inward from each tail until every expected count reaches
# this value.
MIN_EXPECTED = 5.0

_EPS = 1e-15
_TINY = 1e-300
_MAX_STEPS = 10_000


def _lower_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its power series."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_STEPS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_fraction(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by Lentz's continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_STEPS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_fraction(a, x)


def chisq_sf(stat: float, df: int) -> float:
    """Upper tail probability of the chi-square distribution."""
    if stat <= 0:
        return 1.0
    return min(1.0, max(0.0, gamma_q(0.5 * df, 0.5 * stat)))


def aic(loglik: float, k: int) -> float:
    if k < 1:
        raise ValueError("k counts estimated parameters and must be >= 1")
    return -2.0 * loglik + 2.0 * k


def merge_cells(expected, min_expected: float = MIN_EXPECTED) -> list[list[int]]:
    """Group cell indices so every group's expected total reaches ``min_expected``.

    Tails are folded inward first; any interior cell still short afterwards
    joins its smaller neighbour.
    """
    e = [float(v) for v in expected]
    groups = [[i] for i in range(len(e))]
    totals = e[:]

    def fold(i: int, j: int) -> None:
        lo, hi = min(i, j), max(i, j)
        groups[lo] = groups[lo] + groups[hi]
        totals[lo] += totals[hi]
        del groups[hi], totals[hi]

    while len(groups) > 1 and totals[-1] < min_expected:
        fold(len(groups) - 2, len(groups) - 1)
    while len(groups) > 1 and totals[0] < min_expected:
        fold(0, 1)
    while len(groups) > 1:
        short = [i for i, t in enumerate(totals) if t < min_expected]
        if not short:
            break
        i = min(short, key=lambda k: totals[k])
        if i == 0:
            j = 1
        elif i == len(groups) - 1:
            j = i - 1
        else:
            j = i - 1 if totals[i - 1] <= totals[i + 1] else i + 1
        fold(i, j)
    return groups


@dataclass(frozen=True)
class GofSummary:
    chisq: float
    df: int
    p_value: float
    merged_cells: list[list[int]] = field(default_factory=list)
    df_floored: bool = False


def chisq_test(observed, expected, k_params: int, min_expected: float = MIN_EXPECTED,
               labels=None) -> GofSummary:
    """Pearson chi-square after tail merging.

    ``merged_cells`` lists the cell labels (support values when ``labels`` is
    given, else positions) in each merged group.
    """
    o = np.asarray(observed, dtype=float)
    e = np.asarray(expected, dtype=float)
    if o.shape != e.shape:
        raise ValueError("observed and expected must align")
    if abs(o.sum() - e.sum()) > 0.5:
        raise ValueError(
            f"observed total {o.sum():g} and expected total {e.sum():g} differ by more than 0.5"
        )
    groups = merge_cells(e, min_expected)
    stat = 0.0
    for g in groups:
        og, eg = o[g].sum(), e[g].sum()
        if eg > 0:
            stat += (og - eg) ** 2 / eg
        elif og > 0:
            stat = math.inf
    df = len(groups) - 1 - k_params
    floored = df < 1
    df = max(df, 1)
    p = chisq_sf(stat, df) if math.isfinite(stat) else 0.0
    if labels is not None:
        groups = [[int(labels[i]) for i in g] for g in groups]
    return GofSummary(float(stat), int(df), float(p), groups, floored)
