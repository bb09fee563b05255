"""CMP, truncated CMP and CMPB laws, and the conditional-on-sum construction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .core import McmpbParams, SupportError, build_table

MIN_R = 0.3
MAX_TERMS = 1_000_000
_CHUNK = 4096


class SeriesError(RuntimeError):
    """The CMP normalizing series did not settle within the term cap."""

    def __init__(self, message: str, partial: float):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class CmpParams:
    r: float
    lam: float
    tail_tol: float = 1e-14

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"r must be positive, got {self.r!r}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be positive, got {self.lam!r}")
        if not 0 < self.tail_tol < 1e-6:
            raise ValueError("tail_tol must lie in (0, 1e-6)")


@dataclass(frozen=True)
class BivariateCmpSpec:
    first: CmpParams
    second: CmpParams


def _log_terms(params: CmpParams, x: np.ndarray) -> np.ndarray:
    xf = np.asarray(x, dtype=float)
    return xf * math.log(params.lam) - params.r * gammaln(xf + 1)


@dataclass(frozen=True)
class _Series:
    log_peak: float  # absolute log of the largest term
    rel: np.ndarray  # log(term_k / term_mode) for k = 0..K
    log_s: float  # log sum of exp(rel)

    @property
    def log_norm(self) -> float:
        return self.log_peak + self.log_s


@lru_cache(maxsize=256)
def _series(params: CmpParams) -> _Series:
    """Sum the series outward from its largest term.

    Log terms are built as cumulative sums of log(lambda / k**r) starting at
    the mode, so values near the bulk of the mass stay small in magnitude and
    keep full relative precision even when log Z runs into the millions.
    """
    if params.r < MIN_R:
        raise ValueError(
            f"r={params.r:g} < {MIN_R}: the series is too close to divergence to sum reliably"
        )
    log_lam = math.log(params.lam)
    # term_k / term_(k-1) = lambda / k**r drops below 1 past lambda**(1/r)
    mode = int(math.exp(min(log_lam / params.r, math.log(MAX_TERMS + 1.0))))
    if mode >= MAX_TERMS:
        head = _log_terms(params, np.arange(MAX_TERMS))
        m = float(head.max())
        raise SeriesError(f"CMP series peaks beyond {MAX_TERMS} terms",
                          m + math.log(float(np.exp(head - m).sum())))
    k = np.arange(1, mode + 1, dtype=float)
    step = log_lam - params.r * np.log(k)
    left = -np.cumsum(step[::-1])[::-1]  # rel for 0..mode-1
    parts = [left, np.zeros(1)]
    total = float(np.exp(left).sum()) + 1.0
    last, start = 0.0, mode + 1
    log_tol = math.log(params.tail_tol)
    while True:
        if start >= MAX_TERMS:
            raise SeriesError(f"CMP series did not converge within {MAX_TERMS} terms",
                              math.log(total) + _log_terms(params, mode).item())
        stop = min(start + _CHUNK, MAX_TERMS)
        chunk = last + np.cumsum(log_lam - params.r * np.log(np.arange(start, stop, dtype=float)))
        parts.append(chunk)
        total += float(np.exp(chunk).sum())
        last = float(chunk[-1])
        # past the mode the ratios only fall, so the tail after `last` is at
        # most last * q / (1 - q) with q the next ratio
        q = log_lam - params.r * math.log(stop)
        if q < 0 and last + q - math.log(-math.expm1(q)) - math.log(total) < log_tol:
            break
        start = stop
    rel = np.concatenate(parts)
    rel.setflags(write=False)
    return _Series(_log_terms(params, mode).item(), rel, math.log(total))


def cmp_log_norm(params: CmpParams) -> float:
    """log Z(lambda, r) = log sum_k lambda**k / (k!)**r.

    The sum stops once the terms are decreasing and a geometric bound on
    everything past the latest term is below ``tail_tol`` relative to the
    running sum.
    """
    return _series(params).log_norm


def cmp_log_pmf(params: CmpParams, x, log_norm: float | None = None):
    x = np.asarray(x)
    if np.any(x < 0) or np.any(x != np.floor(x)):
        raise SupportError("CMP support is the nonnegative integers")
    if log_norm is not None:
        return _log_terms(params, x) - log_norm
    s = _series(params)
    xi = x.astype(np.int64)
    inside = xi < len(s.rel)
    near = s.rel[np.where(inside, xi, 0)] - s.log_s
    if np.all(inside):
        return near
    far = _log_terms(params, x) - s.log_norm
    return np.where(inside, near, far)


def cmp_pmf(params: CmpParams, x):
    return np.exp(cmp_log_pmf(params, x))


def truncated_cmp_pmf(r: float, theta: float, n: int, x):
    """CMP(r, theta) restricted to {0..n}; identical to MCMPB(n, r, 0, theta)."""
    x = np.asarray(x)
    if np.any(x < 0) or np.any(x > n):
        raise SupportError(f"x outside {{0..{n}}}")
    k = np.arange(n + 1, dtype=float)
    logs = k * math.log(theta) - r * gammaln(k + 1)
    m = logs.max()
    log_norm = m + math.log(np.exp(logs - m).sum())
    return np.exp(logs[x] - log_norm)


def cmpb_pmf(n: int, alpha: float, psi: float, x):
    """CMP-type binomial: MCMPB with equal exponents."""
    x = np.asarray(x)
    if np.any(x < 0) or np.any(x > n):
        raise SupportError(f"x outside {{0..{n}}}")
    return build_table(McmpbParams(n, alpha, alpha, psi)).pmf[x]


def conditional_given_sum(spec: BivariateCmpSpec, n: int) -> McmpbParams:
    """Law of X1 given X1 + X2 = n for independent CMP variables."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return McmpbParams(
        n, spec.first.r, spec.second.r, math.log(spec.first.lam) - math.log(spec.second.lam)
    )


def conditional_given_sum_bruteforce(spec: BivariateCmpSpec, n: int) -> np.ndarray:
    """P(X1 = x | X1 + X2 = n) from the two marginal pmfs directly."""
    x = np.arange(n + 1)
    joint = cmp_log_pmf(spec.first, x) + cmp_log_pmf(spec.second, n - x)
    m = joint.max()
    w = np.exp(joint - m)
    return w / w.sum()
