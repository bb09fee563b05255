"""Beta-binomial, negative binomial, CMP and CMPB fits for model comparison.

All fits share the Nelder-Mead driver. Positive parameters are optimized on
the log scale; a fit that walks to the edge of that box is flagged as a
boundary solution (e.g. NB drifting to its Poisson limit).
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import cmp as cmp_mod
from .gof import aic, chisq_test
from .inference import (
    Z95,
    DataError,
    FitReport,
    FrequencyData,
    _gof_kw,
    _profile,
    fit_fixed_n,
    fit_profile_n,
)
from .optimize import minimize_restarts

LOG_BOX = 30.0


def _rising_log(base: float, counts: np.ndarray) -> np.ndarray:
    """log(base (base+1) ... (base+c-1)) for each integer count c.

    A running sum of logs stays exact for huge ``base`` where a difference of
    log-gammas would cancel; its rounding grows like c**2, so long runs switch
    to the log-gamma difference once c**2 > 2 (base + c).
    """
    counts = np.asarray(counts, dtype=int)
    top = int(counts.max()) if counts.size else 0
    cut = min(top, int(math.sqrt(2.0 * base)) + 2)
    cum = np.concatenate([[0.0], np.cumsum(np.log(base + np.arange(cut)))])
    long_run = counts > cut
    out = cum[np.minimum(counts, cut)]
    if np.any(long_run):
        c = counts[long_run].astype(float)
        out = out.copy()
        out[long_run] = gammaln(base + c) - gammaln(base)
    return out


def bb_log_pmf(n: int, a: float, b: float) -> np.ndarray:
    """Beta-binomial log pmf over 0..n."""
    x = np.arange(n + 1)
    log_choose = gammaln(n + 1) - gammaln(x + 1) - gammaln(n - x + 1)
    return log_choose + _rising_log(a, x) + _rising_log(b, n - x) - _rising_log(a + b, np.array([n]))[0]


_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _stirlerr(z: np.ndarray) -> np.ndarray:
    """log Gamma(z+1) - (z+1/2) log z + z - log(2 pi)/2 for z > 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = z > 15
    zb = z[big]
    z2 = zb * zb
    out[big] = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * z2)) / z2) / z2) / z2) / zb
    zs = z[~big]
    out[~big] = gammaln(zs + 1) - (zs + 0.5) * np.log(zs) + zs - _HALF_LOG_2PI
    return out


def _bd0(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """x log(x/m) + m - x without cancellation when x is close to m."""
    x, m = np.broadcast_arrays(np.asarray(x, float), np.asarray(m, float))
    out = x * np.log(x / m) + m - x
    close = np.abs(x - m) < 0.1 * (x + m)
    if np.any(close):
        xc, mc = x[close], m[close]
        v = (xc - mc) / (xc + mc)
        acc = (xc - mc) * v
        ej = 2 * xc * v
        for j in range(1, 14):
            ej = ej * v * v
            acc = acc + ej / (2 * j + 1)
        out[close] = acc
    return out


def _nb_log_pmf_pq(x, r: float, p: float, q: float, log_q: float) -> np.ndarray:
    """log C(r+x-1, x) p**x q**r with q = 1 - p and log q supplied separately.

    Written as r/(r+x) times a binomial(r+x, p) mass in saddle-point form,
    so the result keeps relative precision when r and x are both huge.
    """
    x = np.asarray(x, dtype=int)
    xf = x.astype(float)
    out = np.full(xf.shape, r * log_q)
    pos = xf > 0
    if np.any(pos):
        k = xf[pos]
        n = r + k
        lc = (_stirlerr(n) - _stirlerr(k) - _stirlerr(np.full_like(k, r))
              - _bd0(k, n * p) - _bd0(np.full_like(k, r), n * q))
        lf = math.log(2 * math.pi) + np.log(k) + np.log(r / n)
        out[pos] = np.log(r / n) + lc - 0.5 * lf
    return out


def nb_log_pmf(x, r: float, p: float) -> np.ndarray:
    """C(r+x-1, x) p**x (1-p)**r."""
    return _nb_log_pmf_pq(x, r, p, 1.0 - p, math.log1p(-p))


def _nb_from_box(v) -> tuple[float, float]:
    r, mu = math.exp(v[0]), math.exp(v[1])
    return r, mu / (r + mu)


def _nb_log_pmf_box(x, v) -> np.ndarray:
    # p = mu / (r + mu) and q = r / (r + mu), each accurate as r grows
    r, mu = math.exp(v[0]), math.exp(v[1])
    return _nb_log_pmf_pq(x, r, mu / (r + mu), r / (r + mu), -math.log1p(mu / r))


def _log_p0_complement(lp0: float) -> float:
    return math.log(-math.expm1(lp0)) if lp0 < 0 else -math.inf


def _numerical_hessian(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    k = len(x)
    h = 1e-4 * np.maximum(1.0, np.abs(x))
    out = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k); ei[i] = h[i]
            ej = np.zeros(k); ej[j] = h[j]
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            out[i, j] = out[j, i] = val
    return out


def _se_from_nll(nll: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    try:
        with np.errstate(invalid="ignore", over="ignore"):
            hess = _numerical_hessian(nll, x)
        if not np.all(np.isfinite(hess)) or np.linalg.cond(hess) > 1e12:
            return np.full(len(x), math.nan)
        cov = np.linalg.inv(hess)
        d = np.diag(cov)
        return np.where(d > 0, np.sqrt(np.abs(d)), math.nan)
    except np.linalg.LinAlgError:
        return np.full(len(x), math.nan)


def _report(model, data, names, values, nll_natural, loglik, support, cell_probs, n, converged,
            boundary, min_expected, notes=None) -> FitReport:
    k = len(names)
    x = np.array([values[nm] for nm in names])
    se = _se_from_nll(nll_natural, x)
    se_d = {nm: float(s) for nm, s in zip(names, se)}
    ci = {nm: (values[nm] - Z95 * se_d[nm], values[nm] + Z95 * se_d[nm]) for nm in names}
    f = data.dense(max(support[-1], data.max_value))
    observed = [float(f[v]) for v in support]
    expected = [float(v) for v in data.total * cell_probs]
    gof = chisq_test(observed, expected, k, **_gof_kw(min_expected), labels=support)
    notes = list(notes or [])
    if boundary:
        notes.append("boundary solution: a parameter drifted to the edge of its range")
    return FitReport(model, values, n, k, loglik, aic(loglik, k), se_d, ci, support, observed,
                     expected, gof, data.truncated_at_zero, converged, boundary, None, None, notes)


# -- beta-binomial -------------------------------------------------------------


def fit_bb_fixed_n(data: FrequencyData, n: int, min_expected: float | None = None) -> FitReport:
    if n < data.max_value:
        raise DataError(f"n={n} is smaller than the largest observed value {data.max_value}")
    f = data.dense(n)
    N = f.sum()
    trunc = data.truncated_at_zero

    def loglik_ab(a, b):
        lp = bb_log_pmf(n, a, b)
        ll = float(f @ lp)
        if trunc:
            ll -= N * _log_p0_complement(lp[0])
        return ll

    def obj(v):
        if np.any(np.abs(v) > LOG_BOX):
            return math.inf
        return -loglik_ab(math.exp(v[0]), math.exp(v[1])) / N

    res = minimize_restarts(obj, [(0.0, 0.0), (1.0, 1.0), (2.0, 3.0), (-1.0, 0.0)])
    a, b = math.exp(res.x[0]), math.exp(res.x[1])
    lp = bb_log_pmf(n, a, b)
    lo = 1 if trunc else 0
    cells = np.exp(lp[lo:]) / np.exp(lp[lo:]).sum()

    def nll_nat(t):
        if t[0] <= 0 or t[1] <= 0:
            return math.inf
        return -loglik_ab(t[0], t[1])

    boundary = bool(np.any(np.abs(res.x) > LOG_BOX - 1.0))
    return _report("bb", data, ("a", "b"), {"a": a, "b": b}, nll_nat, loglik_ab(a, b),
                   list(range(lo, n + 1)), cells, n, res.converged, boundary, min_expected)


def fit_bb(data: FrequencyData, n: int | None = None, n_range=None,
           min_expected: float | None = None) -> FitReport:
    """Beta-binomial fit; profile over n unless ``n`` is given."""
    if n is not None:
        return fit_bb_fixed_n(data, n, min_expected)
    return _profile(lambda m: fit_bb_fixed_n(data, m, min_expected), data, n_range)


# -- unbounded support: NB and CMP -------------------------------------------


def _fit_unbounded(model, data, names, log_pmf_box, to_natural, starts, nll_natural_factory,
                   min_expected, boundary_check):
    """Shared driver for families on {0, 1, ...}.

    The expected-frequency table runs to the largest observed value, with the
    last cell absorbing the upper tail so expected counts sum to N.
    """
    vals = np.array(data.values)
    freqs = np.array(data.frequencies, dtype=float)
    N = freqs.sum()
    trunc = data.truncated_at_zero

    def loglik_box(v):
        lp = log_pmf_box(vals, v)
        ll = float(freqs @ lp)
        if trunc:
            ll -= N * _log_p0_complement(float(log_pmf_box(np.array([0]), v)[0]))
        return ll

    def obj(v):
        if np.any(np.abs(v) > LOG_BOX):
            return math.inf
        try:
            val = -loglik_box(v) / N
        except (ValueError, OverflowError, cmp_mod.SeriesError):
            return math.inf
        return val if math.isfinite(val) else math.inf

    res = minimize_restarts(obj, starts)
    natural = to_natural(res.x)
    values = dict(zip(names, natural))
    lo = 1 if trunc else 0
    top = data.max_value
    support = list(range(lo, top + 1))
    probs = np.exp(log_pmf_box(np.arange(top + 1), res.x))
    if trunc:
        probs = probs / (1.0 - probs[0])
    cells = probs[lo:].copy()
    cells[-1] += max(0.0, 1.0 - cells.sum())
    boundary = bool(np.any(np.abs(res.x) > LOG_BOX - 1.0)) or boundary_check(natural)
    return _report(model, data, names, values, nll_natural_factory(loglik_box), loglik_box(res.x),
                   support, cells, None, res.converged, boundary, min_expected)


def fit_nb(data: FrequencyData, min_expected: float | None = None) -> FitReport:
    """Negative binomial, parameterized as C(r+x-1, x) p**x (1-p)**r."""
    m = max(data.mean(), 1e-3)

    def nll_factory(loglik_box):
        def nll(t):
            r, p = t
            if r <= 0 or not 0 < p < 1:
                return math.inf
            return -loglik_box(np.array([math.log(r), math.log(r * p / (1 - p))]))
        return nll

    return _fit_unbounded(
        "nb", data, ("r", "p"), _nb_log_pmf_box, _nb_from_box,
        [(0.0, math.log(m)), (2.0, math.log(m)), (5.0, math.log(m)), (-1.0, math.log(m))],
        nll_factory, min_expected,
        lambda nat: nat[1] < 1e-8 or nat[1] > 1 - 1e-8,
    )


def _cmp_log_pmf_box(x, v):
    params = cmp_mod.CmpParams(math.exp(v[0]), math.exp(v[1]))
    return cmp_mod.cmp_log_pmf(params, x)


def fit_cmp(data: FrequencyData, min_expected: float | None = None) -> FitReport:
    """CMP(r, lambda) on the nonnegative integers."""
    m = max(data.mean(), 1e-3)

    def nll_factory(loglik_box):
        def nll(t):
            r, lam = t
            if r < cmp_mod.MIN_R or lam <= 0:
                return math.inf
            return -loglik_box(np.array([math.log(r), math.log(lam)]))
        return nll

    lo_r = math.log(cmp_mod.MIN_R)

    def guarded(x, v):
        if v[0] < lo_r:
            raise ValueError("r below the summable range")
        return _cmp_log_pmf_box(x, v)

    return _fit_unbounded(
        "cmp", data, ("r", "lambda"), guarded, lambda v: (math.exp(v[0]), math.exp(v[1])),
        [(0.0, math.log(m)), (0.5, math.log(m) * 1.5 + 0.5), (-0.5, math.log(m))],
        nll_factory, min_expected,
        lambda nat: nat[0] <= cmp_mod.MIN_R * 1.0001,
    )


# -- CMPB ----------------------------------------------------------------------


def fit_cmpb(data: FrequencyData, n: int | None = None, n_range=None,
             min_expected: float | None = None) -> FitReport:
    """MCMPB with alpha = beta; profile over n unless ``n`` is given."""
    if n is not None:
        return fit_fixed_n(data, n, tied=True, min_expected=min_expected)
    return fit_profile_n(data, n_range, tied=True, min_expected=min_expected)
