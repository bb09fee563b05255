"""Exact computation of the MCMPB law on {0, ..., n}.

The pmf is ``theta**x / (x!**alpha * (n - x)!**beta)`` up to normalization,
with ``theta = exp(psi)``. Every quantity is built in log space from the
two-term ratio ``a[k+1] / a[k] = theta * (n - k)**beta / (k + 1)**alpha``,
so no factorial is ever formed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

PARAM_CAP = 50.0
MAX_N = 10_000


class ParameterError(ValueError):
    """Parameters outside the domain the table builder accepts."""


class SupportError(ValueError):
    """A value outside {0, ..., n}."""


@dataclass(frozen=True)
class McmpbParams:
    n: int
    alpha: float
    beta: float
    psi: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("alpha", "beta", "psi"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def theta(self) -> float:
        return math.exp(self.psi)

    @classmethod
    def from_theta(cls, n: int, alpha: float, beta: float, theta: float) -> "McmpbParams":
        if not theta > 0:
            raise ParameterError(f"theta must be positive, got {theta!r}")
        return cls(n, alpha, beta, math.log(theta))

    def as_tuple(self) -> tuple[int, float, float, float]:
        return (self.n, self.alpha, self.beta, self.psi)


def check_caps(params: McmpbParams) -> None:
    """Raise unless |alpha|, |beta|, |psi| <= PARAM_CAP and n <= MAX_N."""
    if params.n > MAX_N:
        raise ParameterError(f"n={params.n} exceeds the supported maximum {MAX_N}")
    for name in ("alpha", "beta", "psi"):
        value = getattr(params, name)
        if abs(value) > PARAM_CAP:
            raise ParameterError(
                f"|{name}|={abs(value):g} exceeds the cap {PARAM_CAP:g}; "
                "the law is numerically degenerate there"
            )


def log_ratios(n: int, alpha: float, beta: float, psi: float) -> np.ndarray:
    """log(a[k+1] / a[k]) for k = 0..n-1.

    Grouped so that the reflected law's ratios are exact negatives of these
    in reverse order.
    """
    k = np.arange(n, dtype=float)
    return psi + (beta * np.log(n - k) - alpha * np.log(k + 1))


def log_weights(n: int, alpha: float, beta: float, psi: float) -> np.ndarray:
    """Unnormalized log mass with a[0] scaled to 1 and the maximum shifted to 0.

    No cap is enforced here; callers that accept user input go through
    ``build_table``. The sums run outward from the mode, so each entry
    carries rounding of its own size rather than of the largest partial sum.
    The result averages this with the same walk over the reflected ratios,
    which makes the table exactly equivariant under reflection (two-peaked
    laws otherwise pick up drift across a deep valley).
    """
    r = log_ratios(n, alpha, beta, psi)
    lw = 0.5 * (_walk_from_mode(r) + _walk_from_mode(-r[::-1])[::-1])
    return lw - lw.max()


def _walk_from_mode(r: np.ndarray) -> np.ndarray:
    m = int(np.argmax(np.concatenate([[0.0], np.cumsum(r)])))
    lw = np.empty(len(r) + 1)
    lw[m] = 0.0
    np.cumsum(r[m:], out=lw[m + 1:])
    lw[:m] = -np.cumsum(r[:m][::-1])[::-1]
    return lw


def _logsumexp(v: np.ndarray) -> float:
    m = v.max()
    return float(m + math.log(np.exp(v - m).sum()))


def log_normalizer(params: McmpbParams) -> float:
    """log C*_n(alpha, beta, psi) on the absolute scale.

    a[0] = n!**(-beta); the recurrence is anchored there and shifted back.
    """
    n, a, b, psi = params.as_tuple()
    lw = np.empty(n + 1)
    lw[0] = -b * gammaln(n + 1)
    np.cumsum(log_ratios(n, a, b, psi), out=lw[1:])
    lw[1:] += lw[0]
    return _logsumexp(lw)


@dataclass(frozen=True, eq=False)
class ProbTable:
    """Materialized pmf/cdf over {0..n}.

    ``log_weights`` carries the scaled unnormalized log mass and ``log_norm``
    the log of its sum, so ``log_pmf = log_weights - log_norm`` exactly.
    """

    params: McmpbParams
    log_weights: np.ndarray
    log_norm: float
    pmf: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.params.n + 1)

    @property
    def log_pmf(self) -> np.ndarray:
        return self.log_weights - self.log_norm

    def sf(self) -> np.ndarray:
        """P(X >= x) by summation from the upper tail."""
        return np.cumsum(self.pmf[::-1])[::-1]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_table(params: McmpbParams) -> ProbTable:
    check_caps(params)
    lw = log_weights(*params.as_tuple())
    log_norm = _logsumexp(lw)
    pmf = np.exp(lw - log_norm)
    cdf = np.cumsum(pmf)
    return ProbTable(params, _frozen(lw), log_norm, _frozen(pmf), _frozen(cdf))


def log_pmf(params: McmpbParams, x: int) -> float:
    if int(x) != x or not 0 <= x <= params.n:
        raise SupportError(f"x={x!r} is outside the support {{0..{params.n}}}")
    x = int(x)
    n, a, b, psi = params.as_tuple()
    return float(
        x * psi - a * gammaln(x + 1) - b * gammaln(n - x + 1) - log_normalizer(params)
    )


def pmf(params: McmpbParams, x: int) -> float:
    return math.exp(log_pmf(params, x))


def quantile(table: ProbTable, q: float) -> int:
    """Smallest x with cdf[x] >= q."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    for x, c in enumerate(table.cdf):
        if c >= q:
            return x
    return table.n


def sample(table: ProbTable, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` i.i.d. values by inverting the cdf.

    ``seed`` may be an int or a ``numpy.random.Generator`` owned by the caller.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    draws = np.searchsorted(table.cdf, u, side="right")
    return np.minimum(draws, table.n)


# -- moments ---------------------------------------------------------------


@dataclass(frozen=True)
class MomentSet:
    mean: float
    raw: tuple[float, float, float, float]
    central: tuple[float, float, float]
    dispersion_index: float
    skewness: float
    kurtosis_excess: float

    @property
    def variance(self) -> float:
        return self.central[0]


def moments(table: ProbTable) -> MomentSet:
    x = table.support.astype(float)
    p = table.pmf
    raw = tuple(float(np.dot(x**k, p)) for k in range(1, 5))
    mean = raw[0]
    d = x - mean
    mu2, mu3, mu4 = (float(np.dot(d**k, p)) for k in range(2, 5))
    mu2 = max(mu2, 0.0)
    disp = mu2 / mean if mean > 0 else math.nan
    skew = mu3 / mu2**1.5 if mu2 > 0 else math.nan
    kurt = mu4 / mu2**2 - 3.0 if mu2 > 0 else math.nan
    return MomentSet(mean, raw, (mu2, mu3, mu4), disp, skew, kurt)


def shape_index(params: McmpbParams, index: str) -> float:
    """One of 'dispersion', 'skewness', 'kurtosis'."""
    m = moments(build_table(params))
    try:
        return {
            "dispersion": m.dispersion_index,
            "skewness": m.skewness,
            "kurtosis": m.kurtosis_excess,
        }[index]
    except KeyError:
        raise ValueError(f"unknown index {index!r}") from None


@dataclass(frozen=True)
class ExpFamilyMoments:
    """Means and covariance of (X, log X!, log (n-X)!)."""

    expectations: np.ndarray
    covariance: np.ndarray


def sufficient_features(n: int) -> np.ndarray:
    """Rows x = 0..n of (x, log x!, log (n-x)!)."""
    x = np.arange(n + 1, dtype=float)
    return np.column_stack([x, gammaln(x + 1), gammaln(n - x + 1)])


def exp_family_derivatives(params: McmpbParams) -> ExpFamilyMoments:
    table = build_table(params)
    t = sufficient_features(params.n)
    p = table.pmf
    mean = p @ t
    d = t - mean
    cov = (d * p[:, None]).T @ d
    cov = 0.5 * (cov + cov.T)
    return ExpFamilyMoments(_frozen(mean), _frozen(cov))


# -- shape -----------------------------------------------------------------


def reflect(params: McmpbParams) -> McmpbParams:
    """The law of n - X: (n, beta, alpha, -psi)."""
    return McmpbParams(params.n, params.beta, params.alpha, -params.psi)


@dataclass(frozen=True)
class Modality:
    kind: str  # "unimodal" | "bimodal" | "flat-pair" | "uniform"
    modes: tuple[int, ...]


_FLAT_TOL = 1e-12


def _scan_modality(lw: np.ndarray) -> Modality:
    n = len(lw) - 1
    if np.all(np.abs(lw - lw[0]) <= _FLAT_TOL * max(1.0, abs(lw[0]))):
        return Modality("uniform", tuple(range(n + 1)))
    # collapse runs of equal values into plateaus, then find local maxima
    plateaus: list[list[int]] = []
    for x in range(n + 1):
        if plateaus and abs(lw[x] - lw[plateaus[-1][0]]) <= _FLAT_TOL * max(1.0, abs(lw[x])):
            plateaus[-1].append(x)
        else:
            plateaus.append([x])
    heights = [lw[p[0]] for p in plateaus]
    peaks = []
    for i, plat in enumerate(plateaus):
        left = heights[i - 1] if i > 0 else -math.inf
        right = heights[i + 1] if i + 1 < len(plateaus) else -math.inf
        if heights[i] > left and heights[i] > right:
            peaks.append(plat)
    if len(peaks) == 1:
        plat = peaks[0]
        if len(plat) == 1:
            return Modality("unimodal", (plat[0],))
        if len(plat) == 2:
            return Modality("flat-pair", tuple(plat))
        return Modality("unimodal", tuple(plat))
    return Modality("bimodal", tuple(p[0] for p in peaks))


def classify_modality(table: ProbTable) -> Modality:
    n, a, b, psi = table.params.as_tuple()
    if a > 0 and b > 0:
        mode = int(np.argmax(table.log_weights))
        result = _scan_modality(table.log_weights)
        if result.kind == "flat-pair":
            return result
        return Modality("unimodal", (mode,))
    if a < 0 and b < 0:
        # log-convex: only the endpoints can be modes
        log_n = math.log(n)
        lower, upper = a * log_n, -b * log_n
        if psi < lower:
            return Modality("unimodal", (0,))
        if psi > upper:
            return Modality("unimodal", (n,))
        if lower < psi < upper:
            return Modality("bimodal", (0, n))
    return _scan_modality(table.log_weights)


def log_concavity_check(table: ProbTable) -> bool:
    """True iff pmf[x+1] pmf[x-1] <= pmf[x]**2 at every interior x."""
    lw = table.log_weights
    if len(lw) < 3:
        return True
    second = lw[2:] + lw[:-2] - 2.0 * lw[1:-1]
    return bool(np.all(second <= 1e-12))


# -- Stein identity and power bias -----------------------------------------


def birth_weights(n: int, beta: float) -> np.ndarray:
    """(n - x)**beta for x < n and 0 at x = n."""
    x = np.arange(n + 1)
    out = np.zeros(n + 1)
    out[:n] = (n - x[:n]).astype(float) ** beta
    return out


def death_weights(n: int, alpha: float) -> np.ndarray:
    """x**alpha for x >= 1 and 0 at x = 0."""
    x = np.arange(n + 1)
    out = np.zeros(n + 1)
    out[1:] = x[1:].astype(float) ** alpha
    return out


def stein_residual(table: ProbTable, f: Callable[[int], float] | Sequence[float]) -> float:
    """E[theta (n-X)^beta f(X+1) - X^alpha f(X)] under ``table``.

    ``f`` is either a callable or a sequence of n+2 values on {0..n+1}. The
    rates vanish at the boundaries (no arrivals at n, no departures at 0).
    """
    n, a, b, psi = table.params.as_tuple()
    if callable(f):
        fv = np.array([f(x) for x in range(n + 2)], dtype=float)
    else:
        fv = np.asarray(f, dtype=float)
        if fv.shape != (n + 2,):
            raise ValueError(f"f must have {n + 2} values on {{0..{n + 1}}}")
    if not np.all(np.isfinite(fv)):
        raise ValueError("f must be finite on {0..n+1}")
    terms = math.exp(psi) * birth_weights(n, b) * fv[1:] - death_weights(n, a) * fv[:-1]
    return float(np.dot(terms, table.pmf))


def power_bias(table: ProbTable, w: float) -> np.ndarray:
    """pmf of the w-power biased variable, x**w pmf[x] / E[X**w].

    0**0 is taken as 1, so w = 0 returns the pmf unchanged.
    """
    x = table.support.astype(float)
    with np.errstate(divide="ignore"):
        weights = np.where(x > 0, x**w, 1.0 if w == 0 else (0.0 if w > 0 else np.inf))
    mass = weights * table.pmf
    if not np.all(np.isfinite(mass)):
        raise ValueError(f"x**{w} is infinite at x=0 where the law has mass")
    total = mass.sum()
    if not total > 0:
        raise ValueError(f"E[X**{w}] = 0; the {w}-power bias is undefined")
    return mass / total


def dominates_stochastically(smaller: np.ndarray, larger: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff cdf(smaller) >= cdf(larger) pointwise on a common support."""
    size = max(len(smaller), len(larger))
    s = np.pad(np.asarray(smaller, float), (0, size - len(smaller)))
    g = np.pad(np.asarray(larger, float), (0, size - len(larger)))
    return bool(np.all(np.cumsum(s) >= np.cumsum(g) - tol))


def power_bias_order_holds(table: ProbTable) -> bool:
    """Check that the alpha-power biased variable is stochastically below X + 1."""
    biased = power_bias(table, table.params.alpha)
    shifted = np.concatenate([[0.0], table.pmf])
    return dominates_stochastically(biased, shifted)


# -- dependent Bernoulli representation ------------------------------------


def bahadur_mean(alpha: float, beta: float, theta: float) -> float:
    return (2 ** (alpha - 1) * theta + theta**2) / (
        2 ** (alpha - beta) + 2**alpha * theta + theta**2
    )


def bahadur_correlation(alpha: float, beta: float, theta: float) -> float:
    return (
        theta
        * (2 ** (alpha - beta) - 4 ** (alpha - 1))
        / ((1 + theta) * (2 ** (alpha - 1) + theta) * (2 ** (alpha - beta) + 2 ** (alpha - 1) * theta))
    )


def dependent_bernoulli_joint(n: int, alpha: float, beta: float, p: float) -> dict[tuple[int, ...], float]:
    """Joint pmf of n exchangeable Bernoulli variables whose total is MCMPB.

    Enumerates all 2**n binary vectors, so keep n small.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if n > 20:
        raise ValueError("enumeration over 2**n vectors is limited to n <= 20")

    def log_w(s: int) -> float:
        return (
            s * math.log(p)
            + (n - s) * math.log1p(-p)
            - (alpha - 1) * math.lgamma(s + 1)
            - (beta - 1) * math.lgamma(n - s + 1)
        )

    by_total = [log_w(s) for s in range(n + 1)]
    vectors = list(itertools.product((0, 1), repeat=n))
    logs = np.array([by_total[sum(v)] for v in vectors])
    probs = np.exp(logs - _logsumexp(logs))
    return dict(zip(vectors, probs))


def exponential_combination(n: int, p: float, lam: float, r: float, weight: float) -> McmpbParams:
    """MCMPB proportional to binomial(n, p)**weight * truncated CMP(lam, r)**(1 - weight)."""
    theta = lam * (p / (lam * (1 - p))) ** weight
    alpha = weight * (1 - r) + r
    return McmpbParams.from_theta(n, alpha, weight, theta)
