"""Maximum-likelihood fitting of the MCMPB law.

The free parameters are ordered (alpha, beta, psi). Untruncated fits use the
sufficient statistics (S1, S2, S3); zero-truncated fits maximize the
conditional likelihood given X >= 1 directly.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .core import PARAM_CAP, McmpbParams, build_table, log_normalizer, sufficient_features
from .gof import GofSummary, aic, chisq_test
from .optimize import ConvergenceError, minimize_restarts

Z95 = 1.959964
PARAM_NAMES = ("alpha", "beta", "psi")


class DataError(ValueError):
    """Frequency data that violates its invariants or a model's support."""


class SingularFisherError(np.linalg.LinAlgError):
    """Fisher information too ill-conditioned to invert."""


@dataclass(frozen=True)
class FrequencyData:
    values: tuple[int, ...]
    frequencies: tuple[int, ...]
    truncated_at_zero: bool = False

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        freqs = tuple(int(f) for f in self.frequencies)
        if len(values) != len(freqs) or not values:
            raise DataError("values and frequencies must be nonempty and aligned")
        if any(v < 0 for v in values):
            raise DataError("values must be nonnegative")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise DataError("values must be strictly increasing")
        if any(f < 0 for f in freqs):
            raise DataError("frequencies must be nonnegative")
        if sum(freqs) <= 0:
            raise DataError("total frequency must be positive")
        if self.truncated_at_zero and values[0] < 1:
            raise DataError("zero-truncated data cannot contain the value 0")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frequencies", freqs)

    @classmethod
    def from_counts(cls, counts: Sequence[int], start: int = 0, truncated_at_zero: bool = False):
        """Frequencies listed for consecutive values start, start+1, ..."""
        return cls(tuple(range(start, start + len(counts))), tuple(counts), truncated_at_zero)

    @classmethod
    def from_sample(cls, draws, truncated_at_zero: bool = False):
        vals, freqs = np.unique(np.asarray(draws, dtype=int), return_counts=True)
        return cls(tuple(vals), tuple(freqs), truncated_at_zero)

    @property
    def total(self) -> int:
        return sum(self.frequencies)

    @property
    def max_value(self) -> int:
        return max(v for v, f in zip(self.values, self.frequencies) if f > 0)

    @property
    def min_value(self) -> int:
        return min(v for v, f in zip(self.values, self.frequencies) if f > 0)

    def dense(self, upper: int) -> np.ndarray:
        """Frequencies over 0..upper."""
        if upper < self.max_value:
            raise DataError(f"observed value {self.max_value} exceeds {upper}")
        out = np.zeros(upper + 1)
        for v, f in zip(self.values, self.frequencies):
            if v <= upper:
                out[v] += f
        return out

    def mean(self) -> float:
        return sum(v * f for v, f in zip(self.values, self.frequencies)) / self.total

    def reflected(self, n: int) -> "FrequencyData":
        """The data mapped through x -> n - x."""
        if self.truncated_at_zero:
            raise DataError("reflection of zero-truncated data is not defined")
        freq = self.dense(n)[::-1]
        return FrequencyData(tuple(range(n + 1)), tuple(int(f) for f in freq))


@dataclass(frozen=True)
class SufficientStats:
    s1: float
    s2: float
    s3: float
    n: int


def sufficient_stats(data: FrequencyData, n: int) -> SufficientStats:
    f = data.dense(n)
    x = np.arange(n + 1, dtype=float)
    N = f.sum()
    return SufficientStats(
        float(f @ x / N),
        float(-(f @ gammaln(x + 1)) / N),
        float(-(f @ gammaln(n - x + 1)) / N),
        n,
    )


@dataclass
class FitReport:
    model: str
    params: dict[str, float]
    n: int | None
    k: int
    loglik: float
    aic: float
    se: dict[str, float]
    ci95: dict[str, tuple[float, float]]
    support: list[int]
    observed: list[float]
    expected: list[float]
    gof: GofSummary
    truncated_at_zero: bool = False
    converged: bool = True
    boundary: bool = False
    score_residual: float | None = None
    profile: dict[int, float] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def chisq(self) -> float:
        return self.gof.chisq

    @property
    def df(self) -> int:
        return self.gof.df

    @property
    def p_value(self) -> float:
        return self.gof.p_value

    @property
    def total(self) -> float:
        return float(sum(self.observed))

    def mcmpb_params(self) -> McmpbParams:
        if self.model == "mcmpb":
            return McmpbParams(self.n, self.params["alpha"], self.params["beta"], self.params["psi"])
        if self.model == "cmpb":
            return McmpbParams(self.n, self.params["alpha"], self.params["alpha"], self.params["psi"])
        raise ValueError(f"{self.model} is not an MCMPB-type model")


# -- likelihood --------------------------------------------------------------


def log_likelihood(data: FrequencyData, params: McmpbParams) -> float:
    n = params.n
    if data.max_value > n:
        raise DataError(f"observed value {data.max_value} exceeds n={n}")
    if not data.truncated_at_zero:
        s = sufficient_stats(data, n)
        return data.total * (
            params.psi * s.s1 + params.alpha * s.s2 + params.beta * s.s3 - log_normalizer(params)
        )
    lp = build_table(params).log_pmf
    f = data.dense(n)
    return float(f[1:] @ lp[1:] - data.total * math.log(-math.expm1(lp[0])))


class _McmpbObjective:
    """Negative mean log-likelihood for fixed n, optionally with alpha = beta."""

    def __init__(self, data: FrequencyData, n: int, tied: bool = False):
        self.n = n
        self.tied = tied
        self.truncated = data.truncated_at_zero
        feats = sufficient_features(n)
        self.x, self.lgx, self.lgnx = feats[:, 0], feats[:, 1], feats[:, 2]
        f = data.dense(n)
        self.N = f.sum()
        self.freq = f / self.N
        self.s1 = float(self.freq @ self.x)
        self.s2 = float(-(self.freq @ self.lgx))
        self.s3 = float(-(self.freq @ self.lgnx))

    def expand(self, v) -> tuple[float, float, float]:
        if self.tied:
            return float(v[0]), float(v[0]), float(v[1])
        return float(v[0]), float(v[1]), float(v[2])

    def __call__(self, v) -> float:
        a, b, psi = self.expand(v)
        if abs(a) > PARAM_CAP or abs(b) > PARAM_CAP or abs(psi) > PARAM_CAP:
            return math.inf
        w = self.x * psi - a * self.lgx - b * self.lgnx
        m = w.max()
        log_c = m + math.log(np.exp(w - m).sum())
        if not self.truncated:
            return -(psi * self.s1 + a * self.s2 + b * self.s3 - log_c)
        lp0 = w[0] - log_c
        if lp0 >= 0:
            return math.inf
        return -(float(self.freq[1:] @ (w[1:] - log_c)) - math.log(-math.expm1(lp0)))


def _starts(obj: _McmpbObjective) -> list[tuple[float, ...]]:
    p = min(max(obj.s1 / obj.n, 1e-3), 1 - 1e-3)
    driven = (1.0, 1.0, math.log(p / (1 - p)))
    base = [(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, 0.0, 1.0), (0.0, 1.0, 1.0), driven]
    if obj.tied:
        return [(a, psi) for a, _, psi in base[:2]] + [(0.5, 1.0), (1.0, -1.0), (1.0, driven[2])]
    return base


# -- Fisher information -------------------------------------------------------


def fisher_information(params: McmpbParams, truncated_at_zero: bool = False) -> np.ndarray:
    """Per-observation Fisher information in (alpha, beta, psi) order.

    This is the covariance of the sufficient statistics (-log X!, -log(n-X)!, X)
    under the law (restricted to X >= 1 for truncated data).
    """
    t = sufficient_features(params.n)
    stats = np.column_stack([-t[:, 1], -t[:, 2], t[:, 0]])
    p = build_table(params).pmf.copy()
    if truncated_at_zero:
        p[0] = 0.0
        p /= p.sum()
    mean = p @ stats
    d = stats - mean
    info = (d * p[:, None]).T @ d
    return 0.5 * (info + info.T)


def standard_errors(fisher: np.ndarray, N: int, max_condition: float = 1e12) -> np.ndarray:
    cond = np.linalg.cond(fisher)
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularFisherError(f"Fisher information is singular (condition number {cond:.3g})")
    cov = np.linalg.inv(fisher) / N
    return np.sqrt(np.diag(cov))


def _expected(pmf_cells: np.ndarray, N: float) -> list[float]:
    return [float(v) for v in N * pmf_cells]


def _mcmpb_report(data: FrequencyData, obj: _McmpbObjective, x: np.ndarray, model: str,
                  converged: bool, min_expected: float | None) -> FitReport:
    a, b, psi = obj.expand(x)
    n = obj.n
    params = McmpbParams(n, a, b, psi)
    table = build_table(params)
    loglik = -obj(x) * obj.N
    k = 2 if obj.tied else 3
    names = ("alpha", "psi") if obj.tied else PARAM_NAMES
    values = dict(zip(names, (a, psi) if obj.tied else (a, b, psi)))

    notes: list[str] = []
    se = {name: math.nan for name in names}
    try:
        info = fisher_information(params, data.truncated_at_zero)
        if obj.tied:
            # alpha = beta: the sufficient statistic for alpha is the sum of the two
            j = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
            info = j.T @ info @ j
        se = dict(zip(names, (float(s) for s in standard_errors(info, data.total))))
    except SingularFisherError as exc:
        notes.append(f"standard errors unavailable: {exc}")
    ci = {name: (values[name] - Z95 * se[name], values[name] + Z95 * se[name]) for name in names}

    lo = 1 if data.truncated_at_zero else 0
    support = list(range(lo, n + 1))
    observed = [float(v) for v in data.dense(n)[lo:]]
    cells = table.pmf[lo:] / (table.pmf[lo:].sum())
    expected = _expected(cells, data.total)
    gof = chisq_test(observed, expected, k, **_gof_kw(min_expected), labels=support)

    score = None
    if not data.truncated_at_zero:
        mean = table.pmf @ sufficient_features(n)
        target = np.array([obj.s1, -obj.s2, -obj.s3])
        score = float(np.max(np.abs(mean - target)))
    boundary = any(abs(v) > PARAM_CAP - 1e-6 for v in (a, b, psi))
    if boundary:
        notes.append("estimate on the parameter cap; the likelihood is flat or unbounded there")
    return FitReport(model, values, n, k, loglik, aic(loglik, k), se, ci, support, observed,
                     expected, gof, data.truncated_at_zero, converged, boundary, score, None, notes)


def _gof_kw(min_expected):
    return {} if min_expected is None else {"min_expected": min_expected}


def fit_fixed_n(data: FrequencyData, n: int, init: Sequence[float] | None = None, *,
                tied: bool = False, max_iter: int = 2000,
                min_expected: float | None = None) -> FitReport:
    """ML fit of MCMPB (or CMPB when ``tied``) with n held fixed."""
    if n < data.max_value:
        raise DataError(f"n={n} is smaller than the largest observed value {data.max_value}")
    if n < 1:
        raise DataError("n must be at least 1")
    obj = _McmpbObjective(data, n, tied)
    starts = _starts(obj)
    if init is not None:
        starts = [tuple(init)] + starts
    res = minimize_restarts(obj, starts, max_iter=max_iter)
    return _mcmpb_report(data, obj, res.x, "cmpb" if tied else "mcmpb", res.converged, min_expected)


def _profile(fit_one, data: FrequencyData, n_range) -> FitReport:
    lo = data.max_value
    ns = list(range(lo, lo + 31)) if n_range is None else sorted(set(int(n) for n in n_range))
    if not ns or ns[0] < lo or ns[-1] > lo + 50:
        raise DataError(f"profile range must lie within [{lo}, {lo + 50}]")
    best = None
    profile = {}
    for n in ns:
        rep = fit_one(n)
        profile[n] = rep.loglik
        if best is None or rep.loglik > best.loglik:
            best = rep
    best.profile = profile
    return best


def fit_profile_n(data: FrequencyData, n_range=None, *, tied: bool = False,
                  min_expected: float | None = None) -> FitReport:
    """Fit each candidate n and keep the largest maximized likelihood.

    Ties go to the smallest n. The default range is [max count, max count + 30].
    """
    return _profile(lambda n: fit_fixed_n(data, n, tied=tied, min_expected=min_expected),
                    data, n_range)


# -- simulation study ---------------------------------------------------------


@dataclass(frozen=True)
class StudyConfig:
    params: McmpbParams
    N: int
    reps: int


@dataclass
class StudyResult:
    config: StudyConfig
    bias: dict[str, float]
    mse: dict[str, float]
    coverage: dict[str, int]
    completed: int
    failures: int

    def coverage_fraction(self) -> dict[str, float]:
        return {k: v / self.completed for k, v in self.coverage.items()}


def _one_replicate(args):
    params, N, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    from .core import sample

    draws = sample(build_table(params), N, rng)
    data = FrequencyData.from_sample(draws)
    try:
        rep = fit_fixed_n(data, params.n)
    except (ConvergenceError, DataError):
        return None
    if rep.boundary or any(math.isnan(rep.se[k]) for k in PARAM_NAMES):
        return None
    est = np.array([rep.params[k] for k in PARAM_NAMES])
    se = np.array([rep.se[k] for k in PARAM_NAMES])
    return est, se


def simulation_study(configs: Sequence[StudyConfig], seed: int = 0,
                     workers: int | None = None) -> list[StudyResult]:
    """Bias, MSE and 95% CI coverage of the fixed-n ML estimates.

    Each replicate draws from its own spawned seed, so results do not depend
    on ``workers``. Fits that fail or land on the parameter cap are excluded
    and counted in ``failures``.
    """
    root = np.random.SeedSequence(seed)
    cfg_seeds = root.spawn(len(configs))
    results = []
    pool = ProcessPoolExecutor(workers) if workers and workers > 1 else None
    try:
        for cfg, cs in zip(configs, cfg_seeds):
            if cfg.reps < 1:
                raise ValueError("reps must be at least 1")
            jobs = [(cfg.params, cfg.N, s) for s in cs.spawn(cfg.reps)]
            outs = list(pool.map(_one_replicate, jobs, chunksize=16)) if pool else [
                _one_replicate(j) for j in jobs
            ]
            good = [o for o in outs if o is not None]
            truth = np.array([cfg.params.alpha, cfg.params.beta, cfg.params.psi])
            if good:
                est = np.array([g[0] for g in good])
                se = np.array([g[1] for g in good])
                err = est - truth
                bias = err.mean(axis=0)
                mse = (err**2).mean(axis=0)
                cover = (np.abs(err) <= Z95 * se).sum(axis=0)
            else:
                bias = mse = np.full(3, math.nan)
                cover = np.zeros(3, dtype=int)
            results.append(StudyResult(
                cfg,
                dict(zip(PARAM_NAMES, map(float, bias))),
                dict(zip(PARAM_NAMES, map(float, mse))),
                dict(zip(PARAM_NAMES, map(int, cover))),
                len(good),
                len(outs) - len(good),
            ))
    finally:
        if pool:
            pool.shutdown()
    return results


STUDY_PARAMS = (
    McmpbParams(15, 0.2, 0.4, 0.0),
    McmpbParams(15, 0.5, 0.2, 0.5),
    McmpbParams(15, -0.5, 0.7, -2.4),
)
