"""Nelder-Mead simplex minimization.

Standard coefficients: reflection 1, expansion 2, contraction 0.5, shrink 0.5.
Convergence requires both the simplex diameter and the spread of objective
values across the vertices to fall below their tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class ConvergenceError(RuntimeError):
    """Raised when no run converged; carries the best point found."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool


def initial_simplex(x0: Sequence[float], step: float | Sequence[float] = 0.5) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    steps = np.broadcast_to(np.asarray(step, dtype=float), x0.shape)
    simplex = np.tile(x0, (len(x0) + 1, 1))
    for i in range(len(x0)):
        simplex[i + 1, i] += steps[i]
    return simplex


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float] | None = None,
    *,
    simplex: np.ndarray | None = None,
    step: float | Sequence[float] = 0.5,
    xtol: float = 1e-8,
    ftol: float = 1e-10,
    max_iter: int = 2000,
) -> SimplexResult:
    if simplex is None:
        if x0 is None:
            raise ValueError("need x0 or an explicit simplex")
        simplex = initial_simplex(x0, step)
    sim = np.array(simplex, dtype=float)
    npts, dim = sim.shape
    if npts != dim + 1:
        raise ValueError("simplex must have dim + 1 vertices")
    fv = np.array([f(v) for v in sim])
    evals = npts
    if not np.isfinite(fv).any():
        raise ValueError("objective is not finite at any initial vertex")

    it = 0
    converged = False
    while it < max_iter:
        order = np.argsort(fv, kind="stable")
        sim, fv = sim[order], fv[order]
        diameter = np.max(np.abs(sim[1:] - sim[0]))
        spread = fv[-1] - fv[0]
        if diameter < xtol and spread < ftol:
            converged = True
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        evals += 1
        if fr < fv[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            evals += 1
            if fe < fr:
                sim[-1], fv[-1] = xe, fe
            else:
                sim[-1], fv[-1] = xr, fr
            continue
        if fr < fv[-2]:
            sim[-1], fv[-1] = xr, fr
            continue
        if fr < fv[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            evals += 1
            if fc <= fr:
                sim[-1], fv[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            evals += 1
            if fc < fv[-1]:
                sim[-1], fv[-1] = xc, fc
                continue
        sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
        fv[1:] = [f(v) for v in sim[1:]]
        evals += dim

    best = int(np.argmin(fv))
    return SimplexResult(sim[best].copy(), float(fv[best]), it, evals, converged)


def minimize_restarts(
    f: Callable[[np.ndarray], float],
    starts: Sequence[Sequence[float]],
    *,
    step: float = 0.5,
    xtol: float = 1e-8,
    ftol: float = 1e-10,
    max_iter: int = 2000,
    polish: int = 3,
) -> SimplexResult:
    """Run Nelder-Mead from each start and keep the best.

    The winner is restarted from a fresh simplex up to ``polish`` times, since
    a collapsed simplex can stall short of the optimum on curved ridges.
    Raises ``ConvergenceError`` when no run converged.
    """
    best: SimplexResult | None = None
    any_converged = False
    for x0 in starts:
        if not np.isfinite(f(np.asarray(x0, float))):
            continue
        res = nelder_mead(f, x0, step=step, xtol=xtol, ftol=ftol, max_iter=max_iter)
        any_converged |= res.converged
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise ConvergenceError("objective not finite at any starting point")
    for _ in range(polish):
        res = nelder_mead(f, best.x, step=0.05, xtol=xtol, ftol=ftol, max_iter=max_iter)
        any_converged |= res.converged
        improved = res.fun < best.fun - ftol
        if res.fun <= best.fun:
            best = SimplexResult(res.x, res.fun, best.iterations + res.iterations,
                                 best.evaluations + res.evaluations, res.converged or best.converged)
        if not improved and res.converged:
            break
    if not any_converged:
        raise ConvergenceError(
            f"Nelder-Mead did not converge from {len(starts)} starts x {max_iter} iterations",
            best,
        )
    return best
