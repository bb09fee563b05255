"""Serialization of fit reports: a JSON document and a human-readable table."""

from __future__ import annotations

import json
import math

from .gof import GofSummary
from .inference import FitReport


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _unnum(v):
    return math.nan if v is None else float(v)


def report_to_dict(r: FitReport) -> dict:
    return {
        "model": r.model,
        "n": r.n,
        "k": r.k,
        "truncated_at_zero": r.truncated_at_zero,
        "params": {k: _num(v) for k, v in r.params.items()},
        "se": {k: _num(v) for k, v in r.se.items()},
        "ci95": {k: [_num(lo), _num(hi)] for k, (lo, hi) in r.ci95.items()},
        "loglik": _num(r.loglik),
        "aic": _num(r.aic),
        "gof": {
            "chisq": _num(r.gof.chisq),
            "df": r.gof.df,
            "p_value": _num(r.gof.p_value),
            "merged_cells": r.gof.merged_cells,
            "df_floored": r.gof.df_floored,
        },
        "cells": [
            {"count": c, "observed": _num(o), "expected": _num(e)}
            for c, o, e in zip(r.support, r.observed, r.expected)
        ],
        "converged": r.converged,
        "boundary": r.boundary,
        "score_residual": _num(r.score_residual),
        "profile": None if r.profile is None else {str(k): _num(v) for k, v in r.profile.items()},
        "notes": list(r.notes),
    }


def report_from_dict(d: dict) -> FitReport:
    g = d["gof"]
    gof = GofSummary(_unnum(g["chisq"]), int(g["df"]), _unnum(g["p_value"]),
                     [list(map(int, grp)) for grp in g["merged_cells"]], bool(g["df_floored"]))
    cells = d["cells"]
    return FitReport(
        model=d["model"],
        params={k: _unnum(v) for k, v in d["params"].items()},
        n=d["n"],
        k=int(d["k"]),
        loglik=_unnum(d["loglik"]),
        aic=_unnum(d["aic"]),
        se={k: _unnum(v) for k, v in d["se"].items()},
        ci95={k: (_unnum(v[0]), _unnum(v[1])) for k, v in d["ci95"].items()},
        support=[int(c["count"]) for c in cells],
        observed=[_unnum(c["observed"]) for c in cells],
        expected=[_unnum(c["expected"]) for c in cells],
        gof=gof,
        truncated_at_zero=bool(d["truncated_at_zero"]),
        converged=bool(d["converged"]),
        boundary=bool(d["boundary"]),
        score_residual=None if d["score_residual"] is None else float(d["score_residual"]),
        profile=None if d["profile"] is None else {int(k): _unnum(v) for k, v in d["profile"].items()},
        notes=list(d["notes"]),
    )


def dumps(r: FitReport | list[FitReport]) -> str:
    if isinstance(r, list):
        return json.dumps([report_to_dict(x) for x in r], indent=2)
    return json.dumps(report_to_dict(r), indent=2)


def loads(text: str):
    d = json.loads(text)
    if isinstance(d, list):
        return [report_from_dict(x) for x in d]
    return report_from_dict(d)


def render_table(r: FitReport) -> str:
    """Observed vs expected frequencies followed by the fit summary."""
    out = [f"model: {r.model}" + (f"   n = {r.n}" if r.n is not None else "")
           + ("   (zero-truncated)" if r.truncated_at_zero else "")]
    out.append(f"{'count':>6} {'observed':>10} {'expected':>10}")
    for c, o, e in zip(r.support, r.observed, r.expected):
        out.append(f"{c:>6d} {o:>10.0f} {e:>10.2f}")
    out.append(f"{'total':>6} {sum(r.observed):>10.0f} {sum(r.expected):>10.2f}")
    out.append("")
    out.append(f"{'parameter':>10} {'estimate':>12} {'se':>12}   95% CI")
    for name, v in r.params.items():
        lo, hi = r.ci95[name]
        se = r.se[name]
        ci = "n/a" if math.isnan(se) else f"({lo:.4g}, {hi:.4g})"
        out.append(f"{name:>10} {v:>12.6g} {se:>12.4g}   {ci}")
    out.append("")
    out.append(f"log-likelihood = {r.loglik:.6f}   AIC = {r.aic:.2f}   (k = {r.k})")
    out.append(f"chi-square = {r.chisq:.2f}   df = {r.df}   p-value = {r.p_value:.4f}")
    groups = [g for g in r.gof.merged_cells if len(g) > 1]
    if groups:
        out.append("merged cells: " + ", ".join(f"{g[0]}-{g[-1]}" for g in groups))
    if r.gof.df_floored:
        out.append("warning: df floored at 1 after merging")
    for note in r.notes:
        out.append(f"note: {note}")
    return "\n".join(out)
