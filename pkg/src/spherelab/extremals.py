"""Sharpness examples as grid functions, and the exponent-fit experiments
that locate region boundaries empirically.

All indicators are exactly {0,1}-valued and cell-aligned.  Scale sweeps are
geometric in delta and every fit reports its maximal log-scale residual.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import ResolutionError, ValidationError
from .forms import domination_experiment
from .grid import GridFunction, GridSpec, indicator, inner, lp_norm, translate
from .operators import RadiusNet, full_maximal, spherical_average
from .regions import annulus_blowup_exponent, knapp_blowup_exponent

__all__ = [
    "ExponentFit",
    "fit_loglog",
    "annulus_pair",
    "knapp_pair",
    "stein_function",
    "annulus_rate_experiment",
    "knapp_rate_experiment",
    "boundary_locator",
    "continuity_sharpness_experiment",
    "probe_corpus",
]


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares line through (log x, log y) with the worst residual."""

    points: tuple
    slope: float
    intercept: float
    max_residual: float


def fit_loglog(xs: Sequence[float], ys: Sequence[float], min_points: int = 4) -> ExponentFit:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < min_points:
        raise ValidationError(f"need at least {min_points} sample points for a fit")
    if np.any(ys <= 0) or np.any(xs <= 0):
        raise ValidationError("log-log fit needs positive samples")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = np.abs(ly - (slope * lx + intercept)).max()
    return ExponentFit(
        points=tuple(zip(lx.tolist(), ly.tolist())),
        slope=float(slope),
        intercept=float(intercept),
        max_residual=float(resid),
    )


def annulus_pair(spec: GridSpec, delta: float, c: float = 0.5) -> Tuple[GridFunction, GridFunction]:
    """f = indicator of the delta-collar of the unit sphere, g = indicator of
    the c*delta ball at the origin."""
    if delta < 4 * spec.spacing:
        raise ResolutionError("annulus too thin: need delta >= 4h")
    f = indicator(spec, lambda *x: np.abs(np.sqrt(sum(g**2 for g in x)) - 1.0) < delta)
    g = indicator(spec, lambda *x: np.sqrt(sum(v**2 for v in x)) < c * delta)
    return f, g


def knapp_pair(spec: GridSpec, delta: float, big_c: float = 4.0) -> Tuple[GridFunction, GridFunction]:
    """The Knapp rectangles: a sqrt(delta)-by-delta slab at the origin and a
    unit-distance sqrt(delta)-thin box at heights [4/3, 5/3]."""
    h = spec.spacing
    if big_c * delta < 2 * h or np.sqrt(delta) < 4 * h:
        raise ResolutionError("knapp scale unresolvable: need C*delta >= 2h and sqrt(delta) >= 4h")
    rd = np.sqrt(delta)

    def in_r1(*x):
        flat = np.abs(x[-1]) < big_c * delta
        for g in x[:-1]:
            flat = flat & (np.abs(g) < big_c * rd)
        return flat

    def in_r2(*x):
        box = (x[-1] > 4.0 / 3.0) & (x[-1] < 5.0 / 3.0)
        for g in x[:-1]:
            box = box & (np.abs(g) < rd)
        return box

    return indicator(spec, in_r1), indicator(spec, in_r2)


def stein_function(spec: GridSpec, subsample: int = 8) -> GridFunction:
    """|x|^{1-n} (1 + log(1/|x|))^{-1} on the unit ball, cell-averaged near
    the origin.

    The log factor is offset so it stays bounded at the unit sphere; the
    origin singularity, which drives the maximal-function divergence, is
    untouched.
    """
    rr = spec.radius_grid()
    h = spec.spacing

    def profile(r):
        r = np.maximum(r, 1e-12)
        return np.where(r < 1.0, r ** (1 - spec.dim) / (1.0 + np.log(1.0 / r)), 0.0)

    vals = profile(rr)
    near = rr < 2.5 * h
    idx = np.argwhere(near)
    offs = (np.arange(subsample) + 0.5) / subsample - 0.5
    sub = np.meshgrid(*[offs] * spec.dim, indexing="ij")
    sub = np.stack([g.ravel() for g in sub], axis=1)
    centers = -spec.extent + (idx + 0.5) * h
    pts = centers[:, None, :] + h * sub[None, :, :]
    r_sub = np.sqrt((pts**2).sum(axis=2))
    vals[tuple(idx.T)] = profile(r_sub).mean(axis=1)
    return GridFunction(spec, vals)


def annulus_rate_experiment(
    spec: GridSpec, deltas: Sequence[float], c: float = 0.5, method: str = "quadrature"
) -> ExponentFit:
    """Fit <A_1 f_delta, g_delta> against delta; the rate is the dimension."""
    vals = []
    for d in deltas:
        f, g = annulus_pair(spec, d, c=c)
        vals.append(inner(spherical_average(f, 1.0, method=method), g))
    return fit_loglog(deltas, vals)


def knapp_rate_experiment(
    spec: GridSpec,
    deltas: Sequence[float],
    big_c: float = 4.0,
    method: str = "auto",
    net: Optional[RadiusNet] = None,
    keep_fields: Optional[dict] = None,
) -> ExponentFit:
    """Fit <M~ 1_{R1}, 1_{R2}> against delta; the rate is n - 1."""
    vals = []
    for d in deltas:
        f, g = knapp_pair(spec, d, big_c=big_c)
        m = full_maximal(f, (1.0, 2.0), net=net, method=method)
        if keep_fields is not None:
            keep_fields[d] = (f, g, m)
        vals.append(inner(m.values, g))
    return fit_loglog(deltas, vals)


def _c_emp_two_sided(
    f: GridFunction,
    g: GridFunction,
    mf: GridFunction,
    mg: GridFunction,
    operator: str,
    r: float,
    s: float,
) -> float:
    """Larger of the two pairings' C_emp; the convolution symmetry of the
    examples makes both pairings admissible tests."""
    out = []
    for a, b, mb in ((f, g, mf), (g, f, mg)):
        res = domination_experiment(
            a, b, operator, r, s, enforce_region=False, maximal_values=mb, use_m_sets=True
        )
        out.append(res.c_emp)
    return max(out)


def boundary_locator(
    example: str,
    points: Sequence[Tuple[float, float]],
    spec: GridSpec,
    deltas: Sequence[float],
    method: str = "auto",
    big_c: float = 4.0,
) -> Dict[Tuple[float, float], dict]:
    """For each exponent pair, fit the blow-up exponent eps of
    C_emp(delta) ~ delta^{-eps} and report it next to the predicted
    distance-to-boundary functional."""
    if len(deltas) < 4:
        raise ValidationError("need at least 4 delta samples")
    n = spec.dim
    cache = []
    for d in deltas:
        if example == "annulus":
            f, g = annulus_pair(spec, d)
            from .operators import lacunary_maximal

            mf = lacunary_maximal(f, admissible_lacunary_range(spec), method=method).values
            mg = lacunary_maximal(g, admissible_lacunary_range(spec), method=method).values
            operator = "lacunary"
        elif example == "knapp":
            f, g = knapp_pair(spec, d, big_c=big_c)
            mf = full_maximal(f, (1.0, 2.0), method=method).values
            mg = full_maximal(g, (1.0, 2.0), method=method).values
            operator = "full"
        else:
            raise ValueError("example must be 'annulus' or 'knapp'")
        cache.append((d, f, g, mf, mg, operator))
    out = {}
    for inv_r, inv_s in points:
        r, s = 1.0 / inv_r, 1.0 / inv_s
        cs = [
            _c_emp_two_sided(f, g, mf, mg, operator, r, s) for (_, f, g, mf, mg, operator) in cache
        ]
        fit = fit_loglog(deltas, cs)
        if example == "annulus":
            predicted = float(max(0.0, annulus_blowup_exponent(n, inv_r, inv_s)))
        else:
            predicted = float(max(0.0, knapp_blowup_exponent(n, inv_r, inv_s)))
        out[(inv_r, inv_s)] = {
            "fitted_eps": -fit.slope,
            "predicted_eps": predicted,
            "fit": fit,
            "c_values": cs,
        }
    return out


def admissible_lacunary_range(spec: GridSpec) -> range:
    lo = int(np.ceil(np.log2(spec.spacing))) + 1
    hi = int(np.floor(np.log2(spec.extent / 2.0)))
    return range(lo, hi + 1)


def continuity_sharpness_experiment(
    spec: GridSpec,
    boundary_point: Tuple[float, float],
    y: Sequence[float],
    delta: float,
    method: str = "quadrature",
) -> dict:
    """At a boundary exponent pair, the thin annulus translated by y shows no
    cancellation: the translated ratio stays a fixed fraction of the
    untranslated one."""
    y = np.asarray(y, dtype=float)
    if delta > np.linalg.norm(y) / 8.0:
        raise ValidationError("delta must be at most |y|/8 for the no-cancellation test")
    inv_r, inv_s = boundary_point
    r, s = 1.0 / inv_r, 1.0 / inv_s
    f, _ = annulus_pair(spec, delta)
    af = spherical_average(f, 1.0, method=method)
    base = lp_norm(af, s) / lp_norm(f, r)
    moved = lp_norm(af - translate(af, y), s) / lp_norm(f, r)
    return {"translated_ratio": moved, "untranslated_ratio": base, "fraction": moved / base}


def probe_corpus(kind: str = "full"):
    """Weight-probe corpus builders: resolution-coupled extremals.

    * ``annulus``: the thin collar (detects the small-|a| failure of power
      weights through focusing at the origin);
    * ``ball``: a shrinking ball (detects the large-|a| failure);
    * ``stein``: the borderline-integrable radial profile.
    """

    def build(spec: GridSpec):
        h = spec.spacing
        out = []
        if kind in ("annulus", "full"):
            f, _ = annulus_pair(spec, 8 * h)
            out.append(f)
        if kind in ("ball", "full"):
            out.append(indicator(spec, lambda *x: np.sqrt(sum(v**2 for v in x)) < 8 * h))
        if kind in ("stein", "full"):
            out.append(stein_function(spec))
        return out

    return build
