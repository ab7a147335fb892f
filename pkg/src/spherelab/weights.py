"""Muckenhoupt / reverse Holder constants on the shifted dyadic lattice and
refinement-trend probes for weighted boundedness.

"Boundedness" at desk scale is always a refinement-trend verdict over a
sequence of grids, never a proof; the classifier thresholds are explicit
config values carried in every report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np
from scipy.ndimage import minimum_filter1d

from .cubes import BoxSums, cell_level, iter_level_starts
from .errors import WeightError
from .grid import GridFunction, GridSpec, lp_norm
from .operators import default_net, full_maximal, lacunary_maximal

__all__ = [
    "WeightProfile",
    "power_weight",
    "power_weight_builder",
    "ap_constant",
    "a1_constant",
    "rh_constant",
    "factorization_check",
    "ProbeReport",
    "weighted_boundedness_probe",
    "PROBE_DEFAULTS",
]


@dataclass
class WeightProfile:
    """A positive density with cached dual weights and computed constants."""

    w: GridFunction
    label: str = ""
    constants: dict = field(default_factory=dict)
    _duals: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.w.values <= 0) or not np.all(np.isfinite(self.w.values)):
            raise WeightError("invalid weight: nonpositive or non-finite sample")

    @property
    def spec(self) -> GridSpec:
        return self.w.spec

    def dual_sigma(self, p: float) -> GridFunction:
        """sigma = w^{1-p'}; satisfies sigma * w^{p'-1} = 1 pointwise."""
        key = round(float(p), 12)
        if key not in self._duals:
            pprime = p / (p - 1.0)
            self._duals[key] = GridFunction(self.spec, self.w.values ** (1.0 - pprime))
        return self._duals[key]

    def power(self, exponent: float) -> "WeightProfile":
        return WeightProfile(GridFunction(self.spec, self.w.values**exponent))


def power_weight(spec: GridSpec, a: float, subsample: int = 16) -> WeightProfile:
    """|x|^a with cells near the origin cell-averaged by subsampling.

    Center sampling at the origin would destroy A_p constants for a < 0;
    averaging the singular cell keeps them faithful.  Requires a > -n.
    """
    if a <= -spec.dim:
        raise WeightError("power weight must be locally integrable: need a > -n")
    rr = spec.radius_grid()
    h = spec.spacing
    vals = np.where(rr > 0, rr, h) ** a
    near = rr < 2.5 * h
    idx = np.argwhere(near)
    offs = (np.arange(subsample) + 0.5) / subsample - 0.5
    sub = np.meshgrid(*[offs] * spec.dim, indexing="ij")
    sub = np.stack([g.ravel() for g in sub], axis=1)  # (subsample^n, n)
    centers = -spec.extent + (idx + 0.5) * h
    pts = centers[:, None, :] + h * sub[None, :, :]
    r_sub = np.sqrt((pts**2).sum(axis=2))
    cell_avg = (r_sub**a).mean(axis=1)
    vals[tuple(idx.T)] = cell_avg
    label = f"|x|^{a:g}"
    return WeightProfile(GridFunction(spec, vals), label=label)


def power_weight_builder(a: float) -> Callable[[GridSpec], WeightProfile]:
    return lambda spec: power_weight(spec, a)


def _family(spec: GridSpec, floor_level: Optional[int], shifts: Optional[Sequence[int]]):
    if floor_level is None:
        floor_level = cell_level(spec) + 2
    if shifts is None:
        shifts = range(3**spec.dim)
    top = int(np.round(np.log2(2.0 * spec.extent)))
    for shift in shifts:
        for level in range(floor_level, top + 1):
            starts, m = iter_level_starts(spec, level, shift, in_box=True)
            if starts.shape[0]:
                yield starts, m


def ap_constant(
    wp: WeightProfile,
    p: float,
    floor_level: Optional[int] = None,
    shifts: Optional[Sequence[int]] = None,
) -> float:
    """[w]_{A_p} = sup over the cube family of <w>_Q <sigma>_Q^{p-1}."""
    if p <= 1:
        raise ValueError("A_p needs p > 1; use a1_constant at p = 1")
    spec = wp.spec
    sums_w = BoxSums(wp.w.values)
    sums_s = BoxSums(wp.dual_sigma(p).values)
    best = 1.0
    for starts, m in _family(spec, floor_level, shifts):
        vol = float(m) ** spec.dim
        aw = sums_w.box_sum(starts, starts + m) / vol
        as_ = sums_s.box_sum(starts, starts + m) / vol
        best = max(best, float(np.max(aw * as_ ** (p - 1.0))))
    wp.constants[("Ap", round(p, 12))] = best
    return best


def a1_constant(
    wp: WeightProfile,
    floor_level: Optional[int] = None,
    shifts: Optional[Sequence[int]] = None,
) -> float:
    """[w]_{A_1} = sup over cubes of <w>_Q / min_Q w."""
    spec = wp.spec
    sums_w = BoxSums(wp.w.values)
    best = 1.0
    mins_cache: dict = {}
    for starts, m in _family(spec, floor_level, shifts):
        if m not in mins_cache:
            mf = wp.w.values
            for axis in range(spec.dim):
                mf = minimum_filter1d(mf, size=m, axis=axis, mode="nearest")
            mins_cache[m] = mf
        center = starts + m // 2
        mins = mins_cache[m][tuple(center.T)]
        aw = sums_w.box_sum(starts, starts + m) / float(m) ** spec.dim
        best = max(best, float(np.max(aw / mins)))
    wp.constants[("A1",)] = best
    return best


def rh_constant(
    wp: WeightProfile,
    r: float,
    floor_level: Optional[int] = None,
    shifts: Optional[Sequence[int]] = None,
) -> float:
    """[w]_{RH_r} = sup over cubes of <w>_{Q,r} / <w>_Q."""
    if r < 1:
        raise ValueError("reverse Holder exponent must be >= 1")
    spec = wp.spec
    sums_w = BoxSums(wp.w.values)
    sums_wr = BoxSums(wp.w.values**r)
    best = 1.0
    for starts, m in _family(spec, floor_level, shifts):
        vol = float(m) ** spec.dim
        aw = sums_w.box_sum(starts, starts + m) / vol
        awr = (sums_wr.box_sum(starts, starts + m) / vol) ** (1.0 / r)
        best = max(best, float(np.max(awr / np.maximum(aw, 1e-300))))
    wp.constants[("RH", round(r, 12))] = best
    return best


def refinement_trend(
    values: Sequence[float],
    grow_per_step: float,
    stable_factor: float,
    stable_step: Optional[float] = None,
) -> str:
    """Classify a refinement sequence as stable / divergent / indeterminate.

    Divergent: monotone growth whose final step still multiplies by at least
    ``grow_per_step`` (sustained rate, not a transient).  Stable: total
    variation within ``stable_factor`` and any residual growth decelerated
    below ``stable_step`` at the finest grids.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return "indeterminate"
    steps = v[1:] / np.maximum(v[:-1], 1e-300)
    monotone_up = bool(np.all(steps > 1.0))
    last = float(steps[-1])
    if stable_step is None:
        stable_step = 1.0 + (grow_per_step - 1.0) / 2.0
    if monotone_up and last >= grow_per_step:
        return "divergent"
    if v.max() / max(v.min(), 1e-300) <= stable_factor and (not monotone_up or last <= stable_step):
        return "stable"
    return "indeterminate"


def factorization_check(
    u1_builder: Callable[[GridSpec], WeightProfile],
    u2_builder: Callable[[GridSpec], WeightProfile],
    rho: float,
    r: float,
    p: float,
    spec: GridSpec,
    refinements: int = 2,
    grow_per_step: float = 2.0,
    stable_factor: float = 2.0,
) -> dict:
    """Form w = u1^{1/rho} u2^{-p/r+1} and probe [w]_{A_{p/r}} and
    [w]_{RH_rho} for refinement stability."""
    if rho <= 0 or not (1 < r < p):
        raise ValueError("need rho > 0 and 1 < r < p")
    specs = [spec]
    for _ in range(refinements):
        specs.append(specs[-1].refine())
    ap_vals, rh_vals, a1_vals = [], [], []
    for sp in specs:
        u1, u2 = u1_builder(sp), u2_builder(sp)
        a1_vals.append((a1_constant(u1), a1_constant(u2)))
        wvals = u1.w.values ** (1.0 / rho) * u2.w.values ** (-p / r + 1.0)
        wp = WeightProfile(GridFunction(sp, wvals))
        ap_vals.append(ap_constant(wp, p / r))
        rh_vals.append(rh_constant(wp, rho))
    return {
        "grids": [sp.points for sp in specs],
        "a1_inputs": a1_vals,
        "ap_constants": ap_vals,
        "rh_constants": rh_vals,
        "ap_verdict": refinement_trend(ap_vals, grow_per_step, stable_factor),
        "rh_verdict": refinement_trend(rh_vals, grow_per_step, stable_factor),
        "thresholds": {"grow_per_step": grow_per_step, "stable_factor": stable_factor},
    }


PROBE_DEFAULTS = {
    "grow_per_step": 2.0,  # spec default; experiments may record tighter values
    "stable_factor": 2.0,
    "method": "auto",
}


@dataclass
class ProbeReport:
    operator: str
    p: float
    weight_label: str
    grids: list
    ratios: list  # per grid: max over corpus
    per_function: list  # per grid: list of per-corpus ratios
    verdict: str
    thresholds: dict


def weighted_boundedness_probe(
    operator: str,
    weight_builder: Callable[[GridSpec], WeightProfile],
    p: float,
    corpus_builder: Callable[[GridSpec], Iterable[GridFunction]],
    grids: Sequence[GridSpec],
    j_range: Optional[Sequence[int]] = None,
    interval: Optional[Sequence[float]] = None,
    grow_per_step: Optional[float] = None,
    stable_factor: Optional[float] = None,
    stable_step: Optional[float] = None,
    method: str = "auto",
) -> ProbeReport:
    """Track ||M f||_{L^p(w)} / ||f||_{L^p(w)} across grid refinements.

    The corpus is rebuilt per grid (extremals couple their scale to h), and
    the verdict classifies the per-grid corpus maxima.
    """
    if p <= 1:
        raise ValueError("probe needs p > 1")
    grow = PROBE_DEFAULTS["grow_per_step"] if grow_per_step is None else grow_per_step
    stab = PROBE_DEFAULTS["stable_factor"] if stable_factor is None else stable_factor
    ratios: List[float] = []
    per_function: List[list] = []
    label = ""
    for spec in grids:
        wp = weight_builder(spec)
        label = wp.label or label
        here = []
        for f in corpus_builder(spec):
            denom = lp_norm(f, p, wp.w)
            if denom == 0:
                continue
            if operator == "lacunary":
                jr = j_range
                if jr is None:
                    lo = int(np.ceil(np.log2(spec.spacing))) + 1
                    hi = int(np.floor(np.log2(spec.extent / 2.0)))
                    jr = range(lo, hi + 1)
                m = lacunary_maximal(f, jr, method=method)
            elif operator == "full":
                iv = interval if interval is not None else (4 * spec.spacing, spec.extent / 2.0)
                m = full_maximal(f, iv, net=default_net(spec, *iv), method=method)
            else:
                raise ValueError("operator must be 'lacunary' or 'full'")
            here.append(lp_norm(m.values, p, wp.w) / denom)
        per_function.append(here)
        ratios.append(max(here) if here else 0.0)
    verdict = refinement_trend(ratios, grow, stab, stable_step)
    return ProbeReport(
        operator=operator,
        p=p,
        weight_label=label,
        grids=[sp.points for sp in grids],
        ratios=ratios,
        per_function=per_function,
        verdict=verdict,
        thresholds={"grow_per_step": grow, "stable_factor": stab, "stable_step": stable_step},
    )
