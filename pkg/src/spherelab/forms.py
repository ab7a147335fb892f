"""Evaluation of (r,s) and (r,s)_m sparse forms and the domination
experiments pitting maximal operators against constructed collections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .cubes import DyadicCube
from .errors import RegionError, SphereLabError
from .grid import GridFunction, inner, lp_norm
from .operators import RadiusNet, full_maximal, lacunary_maximal
from .regions import contains as region_contains
from .regions import region
from .sparse import (
    PowerAverages,
    SparseCollection,
    build_sparse_collection,
    certify_sparsity,
    greedy_density_assignment,
)

__all__ = [
    "SparseFormValue",
    "DominationResult",
    "evaluate_form",
    "domination_experiment",
    "form_lp_bound_check",
    "one_form_reduction_check",
]


@dataclass
class SparseFormValue:
    """Value and per-cube terms of a sparse form."""

    value: float
    per_cube_terms: list
    params: tuple  # (r, s, m_flag)

    def cubes(self) -> list:
        return [c for c, _ in self.per_cube_terms]


def evaluate_form(
    coll: SparseCollection,
    f: GridFunction,
    g: GridFunction,
    r: float,
    s: float,
    use_m_sets: bool = False,
) -> SparseFormValue:
    """sum over cubes of |S| <f>_{S,r} <g 1_{F_S}>_{S,s}.

    Without m-sets the indicator is the whole cube.  |S| is measured in
    length units so values compare across grids.
    """
    spec = coll.spec
    if f.spec != spec or g.spec != spec:
        raise ValueError("functions and collection live on different grids")
    of = PowerAverages(f, r)
    if use_m_sets:
        if coll.m_owner is None:
            raise SphereLabError("collection carries no m-sets")
        valid = coll.m_owner >= 0
        gpow = np.abs(g.values[valid]) ** s
        gsums = np.bincount(coll.m_owner[valid].ravel(), weights=gpow, minlength=len(coll.cubes))
    else:
        og = PowerAverages(g, s)
    terms = []
    total = 0.0
    for idx, cube in enumerate(coll.cubes):
        m = cube.side_cells(spec)
        favg = of.average_of(cube)
        if use_m_sets:
            gavg = (gsums[idx] / float(m) ** spec.dim) ** (1.0 / s)
        else:
            gavg = og.average_of(cube)
        term = cube.volume(spec) * favg * gavg
        terms.append((cube, term))
        total += term
    return SparseFormValue(value=float(total), per_cube_terms=terms, params=(r, s, use_m_sets))


@dataclass
class DominationResult:
    c_emp: float
    numerator: float
    form: SparseFormValue
    collection: SparseCollection


def domination_experiment(
    f: GridFunction,
    g: GridFunction,
    operator: str,
    r: float,
    s: float,
    j_range: Optional[Sequence[int]] = None,
    interval: Tuple[float, float] = (1.0, 2.0),
    net: Optional[RadiusNet] = None,
    root: Optional[DyadicCube] = None,
    threshold: Optional[float] = None,
    method: str = "auto",
    use_m_sets: bool = True,
    enforce_region: bool = True,
    maximal_values: Optional[GridFunction] = None,
    m_argmax_levels=None,
) -> DominationResult:
    """Build the stopping-time collection for (f, g) and report the ratio
    C_emp = <M f, g> / Lambda(f, g).

    The numerator uses the true maximal operator (lacunary radii or a net on
    ``interval``); precomputed maximal values can be passed to amortize
    sweeps across exponent pairs.  C_emp is a reported quantity, never an
    asserted constant.
    """
    spec = f.spec
    point = (1.0 / r, 1.0 / s)
    if enforce_region:
        name = {"lacunary": "Lac", "full": "Full"}[operator]
        if not region_contains(region(spec.dim, name), point, strict=True):
            raise RegionError(f"exponents outside region: {point} not interior to {name}_{spec.dim}")
    if maximal_values is None:
        if operator == "lacunary":
            if j_range is None:
                lo = int(np.ceil(np.log2(spec.spacing))) + 1
                hi = int(np.floor(np.log2(spec.extent / 2.0)))
                j_range = range(lo, hi + 1)
            maximal_values = lacunary_maximal(f, j_range, method=method).values
        elif operator == "full":
            maximal_values = full_maximal(f, interval, net=net, method=method).values
        else:
            raise ValueError("operator must be 'lacunary' or 'full'")
    numerator = abs(inner(maximal_values, g))
    coll = build_sparse_collection(
        f,
        g,
        root=root,
        r=r,
        s=s,
        threshold=threshold,
        m_sets_for=operator if use_m_sets else None,
        method=method,
        m_argmax_levels=m_argmax_levels,
    )
    ok, witness = certify_sparsity(coll)
    if not ok:
        raise SphereLabError(f"constructed collection failed certification: {witness}")
    _assert_bad_cubes_under_children(f, g, coll, r)
    form = evaluate_form(coll, f, g, r, s, use_m_sets=use_m_sets)
    c_emp = numerator / form.value if form.value > 0 else np.inf
    return DominationResult(c_emp=float(c_emp), numerator=numerator, form=form, collection=coll)


def _assert_bad_cubes_under_children(f: GridFunction, g: GridFunction, coll, r: float) -> None:
    """The decomposition geometry: every bad cube (double threshold) meets a
    non-stopped cube only by being strictly inside it, equivalently every bad
    cube sits inside some stopping child of the root."""
    from .sparse import stopping_children

    spec = coll.spec
    root = coll.cubes[0]
    children = [c for c, p in zip(coll.cubes, coll.meta["parents"]) if p == 0]
    bad = stopping_children(
        f, g, root, r, coll.meta["sigma"], threshold=2.0 * coll.meta["max_threshold"]
    )
    for b in bad:
        if not any(ch.contains_cube(b, spec) for ch in children):
            raise SphereLabError(f"bad cube {b.key()} escapes every stopping child")


def form_lp_bound_check(
    coll: SparseCollection,
    r: float,
    s: float,
    p: float,
    corpus: Iterable[Tuple[GridFunction, GridFunction]],
) -> float:
    """max over the corpus of Lambda_{r,s}(f,g) / (||f||_p ||g||_{p'})."""
    sp = s / (s - 1.0) if s > 1 else np.inf
    if not (1 <= r < p < sp):
        raise ValueError("need 1 <= r < p < s'")
    pp = p / (p - 1.0)
    worst = 0.0
    for f, g in corpus:
        lam = evaluate_form(coll, f, g, r, s).value
        denom = lp_norm(f, p) * lp_norm(g, pp)
        if denom > 0:
            worst = max(worst, lam / denom)
    return worst


def maximal_majorant_ratio(
    coll: SparseCollection,
    f: GridFunction,
    g: GridFunction,
    r: float,
    s: float,
    p: float,
) -> float:
    """The proof-side majorant: int M_r f * M_s g / (||f||_p ||g||_{p'}),
    maximal functions taken over the collection's own cubes."""
    spec = coll.spec
    of, og = PowerAverages(f, r), PowerAverages(g, s)
    mf = np.zeros(spec.shape)
    mg = np.zeros(spec.shape)
    for cube in coll.cubes:
        sl, _ = cube.box_slices(spec)
        np.maximum(mf[sl], of.average_of(cube), out=mf[sl])
        np.maximum(mg[sl], og.average_of(cube), out=mg[sl])
    num = float(np.sum(mf * mg) * spec.cell_volume)
    pp = p / (p - 1.0)
    denom = lp_norm(f, p) * lp_norm(g, pp)
    return num / denom if denom > 0 else 0.0


def one_form_reduction_check(
    forms: Sequence[SparseFormValue],
    f: GridFunction,
    g: GridFunction,
    eta: float = 0.25,
    max_repair_rounds: int = 8,
):
    """Combine several sparse forms over shared (f, g) into a single form
    whose value dominates (1/C) max of the inputs; C is measured.

    The union of the collections is repaired greedily: cells go to the
    smallest covering cube, cubes that end up under the density threshold
    are dropped, and the assignment is rebuilt until stable.
    """
    if len(forms) < 1:
        raise ValueError("need at least one form")
    params = {fm.params[:2] for fm in forms}
    if len(params) != 1:
        raise ValueError("forms carry different exponents")
    r, s = params.pop()
    spec = f.spec
    seen = {}
    for fm in forms:
        for cube, _ in fm.per_cube_terms:
            seen[cube.key()] = cube
    cubes = list(seen.values())
    dropped: List[DyadicCube] = []
    for _ in range(max_repair_rounds):
        coll = greedy_density_assignment(spec, cubes)
        counts = coll.density_counts()
        bad = [
            i
            for i, cube in enumerate(cubes)
            if not counts[i] > eta * cube.volume_cells(spec) - 1e-9
        ]
        if not bad:
            break
        bad_set = set(bad)
        dropped.extend(cubes[i] for i in bad)
        cubes = [c for i, c in enumerate(cubes) if i not in bad_set]
    else:
        raise SphereLabError("density repair did not stabilize")
    if not cubes:
        raise SphereLabError("density repair dropped every cube")
    ok, witness = certify_sparsity(coll, eta)
    if not ok:
        raise SphereLabError(f"repaired union failed certification: {witness}")
    combined = evaluate_form(coll, f, g, r, s)
    top = max(fm.value for fm in forms)
    c_factor = top / combined.value if combined.value > 0 else np.inf
    return combined, float(c_factor), coll, dropped
