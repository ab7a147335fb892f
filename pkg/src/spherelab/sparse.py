"""Stopping-time sparse collections, Calderon-Zygmund decomposition, and
sparsity certification, all with exact cell accounting.

Collections are represented with owner maps: an integer array over the box
assigning each cell to at most one cube.  Density sets (and the optional
maximal-function sets) are then pairwise disjoint by construction, and all
counts are exact integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .cubes import BoxSums, DyadicCube, box_root, cell_level, shift_digits, shift_offset
from .errors import SphereLabError
from .grid import GridFunction, GridSpec
from .operators import dyadic_maximal_field

__all__ = [
    "PowerAverages",
    "CZDecomposition",
    "SparseCollection",
    "stopping_children",
    "cz_decompose",
    "build_sparse_collection",
    "certify_sparsity",
    "carleson_embedding_check",
    "greedy_density_assignment",
    "collection_to_json",
    "collection_from_json",
]

DEFAULT_DENSITY = 0.25


class PowerAverages:
    """Cube averages <f>_{Q,e} through one integral image of |f|^e."""

    def __init__(self, f: GridFunction, exponent: float):
        if exponent < 1:
            raise ValueError("average exponent must be >= 1")
        self.spec = f.spec
        self.exponent = float(exponent)
        self.sums = BoxSums(np.abs(f.values) ** self.exponent)

    def power_sums(self, starts: np.ndarray, m: int) -> np.ndarray:
        starts = np.atleast_2d(starts)
        return self.sums.box_sum(starts, starts + m)

    def averages(self, starts: np.ndarray, m: int) -> np.ndarray:
        s = self.power_sums(starts, m)
        return (np.maximum(s, 0.0) / float(m) ** self.spec.dim) ** (1.0 / self.exponent)

    def average_of(self, cube: DyadicCube) -> float:
        m = cube.side_cells(self.spec)
        return float(self.averages(cube.start_cells(self.spec)[None, :], m)[0])


def _child_offsets(dim: int, half: int) -> np.ndarray:
    grids = np.meshgrid(*[(0, half)] * dim, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _cubes_from_starts(spec: GridSpec, shift: int, level: int, starts: np.ndarray) -> list:
    j = level - cell_level(spec)
    m = 2**j
    digits = shift_digits(shift, spec.dim)
    offs = np.array([shift_offset(d, j) for d in digits])
    coords = (starts - offs[None, :]) // m
    return [DyadicCube(shift, level, tuple(int(v) for v in c)) for c in coords]


def _stopping_scan(
    spec: GridSpec,
    root: DyadicCube,
    oracles: Sequence[PowerAverages],
    thresholds: Sequence[float],
    min_level: int,
) -> Tuple[list, int]:
    """Maximal strict subcubes of ``root`` whose average (either function)
    exceeds its threshold.  Returns (cubes, total volume in cells)."""
    j_root = root.cell_j(spec)
    j_min = min_level - cell_level(spec)
    stopped: list = []
    total_cells = 0
    if j_root <= j_min:
        return stopped, 0
    starts = root.start_cells(spec)[None, :] + _child_offsets(spec.dim, 2 ** (j_root - 1))
    for j in range(j_root - 1, j_min - 1, -1):
        if starts.shape[0] == 0:
            break
        m = 2**j
        exceed = np.zeros(starts.shape[0], dtype=bool)
        alive = np.zeros(starts.shape[0], dtype=bool)
        for oracle, thr in zip(oracles, thresholds):
            sums = oracle.power_sums(starts, m)
            avg = (np.maximum(sums, 0.0) / float(m) ** spec.dim) ** (1.0 / oracle.exponent)
            exceed |= avg > thr
            alive |= sums > 0
        sel = starts[exceed]
        if sel.shape[0]:
            stopped.extend(_cubes_from_starts(spec, root.shift, cell_level(spec) + j, sel))
            total_cells += sel.shape[0] * m**spec.dim
        live = starts[alive & ~exceed]
        if j == j_min or live.shape[0] == 0:
            break
        half = m // 2
        starts = (live[:, None, :] + _child_offsets(spec.dim, half)[None, :, :]).reshape(
            -1, spec.dim
        )
    return stopped, total_cells


def stopping_children(
    f1: GridFunction,
    f2: GridFunction,
    q0: DyadicCube,
    r: float,
    s: float,
    threshold: float,
    min_level: Optional[int] = None,
) -> list:
    """Maximal dyadic P strictly inside q0 with <f1>_{P,r} > C <f1>_{q0,r} or
    <f2>_{P,s} > C <f2>_{q0,s}."""
    if threshold <= 1:
        raise ValueError("stopping threshold must exceed 1")
    spec = f1.spec
    if min_level is None:
        min_level = cell_level(spec)
    o1, o2 = PowerAverages(f1, r), PowerAverages(f2, s)
    thr = [threshold * o1.average_of(q0), threshold * o2.average_of(q0)]
    cubes, _ = _stopping_scan(spec, q0, (o1, o2), thr, min_level)
    return cubes


@dataclass
class CZDecomposition:
    """f1 = good + sum_k bad_by_level[k], bad pieces mean-zero per cube."""

    good: GridFunction
    bad_by_level: dict
    bad_cubes: list
    sup_good: float

    def reconstruction_error(self, f1: GridFunction) -> float:
        total = self.good.values.copy()
        for b in self.bad_by_level.values():
            total += b.values
        scale = max(np.abs(f1.values).max(), 1e-300)
        return float(np.abs(total - f1.values).max() / scale)


def cz_decompose(f1: GridFunction, q0: DyadicCube, bad_cubes: Iterable[DyadicCube]) -> CZDecomposition:
    """Standard Calderon-Zygmund split of f1 over the given disjoint cubes,
    graded by cube side."""
    spec = f1.spec
    bad_cubes = list(bad_cubes)
    claimed = np.zeros(spec.shape, dtype=bool)
    by_level: dict = {}
    b_total = np.zeros(spec.shape)
    for cube in bad_cubes:
        if not q0.contains_cube(cube, spec):
            raise SphereLabError("bad cube not contained in the root")
        sl, _ = cube.box_slices(spec)
        if np.any(claimed[sl]):
            raise SphereLabError("overlapping bad cubes")
        claimed[sl] = True
        mean = float(f1.values[sl].sum() / cube.volume_cells(spec))
        piece = by_level.setdefault(cube.level, np.zeros(spec.shape))
        piece[sl] = f1.values[sl] - mean
        b_total[sl] = f1.values[sl] - mean
    good = f1.values - b_total
    bad_by_level = {k: GridFunction(spec, v) for k, v in sorted(by_level.items())}
    return CZDecomposition(
        good=GridFunction(spec, good),
        bad_by_level=bad_by_level,
        bad_cubes=bad_cubes,
        sup_good=float(np.abs(good).max()),
    )


@dataclass
class SparseCollection:
    """Cubes with certified-disjoint density sets (and optional m-sets),
    realized as owner maps over the lattice."""

    spec: GridSpec
    cubes: List[DyadicCube]
    density_owner: np.ndarray
    m_owner: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def density_counts(self) -> np.ndarray:
        return np.bincount(
            self.density_owner[self.density_owner >= 0].ravel(), minlength=len(self.cubes)
        )

    def m_counts(self) -> Optional[np.ndarray]:
        if self.m_owner is None:
            return None
        return np.bincount(self.m_owner[self.m_owner >= 0].ravel(), minlength=len(self.cubes))

    def total_volume_cells(self) -> int:
        return int(sum(c.volume_cells(self.spec) for c in self.cubes))


def _paint(owner: np.ndarray, cube: DyadicCube, spec: GridSpec, idx: int) -> None:
    sl, _ = cube.box_slices(spec)
    owner[sl] = idx


def build_sparse_collection(
    f1: GridFunction,
    f2: GridFunction,
    root: Optional[DyadicCube] = None,
    r: float = 1.0,
    s: float = 1.0,
    threshold: Optional[float] = None,
    sigma: Optional[float] = None,
    min_level: Optional[int] = None,
    m_sets_for: Optional[str] = None,
    method: str = "auto",
    octave_samples: int = 32,
    m_argmax_levels: Optional[np.ndarray] = None,
) -> SparseCollection:
    """Stopping-time construction: add the root, stop at maximal subcubes
    where either normalized average exceeds the threshold, recurse.

    Density sets are node-minus-stopping-children, so sparsity holds with
    density > 1/2 by the measure check |union of children| < |node|/2
    (enforced, doubling the threshold on violation).  With ``m_sets_for`` in
    {'lacunary', 'full'} each cell is additionally assigned to the collection
    node handling the dyadic cube where the localized maximal operator
    attains its supremum, yielding the disjoint m-sets.
    """
    spec = f1.spec
    if f2.spec != spec:
        raise ValueError("functions live on different grids")
    if root is None:
        root = box_root(spec)
    if not root.in_box(spec):
        raise SphereLabError("root cube must lie inside the box")
    if threshold is None:
        threshold = 2.0 * 4.0**spec.dim
    if sigma is None:
        sigma = s * (1.0 + 1e-3)
    if min_level is None:
        min_level = cell_level(spec)
    o1, o2 = PowerAverages(f1, r), PowerAverages(f2, sigma)

    owner = np.full(spec.shape, -1, dtype=np.int32)
    cubes: List[DyadicCube] = []
    parents: List[int] = []
    max_threshold = threshold
    truncated = False

    stack = [(root, -1)]
    while stack:
        cube, parent_idx = stack.pop()
        idx = len(cubes)
        cubes.append(cube)
        parents.append(parent_idx)
        _paint(owner, cube, spec, idx)
        thr = threshold
        for _ in range(8):
            base = [thr * o1.average_of(cube), thr * o2.average_of(cube)]
            children, child_cells = _stopping_scan(spec, cube, (o1, o2), base, min_level)
            if 2 * child_cells < cube.volume_cells(spec) or not children:
                break
            thr *= 2.0
        max_threshold = max(max_threshold, thr)
        if children and min(c.level for c in children) <= min_level:
            truncated = truncated or min_level > cell_level(spec)
        for child in children:
            stack.append((child, idx))

    coll = SparseCollection(
        spec=spec,
        cubes=cubes,
        density_owner=owner,
        meta={
            "threshold": threshold,
            "max_threshold": max_threshold,
            "sigma": sigma,
            "exponents": (r, s),
            "truncated": truncated,
            "parents": parents,
            "root": root.key(),
        },
    )
    if m_sets_for is not None:
        coll.m_owner = _argmax_owner(
            f1, coll, m_sets_for, method, octave_samples, arg_level=m_argmax_levels
        )
    return coll


def argmax_levels(
    f1: GridFunction,
    root: DyadicCube,
    operator: str,
    method: str = "auto",
    octave_samples: int = 32,
) -> np.ndarray:
    """Per-cell level of the cube attaining the dyadic maximal supremum.

    Depends only on (f1, root grid, operator), so it can be computed once and
    shared across exponent pairs via ``m_argmax_levels``.
    """
    spec = f1.spec
    op = {"lacunary": "single", "full": "octave"}[operator]
    qc = cell_level(spec)
    levels = range(qc + 3, root.level + 1)
    absf = GridFunction(spec, np.abs(f1.values))
    _, arg_level = dyadic_maximal_field(
        absf, shift=root.shift, levels=levels, operator=op, method=method
    )
    return arg_level


def _argmax_owner(
    f1: GridFunction,
    coll: SparseCollection,
    operator: str,
    method: str,
    octave_samples: int,
    arg_level: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Assign each cell to the collection node handling the cube where the
    dyadic maximal operator attains its pointwise supremum."""
    spec = coll.spec
    root = coll.cubes[0]
    qc = cell_level(spec)
    if arg_level is None:
        arg_level = argmax_levels(f1, root, operator, method, octave_samples)
    arg_level = arg_level.copy()
    arg_level[arg_level < qc] = root.level  # cells where the sup is 0
    m_owner = np.full(spec.shape, -1, dtype=np.int32)
    root_sl, _ = root.box_slices(spec)
    inside = np.zeros(spec.shape, dtype=bool)
    inside[root_sl] = True
    for level in np.unique(arg_level[inside]):
        # deepest collection node containing each cell whose own level >= level
        node_at = np.full(spec.shape, -1, dtype=np.int32)
        for idx, cube in enumerate(coll.cubes):  # preorder: parents first
            if cube.level >= level:
                _paint(node_at, cube, spec, idx)
        mask = inside & (arg_level == level)
        m_owner[mask] = node_at[mask]
    return m_owner


def greedy_density_assignment(spec: GridSpec, cubes: Sequence[DyadicCube]) -> SparseCollection:
    """Owner map where every cell belongs to the smallest cube covering it."""
    order = np.argsort([-c.volume_cells(spec) for c in cubes], kind="stable")
    owner = np.full(spec.shape, -1, dtype=np.int32)
    cubes = list(cubes)
    for idx in order:
        _paint(owner, cubes[idx], spec, int(idx))
    return SparseCollection(spec=spec, cubes=cubes, density_owner=owner, meta={"greedy": True})


def certify_sparsity(coll: SparseCollection, eta: float = DEFAULT_DENSITY):
    """Verify disjointness-by-ownership and |E_S| > eta |S| by cell counts.

    Returns (True, None) or (False, witness) where the witness names the
    first violating cube and its counts.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must be in (0, 1)")
    spec = coll.spec
    counts = coll.density_counts()
    for idx, cube in enumerate(coll.cubes):
        if not cube.in_box(spec):
            return False, {"cube": cube.key(), "reason": "cube extends outside the box"}
        sl, _ = cube.box_slices(spec)
        inside = int(np.count_nonzero(coll.density_owner[sl] == idx))
        if inside != counts[idx]:
            return False, {"cube": cube.key(), "reason": "density cells leak outside the cube"}
        vol = cube.volume_cells(spec)
        if not counts[idx] > eta * vol:  # exact: counts and vol are integers
            return False, {
                "cube": cube.key(),
                "reason": "density below threshold",
                "cells": int(counts[idx]),
                "volume": vol,
            }
    if coll.m_owner is not None:
        mcounts = coll.m_counts()
        for idx, cube in enumerate(coll.cubes):
            sl, _ = cube.box_slices(spec)
            inside = int(np.count_nonzero(coll.m_owner[sl] == idx))
            if inside != mcounts[idx]:
                return False, {"cube": cube.key(), "reason": "m-set cells leak outside the cube"}
    return True, None


def carleson_embedding_check(
    coll: SparseCollection, phi: GridFunction, s: float, t: float, root: Optional[DyadicCube] = None
) -> float:
    """sum_Q <phi>_{s,Q} |Q| divided by <phi>_{t,Q0} |Q0| over the collection."""
    if s >= t:
        raise ValueError("need s < t for the embedding ratio")
    spec = coll.spec
    if root is None:
        root = max(coll.cubes, key=lambda c: c.volume_cells(spec))
    for cube in coll.cubes:
        if not root.contains_cube(cube, spec):
            raise SphereLabError("collection is not contained in the root cube")
    os_, ot = PowerAverages(phi, s), PowerAverages(phi, t)
    num = 0.0
    for cube in coll.cubes:
        num += os_.average_of(cube) * cube.volume_cells(spec)
    den = ot.average_of(root) * root.volume_cells(spec)
    if den == 0.0:
        return 0.0
    return float(num / den)


# -- serialization --------------------------------------------------------------

_SCHEMA = "spherelab.sparse_collection/1"


def collection_to_json(coll: SparseCollection) -> str:
    counts = coll.density_counts()
    mcounts = coll.m_counts()
    items = []
    for idx, cube in enumerate(coll.cubes):
        items.append(
            {
                "shift": cube.shift,
                "level": cube.level,
                "coords": list(cube.coords),
                "density_cell_count": int(counts[idx]),
                "m_cell_count": int(mcounts[idx]) if mcounts is not None else None,
            }
        )
    return json.dumps(
        {
            "schema": _SCHEMA,
            "dim": coll.spec.dim,
            "N": coll.spec.points,
            "L": coll.spec.extent,
            "cubes": items,
        },
        indent=1,
    )


def collection_from_json(text: str):
    """Parse the serialized form; returns (spec, cubes, density_counts, m_counts).

    Owner maps are not serialized, so a reloaded collection supports count
    checks but not mask-level disjointness re-verification.
    """
    data = json.loads(text)
    if data.get("schema") != _SCHEMA:
        raise ValueError(f"unknown schema {data.get('schema')!r}")
    spec = GridSpec(data["dim"], data["L"], data["N"])
    cubes = [DyadicCube(c["shift"], c["level"], tuple(c["coords"])) for c in data["cubes"]]
    counts = np.array([c["density_cell_count"] for c in data["cubes"]], dtype=np.int64)
    m_raw = [c.get("m_cell_count") for c in data["cubes"]]
    mcounts = None if any(v is None for v in m_raw) else np.array(m_raw, dtype=np.int64)
    return spec, cubes, counts, mcounts


def verify_serialized_counts(text: str, eta: float = DEFAULT_DENSITY):
    """Count-level certification of a serialized collection."""
    spec, cubes, counts, mcounts = collection_from_json(text)
    total = 0
    for cube, cnt in zip(cubes, counts):
        vol = cube.volume_cells(spec)
        if cnt > vol:
            return False, {"cube": cube.key(), "reason": "count exceeds cube volume"}
        if not cnt > eta * vol - 1e-9:
            return False, {"cube": cube.key(), "reason": "density below threshold"}
        total += cnt
    if total > spec.points**spec.dim:
        return False, {"reason": "density cells exceed the box"}
    return True, None
