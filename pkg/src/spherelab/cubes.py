"""Shifted dyadic grids and cube geometry on the lattice.

There are 3^n dyadic grids, indexed by a base-3 digit per axis.  Per axis the
three shift sequences (in cell units, at cell-level j, side m = 2^j) are

    t=0:  0
    t=1:  sigma(j) = sigma(j-1) + 2^(j-1) for odd j   (binary ...0101)
    t=2:  sigma(j) = sigma(j-1) + 2^(j-1) for even j  (binary ...1010)

Each sequence satisfies sigma(j) = sigma(j-1) mod 2^(j-1), so every grid is a
genuine dyadic lattice (children tile parents), and sigma(j)/2^j alternates
near 1/3 and 2/3: the usual one-third translates, snapped to whole cells so
every cube is a union of lattice cells.

Every cube carries an "inner third": a centered box, roughly a third of the
side per axis, chosen so that at each level the inner thirds of the 3^n grids
tile the lattice exactly and keep a margin of a quarter side to the cube
boundary.  Averaging the truncated input at radius (side/4) then stays
supported inside the cube.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .errors import ResolutionError
from .grid import GridSpec

__all__ = [
    "DyadicCube",
    "cell_level",
    "box_root",
    "shift_digits",
    "shift_offset",
    "third_intervals",
    "axis_third_mask",
    "third_union_mask",
    "third_slices",
    "cube_of_cell",
    "enclosing_cube",
    "iter_level_starts",
    "BoxSums",
]


def _log2_exact(x: float) -> int:
    q = int(round(np.log2(x)))
    if not np.isclose(2.0**q, x, rtol=1e-12):
        raise ValueError(f"{x} is not a power of two")
    return q


def cell_level(spec: GridSpec) -> int:
    """Level q of a single lattice cell (side 2^q = h)."""
    return _log2_exact(spec.spacing)


def box_level(spec: GridSpec) -> int:
    """Level of the whole box [-L, L)^n."""
    return _log2_exact(2.0 * spec.extent)


def shift_digits(shift: int, dim: int) -> tuple:
    """Base-3 digits of the grid index, one per axis."""
    if not 0 <= shift < 3**dim:
        raise ValueError(f"shift index must be in [0, {3**dim})")
    return tuple((shift // 3**k) % 3 for k in range(dim))


@lru_cache(maxsize=None)
def shift_offset(digit: int, j: int) -> int:
    """Per-axis grid shift (cells) at cell-level j, for digit in {0,1,2}."""
    if j < 0:
        raise ValueError("cell-level must be nonnegative")
    if digit == 0 or j == 0:
        return 0
    bump = (j % 2 == 1) if digit == 1 else (j % 2 == 0)
    return shift_offset(digit, j - 1) + (2 ** (j - 1) if bump else 0)


@dataclass(frozen=True)
class DyadicCube:
    """A cube of one shifted dyadic grid: side 2^level in length units.

    ``coords`` count cube sides from the box corner; the cell-resolved start
    along axis k is ``coords[k] * m + shift_offset(digit_k, j)`` where
    ``m = 2^level / h`` is the side in cells.
    """

    shift: int
    level: int
    coords: tuple

    def side_length(self) -> float:
        return 2.0**self.level

    def side_cells(self, spec: GridSpec) -> int:
        j = self.level - cell_level(spec)
        if j < 0:
            raise ResolutionError("cube below resolution: side smaller than one cell")
        return 2**j

    def cell_j(self, spec: GridSpec) -> int:
        return self.level - cell_level(spec)

    def start_cells(self, spec: GridSpec) -> np.ndarray:
        m = self.side_cells(spec)
        j = self.cell_j(spec)
        digits = shift_digits(self.shift, spec.dim)
        return np.array(
            [c * m + shift_offset(d, j) for c, d in zip(self.coords, digits)], dtype=int
        )

    def volume_cells(self, spec: GridSpec) -> int:
        return self.side_cells(spec) ** spec.dim

    def volume(self, spec: GridSpec) -> float:
        return float(self.side_length() ** spec.dim)

    def in_box(self, spec: GridSpec) -> bool:
        s = self.start_cells(spec)
        m = self.side_cells(spec)
        return bool(np.all(s >= 0) and np.all(s + m <= spec.points))

    def box_slices(self, spec: GridSpec):
        """Slices of the in-box part, plus the number of cells inside."""
        s = self.start_cells(spec)
        m = self.side_cells(spec)
        lo = np.clip(s, 0, spec.points)
        hi = np.clip(s + m, 0, spec.points)
        n_inside = int(np.prod(np.maximum(hi - lo, 0)))
        return tuple(slice(int(a), int(b)) for a, b in zip(lo, hi)), n_inside

    def contains_cube(self, other: "DyadicCube", spec: GridSpec) -> bool:
        """Geometric containment (works across different grids)."""
        a, b = self.start_cells(spec), other.start_cells(spec)
        ma, mb = self.side_cells(spec), other.side_cells(spec)
        return bool(np.all(b >= a) and np.all(b + mb <= a + ma))

    def intersects(self, other: "DyadicCube", spec: GridSpec) -> bool:
        a, b = self.start_cells(spec), other.start_cells(spec)
        ma, mb = self.side_cells(spec), other.side_cells(spec)
        return bool(np.all(a < b + mb) and np.all(b < a + ma))

    def children(self, spec: GridSpec) -> list:
        j = self.cell_j(spec)
        if j <= 0:
            raise ResolutionError("cube below resolution: cannot split a single cell")
        digits = shift_digits(self.shift, spec.dim)
        half = 2 ** (j - 1)
        base = []
        for c, d in zip(self.coords, digits):
            delta = (shift_offset(d, j) - shift_offset(d, j - 1)) // half
            base.append(2 * c + delta)
        out = []
        for eps in product((0, 1), repeat=spec.dim):
            coords = tuple(b + e for b, e in zip(base, eps))
            out.append(DyadicCube(self.shift, self.level - 1, coords))
        return out

    def parent(self, spec: GridSpec) -> "DyadicCube":
        j = self.cell_j(spec)
        digits = shift_digits(self.shift, spec.dim)
        full = 2 ** (j + 1)
        coords = []
        for c, d in zip(self.coords, digits):
            start = c * 2**j + shift_offset(d, j)
            coords.append((start - shift_offset(d, j + 1)) // full)
        return DyadicCube(self.shift, self.level + 1, tuple(coords))

    def key(self) -> tuple:
        return (self.shift, self.level, self.coords)


def box_root(spec: GridSpec) -> DyadicCube:
    """The whole box as the top cube of the unshifted grid."""
    return DyadicCube(shift=0, level=box_level(spec), coords=(0,) * spec.dim)


# -- inner thirds --------------------------------------------------------------


@lru_cache(maxsize=None)
def third_intervals(j: int) -> tuple:
    """Per-axis inner-third layout at cell-level j >= 3.

    Returns ((o_0, w_0), (o_1, w_1), (o_2, w_2)): offset and width (cells) of
    the inner box within a cube of grid t.  The three arcs tile Z mod 2^j and
    each satisfies o >= m/4, o + w <= 3m/4, which is what makes the localized
    averages both reconstruct exactly and stay supported in their cube.
    """
    if j < 3:
        raise ResolutionError("inner thirds need side of at least 8 cells")
    m = 2**j
    shifts = [shift_offset(t, j) for t in (0, 1, 2)]
    centers = [(s + m // 2) % m for s in shifts]
    order = sorted(range(3), key=lambda t: centers[t])
    cs = [centers[t] for t in order]
    cuts = []
    for i in range(3):
        a = cs[i]
        b = cs[(i + 1) % 3] + (m if i == 2 else 0)
        cuts.append(-(-(a + b) // 2))  # ceil division
    out = [None, None, None]
    for i in range(3):
        t = order[i]
        lo = cuts[i - 1] - (m if i == 0 else 0)
        hi = cuts[i]
        o = (lo - shifts[t]) % m
        w = hi - lo
        if not (4 * o >= m and 4 * (o + w) <= 3 * m):
            raise AssertionError(f"inner-third margin violated at level {j}, grid {t}")
        out[t] = (int(o), int(w))
    return tuple(out)


def axis_third_mask(n_cells: int, j: int, digit: int) -> np.ndarray:
    """Boolean mask over cell indices: cell lies in the inner third of its
    grid-``digit`` cube at cell-level ``j``."""
    m = 2**j
    o, w = third_intervals(j)[digit]
    s = shift_offset(digit, j)
    rel = (np.arange(n_cells) - s) % m
    return (rel >= o) & (rel < o + w)


def third_union_mask(spec: GridSpec, j: int, shift: int) -> np.ndarray:
    """Mask of the union of inner thirds of all level-j cubes of one grid."""
    digits = shift_digits(shift, spec.dim)
    axes = [axis_third_mask(spec.points, j, d) for d in digits]
    mask = axes[0]
    for a in axes[1:]:
        mask = np.multiply.outer(mask, a)
    return mask


def third_slices(cube: DyadicCube, spec: GridSpec):
    """Slices (clipped to the box) of the cube's inner third."""
    j = cube.cell_j(spec)
    ivals = third_intervals(j)
    digits = shift_digits(cube.shift, spec.dim)
    start = cube.start_cells(spec)
    sl = []
    for s, d in zip(start, digits):
        o, w = ivals[d]
        sl.append(slice(max(0, int(s + o)), min(spec.points, int(s + o + w))))
    return tuple(sl)


def cube_of_cell(spec: GridSpec, cell: Sequence[int], level: int, shift: int) -> DyadicCube:
    """The level-``level`` cube of grid ``shift`` containing a lattice cell."""
    j = level - cell_level(spec)
    m = 2**j
    digits = shift_digits(shift, spec.dim)
    coords = tuple(int((c - shift_offset(d, j)) // m) for c, d in zip(cell, digits))
    return DyadicCube(shift, level, coords)


def enclosing_cube(
    spec: GridSpec, lo: Sequence[int], hi: Sequence[int], shift: Optional[int] = None
) -> DyadicCube:
    """Smallest fully-in-box cube containing the cell box [lo, hi), searched
    over all 3^n grids (or one grid when ``shift`` is given)."""
    lo = np.asarray(lo, dtype=int)
    hi = np.asarray(hi, dtype=int)
    qc = cell_level(spec)
    shifts = range(3**spec.dim) if shift is None else [shift]
    for level in range(qc, box_level(spec) + 1):
        j = level - qc
        m = 2**j
        for shift in shifts:
            digits = shift_digits(shift, spec.dim)
            coords = []
            ok = True
            for k in range(spec.dim):
                s0 = shift_offset(digits[k], j)
                c = (lo[k] - s0) // m
                start = c * m + s0
                if start < 0 or start + m > spec.points or hi[k] > start + m:
                    ok = False
                    break
                coords.append(int(c))
            if ok:
                return DyadicCube(shift, level, tuple(coords))
    raise ResolutionError("no in-box dyadic cube contains the requested region")


def iter_level_starts(spec: GridSpec, level: int, shift: int, in_box: bool = True):
    """All cube start vectors (cells) at one level of one grid.

    Returns (starts, m) with starts of shape (K, dim).  With ``in_box`` the
    enumeration keeps only cubes entirely inside the box.
    """
    j = level - cell_level(spec)
    if j < 0:
        raise ResolutionError("level below resolution")
    m = 2**j
    digits = shift_digits(shift, spec.dim)
    axes = []
    for d in digits:
        s0 = shift_offset(d, j) % m
        first = s0 if (in_box and s0 + m <= spec.points) else s0 - m
        pts = np.arange(first, spec.points, m)
        if in_box:
            pts = pts[(pts >= 0) & (pts + m <= spec.points)]
        axes.append(pts)
    grids = np.meshgrid(*axes, indexing="ij")
    starts = np.stack([g.ravel() for g in grids], axis=1)
    return starts, m


class BoxSums:
    """Integral image for sums of an array over axis-aligned cell boxes."""

    def __init__(self, values: np.ndarray):
        acc = values
        for axis in range(values.ndim):
            acc = np.cumsum(acc, axis=axis)
        self._table = np.pad(acc, [(1, 0)] * values.ndim)
        self._shape = values.shape

    def box_sum(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Sums over boxes [lo, hi) (vectorized; boxes clipped to the array)."""
        lo = np.atleast_2d(np.asarray(lo, dtype=int))
        hi = np.atleast_2d(np.asarray(hi, dtype=int))
        dim = len(self._shape)
        lo = np.clip(lo, 0, self._shape)
        hi = np.clip(hi, 0, self._shape)
        hi = np.maximum(hi, lo)
        total = np.zeros(lo.shape[0], dtype=self._table.dtype)
        for corner in product((0, 1), repeat=dim):
            idx = tuple(hi[:, k] if corner[k] else lo[:, k] for k in range(dim))
            sign = (-1) ** (dim - sum(corner))
            total = total + sign * self._table[idx]
        return total
