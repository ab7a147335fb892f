"""Sampled functions on a uniform lattice over [-L, L)^n.

Functions live on a box of half-width ``extent`` with ``points`` cells per
axis and zero extension outside.  Quadrature is midpoint sampling: each cell
contributes ``|f(center)| * h^n``, which is exact for cell-aligned
indicators.  Cell ``i`` along an axis is ``[-L + i*h, -L + (i+1)*h)`` with
center ``-L + (i + 1/2)*h``.
"""

from __future__ import annotations

import io
import struct
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, ResolutionError, WeightError

__all__ = [
    "GridSpec",
    "GridFunction",
    "LocalAverage",
    "TranslationClipWarning",
    "indicator",
    "from_callable",
    "local_average",
    "lp_norm",
    "inner",
    "translate",
    "save_grid",
    "load_grid",
    "save_grid_csv",
    "load_grid_csv",
]


class TranslationClipWarning(UserWarning):
    """Support was pushed against the box boundary by a translation."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the lattice: dimension, box half-width, cells per axis."""

    dim: int
    extent: float
    points: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not _is_pow2(self.points):
            raise ValueError(f"points per axis must be a power of two, got {self.points}")
        if self.extent <= 0:
            raise ValueError("extent must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def centers(self, axis: int = 0) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        h = self.spacing
        return -self.extent + (np.arange(self.points) + 0.5) * h

    def center_grids(self) -> list:
        """Open (broadcastable) center-coordinate arrays, one per axis."""
        c = self.centers()
        out = []
        for k in range(self.dim):
            shape = [1] * self.dim
            shape[k] = self.points
            out.append(c.reshape(shape))
        return out

    def radius_grid(self) -> np.ndarray:
        """|x| at every cell center."""
        grids = self.center_grids()
        r2 = sum(g**2 for g in grids)
        return np.sqrt(r2)

    def refine(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.dim, self.extent, self.points * factor)


@dataclass
class GridFunction:
    """Real (or complex) samples on the lattice, plus an optional support box.

    ``support_hint`` is a pair of integer index vectors (lo, hi) bounding all
    nonzero cells, half-open per axis.  It is advisory and never required.
    """

    spec: GridSpec
    values: np.ndarray
    support_hint: Optional[tuple] = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.spec.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.spec.shape}"
            )

    def copy_with(self, values: np.ndarray, support_hint=None) -> "GridFunction":
        return GridFunction(self.spec, values, support_hint)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.spec, self.values - other.values)

    def __mul__(self, c) -> "GridFunction":
        return GridFunction(self.spec, self.values * c)

    __rmul__ = __mul__

    def abs(self) -> "GridFunction":
        return GridFunction(self.spec, np.abs(self.values), self.support_hint)


def indicator(spec: GridSpec, predicate: Callable[..., np.ndarray]) -> GridFunction:
    """Indicator of ``{x : predicate(*x) is True}`` sampled at cell centers."""
    mask = predicate(*spec.center_grids())
    values = np.zeros(spec.shape)
    values[np.broadcast_to(mask, spec.shape)] = 1.0
    return GridFunction(spec, values, support_hint=_bbox_of(values))


def from_callable(spec: GridSpec, fn: Callable[..., np.ndarray]) -> GridFunction:
    values = np.asarray(np.broadcast_to(fn(*spec.center_grids()), spec.shape), dtype=float).copy()
    return GridFunction(spec, values)


def _bbox_of(values: np.ndarray):
    nz = np.nonzero(values)
    if len(nz[0]) == 0:
        return None
    lo = tuple(int(ix.min()) for ix in nz)
    hi = tuple(int(ix.max()) + 1 for ix in nz)
    return (lo, hi)


@dataclass(frozen=True)
class LocalAverage:
    """(|Q|^-1 int_Q |f|^r)^{1/r} over a dyadic cube, midpoint quadrature."""

    value: float
    cube: object
    exponent: float


def local_average(f: GridFunction, cube, r: float) -> LocalAverage:
    """L^r average of ``f`` over ``cube``; cells outside the box count as 0."""
    if r < 1:
        raise ValueError(f"exponent r must be >= 1, got {r}")
    sl, n_cells = cube.box_slices(f.spec)
    if n_cells == 0:
        raise ResolutionError("cube below resolution: no lattice cells inside")
    total = float(np.sum(np.abs(f.values[sl]) ** r))
    value = (total / cube.side_cells(f.spec) ** f.spec.dim) ** (1.0 / r)
    return LocalAverage(value=value, cube=cube, exponent=r)


def lp_norm(f: GridFunction, p: float, w: Optional[GridFunction] = None) -> float:
    """(sum |f|^p w h^n)^{1/p}; Lebesgue norm when ``w`` is None."""
    if p < 1:
        raise ValueError(f"exponent p must be >= 1, got {p}")
    a = np.abs(f.values) ** p
    if w is not None:
        if np.any(w.values <= 0):
            raise WeightError("invalid weight: nonpositive sample")
        a = a * w.values
    return float(np.sum(a) * f.spec.cell_volume) ** (1.0 / p)


def inner(f: GridFunction, g: GridFunction, w: Optional[GridFunction] = None) -> float:
    """<f, g> = sum f * g * h^n (optionally against a weight density)."""
    a = f.values * g.values
    if w is not None:
        a = a * w.values
    return float(np.sum(a) * f.spec.cell_volume)


def translate(f: GridFunction, y: Sequence[float]) -> GridFunction:
    """tau_y f(x) = f(x - y) with zero fill; y must be a lattice vector."""
    spec = f.spec
    h = spec.spacing
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.dim,):
        raise ValueError(f"translation vector must have {spec.dim} components")
    steps = y / h
    k = np.rint(steps).astype(int)
    if not np.allclose(steps, k, atol=1e-9):
        raise DomainError("translation must be an integer multiple of the spacing per axis")
    out = np.zeros_like(f.values)
    src = []
    dst = []
    for axis in range(spec.dim):
        shift = int(k[axis])
        n = spec.points
        dst.append(slice(max(0, shift), min(n, n + shift)))
        src.append(slice(max(0, -shift), min(n, n - shift)))
    out[tuple(dst)] = f.values[tuple(src)]
    hint = None
    if f.support_hint is not None:
        lo = tuple(int(a + b) for a, b in zip(f.support_hint[0], k))
        hi = tuple(int(a + b) for a, b in zip(f.support_hint[1], k))
        if any(a < 0 for a in lo) or any(b > spec.points for b in hi):
            warnings.warn(
                "translation pushed the support hint outside the box; values were clipped",
                TranslationClipWarning,
            )
            lo = tuple(max(0, a) for a in lo)
            hi = tuple(min(spec.points, b) for b in hi)
        hint = (lo, hi)
    return GridFunction(spec, out, support_hint=hint)


# -- serialization ------------------------------------------------------------
#
# Binary container: magic 'SGRD', u32 version, u32 dim, u32 N, f64 L,
# u8 iscomplex, then raw little-endian float64 (or complex128) samples in
# C order.  CSV: one row per cell, columns x1..xn,value, for small grids.

_MAGIC = b"SGRD"


def save_grid(f: GridFunction, path) -> None:
    with open(path, "wb") as fh:
        iscomplex = 1 if np.iscomplexobj(f.values) else 0
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIId B", 1, f.spec.dim, f.spec.points, f.spec.extent, iscomplex))
        data = f.values.astype("<c16" if iscomplex else "<f8")
        fh.write(data.tobytes(order="C"))


def load_grid(path) -> GridFunction:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("not a grid container")
        version, dim, points, extent, iscomplex = struct.unpack("<IIId B", fh.read(struct.calcsize("<IIId B")))
        if version != 1:
            raise ValueError(f"unsupported container version {version}")
        spec = GridSpec(dim, extent, points)
        dtype = "<c16" if iscomplex else "<f8"
        raw = fh.read()
    values = np.frombuffer(raw, dtype=dtype).reshape(spec.shape).copy()
    return GridFunction(spec, values)


def save_grid_csv(f: GridFunction, path, max_points: int = 2**18) -> None:
    n_total = f.spec.points**f.spec.dim
    if n_total > max_points:
        raise ValueError(f"grid too large for CSV ({n_total} cells); use the binary container")
    grids = np.meshgrid(*[f.spec.centers() for _ in range(f.spec.dim)], indexing="ij")
    cols = [g.ravel() for g in grids] + [f.values.ravel()]
    header = ",".join([f"x{k+1}" for k in range(f.spec.dim)] + ["value"])
    buf = io.StringIO()
    buf.write(f"# dim={f.spec.dim} N={f.spec.points} L={f.spec.extent!r}\n")
    buf.write(header + "\n")
    for row in zip(*cols):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_grid_csv(path) -> GridFunction:
    with open(path) as fh:
        meta = fh.readline().strip()
        if not meta.startswith("#"):
            raise ValueError("missing grid metadata line")
        kv = dict(tok.split("=") for tok in meta[1:].split())
        spec = GridSpec(int(kv["dim"]), float(kv["L"]), int(kv["N"]))
        fh.readline()  # header
        vals = [float(line.rsplit(",", 1)[1]) for line in fh if line.strip()]
    values = np.asarray(vals).reshape(spec.shape)
    return GridFunction(spec, values)
