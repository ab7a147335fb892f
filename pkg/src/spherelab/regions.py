"""Exponent regions for the maximal operators, in exact rational arithmetic.

Points are (1/r, 1/s) pairs.  The lacunary region is a triangle, the full
region a trapezium (degenerating to a triangle in dimension 2); both come
with dual regions obtained by reflecting the second coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

__all__ = ["ExponentRegion", "region", "contains", "phi_curves", "REGION_NAMES"]

REGION_NAMES = ("Lac", "Full", "LacDual", "FullDual")

Point = Tuple[Fraction, Fraction]


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**9)


@dataclass(frozen=True)
class ExponentRegion:
    """Closed convex polygon of (1/r, 1/s) exponent pairs."""

    name: str
    vertices: tuple

    def __post_init__(self):
        verts = tuple((Fraction(a), Fraction(b)) for a, b in self.vertices)
        object.__setattr__(self, "vertices", verts)

    def distinct_vertices(self) -> tuple:
        out = []
        for v in self.vertices:
            if v not in out:
                out.append(v)
        return tuple(out)

    def _hull_edges(self):
        """Edges (p, q) of the convex hull, counterclockwise."""
        pts = sorted(set(self.distinct_vertices()))
        if len(pts) == 1:
            return []
        # Andrew's monotone chain, exact arithmetic.
        def cross(o, a, b):
            return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

        lower, upper = [], []
        for p in pts:
            while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
                lower.pop()
            lower.append(p)
        for p in reversed(pts):
            while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
                upper.pop()
            upper.append(p)
        hull = lower[:-1] + upper[:-1]
        return [(hull[i], hull[(i + 1) % len(hull)]) for i in range(len(hull))]

    def contains(self, point, strict: bool = False) -> bool:
        x, y = (_frac(point[0]), _frac(point[1]))
        verts = self.distinct_vertices()
        if len(verts) == 1:
            return (not strict) and (x, y) == verts[0]
        if len(verts) == 2:
            (x1, y1), (x2, y2) = verts
            if strict:
                return False
            collin = (x - x1) * (y2 - y1) == (y - y1) * (x2 - x1)
            inseg = min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2)
            return collin and inseg
        for p, q in self._hull_edges():
            cross = (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])
            if cross < 0 or (strict and cross == 0):
                return False
        return True

    def dual(self) -> "ExponentRegion":
        """Reflect 1/s -> 1 - 1/s (the duality pairing the theorems use)."""
        name = self.name[: -len("Dual")] if self.name.endswith("Dual") else self.name + "Dual"
        return ExponentRegion(name, tuple((a, 1 - b) for a, b in self.vertices))


def region(n: int, which: str) -> ExponentRegion:
    """Vertex data for the four regions, exactly as in the theorems."""
    if n not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {n}")
    nn = Fraction(n)
    if which == "Lac":
        verts = ((0, 1), (1, 0), (nn / (n + 1), nn / (n + 1)))
        return ExponentRegion("Lac", verts)
    if which == "Full":
        p1 = (Fraction(0), Fraction(1))
        p2 = (Fraction(n - 1, n), Fraction(1, n))
        p3 = (Fraction(n - 1, n), Fraction(n - 1, n))
        p4 = (Fraction(n * n - n, n * n + 1), Fraction(n * n - n + 2, n * n + 1))
        return ExponentRegion("Full", (p1, p2, p3, p4))
    if which == "LacDual":
        return region(n, "Lac").dual()
    if which == "FullDual":
        return region(n, "Full").dual()
    raise ValueError(f"unknown region {which!r}; expected one of {REGION_NAMES}")


def contains(R: ExponentRegion, point, strict: bool = False) -> bool:
    return R.contains(point, strict=strict)


def phi_curves(n: int, which: str, x) -> Fraction:
    """The piecewise-linear boundary curves, as 1/s = curve(1/r).

    ``lac``: connects (0,1), (n/(n+1), n/(n+1)), (1,0);
    ``full``: connects P1, P4, P3 of the full region;
    ``psi``: the chord 1 - (1/r)/(n-1) on [0, (n-1)/n).
    """
    x = _frac(x)
    if n not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if which == "lac":
        if not 0 <= x <= 1:
            raise ValueError("1/r must lie in [0, 1] for the lacunary curve")
        knee = Fraction(n, n + 1)
        if x <= knee:
            return 1 - x / n
        return n * (1 - x)
    if which == "full":
        p1 = (Fraction(0), Fraction(1))
        p4 = (Fraction(n * n - n, n * n + 1), Fraction(n * n - n + 2, n * n + 1))
        p3 = (Fraction(n - 1, n), Fraction(n - 1, n))
        if not 0 <= x <= p3[0]:
            raise ValueError("1/r must lie in [0, (n-1)/n] for the full curve")
        a, b = (p1, p4) if x <= p4[0] else (p4, p3)
        if a[0] == b[0]:
            return a[1]
        t = (x - a[0]) / (b[0] - a[0])
        return a[1] + t * (b[1] - a[1])
    if which == "psi":
        if not 0 <= x < Fraction(n - 1, n):
            raise ValueError("1/r must lie in [0, (n-1)/n) for psi")
        return 1 - x / (n - 1)
    raise ValueError(f"unknown curve {which!r}; expected lac, full or psi")


def annulus_blowup_exponent(n: int, inv_r, inv_s) -> Fraction:
    """max(1/r + n/s, n/r + 1/s) - n: positive outside the lacunary region."""
    a, b = _frac(inv_r), _frac(inv_s)
    return max(a + n * b, n * a + b) - n


def knapp_blowup_exponent(n: int, inv_r, inv_s) -> Fraction:
    """(n+1)/(2r) + (n-1)/(2s) - (n-1): positive outside the Knapp line."""
    a, b = _frac(inv_r), _frac(inv_s)
    return Fraction(n + 1, 2) * a + Fraction(n - 1, 2) * b - (n - 1)
