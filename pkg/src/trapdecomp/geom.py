"""Exact planar primitives on rational coordinates.

Coordinates are Python ints or fractions.Fraction; all predicates are exact.
Vertical order near a common x is disambiguated by an infinitesimal shear
x' = x + eps * y, which is equivalent to ordering points lexicographically
by (x, y).  No coordinate is ever perturbed numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence, Union

from .errors import GeometryError, InvalidInputError

Coord = Union[int, Fraction]
Point = tuple  # (Coord, Coord)


def norm_coord(v: Coord) -> Coord:
    """Collapse integral Fractions to int so equal values hash equally."""
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return int(v)
        return v
    return v


def to_coord(v) -> Coord:
    """Parse a number into an exact coordinate.

    Floats and strings are read as the decimal they print as, so 0.1 becomes
    exactly 1/10.  Booleans, NaN and infinities are rejected.
    """
    if isinstance(v, bool):
        raise InvalidInputError(f"boolean is not a coordinate: {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        return norm_coord(v)
    if isinstance(v, float):
        if v != v or v in (float("inf"), float("-inf")):
            raise InvalidInputError(f"non-finite coordinate: {v!r}")
        return norm_coord(Fraction(repr(v)))
    if isinstance(v, str):
        try:
            return norm_coord(Fraction(v))
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"bad coordinate {v!r}") from exc
    raise InvalidInputError(f"bad coordinate type: {type(v).__name__}")


def pt(x, y) -> Point:
    """Build a point with normalized exact coordinates."""
    return (to_coord(x), to_coord(y))


def cross(o: Point, a: Point, b: Point) -> Coord:
    """Signed area form (a-o) x (b-o)."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def sign(v) -> int:
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


def orient(a: Point, b: Point, c: Point) -> int:
    """+1 if a,b,c make a left turn, -1 right turn, 0 collinear."""
    return sign(cross(a, b, c))


def shear_compare(p: Point, q: Point) -> int:
    """Order points along the sheared x axis: by x, then by y.

    Under the shear x' = x + eps*y no two distinct points are vertically
    aligned, so this is a total order on distinct points.
    """
    if p[0] != q[0]:
        return -1 if p[0] < q[0] else 1
    if p[1] != q[1]:
        return -1 if p[1] < q[1] else 1
    return 0


def shear_min(p: Point, q: Point) -> Point:
    return p if shear_compare(p, q) <= 0 else q


def shear_max(p: Point, q: Point) -> Point:
    return p if shear_compare(p, q) >= 0 else q


def y_at(a: Point, b: Point, x: Coord) -> Coord:
    """Height of segment ab's supporting line at abscissa x.

    Requires a[0] != b[0]; vertical segments have no single height.
    """
    dx = b[0] - a[0]
    if dx == 0:
        raise GeometryError("y_at on a vertical segment")
    num = (b[1] - a[1]) * (x - a[0])
    if isinstance(num, int) and isinstance(dx, int):
        q, r = divmod(num, dx)
        if r == 0:
            return a[1] + q
        return norm_coord(a[1] + Fraction(num, dx))
    return norm_coord(a[1] + num / dx)


def dir_cross(d1, d2) -> int:
    """Sign of the cross product of two direction vectors."""
    return sign(d1[0] * d2[1] - d1[1] * d2[0])


def on_segment(p: Point, a: Point, b: Point) -> bool:
    """True if p lies on the closed segment ab."""
    if orient(a, b, p) != 0:
        return False
    lo, hi = (a, b) if shear_compare(a, b) <= 0 else (b, a)
    return shear_compare(lo, p) <= 0 and shear_compare(p, hi) <= 0


def segment_intersection(a: Point, b: Point, c: Point, d: Point):
    """Exact intersection of closed segments ab and cd.

    Returns None if disjoint, ('point', p) for a single common point, and
    ('segment', (p, q)) with shear_compare(p, q) < 0 for a collinear overlap
    of positive length.  Zero-length inputs (a == b) are supported.
    """
    o1 = orient(a, b, c)
    o2 = orient(a, b, d)
    o3 = orient(c, d, a)
    o4 = orient(c, d, b)

    if a == b and c == d:
        return ("point", a) if a == c else None
    if a == b:
        return ("point", a) if on_segment(a, c, d) else None
    if c == d:
        return ("point", c) if on_segment(c, a, b) else None

    if o1 == 0 and o2 == 0:
        # Collinear: compare shear intervals on the common line.
        lo1, hi1 = (a, b) if shear_compare(a, b) <= 0 else (b, a)
        lo2, hi2 = (c, d) if shear_compare(c, d) <= 0 else (d, c)
        lo = shear_max(lo1, lo2)
        hi = shear_min(hi1, hi2)
        s = shear_compare(lo, hi)
        if s > 0:
            return None
        if s == 0:
            return ("point", lo)
        return ("segment", (lo, hi))

    if o1 != o2 and o3 != o4 and (o1 == 0 or o2 == 0 or o3 == 0 or o4 == 0):
        # An endpoint of one segment lies on the other.
        if o3 == 0 and on_segment(a, c, d):
            return ("point", a)
        if o4 == 0 and on_segment(b, c, d):
            return ("point", b)
        if o1 == 0 and on_segment(c, a, b):
            return ("point", c)
        if o2 == 0 and on_segment(d, a, b):
            return ("point", d)
        return None
    if o1 == 0 and on_segment(c, a, b):
        return ("point", c)
    if o2 == 0 and on_segment(d, a, b):
        return ("point", d)
    if o3 == 0 and on_segment(a, c, d):
        return ("point", a)
    if o4 == 0 and on_segment(b, c, d):
        return ("point", b)
    if o1 != o2 and o3 != o4:
        # Proper crossing; solve a + t*(b-a) with exact rationals.
        d1 = (b[0] - a[0], b[1] - a[1])
        d2 = (d[0] - c[0], d[1] - c[1])
        den = d1[0] * d2[1] - d1[1] * d2[0]
        t = Fraction((c[0] - a[0]) * d2[1] - (c[1] - a[1]) * d2[0], den)
        p = (norm_coord(a[0] + t * d1[0]), norm_coord(a[1] + t * d1[1]))
        return ("point", p)
    return None


def frame_box(points: Sequence[Point]):
    """Bounding frame: extent of the points grown by 1 on every side.

    With no points the frame is the square [-1,1] x [-1,1].
    """
    if not points:
        return (-1, -1, 1, 1)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return (min(xs) - 1, min(ys) - 1, max(xs) + 1, max(ys) + 1)


@dataclass
class Chain:
    """A polygonal chain with exact vertices.

    Open chains may consist of a single vertex; a closed chain lists each
    vertex once (the wrap-around edge is implicit) and needs at least 3.
    Consecutive vertices must be distinct.
    """

    points: list
    closed: bool = False

    def __post_init__(self):
        pts = [(to_coord(p[0]), to_coord(p[1])) for p in self.points]
        self.points = pts
        if not pts:
            raise InvalidInputError("chain with no vertices")
        if self.closed and len(pts) < 3:
            raise InvalidInputError("closed chain needs at least 3 vertices")
        if self.closed and pts[0] == pts[-1]:
            raise InvalidInputError("closed chain must not repeat its first vertex")
        n = len(pts)
        last = n if self.closed else n - 1
        for i in range(last):
            if pts[i] == pts[(i + 1) % n]:
                raise InvalidInputError(f"zero-length edge at vertex {i}")

    @property
    def num_edges(self) -> int:
        return len(self.points) if self.closed else len(self.points) - 1

    def edge(self, i: int):
        n = len(self.points)
        return self.points[i], self.points[(i + 1) % n]

    def edges(self) -> Iterator:
        for i in range(self.num_edges):
            yield self.edge(i)


@dataclass
class ChainSet:
    """A collection of chains, the standard input of the decomposition
    algorithms."""

    chains: list = field(default_factory=list)

    @property
    def h(self) -> int:
        return len(self.chains)

    @property
    def n(self) -> int:
        return sum(len(c.points) for c in self.chains)

    def all_points(self):
        out = []
        for c in self.chains:
            out.extend(c.points)
        return out

    def edges(self):
        """Yield (chain_id, edge_index, a, b) over every edge."""
        for cid, c in enumerate(self.chains):
            for i in range(c.num_edges):
                a, b = c.edge(i)
                yield cid, i, a, b

    def bbox(self):
        return frame_box(self.all_points())


def adjacent_edges(chain: Chain, i: int, j: int) -> bool:
    """True if edges i and j of one chain share an endpoint by adjacency
    (consecutive indices, including the wrap of a closed chain)."""
    if i == j:
        return True
    m = chain.num_edges
    if abs(i - j) == 1:
        return True
    if chain.closed and {i, j} == {0, m - 1}:
        return True
    # An open chain whose first and last vertex coincide behaves like a
    # cycle cut at that vertex: its end edges meet at the shared point.
    if not chain.closed and {i, j} == {0, m - 1} and chain.points[0] == chain.points[-1]:
        return True
    return False
