"""Exact trapezoidal decomposition of polygonal chains in the plane.

Coordinates are exact rationals (ints or fractions.Fraction); all predicates
are evaluated without rounding.  Vertical degeneracies are resolved by a
symbolic shear toward lexicographic point order, never by perturbing input
values.
"""

from .errors import (
    GeometryError,
    InvalidInputError,
    InvariantError,
    NotDisjointError,
    ParseError,
    PreconditionError,
    TrapDecompError,
)
from .geom import (
    Chain,
    ChainSet,
    frame_box,
    orient,
    segment_intersection,
    shear_compare,
    to_coord,
    y_at,
)
from .decomp import (
    OUTSIDE,
    PointLocator,
    Seg,
    TrapDecomposition,
    Trapezoid,
    assemble,
    restrict,
    td_bruteforce,
    td_sweep,
)
from .connected import td_connected, td_of_chains
from .division import locate_regions, r_division
from .disjoint import AlgorithmParams, td_disjoint
from .intersect import (
    IntersectParams,
    IntersectResult,
    subdivide_long_chains,
    td_general,
    td_intersect_partitioned,
)
from .poly import PolygonWithHoles, triangulate

__all__ = [
    "AlgorithmParams",
    "IntersectParams",
    "IntersectResult",
    "PolygonWithHoles",
    "locate_regions",
    "r_division",
    "subdivide_long_chains",
    "td_connected",
    "td_disjoint",
    "td_general",
    "td_intersect_partitioned",
    "td_of_chains",
    "triangulate",
    "Chain",
    "ChainSet",
    "GeometryError",
    "InvalidInputError",
    "InvariantError",
    "NotDisjointError",
    "OUTSIDE",
    "ParseError",
    "PointLocator",
    "PreconditionError",
    "Seg",
    "TrapDecompError",
    "TrapDecomposition",
    "Trapezoid",
    "assemble",
    "frame_box",
    "orient",
    "restrict",
    "segment_intersection",
    "shear_compare",
    "td_bruteforce",
    "td_sweep",
    "to_coord",
    "y_at",
]

__version__ = "0.1.0"
