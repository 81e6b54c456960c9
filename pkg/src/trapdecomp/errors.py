"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: parse errors 2, invariant violations 3,
precondition violations 4.
"""

from __future__ import annotations


class TrapDecompError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(TrapDecompError):
    """A geometric primitive was asked something it cannot answer exactly
    (overlapping collinear segments, y_at on a vertical segment, ...)."""


class ParseError(TrapDecompError):
    """Malformed instance or result file."""


class InvalidInputError(TrapDecompError):
    """Input violates a documented structural requirement (bad polygon
    orientation, hole outside outer boundary, crossing plane-graph edges)."""


class PreconditionError(TrapDecompError):
    """A caller-facing precondition was violated (e.g. a stabbing segment
    crossing the net, or an intra-subcollection crossing)."""


class NotDisjointError(PreconditionError):
    """Two chains required to be disjoint touch or cross.

    Carries the offending pair of edge identifiers and the witness point.
    """

    def __init__(self, edge1, edge2, point=None):
        self.edge1 = edge1
        self.edge2 = edge2
        self.point = point
        where = f" at {point}" if point is not None else ""
        super().__init__(f"edges {edge1} and {edge2} intersect{where}")


class InvariantError(TrapDecompError):
    """An internal invariant failed; indicates a bug, not bad input."""
