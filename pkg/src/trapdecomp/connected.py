"""Decomposition of connected, non-crossing inputs.

The pipeline reduces every instance to decompositions of connected sets of
segments that may share endpoints but never cross; this module wraps the
sweep with that contract, rejecting proper crossings explicitly.
"""

from __future__ import annotations

from .decomp import Seg, TrapDecomposition, td_sweep
from .errors import NotDisjointError
from .geom import ChainSet


def segs_of_chains(chains: ChainSet, markers=False):
    """One Seg per chain edge, owner (chain_id, edge_index).

    With markers=True, a single-vertex chain contributes a zero-length
    marker (owner (chain_id, 0)); otherwise it contributes nothing.
    """
    out = []
    for cid, i, a, b in chains.edges():
        out.append(Seg.natural(a, b, (cid, i)))
    if markers:
        for cid, ch in enumerate(chains.chains):
            if len(ch.points) == 1:
                out.append(Seg.marker(ch.points[0], (cid, 0)))
    return out


def proper_crossings(td: TrapDecomposition):
    """Contacts interior to both segments: these are transversal crossings.

    Endpoint contacts (shared vertices, T-junctions onto an interior) are
    not included.
    """
    by_owner = {}
    for s in td.segs:
        by_owner[s.owner] = s
    out = []
    for o1, o2, p in td.contacts:
        s1 = by_owner[o1]
        s2 = by_owner[o2]
        if s1.a < p < s1.b and s2.a < p < s2.b:
            out.append((o1, o2, p))
    return out


def td_connected(segs, box=None):
    """Trapezoidal decomposition of segments forming a non-crossing figure.

    Segments may share endpoints or end on one another's interiors; a
    transversal crossing raises NotDisjointError.
    """
    td = td_sweep(segs, box)
    bad = proper_crossings(td)
    if bad:
        o1, o2, p = bad[0]
        raise NotDisjointError(o1, o2, (p[0], p[2]))
    return td


def td_of_chains(chains: ChainSet, box=None):
    """Convenience wrapper: decompose a ChainSet directly."""
    return td_connected(segs_of_chains(chains, markers=True), box)
