"""Divisions of a decomposition's cell graph into small regions.

A division picks a set B of boundary cells whose removal leaves connected
groups of at most r cells; each B cell stands alone as its own region, so
the regions partition the cells.  B is found by repeatedly cutting an
oversized component along a thin breadth-first level near its median, which
keeps both the cut size and the imbalance in check.

The geometric counterpart of a division: the sides separating cells of
different regions.  Non-vertical sides lie on input segments (these make up
the net), vertical sides are wall portions shared by a closing and an
opening cell of one event.
"""

from __future__ import annotations

import math
from collections import deque

from .decomp import _HI, _LO, OUTSIDE, PointLocator, _ikey, sym_geom
from .errors import InvariantError


def dual_of(td):
    """Cell adjacency as {cell_id: sorted neighbor ids}."""
    td.ensure_dual()
    return {c.id: list(c.neighbors) for c in td.cells}


def _components(adj, verts):
    alive = set(verts)
    seen = set()
    out = []
    for u in sorted(alive):
        if u in seen:
            continue
        comp = []
        dq = deque([u])
        seen.add(u)
        while dq:
            x = dq.popleft()
            comp.append(x)
            for v in adj[x]:
                if v in alive and v not in seen:
                    seen.add(v)
                    dq.append(v)
        out.append(sorted(comp))
    return out


def r_division(adj, r):
    """Split the graph into regions of at most r vertices.

    Returns (boundary, regions, region_of).  Regions are sorted lists and
    cover every vertex exactly once; boundary vertices appear as singleton
    regions.  Oversized components are cut along the smallest breadth-first
    level within floor(sqrt(r)) levels of the median level (ties to the
    lower level index); breadth-first search starts at the smallest vertex
    id of the component.
    """
    if r < 1:
        raise ValueError(f"region capacity must be positive, got {r}")
    boundary = set()
    regions = []
    stack = _components(adj, adj.keys())
    while stack:
        comp = stack.pop()
        if len(comp) <= r:
            if comp:
                regions.append(comp)
            continue
        comp_set = set(comp)
        levels = []
        seen = {comp[0]}
        cur = [comp[0]]
        while cur:
            levels.append(cur)
            nxt = []
            for u in cur:
                for v in adj[u]:
                    if v in comp_set and v not in seen:
                        seen.add(v)
                        nxt.append(v)
            cur = sorted(nxt)
        m = len(comp)
        cum = 0
        t = 0
        for t, lev in enumerate(levels):
            cum += len(lev)
            if 2 * cum >= m:
                break
        w = max(1, math.isqrt(r))
        lo = max(0, t - w + 1)
        hi = min(len(levels) - 1, t + w - 1)
        cut = min(range(lo, hi + 1), key=lambda i: (len(levels[i]), i))
        boundary.update(levels[cut])
        rest = comp_set.difference(levels[cut])
        stack.extend(_components(adj, rest))
    regions.extend([b] for b in sorted(boundary))
    regions.sort()
    region_of = {}
    for i, reg in enumerate(regions):
        for v in reg:
            region_of[v] = i
    return boundary, regions, region_of


def check_division(adj, r, boundary, regions, region_of, c=4):
    """Raise unless the division invariants hold.

    Every vertex in exactly one region, regions within capacity, no edge
    between two different non-singleton regions, and the boundary small:
    |B| * sqrt(r) <= c * |V| (for nonempty graphs).
    """
    seen = {}
    for i, reg in enumerate(regions):
        for v in reg:
            if v in seen:
                raise InvariantError(f"vertex {v} in two regions")
            seen[v] = i
            if region_of[v] != i:
                raise InvariantError("region_of out of step with regions")
    if set(seen) != set(adj):
        raise InvariantError("regions do not cover the graph")
    for i, reg in enumerate(regions):
        if len(reg) > r:
            raise InvariantError(f"region {i} has {len(reg)} > {r} cells")
    for u in adj:
        for v in adj[u]:
            if region_of[u] != region_of[v]:
                if u not in boundary and v not in boundary:
                    raise InvariantError(
                        f"edge {u}-{v} joins two interior regions")
    if adj and len(boundary) * math.sqrt(r) > c * len(adj) + 1e-9:
        raise InvariantError(
            f"boundary too large: {len(boundary)} cells at r={r}")


def seg_sides(td, region_of):
    """Segments carrying a side between two regions.

    Returns {region_id: sorted segment ids}: segment si appears for region
    g when some cell of g meets a cell of another region across si with
    positive overlap.
    """
    out = {}
    for si, above in td.above_of.items():
        below = td.below_of.get(si, [])
        i = j = 0
        while i < len(above) and j < len(below):
            c1 = td.cells[above[i]]
            c2 = td.cells[below[j]]
            r1 = _ikey(c1.right_ev, _HI)
            r2 = _ikey(c2.right_ev, _HI)
            if _ikey(c1.left_ev, _LO) < r2 and _ikey(c2.left_ev, _LO) < r1:
                g1, g2 = region_of[c1.id], region_of[c2.id]
                if g1 != g2:
                    out.setdefault(g1, set()).add(si)
                    out.setdefault(g2, set()).add(si)
            if r1 <= r2:
                i += 1
            else:
                j += 1
    return {g: sorted(s) for g, s in out.items()}


def vertical_sides(td, region_of):
    """Wall portions separating cells of different regions.

    Returns a list of (point, ylo, yhi, cell_left, cell_right) with
    ylo < yhi, where point is the event point of the wall (a natural
    coordinate pair), cell_left closes there and cell_right opens, and the
    two lie in different regions.
    """
    out = []
    for rec in td.ev_records:
        p, cl, op = rec[0], rec[1], rec[2]
        if not cl or not op:
            continue
        key = (p[0], p[1])
        civ = [(c, td.cell_interval(td.cells[c], key)) for c in cl]
        oiv = [(c, td.cell_interval(td.cells[c], key)) for c in op]
        for c1, (lo1, hi1) in civ:
            for c2, (lo2, hi2) in oiv:
                lo = max(lo1, lo2)
                hi = min(hi1, hi2)
                if lo < hi and region_of[c1] != region_of[c2]:
                    out.append((sym_geom(p), lo, hi, c1, c2))
    return out


def locate_regions(td, region_of, points, bias="right"):
    """Region id containing each query point; None outside the frame."""
    loc = PointLocator(td)
    out = []
    for cid in loc.locate_many([(p, bias) for p in points]):
        out.append(None if cid == OUTSIDE else region_of[cid])
    return out
