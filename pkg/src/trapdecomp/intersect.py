"""Decomposition of chains that may cross each other.

The input arrives as subcollections that are internally disjoint; crossings
occur only between chains of different subcollections.  Each subcollection
is decomposed on its own, and the edges sitting on region boundaries of a
coarse division of that decomposition form a small net.  The net (plus a
marker at every chain start) is decomposed directly and divided into
regions.  Every chain is cut where it meets a region's vertical sides, so
each resulting piece is confined to one region; a region whose pieces
verify as pairwise disjoint is finished.  The remaining regions are
resolved locally: their pieces are traced region by region and checked
exhaustively against the pieces they can reach.  All intersection points
are collected in one shared table, the input is subdivided at them, and
the disjoint driver applied to the subdivision yields the decomposition
of the full input.

td_general accepts completely unrestricted input.  It partitions the
chains into blocks of consecutive vertices, resolves each block
recursively, subdivides the blocks at their internal intersections, and
treats the blocks as the subcollections above.
"""

from __future__ import annotations

import bisect
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .decomp import Seg, sym_geom, td_sweep
from .disjoint import AlgorithmParams, td_disjoint
from .division import dual_of, locate_regions, r_division, seg_sides, vertical_sides
from .errors import (
    GeometryError,
    InvariantError,
    NotDisjointError,
    PreconditionError,
)
from .geom import Chain, ChainSet, adjacent_edges, on_segment, orient, segment_intersection, y_at


@dataclass
class IntersectParams:
    """Tuning knobs of the crossing-tolerant drivers.

    s: cell budget per region of the per-subcollection division.
    t: cell budget per region of the net division.
    b: block count of td_general (derived from epsilon when absent).
    base_cutoff: td_general solves inputs this small by one direct sweep.
    """

    s: int | None = None
    t: int | None = None
    b: int | None = None
    base_cutoff: int = 24


@dataclass
class IntersectResult:
    """Decomposition plus the reported intersections.

    intersections lists (point, edge1, edge2) with edge ids (chain_id,
    edge_index) over the flattened input, edge1 < edge2, sorted.  Shared
    vertices of consecutive edges of one chain are never reported.
    """

    td: object
    intersections: list
    stats: dict = field(default_factory=dict)


class _Work:
    """A chain fragment carrying per-edge provenance.

    src[k] names the original edge (chain_id, edge_index) that edge k of
    this fragment is a piece of.  Single-vertex fragments have no edges.
    """

    __slots__ = ("pts", "closed", "src", "gcid")

    def __init__(self, pts, closed, src, gcid):
        self.pts = pts
        self.closed = closed
        self.src = src
        self.gcid = gcid

    @property
    def num_edges(self):
        return len(self.pts) if self.closed else len(self.pts) - 1

    def edge(self, k):
        return self.pts[k], self.pts[(k + 1) % len(self.pts)]


def _mid(a, b):
    return ((Fraction(a[0]) + Fraction(b[0])) / 2, (Fraction(a[1]) + Fraction(b[1])) / 2)


def _chain_to_work(ch: Chain, gcid: int):
    m = ch.num_edges
    return _Work(list(ch.points), ch.closed, [(gcid, i) for i in range(m)], gcid)


def _work_to_chain(w: _Work) -> Chain:
    return Chain(list(w.pts), closed=w.closed)


def _structural(orig: ChainSet, s1, s2) -> bool:
    """True when a shared point of the two edges is chain structure, not an
    intersection: the same original edge, or adjacent edges of one chain."""
    if s1 == s2:
        return True
    if s1[0] == "v" or s2[0] == "v":
        return False
    if s1[0] != s2[0]:
        return False
    return adjacent_edges(orig.chains[s1[0]], s1[1], s2[1])


def _note(pm: dict, orig: ChainSet, p, src):
    """Record that edge src passes through point p.

    When p is an endpoint of the edge, the chain neighbour sharing that
    vertex passes through p as well and is recorded with it."""
    bag = pm.setdefault(p, set())
    if src in bag:
        return
    bag.add(src)
    if src[0] == "v":
        return
    cid, i = src
    ch = orig.chains[cid]
    a, b = ch.edge(i)
    m = ch.num_edges
    wrap = ch.closed or (m > 0 and ch.points[0] == ch.points[-1])
    if p == a:
        j = (i - 1) % m if wrap else i - 1
        if 0 <= j < m and j != i:
            bag.add((cid, j))
    if p == b:
        j = (i + 1) % m if wrap else i + 1
        if 0 <= j < m and j != i:
            bag.add((cid, j))


def subdivide_long_chains(chains: ChainSet, l_max: int) -> ChainSet:
    """Split every chain with more than l_max vertices into fragments of at
    most l_max vertices.  Consecutive fragments share their boundary
    vertex, so the union of edges is unchanged; closed chains are opened
    first (the fragment list then revisits the start vertex)."""
    if l_max < 2:
        raise PreconditionError("fragment size must be at least 2")
    out = []
    for ch in chains.chains:
        pts = list(ch.points)
        if ch.closed and len(pts) + 1 > l_max:
            pts = pts + [pts[0]]
        elif ch.closed:
            out.append(Chain(pts, closed=True))
            continue
        if len(pts) <= l_max:
            out.append(Chain(pts, closed=ch.closed and len(pts) == len(ch.points)))
            continue
        at = 0
        while at < len(pts) - 1:
            end = min(at + l_max - 1, len(pts) - 1)
            out.append(Chain(pts[at : end + 1]))
            at = end
    return ChainSet(out)


class _EdgeStab:
    """Stabbing of a group's edges by closed vertical segments.

    Non-vertical edges live in a segment tree whose elementary intervals
    alternate endpoint abscissas with the open gaps between them, so a
    query at an endpoint abscissa still reports the closed touch.  Edges
    stored at a tree node span the whole node and are disjoint inside it,
    hence sorted by height.  Vertical edges and isolated vertices are kept
    per abscissa."""

    def __init__(self):
        self.flat = []
        self.vert = {}
        self._ready = False

    def add(self, a, b, tag):
        if b < a:
            a, b = b, a
        if a[0] == b[0]:
            self.vert.setdefault(a[0], []).append((a[1], b[1], tag))
        else:
            self.flat.append((a, b, tag))

    def add_point(self, p, tag):
        self.vert.setdefault(p[0], []).append((p[1], p[1], tag))

    def _leaf_span(self, leaf):
        xs = self.xs
        if leaf % 2 == 0:
            x = xs[leaf // 2]
            return x, x
        return xs[leaf // 2], xs[leaf // 2 + 1]

    def _build(self):
        xs = sorted({e[0][0] for e in self.flat} | {e[1][0] for e in self.flat})
        self.xs = xs
        index = {x: i for i, x in enumerate(xs)}
        nleaf = max(1, 2 * len(xs) - 1)
        size = 1
        while size < nleaf:
            size *= 2
        self.size = size
        self.node = [[] for _ in range(2 * size)]
        for a, b, tag in self.flat:
            lo = 2 * index[a[0]] + size
            hi = 2 * index[b[0]] + size + 1
            while lo < hi:
                if lo & 1:
                    self.node[lo].append((a, b, tag))
                    lo += 1
                if hi & 1:
                    hi -= 1
                    self.node[hi].append((a, b, tag))
                lo >>= 1
                hi >>= 1
        for ni in range(1, 2 * size):
            lst = self.node[ni]
            if len(lst) > 1:
                leaf_lo = ni
                leaf_hi = ni
                while leaf_lo < size:
                    leaf_lo = 2 * leaf_lo
                    leaf_hi = 2 * leaf_hi + 1
                lo_x = self._leaf_span(min(leaf_lo - size, nleaf - 1))[0]
                hi_x = self._leaf_span(min(leaf_hi - size, nleaf - 1))[1]
                mx = (Fraction(lo_x) + Fraction(hi_x)) / 2
                lst.sort(key=lambda e: y_at(e[0], e[1], mx))
        for lst in self.vert.values():
            lst.sort()
        self._ready = True

    def stab(self, x, ylo, yhi):
        """(tag, point) per edge meeting the closed segment, plus
        (tag, lo, hi) per vertical entry clamped to its overlap."""
        if not self._ready:
            self._build()
        hits = []
        xs = self.xs
        if xs and xs[0] <= x <= xs[-1]:
            i = bisect.bisect_left(xs, x)
            if i < len(xs) and xs[i] == x:
                leaf = 2 * i
            else:
                leaf = 2 * (i - 1) + 1
            ni = leaf + self.size
            while ni >= 1:
                lst = self.node[ni]
                lo, hi = 0, len(lst)
                while lo < hi:
                    mid = (lo + hi) // 2
                    a, b, _ = lst[mid]
                    if y_at(a, b, x) < ylo:
                        lo = mid + 1
                    else:
                        hi = mid
                for j in range(lo, len(lst)):
                    a, b, tag = lst[j]
                    y = y_at(a, b, x)
                    if y > yhi:
                        break
                    hits.append((tag, (x, y)))
                ni >>= 1
        vhits = []
        for elo, ehi, tag in self.vert.get(x, ()):
            lo = max(elo, ylo)
            hi = min(ehi, yhi)
            if lo <= hi:
                vhits.append((tag, lo, hi))
        return hits, vhits


def _order_along(a, b, pts):
    """Sort points lying on segment a->b by travel order from a."""
    rev = b < a
    return sorted(pts, reverse=rev)


def _pieces_of_work(w: _Work, wi: int, cutmap: dict, pieces: list):
    """Split one work chain at its recorded cut points.

    Cut points equal to a vertex split at that vertex; interior cut points
    become new vertices.  Closed chains open at their first cut.  Appends
    _CutPiece entries to pieces and returns the number of cuts used."""
    m = w.num_edges
    if m == 0:
        pieces.append(_CutPiece([w.pts[0]], [], [], w))
        return 0
    vcut = set()
    interior = {}
    for k in range(m):
        cps = cutmap.get((wi, k))
        if not cps:
            continue
        a, b = w.edge(k)
        ins = []
        for q in cps:
            if q == a or q == b:
                vcut.add(q)
            else:
                ins.append(q)
        if ins:
            interior[k] = _order_along(a, b, set(ins))
    run = []
    flags = []
    for k in range(m):
        a, _ = w.edge(k)
        run.append((a, k))
        flags.append(a in vcut)
        for q in interior.get(k, ()):
            run.append((q, k))
            flags.append(True)
    if not w.closed:
        run.append((w.pts[-1], None))
        flags.append(False)
        bounds = [i for i in range(1, len(run) - 1) if flags[i]]
        stops = [0] + bounds + [len(run) - 1]
        for j in range(len(stops) - 1):
            seg = run[stops[j] : stops[j + 1] + 1]
            pieces.append(_CutPiece([p for p, _ in seg],
                                    [w.src[k] for _, k in seg[:-1]],
                                    [(wi, k) for _, k in seg[:-1]], w))
        return len(bounds)
    bounds = [i for i in range(len(run)) if flags[i]]
    if not bounds:
        pieces.append(_CutPiece(list(w.pts), list(w.src),
                                [(wi, k) for k in range(m)], w, closed=True))
        return 0
    for j in range(len(bounds)):
        lo = bounds[j]
        hi = bounds[(j + 1) % len(bounds)]
        if j + 1 < len(bounds):
            seg = run[lo : hi + 1]
        else:
            seg = run[lo:] + run[: hi + 1]
        pieces.append(_CutPiece([p for p, _ in seg],
                                [w.src[k] for _, k in seg[:-1]],
                                [(wi, k) for _, k in seg[:-1]], w))
    return len(bounds)


class _CutPiece:
    """A fragment produced by the region cutting."""

    __slots__ = ("pts", "src", "wtag", "work", "closed", "region",
                 "bad", "k_as", "q_as")

    def __init__(self, pts, src, wtag, work, closed=False):
        self.pts = pts
        self.src = src
        self.wtag = wtag
        self.work = work
        self.closed = closed
        self.region = None
        self.bad = False
        self.k_as = 0
        self.q_as = None

    @property
    def is_point(self):
        return not self.src

    def num_edges(self):
        return len(self.pts) if self.closed else len(self.pts) - 1

    def edge(self, k):
        return self.pts[k], self.pts[(k + 1) % len(self.pts)]


def _group_works(subcollections):
    """Flatten subcollections of chains into work fragments with identity
    provenance.  Returns (works, groups, flattened ChainSet)."""
    works = []
    groups = []
    flat = []
    gcid = 0
    for cs in subcollections:
        members = []
        for ch in cs.chains:
            works.append(_chain_to_work(ch, gcid))
            members.append(len(works) - 1)
            flat.append(ch)
            gcid += 1
        groups.append(members)
    return works, groups, ChainSet(flat)


def _vertex_srcs(w: _Work, j: int):
    """Original edges incident to vertex j of a work chain."""
    m = w.num_edges
    if m == 0:
        return [("v", w.gcid)]
    out = []
    if w.closed:
        out.append(w.src[(j - 1) % m])
        out.append(w.src[j % m])
    else:
        if j > 0:
            out.append(w.src[j - 1])
        if j < m:
            out.append(w.src[j])
    return out


def _check_group(orig, works, members, gi, known, pm):
    """Reject real shared vertices inside one subcollection.

    Points already in the shared table are re-noted instead: they are the
    subdivision marks of intersections found at an earlier stage."""
    seen = {}
    for wi in members:
        w = works[wi]
        for j, p in enumerate(w.pts):
            seen.setdefault(p, []).extend(_vertex_srcs(w, j))
    for p, srcs in seen.items():
        uniq = sorted(set(srcs))
        if len(uniq) < 2:
            continue
        for a in range(len(uniq)):
            for bnd in range(a + 1, len(uniq)):
                s1, s2 = uniq[a], uniq[bnd]
                if _structural(orig, s1, s2):
                    continue
                if p in known:
                    _note(pm, orig, p, s1)
                    _note(pm, orig, p, s2)
                    continue
                raise PreconditionError(
                    f"subcollection {gi}: edges {s1} and {s2} meet at {p}"
                )


def _partitioned(works, groups, orig, params, pm, known, stats):
    """Run the subcollection driver, accumulating intersection points of
    distinct subcollections (and any re-found known points) into pm."""
    t0 = time.perf_counter()
    p = params or IntersectParams()
    n = sum(len(w.pts) for w in works)
    b = max(1, len(groups))
    lg = math.log2(max(n, 4))
    s = p.s if p.s is not None else max(4, math.ceil(lg * lg))
    t_want = p.t if p.t is not None else max(4, math.ceil(b * b * lg ** 6))
    box = orig.bbox()
    stats["n"] = n
    stats["h"] = len(works)
    stats["b"] = b
    stats["s"] = s
    disj = AlgorithmParams(tolerant=True)

    # Per-subcollection decompositions; boundary edges of an s-division of
    # each become the net.
    r_entries = []
    stabs = []
    for gi, members in enumerate(groups):
        _check_group(orig, works, members, gi, known, pm)
        cs = ChainSet([_work_to_chain(works[wi]) for wi in members])

        def culprit(ed):
            if isinstance(ed, tuple) and len(ed) == 2 and isinstance(ed[0], int):
                w = works[members[ed[0]]]
                if isinstance(ed[1], int) and 0 <= ed[1] < len(w.src):
                    return f"edge {w.src[ed[1]]}"
                return f"chain {w.gcid}"
            if isinstance(ed, tuple) and len(ed) == 2 and ed[0] == "chain":
                return f"chain {works[members[ed[1]]].gcid}"
            return str(ed)

        try:
            td_i = td_disjoint(cs, disj)
        except NotDisjointError as e:
            if e.point is not None and e.point in known:
                td_i = None
            else:
                raise PreconditionError(
                    f"subcollection {gi}: {culprit(e.edge1)} and "
                    f"{culprit(e.edge2)} intersect at {e.point}"
                ) from e
        except GeometryError as e:
            raise PreconditionError(f"subcollection {gi}: {e}") from e
        st = _EdgeStab()
        for wi in members:
            w = works[wi]
            if w.num_edges == 0:
                st.add_point(w.pts[0], (wi, -1))
            for k in range(w.num_edges):
                a, bb = w.edge(k)
                st.add(a, bb, (wi, k))
        stabs.append((members, st))
        if td_i is None:
            # Known subdivision points foiled the tolerant screen; every
            # edge of the group joins the net so nothing is lost.
            for wi in members:
                w = works[wi]
                for k in range(w.num_edges):
                    r_entries.append((wi, k))
            continue
        if cs.n > s:
            reg_i = r_division(dual_of(td_i), s)[2]
            for sides in seg_sides(td_i, reg_i).values():
                for si in sides:
                    if td_i.segs[si].is_marker:
                        continue
                    lcid, ei = td_i.segs[si].owner
                    r_entries.append((members[lcid], ei))
        else:
            for wi in members:
                w = works[wi]
                for k in range(w.num_edges):
                    r_entries.append((wi, k))
    r_entries = sorted(set(r_entries))
    stats["seconds"] = {"groups": time.perf_counter() - t0}
    t0 = time.perf_counter()

    # The net: boundary edges plus a marker at every chain start.
    r_segs = []
    r_tag = []
    r_src = []
    for wi, k in r_entries:
        a, bb = works[wi].edge(k)
        r_segs.append(Seg.natural(a, bb, ("r", len(r_segs))))
        r_tag.append((wi, k))
        r_src.append(works[wi].src[k])
    for wi, w in enumerate(works):
        r_segs.append(Seg.marker(w.pts[0], ("m", wi)))
    td_r = td_sweep(r_segs, box)
    for o1, o2, q in td_r.contacts:
        qg = sym_geom(q)
        for o in (o1, o2):
            if o[0] == "r":
                _note(pm, orig, qg, r_src[o[1]])
            else:
                w = works[o[1]]
                _note(pm, orig, qg, w.src[0] if w.src else ("v", w.gcid))
    t_cap = max(4, td_r.n_cells)
    t = min(t_want, t_cap)
    stats["t"] = t
    stats["net_edges"] = len(r_entries)
    stats["net_cells"] = td_r.n_cells
    reg_r = r_division(dual_of(td_r), t)[2]
    vsides = vertical_sides(td_r, reg_r)
    # Sides come back as indices into td_r's segment pieces; fold them to
    # the underlying net edges (td_sweep splits net edges that cross).
    pieces_of_r = {}
    for si, sg in enumerate(td_r.segs):
        if not sg.is_marker and sg.owner[0] == "r":
            pieces_of_r.setdefault(sg.owner[1], []).append(si)
    q_sets = {}
    for rid, sides in seg_sides(td_r, reg_r).items():
        folded = set()
        for si in sides:
            sg = td_r.segs[si]
            if not sg.is_marker and sg.owner[0] == "r":
                folded.add(sg.owner[1])
        q_sets[rid] = folded
    # A vertical net edge only borders the degenerate cells along its own
    # line, yet pieces cut at the walls on that line land in the regions
    # flanking the walls; hand the edge to those regions as well so their
    # tests see its geometry.
    vert_net = {}
    for ri, (wi, k) in enumerate(r_tag):
        a, bb = works[wi].edge(k)
        if a[0] == bb[0]:
            lo, hi = (a[1], bb[1]) if a[1] <= bb[1] else (bb[1], a[1])
            vert_net.setdefault(a[0], []).append((ri, lo, hi))
    if vert_net:
        for pgeom, ylo, yhi, c_close, c_open in vsides:
            for ri, lo, hi in vert_net.get(pgeom[0], ()):
                if max(lo, ylo) <= min(hi, yhi):
                    q_sets.setdefault(reg_r[c_close], set()).add(ri)
                    q_sets.setdefault(reg_r[c_open], set()).add(ri)
    q_of_region = {rid: sorted(ris) for rid, ris in q_sets.items()}
    qside_tags = {r_tag[ri] for ris in q_of_region.values() for ri in ris}
    stats["regions"] = len(set(reg_r.values()))
    stats["vsides"] = len(vsides)
    stats["seconds"]["net"] = time.perf_counter() - t0
    t0 = time.perf_counter()

    # Cut every chain where it meets a vertical side of a region boundary.
    cutmap = {}
    for pgeom, ylo, yhi, _, _ in vsides:
        x = pgeom[0]
        for members, st in stabs:
            hits, vhits = st.stab(x, ylo, yhi)
            for tag, q in hits:
                cutmap.setdefault(tag, set()).add(q)
                _note(pm, orig, q, works[tag[0]].src[tag[1]])
            for tag, lo, hi in vhits:
                w = works[tag[0]]
                if tag[1] < 0:
                    _note(pm, orig, (x, lo), ("v", w.gcid))
                    continue
                for q in {(x, lo), (x, hi)}:
                    cutmap.setdefault(tag, set()).add(q)
                    _note(pm, orig, q, w.src[tag[1]])
    pieces = []
    ncuts = 0
    for wi, w in enumerate(works):
        ncuts += _pieces_of_work(w, wi, cutmap, pieces)
    stats["cut_points"] = ncuts
    stats["pieces"] = len(pieces)
    stats["n_prime"] = sum(len(pc.pts) for pc in pieces)

    # Assign every piece the region holding a point of its first edge off
    # the net support (any edge at all when the whole piece rides the net;
    # the locator puts an on-segment point in the cell above).  The point
    # must stay clear of every other net edge, or the locator and the walks
    # would start on a region boundary; halving toward the edge start meets
    # each obstruction at most once.
    def assign_point(pc):
        a, bb = pc.edge(pc.k_as)
        own = pc.wtag[pc.k_as]
        q = _mid(a, bb)
        for _ in range(len(r_tag) + 4):
            hit = next((tg for tg in r_tag if tg != own
                        and on_segment(q, *works[tg[0]].edge(tg[1]))), None)
            if hit is None:
                return q
            q = _mid(a, q)
        raise InvariantError("assignment point keeps landing on the net")

    queries = []
    support_pieces = 0
    for pc in pieces:
        if pc.is_point:
            pc.q_as = pc.pts[0]
            queries.append(pc.pts[0])
            continue
        pc.k_as = next((k for k, tg in enumerate(pc.wtag)
                        if tg not in qside_tags), 0)
        if pc.wtag[pc.k_as] in qside_tags:
            support_pieces += 1
        pc.q_as = assign_point(pc)
        queries.append(pc.q_as)
    for pc, rid in zip(pieces, locate_regions(td_r, reg_r, queries, bias="right")):
        if rid is None:
            raise InvariantError("piece located outside the frame")
        pc.region = rid
    stats["support_pieces"] = support_pieces
    stats["seconds"]["cut"] = time.perf_counter() - t0
    t0 = time.perf_counter()

    # Local verification: a region is good when its pieces and boundary
    # sides show nothing beyond chain structure.
    by_region = {}
    for pi, pc in enumerate(pieces):
        by_region.setdefault(pc.region, []).append(pi)
    bad_regions = set()
    piece_src = lambda o: (pieces[o[1]].src[o[2]] if o[2] >= 0
                           else ("v", pieces[o[1]].work.gcid))
    for rid, members in by_region.items():
        test = []
        q_here = set()
        for ri in q_of_region.get(rid, ()):
            q_here.add(r_tag[ri])
            qa, qb = works[r_tag[ri][0]].edge(r_tag[ri][1])
            test.append(Seg.natural(qa, qb, ("q", ri)))
        for pi in members:
            pc = pieces[pi]
            if pc.is_point:
                test.append(Seg.marker(pc.pts[0], ("p", pi, -1)))
                continue
            for k in range(pc.num_edges()):
                if pc.wtag[k] in q_here:
                    continue
                a, bb = pc.edge(k)
                test.append(Seg.natural(a, bb, ("p", pi, k)))
        td_g = td_sweep(test, box)
        for o1, o2, q in td_g.contacts:
            s1 = r_src[o1[1]] if o1[0] == "q" else piece_src(o1)
            s2 = r_src[o2[1]] if o2[0] == "q" else piece_src(o2)
            if s1 == s2 or _structural(orig, s1, s2):
                continue
            bad_regions.add(rid)
            qg = sym_geom(q)
            _note(pm, orig, qg, s1)
            _note(pm, orig, qg, s2)
    bad = []
    for pi, pc in enumerate(pieces):
        if pc.region in bad_regions:
            pc.bad = True
            bad.append(pi)
    stats["bad_regions"] = len(bad_regions)
    stats["bad_pieces"] = len(bad)
    stats["seconds"]["tests"] = time.perf_counter() - t0
    t0 = time.perf_counter()

    # Region maps along each net segment piece, for the walks.
    def ivs_of(cells):
        out = [(td_r.cells[c].left_x, td_r.cells[c].right_x, reg_r[c])
               for c in cells]
        out.sort(key=lambda iv: (iv[0] is not None, iv[0]))
        return out

    above_iv = {si: ivs_of(cells) for si, cells in td_r.above_of.items()}
    below_iv = {si: ivs_of(cells) for si, cells in td_r.below_of.items()}

    def si_at(ri, q):
        nq = (q[0], q[1], q[1])
        cand = pieces_of_r.get(ri, ())
        for si in cand:
            sg = td_r.segs[si]
            if sg.a <= nq <= sg.b:
                return si
        return cand[0]

    def region_beside(si, q, above, fwd):
        ivs = above_iv.get(si, ()) if above else below_iv.get(si, ())
        inside = [iv for iv in ivs
                  if (iv[0] is None or iv[0] <= q[0])
                  and (iv[1] is None or q[0] <= iv[1])]
        if not inside:
            raise InvariantError("crossing point off the net segment")
        if len(inside) > 1:
            # A wall meets the segment right at q; the piece continues into
            # the cell on its travel side.
            if fwd:
                for lx, _, rid2 in inside:
                    if lx == q[0]:
                        return rid2
                return inside[-1][2]
            for _, rx, rid2 in inside:
                if rx == q[0]:
                    return rid2
        return inside[0][2]

    def run_after(rpts, k, q, k0, prev):
        if k != k0:
            return k > k0
        if q == prev:
            return False
        return (prev < q) == (rpts[k] < rpts[k + 1])

    steps = [0]

    def walk_run(rpts, rsrc, rtag, rid):
        seq = [rid]
        run_tags = set(rtag)
        k0 = 0
        prev = rpts[0]
        guard = 4 * (len(rpts) + len(r_entries)) + 16
        while True:
            guard -= 1
            if guard < 0:
                raise InvariantError("region walk did not terminate")
            best = None
            best_ri = None
            for ri in q_of_region.get(rid, ()):
                if r_tag[ri] in run_tags:
                    continue
                qa, qb = works[r_tag[ri][0]].edge(r_tag[ri][1])
                for k in range(k0, len(rpts) - 1):
                    hit = segment_intersection(rpts[k], rpts[k + 1], qa, qb)
                    if hit is None:
                        continue
                    if hit[0] == "segment":
                        raise GeometryError(
                            f"overlapping edges {rsrc[k]} and {r_src[ri]}")
                    q = hit[1]
                    if not run_after(rpts, k, q, k0, prev):
                        continue
                    if best is None or not run_after(rpts, k, q, *best):
                        if best is None or (k, q) != best:
                            best = (k, q)
                            best_ri = ri
            if best is None:
                break
            k, q = best
            ri = best_ri
            steps[0] += 1
            _note(pm, orig, q, rsrc[k])
            _note(pm, orig, q, r_src[ri])
            qa, qb = works[r_tag[ri][0]].edge(r_tag[ri][1])
            if (qb[0], qb[1]) < (qa[0], qa[1]):
                # Sweep order, so a positive orientation means the side
                # above the net edge.
                qa, qb = qb, qa
            sb = 0
            j = k if q != rpts[k] else k - 1
            while j >= 0 and sb == 0:
                sb = orient(qa, qb, rpts[j])
                j -= 1
            sa = 0
            j = k + 1 if q != rpts[k + 1] else k + 2
            while j < len(rpts) and sa == 0:
                sa = orient(qa, qb, rpts[j])
                j += 1
            if sa == 0:
                # The rest of the run rides the boundary line; its contacts
                # are all carried by the net side itself.
                break
            if sb == 0 or sb != sa:
                j = k + 1
                while j < len(rpts) and rpts[j] == q:
                    j += 1
                fwd = (q < rpts[j]) if j < len(rpts) else (rpts[k] < q)
                nrid = region_beside(si_at(ri, q), q, sa > 0, fwd)
                if nrid != rid:
                    rid = nrid
                    seq.append(rid)
            k0 = k
            prev = q
        return seq

    # Trace each suspect piece through the regions it actually visits,
    # starting at its assignment point and covering both directions.
    walked = {}
    for pi in bad:
        pc = pieces[pi]
        if pc.is_point:
            walked[pi] = [pc.region]
            continue
        k_as = pc.k_as
        mid = pc.q_as
        if pc.closed:
            runs = [([mid] + pc.pts[k_as + 1 :] + pc.pts[: k_as + 1] + [mid],
                     pc.src[k_as:] + pc.src[:k_as] + [pc.src[k_as]],
                     pc.wtag[k_as:] + pc.wtag[:k_as] + [pc.wtag[k_as]])]
        else:
            runs = [([mid] + pc.pts[k_as + 1 :], pc.src[k_as:], pc.wtag[k_as:]),
                    ([mid] + pc.pts[k_as :: -1], pc.src[k_as :: -1],
                     pc.wtag[k_as :: -1])]
        seq = []
        for rpts, rsrc, rtag in runs:
            if len(rpts) >= 2:
                seq.extend(walk_run(rpts, rsrc, rtag, pc.region))
        walked[pi] = seq or [pc.region]
    stats["walk_steps"] = steps[0]
    stats["walk_regions"] = {pi: list(seq) for pi, seq in walked.items()}

    # Exhaustive checks: suspect against the good pieces it can reach, then
    # suspects against each other in one sweep.
    for pi in bad:
        pc = pieces[pi]
        for rid in set(walked[pi]):
            if rid in bad_regions:
                continue
            for pj in by_region.get(rid, ()):
                po = pieces[pj]
                if po.bad:
                    continue
                _brute_pair(pc, po, orig, pm)
    if bad:
        test = []
        for pi in bad:
            pc = pieces[pi]
            if pc.is_point:
                test.append(Seg.marker(pc.pts[0], ("p", pi, -1)))
                continue
            for k in range(pc.num_edges()):
                a, bb = pc.edge(k)
                test.append(Seg.natural(a, bb, ("p", pi, k)))
        td_b = td_sweep(test, box)
        for o1, o2, q in td_b.contacts:
            s1 = piece_src(o1)
            s2 = piece_src(o2)
            if s1 == s2 or _structural(orig, s1, s2):
                continue
            qg = sym_geom(q)
            _note(pm, orig, qg, s1)
            _note(pm, orig, qg, s2)
    stats["seconds"]["resolve"] = time.perf_counter() - t0
    return pieces


def _brute_pair(pa: _CutPiece, pb: _CutPiece, orig, pm):
    for ka in range(max(1, pa.num_edges())):
        for kb in range(max(1, pb.num_edges())):
            if pa.is_point and pb.is_point:
                if pa.pts[0] == pb.pts[0]:
                    _note(pm, orig, pa.pts[0], ("v", pa.work.gcid))
                    _note(pm, orig, pa.pts[0], ("v", pb.work.gcid))
                continue
            if pa.is_point or pb.is_point:
                pt = pa.pts[0] if pa.is_point else pb.pts[0]
                other = pb if pa.is_point else pa
                k = kb if pa.is_point else ka
                a, b = other.edge(k)
                if on_segment(pt, a, b):
                    _note(pm, orig, pt, ("v", (pa if pa.is_point else pb).work.gcid))
                    _note(pm, orig, pt, other.src[k])
                continue
            if pa.wtag[ka] == pb.wtag[kb]:
                continue
            a, b = pa.edge(ka)
            c, d = pb.edge(kb)
            hit = segment_intersection(a, b, c, d)
            if hit is None:
                continue
            if hit[0] == "segment":
                if _structural(orig, pa.src[ka], pb.src[kb]):
                    continue
                raise GeometryError(
                    f"overlapping edges {pa.src[ka]} and {pb.src[kb]}"
                )
            _note(pm, orig, hit[1], pa.src[ka])
            _note(pm, orig, hit[1], pb.src[kb])


def _expand(orig: ChainSet, pm: dict):
    """Turn the shared point table into reported pairs, subdivision marks
    and per-chain split points."""
    pairs = []
    subdiv = {}
    splitp = {}
    for p, srcs in pm.items():
        uniq = sorted(srcs, key=lambda s: (1, s[1], 0) if s[0] == "v" else (0,) + s)
        touched = set()
        for i in range(len(uniq)):
            for j in range(i + 1, len(uniq)):
                s1, s2 = uniq[i], uniq[j]
                if _structural(orig, s1, s2):
                    continue
                e1 = s1[0] != "v"
                e2 = s2[0] != "v"
                if e1 and e2:
                    pairs.append((p, s1, s2) if s1 < s2 else (p, s2, s1))
                    touched.add(s1)
                    touched.add(s2)
                    if s1[0] == s2[0]:
                        splitp.setdefault(s1[0], set()).add(p)
                elif e1:
                    touched.add(s1)
                elif e2:
                    touched.add(s2)
        for s in touched:
            a, b = orig.chains[s[0]].edge(s[1])
            if p != a and p != b:
                subdiv.setdefault(s, set()).add(p)
    pairs.sort()
    return pairs, subdiv, splitp


def _final_td(orig: ChainSet, subdiv: dict, splitp: dict, stats):
    """Subdivide the input at the reported points and decompose.

    Former crossings become shared vertices, so the tolerant disjoint
    driver accepts the result; self-crossing chains are split at each
    visit of a crossing point.  Segment owners are translated back to the
    original edge ids afterwards."""
    new_chains = []
    owner_of_new = {}
    for cid, ch in enumerate(orig.chains):
        if len(ch.points) == 1:
            nc = len(new_chains)
            new_chains.append(Chain(list(ch.points)))
            owner_of_new[(nc, 0)] = (cid, 0)
            continue
        m = ch.num_edges
        run = []
        src = []
        for i in range(m):
            a, b = ch.edge(i)
            run.append(a)
            src.append((cid, i))
            extra = subdiv.get((cid, i))
            if extra:
                for q in _order_along(a, b, extra):
                    run.append(q)
                    src.append((cid, i))
        cuts = splitp.get(cid, set())
        if not ch.closed:
            run.append(ch.points[-1])
            marks = [j for j in range(1, len(run) - 1) if run[j] in cuts]
            stops = [0] + marks + [len(run) - 1]
            for j in range(len(stops) - 1):
                nc = len(new_chains)
                new_chains.append(Chain(run[stops[j] : stops[j + 1] + 1]))
                for k, s in enumerate(src[stops[j] : stops[j + 1]]):
                    owner_of_new[(nc, k)] = s
            continue
        marks = [j for j in range(len(run)) if run[j] in cuts]
        if not marks:
            nc = len(new_chains)
            new_chains.append(Chain(run, closed=True))
            for k, s in enumerate(src):
                owner_of_new[(nc, k)] = s
            continue
        for j in range(len(marks)):
            lo = marks[j]
            hi = marks[(j + 1) % len(marks)]
            if j + 1 < len(marks):
                piece = run[lo : hi + 1]
                psrc = src[lo:hi]
            else:
                piece = run[lo:] + run[: hi + 1]
                psrc = src[lo:] + src[:hi]
            nc = len(new_chains)
            new_chains.append(Chain(piece))
            for k, s in enumerate(psrc):
                owner_of_new[(nc, k)] = s
    cs = ChainSet(new_chains)
    td = td_disjoint(cs, AlgorithmParams(tolerant=True))
    for sg in td.segs:
        o = sg.owner
        if isinstance(o, tuple) and len(o) == 2 and isinstance(o[0], int):
            sg.owner = owner_of_new[o]
    td.contacts = [
        (owner_of_new.get(o1, o1), owner_of_new.get(o2, o2), q)
        for o1, o2, q in td.contacts
    ]
    stats["h_final"] = cs.h
    stats["n_final"] = cs.n
    return td


def td_intersect_partitioned(subcollections, params=None, stats=None):
    """Decomposition and intersections of chains grouped into internally
    disjoint subcollections.

    Raises PreconditionError when two chains of one subcollection meet,
    naming the subcollection and the offending edges.  Returns an
    IntersectResult whose decomposition equals a direct sweep over all
    edges and whose intersection list pairs edges of the flattened input.
    """
    st = stats if stats is not None else {}
    works, groups, orig = _group_works(subcollections)
    pm = {}
    if works:
        _partitioned(works, groups, orig, params, pm, frozenset(), st)
    t0 = time.perf_counter()
    pairs, subdiv, splitp = _expand(orig, pm)
    td = _final_td(orig, subdiv, splitp, st)
    st.setdefault("seconds", {})["final"] = time.perf_counter() - t0
    st["X"] = len(pairs)
    return IntersectResult(td, pairs, st)


def _direct_collect(works, orig, box, pm):
    """Intersections of a small set of work chains by one sweep."""
    segs = []
    srcs = {}
    for wi, w in enumerate(works):
        if w.num_edges == 0:
            o = ("w", wi, -1)
            segs.append(Seg.marker(w.pts[0], o))
            srcs[o] = ("v", w.gcid)
            continue
        for k in range(w.num_edges):
            a, b = w.edge(k)
            o = ("w", wi, k)
            segs.append(Seg.natural(a, b, o))
            srcs[o] = w.src[k]
    if not segs:
        return
    td = td_sweep(segs, box)
    for o1, o2, q in td.contacts:
        s1, s2 = srcs[o1], srcs[o2]
        if s1 == s2 or _structural(orig, s1, s2):
            continue
        qg = sym_geom(q)
        _note(pm, orig, qg, s1)
        _note(pm, orig, qg, s2)


def _subdivide_block(works, orig, pm):
    """Insert every recorded point interior to a work edge and split work
    chains at visits of their own chain's crossing points."""
    selfp = {}
    for p, srcs in pm.items():
        es = sorted(s for s in srcs if s[0] != "v")
        for i in range(len(es)):
            for j in range(i + 1, len(es)):
                if es[i][0] == es[j][0] and not _structural(orig, es[i], es[j]):
                    selfp.setdefault(es[i][0], set()).add(p)
    bysrc = {}
    for q, srcs in pm.items():
        for s in srcs:
            if s[0] != "v":
                bysrc.setdefault(s, []).append(q)
    out = []
    for w in works:
        m = w.num_edges
        if m == 0:
            out.append(w)
            continue
        pts = w.pts + [w.pts[0]] if w.closed else w.pts
        run = []
        src = []
        for k in range(m):
            a, b = pts[k], pts[k + 1]
            run.append(a)
            src.append(w.src[k])
            ons = [q for q in bysrc.get(w.src[k], ())
                   if q != a and q != b and on_segment(q, a, b)]
            for q in _order_along(a, b, ons):
                run.append(q)
                src.append(w.src[k])
        run.append(pts[-1])
        cuts = selfp.get(w.gcid, set())
        marks = [j for j in range(1, len(run) - 1) if run[j] in cuts]
        stops = [0] + marks + [len(run) - 1]
        for j in range(len(stops) - 1):
            out.append(_Work(run[stops[j] : stops[j + 1] + 1], False,
                             src[stops[j] : stops[j + 1]], w.gcid))
    return out


def _general_rec(works, orig, b, params, pm, depth, box, levels, stats_list):
    n_here = sum(len(w.pts) for w in works)
    if depth <= 0 or n_here <= max(params.base_cutoff, b * b) or len(works) <= 0:
        _direct_collect(works, orig, box, pm)
        stats_list.append({"n": n_here, "h": len(works), "base": True})
        return
    budget = max(2, math.ceil(n_here / b))
    blocks = []
    cur = []
    cur_n = 0
    for w in works:
        rem = w
        while True:
            wl = len(rem.pts)
            if cur_n + wl <= budget:
                cur.append(rem)
                cur_n += wl
                break
            room = budget - cur_n
            if room < 2:
                blocks.append(cur)
                cur = []
                cur_n = 0
                continue
            pts = rem.pts + [rem.pts[0]] if rem.closed else rem.pts
            src = rem.src
            head = _Work(pts[:room], False, src[: room - 1], rem.gcid)
            rem = _Work(pts[room - 1 :], False, src[room - 1 :], rem.gcid)
            cur.append(head)
            blocks.append(cur)
            cur = []
            cur_n = 0
        if cur_n >= budget:
            blocks.append(cur)
            cur = []
            cur_n = 0
    if cur:
        blocks.append(cur)
    level = {"n": n_here, "h": len(works), "b": b, "base": False,
             "block_h": [len(bl) for bl in blocks],
             "block_n": [sum(len(w.pts) for w in bl) for bl in blocks],
             "block_src": [[(w.gcid,
                             w.src[0][1] if w.src else None,
                             w.src[-1][1] if w.src else None)
                            for w in bl] for bl in blocks]}
    stats_list.append(level)
    for bl in blocks:
        _general_rec(bl, orig, b, params, pm, depth - 1, box, levels + 1, stats_list)
    groups = []
    all_works = []
    for bl in blocks:
        sub = _subdivide_block(bl, orig, pm)
        members = []
        for w in sub:
            all_works.append(w)
            members.append(len(all_works) - 1)
        groups.append(members)
    inner = {}
    _partitioned(all_works, groups, orig, params, pm, frozenset(pm.keys()), inner)
    level["merge"] = {k: inner.get(k) for k in
                      ("s", "t", "net_edges", "regions", "bad_regions", "pieces")}


def td_general(chains: ChainSet, epsilon=0.5, params=None, stats=None):
    """Decomposition and intersections of completely unrestricted chains.

    Chains may cross each other and themselves.  The chain list is split
    into roughly n**(epsilon/2) blocks of consecutive vertices; blocks are
    resolved recursively and then played against each other as internally
    disjoint subcollections.  Returns an IntersectResult over the input
    edge ids.
    """
    st = stats if stats is not None else {}
    p = params or IntersectParams()
    orig = chains
    n = orig.n
    b = p.b if p.b is not None else max(2, math.ceil(max(n, 2) ** (float(epsilon) / 2)))
    depth = max(1, math.ceil(math.log(max(n, 2), max(b, 2))))
    box = orig.bbox()
    works = [_chain_to_work(ch, cid) for cid, ch in enumerate(orig.chains)]
    pm = {}
    levels = []
    _general_rec(works, orig, b, p, pm, depth, box, 0, levels)
    t0 = time.perf_counter()
    pairs, subdiv, splitp = _expand(orig, pm)
    td = _final_td(orig, subdiv, splitp, st)
    st["b"] = b
    st["depth"] = depth
    st["levels"] = levels
    st["X"] = len(pairs)
    st.setdefault("seconds", {})["final"] = time.perf_counter() - t0
    return IntersectResult(td, pairs, st)
