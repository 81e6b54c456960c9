"""Randomized decomposition driver: sample, conflict lists, recursion.

A random subset R of the edges is decomposed directly; every remaining
edge is charged to the open cells its relative interior passes through
(its conflicts).  A coarse division of TD(R) groups cells into regions,
each solved recursively with edges reduced to the region's conflicts and
boundary, until a depth limit hands the rest to a plain sweep.  Sampling
only steers the subdivision: the reported intersections and the final
decomposition are the same for every seed.

Two size checks guard each sampling step; a failed check abandons the
sample and solves that subproblem by the direct sweep instead.
"""

import bisect
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .decomp import PointLocator, Seg, sym_geom, td_sweep
from .division import dual_of, r_division
from .errors import GeometryError
from .geom import ChainSet, on_segment, segment_intersection, y_at
from .intersect import IntersectResult, _expand, _final_td, _note, _structural

SUBSEED = 1000003


@dataclass
class RandomParams:
    """Tuning knobs of the randomized driver.

    s: sampling ratio (|R| = ceil(n/s)); formula when absent.
    t: cell budget per region of the division; formula when absent.
    c: extra sampling levels past the first (c + 1 total).
    c7: slack of the total-conflict check, c7 * (n + x_sample * s).
    c8: slack of the largest-list check, c8 * s * log2 n.
    base_cutoff: subproblems this small go straight to the sweep.
    """

    s: int | None = None
    t: int | None = None
    c: int = 2
    c7: int = 64
    c8: int = 8
    base_cutoff: int = 48


def sample_edges(items, s, seed):
    """Uniform subset of ceil(len / s) items, without replacement.

    A partial shuffle driven by random.Random(seed) picks the subset; the
    result keeps the original order.  s = 1 returns everything.
    """
    if s < 1:
        raise ValueError("sampling ratio must be at least 1")
    n = len(items)
    if n == 0:
        return []
    k = max(1, math.ceil(n / s))
    if k >= n:
        return list(items)
    rng = random.Random(seed)
    idx = list(range(n))
    for i in range(k):
        j = rng.randrange(i, n)
        idx[i], idx[j] = idx[j], idx[i]
    return [items[i] for i in sorted(idx[:k])]


def conflict_lists(r_ids, edges, chains):
    """Conflicts of every edge outside the sample, per open cell.

    r_ids: positions in edges of the sampled subset R.  An edge conflicts
    with a cell when its relative interior passes through the cell's
    interior; edges of R therefore conflict with nothing.  Returns
    (TD(R), {cell id: sorted edge positions}).
    """
    td = _r_decomposition(sorted(set(r_ids)), edges, chains.bbox())
    return td, _conflicts_of(td, set(r_ids), range(len(edges)), edges)


def _r_decomposition(edge_ids, edges, box):
    segs = [Seg.natural(*edges[ei], ei) for ei in edge_ids]
    return td_sweep(segs, box)


def _mid(u, v):
    return ((Fraction(u[0]) + Fraction(v[0])) / 2,
            (Fraction(u[1]) + Fraction(v[1])) / 2)


def _conflicts_of(td, r_set, candidate_ids, edges, contact_out=None):
    # event lines of TD(R), for cutting queries clear of every wall
    ev_ys = {}
    for rec in td.ev_records:
        ev_ys.setdefault(rec[0][0], set()).add(rec[0][1])
    ev_xs = sorted(ev_ys)
    pieces = [(sg.owner, sg.ca, sg.cb) for sg in td.segs if not sg.is_marker]

    queries = []
    label = []
    for ei in candidate_ids:
        if ei in r_set:
            continue
        a, b = edges[ei]
        if (b[0], b[1]) < (a[0], a[1]):
            a, b = b, a
        cuts = set()
        slivers = []
        if a[0] == b[0]:
            for y in ev_ys.get(a[0], ()):
                if a[1] < y < b[1]:
                    cuts.add((a[0], y))
        else:
            lo = bisect.bisect_right(ev_xs, a[0])
            hi = bisect.bisect_left(ev_xs, b[0])
            for x in ev_xs[lo:hi]:
                cuts.add((x, y_at(a, b, x)))
        seg_cuts = set()
        for own, ga, gb in pieces:
            hit = segment_intersection(a, b, ga, gb)
            if hit is None:
                continue
            if hit[0] == "segment":
                raise GeometryError(
                    f"edge {ei} overlaps a sampled edge along a stretch")
            seg_cuts.add(hit[1])
            if contact_out is not None:
                contact_out.append((ei, own, hit[1]))
        if a[0] != b[0]:
            # an edge threading between two events on one line passes
            # through the degenerate cells there; sample the point itself
            for p in cuts:
                if p not in seg_cuts and p[1] not in ev_ys.get(p[0], ()):
                    slivers.append(p)
        cuts |= seg_cuts
        stops = [a] + sorted(cuts) + [b]
        for u, v in zip(stops, stops[1:]):
            if u == v:
                continue
            queries.append((_mid(u, v), "right"))
            label.append(ei)
        for p in slivers:
            queries.append((p, "right"))
            label.append(ei)
    out = {}
    if queries:
        for ei, cell in zip(label, PointLocator(td).locate_many(queries)):
            out.setdefault(cell, set()).add(ei)
    return {cell: sorted(eis) for cell, eis in out.items()}


def td_randomized(chains: ChainSet, params=None, seed=0, stats=None):
    """Decomposition and intersections of arbitrary chains by sampling.

    The seed steers only internal subdivision choices; the intersection
    list and the canonical decomposition are seed-independent.  Returns an
    IntersectResult over (chain id, edge index) pairs of the input.
    """
    p = params or RandomParams()
    st = stats if stats is not None else {}
    box = chains.bbox()
    edges = []
    owner = []
    markers = []
    for cid, ch in enumerate(chains.chains):
        if ch.num_edges == 0:
            markers.append((ch.points[0], cid))
        for i in range(ch.num_edges):
            a, b = ch.edge(i)
            if (b[0], b[1]) < (a[0], a[1]):
                a, b = b, a
            edges.append((a, b))
            owner.append((cid, i))
    pm = {}
    _shared_vertex_scan(chains, pm)
    _marker_scan(chains, markers, edges, owner, pm)
    st["n"] = chains.n
    st["h"] = chains.h
    st["fallbacks"] = 0
    st["levels"] = []
    if edges:
        _solve(list(range(len(edges))), edges, owner, chains, box, p,
               p.c + 1, seed, pm, st, len(edges) + 1)
    pairs, subdiv, splitp = _expand(chains, pm)
    td = _final_td(chains, subdiv, splitp, st)
    st["X"] = len(pairs)
    return IntersectResult(td, pairs, st)


def _shared_vertex_scan(chains, pm):
    """Note every point where vertices of distinct positions coincide."""
    at = {}
    for cid, ch in enumerate(chains.chains):
        for j, q in enumerate(ch.points):
            at.setdefault(q, []).append((cid, j))
    for q, occ in at.items():
        if len(occ) < 2:
            continue
        for cid, j in occ:
            ch = chains.chains[cid]
            m = ch.num_edges
            if m == 0:
                _note(pm, chains, q, ("v", cid))
            elif ch.closed:
                _note(pm, chains, q, (cid, j % m))
            else:
                _note(pm, chains, q, (cid, min(j, m - 1)))


def _marker_scan(chains, markers, edges, owner, pm):
    """Note single-vertex chains sitting on foreign edges."""
    for q, gcid in markers:
        for ei, (a, b) in enumerate(edges):
            if on_segment(q, a, b):
                _note(pm, chains, q, ("v", gcid))
                _note(pm, chains, q, owner[ei])


def _solve(ids, edges, owner, orig, box, p, level, seed, pm, st, parent_size):
    n_sub = len(ids)
    lg = math.log2(max(n_sub, 4))
    s = p.s if p.s is not None else max(2, math.ceil(lg))
    base = (level <= 0 or n_sub <= p.base_cutoff or n_sub >= parent_size
            or math.ceil(n_sub / s) >= n_sub)
    rec = {"n": n_sub, "level": level, "base": base, "fallback": False}
    st["levels"].append(rec)
    if base:
        _sweep_collect(ids, edges, owner, orig, box, pm)
        return
    r_ids = sample_edges(ids, s, seed)
    td_r = _r_decomposition(r_ids, edges, box)
    x_r = _harvest(td_r, owner, orig, pm)
    # every contact between an outside edge and the sample's geometry is
    # already in hand from the cutting pass; record it now so only
    # contacts clear of the sample are left to the recursion
    touches = []
    conf = _conflicts_of(td_r, set(r_ids), ids, edges, touches)
    for ei, gi, z in touches:
        s1, s2 = owner[ei], owner[gi]
        if not _structural(orig, s1, s2):
            _note(pm, orig, z, s1)
            _note(pm, orig, z, s2)
    adj = dual_of(td_r)
    total = sum(len(eis) * len(adj.get(cell, ()))
                for cell, eis in conf.items())
    biggest = max((len(eis) for eis in conf.values()), default=0)
    rec.update({"s": s, "sample": len(r_ids), "conflict_work": total,
                "max_conflict": biggest, "x_sample": x_r})
    if biggest > p.c8 * s * lg or total > p.c7 * (n_sub + x_r * s):
        # the sample drew a lopsided subdivision; solve this piece
        # directly rather than recursing on oversized conflict lists
        rec["fallback"] = True
        st["fallbacks"] += 1
        _sweep_collect(ids, edges, owner, orig, box, pm)
        return
    t_want = p.t if p.t is not None else max(4, math.ceil(lg ** 6))
    t = min(t_want, max(4, td_r.n_cells))
    reg = r_division(adj, t)[2]
    rec["t"] = t
    rec["regions"] = len(set(reg.values()))
    sub = {}
    for cell, eis in conf.items():
        sub.setdefault(reg[cell], set()).update(eis)
    # every sampled edge bounding a cell of the region joins its
    # subproblem, so contacts on the sample's own geometry surface deeper
    for cell in td_r.cells:
        bucket = sub.setdefault(reg[cell.id], set())
        for si in (cell.top_si, cell.bot_si):
            if si is not None:
                bucket.add(td_r.segs[si].owner)
    for rid in sorted(sub):
        child = sorted(sub[rid])
        if child:
            _solve(child, edges, owner, orig, box, p, level - 1,
                   (seed * SUBSEED + rid) % (2 ** 63), pm, st, n_sub)


def _harvest(td, owner, orig, pm):
    """Note the contacts of a decomposition of plain edges; returns the
    number of non-structural contact points found."""
    found = 0
    for o1, o2, q in td.contacts:
        s1, s2 = owner[o1], owner[o2]
        if _structural(orig, s1, s2):
            continue
        found += 1
        qg = sym_geom(q)
        _note(pm, orig, qg, s1)
        _note(pm, orig, qg, s2)
    return found


def _sweep_collect(ids, edges, owner, orig, box, pm):
    if ids:
        td = td_sweep([Seg.natural(*edges[ei], ei) for ei in ids], box)
        _harvest(td, owner, orig, pm)
