"""Trapezoid decomposition of many pairwise disjoint chains.

The driver avoids one global sweep over the whole figure.  It groups chains
by the nodes of an interval tree, decomposes each group against its stab
line, and divides those decompositions into regions of bounded size.  The
segments bounding two regions, plus a marker per chain, form a small net
whose decomposition is divided once more.  Chains are then cut where they
cross the vertical sides of the second division, each piece is decomposed
inside its own region, and the per-region walls are stitched into the final
decomposition of the original edges.

Violations of the input contract (a chain touching or crossing another, a
chain touching itself) surface as NotDisjointError or GeometryError from
whichever stage first sees the shared point.
"""

from __future__ import annotations

import math
import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .connected import segs_of_chains
from .decomp import Seg, assemble, nat, restrict, sym_geom, td_sweep
from .division import dual_of, locate_regions, r_division, vertical_sides
from .division import seg_sides as region_seg_sides
from .errors import GeometryError, InvariantError, NotDisjointError
from .geom import ChainSet, adjacent_edges, on_segment, y_at
from .jordan import build_interval_tree, node_figure


@dataclass
class AlgorithmParams:
    """Tuning knobs of the disjoint-chain driver.

    s: cell budget per region of the first (per-node) division.
    t: cell budget per region of the second (net) division.
    base_cutoff: inputs with at most this many vertices, or a single
    chain, are decomposed by one direct sweep.
    tolerant: distinct chains may share isolated vertices.
    """

    s: int | None = None
    t: int | None = None
    base_cutoff: int = 24
    tolerant: bool = False


def _pick_s(n, override):
    if override is not None:
        if override < 1:
            raise ValueError("s must be positive")
        return override
    lg = math.log2(max(n, 2))
    return max(4, math.ceil(lg * lg))


def _pick_t(n, net_cells, override):
    if override is not None:
        if override < 1:
            raise ValueError("t must be positive")
        return override
    lg = math.log2(max(n, 2))
    return max(4, min(math.ceil(lg**8), net_cells))


def _norm(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


# ---------------------------------------------------------------------------
# input screening and contact classification


def _vertex_map(chains):
    """{point: set of chain ids}; rejects repeated vertices inside a chain.

    An open chain may repeat its first vertex as its last (a cycle cut at
    that vertex); every other repetition makes the chain non-simple.
    """
    out = {}
    for cid, c in enumerate(chains.chains):
        seen = {}
        for idx, p in enumerate(c.points):
            if p in seen:
                first = seen[p]
                last = len(c.points) - 1
                if c.closed or first != 0 or idx != last:
                    raise GeometryError(
                        f"chain {cid} repeats vertex {p}: not simple"
                    )
            else:
                seen[p] = idx
            out.setdefault(p, set()).add(cid)
    return out


def _shared_vertex_screen(vert_cids, tolerant):
    if tolerant:
        return
    for p in sorted(vert_cids):
        cids = vert_cids[p]
        if len(cids) > 1:
            c1, c2 = sorted(cids)[:2]
            raise NotDisjointError(("chain", c1), ("chain", c2), p)


def _vertical_screen(chains, vert_cids):
    """Overlaps among vertical edges and vertices inside them, per x."""
    by_x = {}
    for cid, ei, a, b in chains.edges():
        if a[0] == b[0]:
            lo, hi = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
            by_x.setdefault(a[0], []).append((lo, hi, cid, ei))
    verts_by_x = {}
    for p in vert_cids:
        verts_by_x.setdefault(p[0], []).append(p[1])
    for x in sorted(by_x):
        ivs = sorted(by_x[x])
        best_hi, best_at = None, None
        for lo, hi, cid, ei in ivs:
            if best_hi is not None and lo < best_hi:
                ocid, oei = best_at
                if ocid == cid:
                    raise GeometryError(
                        f"chain {cid} overlaps itself on x={x}: not simple"
                    )
                raise NotDisjointError((ocid, oei), (cid, ei), (x, lo))
            if best_hi is None or hi > best_hi:
                best_hi, best_at = hi, (cid, ei)
        ys = sorted(verts_by_x.get(x, ()))
        for lo, hi, cid, ei in ivs:
            for k in range(bisect_right(ys, lo), len(ys)):
                y = ys[k]
                if y >= hi:
                    break
                if y <= lo:
                    continue
                for pcid in sorted(vert_cids[(x, y)]):
                    if pcid != cid:
                        raise NotDisjointError(
                            ("chain", pcid), (cid, ei), (x, y)
                        )
                    raise GeometryError(
                        f"chain {cid} vertex {(x, y)} lies inside its own "
                        f"edge: not simple"
                    )


def _owner_chain(owner):
    """Chain id for a chain-edge or chain-marker owner, else None."""
    if isinstance(owner, tuple) and owner and isinstance(owner[0], int):
        return owner[0]
    return None


def _is_vertex_of(chains, owner, p_geom):
    """Whether p is an endpoint of the original edge behind this owner."""
    cid = owner[0]
    chain = chains.chains[cid]
    if chain.num_edges == 0:
        return p_geom == chain.points[0]
    a, b = chain.edge(owner[1])
    return p_geom == a or p_geom == b


def _classify(td, chains, vert_cids, tolerant):
    """Raise on any recorded contact that the input contract forbids."""
    for o1, o2, p in td.contacts:
        p_geom = sym_geom(p)
        kinds = []
        for o in (o1, o2):
            cid = _owner_chain(o)
            if cid is not None:
                kinds.append(("edge", cid, o))
            elif o[0] in ("m", "t"):
                kinds.append(("mark", None, o))
            else:
                kinds.append((None, None, o))  # joiner: interiors are clean
        if kinds[0][0] is None or kinds[1][0] is None:
            continue
        k1, c1, ow1 = kinds[0]
        k2, c2, ow2 = kinds[1]
        if k1 == "mark" and k2 == "mark":
            continue
        if k1 == "mark" or k2 == "mark":
            mk, (ek, ecid, eow) = (
                (kinds[0], kinds[1]) if k1 == "mark" else (kinds[1], kinds[0])
            )
            cids_p = vert_cids.get(p_geom, set())
            if ecid in cids_p and _is_vertex_of(chains, eow, p_geom):
                continue  # marker sits on a vertex of that very edge
            others = cids_p - {ecid}
            if not others:
                raise GeometryError(
                    f"chain {ecid} touches itself at {p_geom}: not simple"
                )
            raise NotDisjointError(
                ("chain", min(others)), (eow[0], eow[1]), p_geom
            )
        if c1 == c2:
            chain = chains.chains[c1]
            if ow1[1] == ow2[1] or adjacent_edges(chain, ow1[1], ow2[1]):
                continue
            raise GeometryError(
                f"chain {c1} touches itself at {p_geom}: not simple"
            )
        v1 = _is_vertex_of(chains, ow1, p_geom)
        v2 = _is_vertex_of(chains, ow2, p_geom)
        if tolerant and v1 and v2:
            continue
        raise NotDisjointError((ow1[0], ow1[1]), (ow2[0], ow2[1]), p_geom)


def _sweep_checked(segs, box, chains, vert_cids, tolerant):
    try:
        td = td_sweep(segs, box)
    except GeometryError as err:
        owners = getattr(err, "owners", None)
        if owners is not None:
            c1 = _owner_chain(owners[0])
            c2 = _owner_chain(owners[1])
            if c1 is not None and c2 is not None:
                if c1 != c2:
                    raise NotDisjointError(owners[0], owners[1]) from err
                raise GeometryError(
                    f"chain {c1} overlaps itself: not simple"
                ) from err
        raise
    _classify(td, chains, vert_cids, tolerant)
    return td


# ---------------------------------------------------------------------------
# cutting chains at the sides of the second division


class _XIndex:
    """Points or intervals bucketed by x, with sorted-x range scans."""

    def __init__(self, items):
        # items: iterable of (x, payload)
        self.by_x = {}
        for x, payload in items:
            self.by_x.setdefault(x, []).append(payload)
        self.xs = sorted(self.by_x)

    def x_range(self, xlo, xhi):
        i = bisect_left(self.xs, xlo)
        j = bisect_right(self.xs, xhi)
        return self.xs[i:j]


def _edge_cut_points(chains, portal_ix, vr_ix):
    """Cut points on every edge: crossings with the vertical sides of the
    net division, and net vertices the edge passes through.

    Returns ({(cid, ei): sorted interior points}, {(cid, vi)}, new_points)
    where the second set marks vertices that are piece boundaries and
    new_points are the distinct cut points that are not chain vertices.
    """
    interior = {}
    vertex_marks = set()
    new_points = set()

    def note(cid, ei, m, a, b, pt):
        px, py = _norm(pt[0]), _norm(pt[1])
        pt = (px, py)
        if pt == a:
            vertex_marks.add((cid, ei))
            return
        if pt == b:
            vertex_marks.add((cid, (ei + 1) % m if m else 0))
            return
        interior.setdefault((cid, ei), set()).add(pt)
        new_points.add(pt)

    for cid, ei, a, b in chains.edges():
        m = chains.chains[cid].num_edges
        if a[0] == b[0]:
            x = a[0]
            ylo, yhi = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
            for lo, hi in portal_ix.by_x.get(x, ()):
                ov_lo, ov_hi = max(lo, ylo), min(hi, yhi)
                if ov_lo <= ov_hi:
                    note(cid, ei, m, a, b, (x, ov_lo))
                    note(cid, ei, m, a, b, (x, ov_hi))
            for y in vr_ix.by_x.get(x, ()):
                if ylo <= y <= yhi:
                    note(cid, ei, m, a, b, (x, y))
            continue
        xlo, xhi = (a[0], b[0]) if a[0] <= b[0] else (b[0], a[0])
        for x in portal_ix.x_range(xlo, xhi):
            y = y_at(a, b, x)
            for lo, hi in portal_ix.by_x[x]:
                if lo < y < hi:
                    note(cid, ei, m, a, b, (x, y))
                    break
        for x in vr_ix.x_range(xlo, xhi):
            for y in vr_ix.by_x[x]:
                if on_segment((x, y), a, b):
                    note(cid, ei, m, a, b, (x, y))
    return (
        {ke: sorted(v) for ke, v in interior.items()},
        vertex_marks,
        new_points,
    )


def _cut_pieces(chains, interior, vertex_marks):
    """Split every chain at its cut points into region-confined pieces.

    Returns a list of (cid, rep_point, [Seg ...]) where rep_point lies on
    the piece away from any region side, plus the count of sub-segments.
    """
    pieces = []
    n_subs = 0

    def mid(a, b):
        return ((a[0] + b[0]) / Fraction(2), (a[1] + b[1]) / Fraction(2))

    for cid, chain in enumerate(chains.chains):
        if chain.num_edges == 0:
            p = chain.points[0]
            pieces.append((cid, p, [Seg.marker(p, (cid, 0))]))
            continue
        subs = []  # (a, b, owner, a_is_boundary)
        for ei in range(chain.num_edges):
            a, b = chain.edge(ei)
            cuts = interior.get((cid, ei), ())
            if cuts:
                dx, dy = b[0] - a[0], b[1] - a[1]
                cuts = sorted(
                    cuts, key=lambda q: (q[0] - a[0]) * dx + (q[1] - a[1]) * dy
                )
                ks = [a, *cuts, b]
                for k in range(len(ks) - 1):
                    subs.append(
                        (
                            ks[k],
                            ks[k + 1],
                            (cid, ei, k),
                            k > 0 or (cid, ei) in vertex_marks,
                        )
                    )
            else:
                subs.append((a, b, (cid, ei), (cid, ei) in vertex_marks))
        n_subs += len(subs)
        if not chain.closed:
            bounds = [k for k, s in enumerate(subs) if s[3] and k > 0]
            runs = []
            prev = 0
            for k in bounds:
                runs.append(subs[prev:k])
                prev = k
            runs.append(subs[prev:])
        else:
            first = next((k for k, s in enumerate(subs) if s[3]), None)
            if first is None:
                runs = [subs]
            else:
                subs = subs[first:] + subs[:first]
                runs = []
                prev = 0
                for k in range(1, len(subs)):
                    if subs[k][3]:
                        runs.append(subs[prev:k])
                        prev = k
                runs.append(subs[prev:])
        for run in runs:
            a, b = run[0][0], run[0][1]
            segs = [
                Seg(nat(sa), nat(sb), *_carrier(chains, ow), ow)
                for sa, sb, ow, _ in run
            ]
            pieces.append((cid, mid(a, b), segs))
    return pieces, n_subs


def _carrier(chains, owner):
    a, b = chains.chains[owner[0]].edge(owner[1])
    return a, b


# ---------------------------------------------------------------------------
# the driver


def td_disjoint(chains: ChainSet, params: AlgorithmParams | None = None,
                stats: dict | None = None):
    """Trapezoid decomposition of a set of pairwise disjoint chains.

    The result equals td_sweep over all chain edges (markers included for
    single-vertex chains) but is built from per-region decompositions.
    Raises NotDisjointError when two chains share a point (unless
    params.tolerant allows a shared isolated vertex) and GeometryError
    when a chain is not simple.
    """
    if params is None:
        params = AlgorithmParams()
    if stats is None:
        stats = {}
    seconds = stats.setdefault("seconds", {})

    t0 = time.perf_counter()
    vert_cids = _vertex_map(chains)
    _shared_vertex_screen(vert_cids, params.tolerant)
    _vertical_screen(chains, vert_cids)
    seconds["screen"] = time.perf_counter() - t0

    final_segs = segs_of_chains(chains, markers=True)
    box = chains.bbox()
    n, h = chains.n, chains.h
    stats.update(n=n, h=h)

    if h <= 1 or n <= params.base_cutoff:
        td = _sweep_checked(final_segs, box, chains, vert_cids, params.tolerant)
        stats.update(base_case=True, cut_points=0, n_prime=n, h_prime=h)
        return td
    stats["base_case"] = False

    try:
        return _pipeline(
            chains, params, stats, seconds, final_segs, box, vert_cids
        )
    except InvariantError:
        # A structural failure usually means the input broke the disjoint
        # contract in a way the local checks missed; one direct sweep
        # either raises the precise violation or confirms an engine bug.
        _sweep_checked(final_segs, box, chains, vert_cids, params.tolerant)
        raise


def _pipeline(chains, params, stats, seconds, final_segs, box, vert_cids):
    n, h = chains.n, chains.h
    tolerant = params.tolerant
    s = _pick_s(n, params.s)

    # Step 1: per-node decompositions and their divisions.
    t0 = time.perf_counter()
    root, nodes = build_interval_tree(chains)
    r_edges = set()
    for node in nodes:
        if not node.cids:
            continue
        segs_v, _ = node_figure(chains, node, tolerant)
        td_full = _sweep_checked(segs_v, box, chains, vert_cids, tolerant)
        keep = [
            si
            for si, sg in enumerate(td_full.segs)
            if _owner_chain(sg.owner) is not None
        ]
        td_v = restrict(td_full, keep)
        _, _, region_of = r_division(dual_of(td_v), s)
        for sides in region_seg_sides(td_v, region_of).values():
            for si in sides:
                ow = td_v.segs[si].owner
                r_edges.add((ow[0], ow[1]))
    seconds["nodes"] = time.perf_counter() - t0

    # Step 2: the net = boundary edges plus a marker at every point that
    # will need a wall target (no segment ends there from the left), and
    # at every chain start.
    t0 = time.perf_counter()
    has_incoming = {sg.b for sg in final_segs if not sg.is_marker}
    pts = {sg.a for sg in final_segs} | {sg.b for sg in final_segs}
    needed = sorted(p for p in pts if p not in has_incoming)
    marker_pts = {sym_geom(p) for p in needed}
    marker_pts.update(c.points[0] for c in chains.chains)
    net_segs = [
        Seg.natural(*_carrier(chains, ow), ow) for ow in sorted(r_edges)
    ]
    net_segs.extend(
        Seg.marker(p, ("m", j)) for j, p in enumerate(sorted(marker_pts))
    )
    td_net = _sweep_checked(net_segs, box, chains, vert_cids, tolerant)
    t = _pick_t(n, len(td_net.cells), params.t)
    _, _, region_net = r_division(dual_of(td_net), t)
    portals = vertical_sides(td_net, region_net)
    seconds["net"] = time.perf_counter() - t0

    # Step 3: cut chains at portal crossings and at net vertices.
    t0 = time.perf_counter()
    portal_ix = _XIndex((pt[0], (lo, hi)) for pt, lo, hi, _, _ in portals)
    vr_ix = _XIndex(
        (q[0], q[1]) for q in {sym_geom(rec[0]) for rec in td_net.ev_records}
    )
    for x in vr_ix.by_x:
        vr_ix.by_x[x].sort()
    interior, vertex_marks, new_points = _edge_cut_points(
        chains, portal_ix, vr_ix
    )
    split_net_edges = set(interior) & r_edges
    if split_net_edges:
        raise InvariantError(f"net edge split by a cut: {split_net_edges}")
    pieces, n_subs = _cut_pieces(chains, interior, vertex_marks)
    stats.update(
        s=s,
        t=t,
        tree_nodes=len(nodes),
        net_edges=len(r_edges),
        net_cells=len(td_net.cells),
        portals=len(portals),
        cut_points=len(new_points),
        n_prime=n + len(new_points),
        h_prime=h + len(new_points),
        pieces=len(pieces),
        piece_segments=n_subs,
    )
    seconds["cut"] = time.perf_counter() - t0

    # Step 4: assign pieces to regions and decompose each region's share.
    t0 = time.perf_counter()
    reps = [nat(rep) for _, rep, _ in pieces]
    regions_of_reps = locate_regions(td_net, region_net, reps, bias="right")
    harvest_in = {}
    for (cid, _, segs), rid in zip(pieces, regions_of_reps):
        if rid is None:
            raise InvariantError("piece representative outside the frame")
        if (
            len(segs) == 1
            and len(segs[0].owner) == 2
            and segs[0].owner in r_edges
        ):
            continue  # net edges enter every region they bound below
        harvest_in.setdefault(rid, []).extend(segs)
    for c in td_net.cells:
        rid = region_net[c.id]
        for si in (c.bot_si, c.top_si):
            if si is not None:
                sg = td_net.segs[si]
                harvest_in.setdefault(rid, [])
                if sg not in harvest_in[rid]:
                    harvest_in[rid].append(sg)

    rec_at = {rec[0]: rec for rec in td_net.ev_records}
    flanks = {}
    seen_t = set()
    for j, p in enumerate(needed):
        rec = rec_at.get(p)
        if rec is None:
            raise InvariantError(f"no net event at target point {p}")
        flanks[p] = sorted({region_net[c] for c in rec[2]})
        for rid in flanks[p]:
            if (rid, p) not in seen_t:
                seen_t.add((rid, p))
                harvest_in.setdefault(rid, []).append(
                    Seg.marker(sym_geom(p), ("t", j))
                )
    harvest = {
        rid: _sweep_checked(harvest_in[rid], box, chains, vert_cids, tolerant)
        for rid in sorted(harvest_in)
    }
    seconds["harvest"] = time.perf_counter() - t0

    # Step 5: wall targets at the needed points, then one stitch pass.
    t0 = time.perf_counter()
    edge_index = {
        sg.owner: si for si, sg in enumerate(final_segs) if not sg.is_marker
    }
    targets = {}
    for p in needed:
        best = None
        for rid in flanks[p]:
            w = harvest[rid].walls.get(p)
            if w is None:
                raise InvariantError(f"region {rid} lost target point {p}")
            dsi, dy = w[0], w[1]
            owner = None if dsi is None else harvest_in[rid][dsi].owner
            if best is None or dy > best[0]:
                best = (dy, owner)
        targets[p] = (
            None if best[1] is None else edge_index[(best[1][0], best[1][1])]
        )
    td = assemble(final_segs, targets, box)
    _classify(td, chains, vert_cids, tolerant)
    seconds["assemble"] = time.perf_counter() - t0
    return td


def simplicity_test(chain) -> bool:
    """Whether a single chain is simple (no self-contact off adjacency)."""
    cs = ChainSet([chain])
    try:
        _vertex_map(cs)
        td = td_sweep(segs_of_chains(cs, markers=True))
    except GeometryError:
        return False
    for o1, o2, _ in td.contacts:
        if o1[1] != o2[1] and not adjacent_edges(chain, o1[1], o2[1]):
            return False
    return True
