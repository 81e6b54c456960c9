"""Polygons with holes and plane straight-line graphs.

Validation, conversion to chain sets, Euler-walk chain extraction for
graphs, and triangulation built on top of the trapezoid decomposition:
each interior trapezoid contributes a diagonal between its left and
right event vertices, the resulting faces are x-monotone and fall to a
stack pass.  Collinear boundary runs are removed up front and restored
by splitting the finished triangles, so degenerate inputs still come
out as exactly n + 2h - 2 positive-area triangles.
"""

from functools import cmp_to_key

from .decomp import Seg, sym_geom, td_sweep
from .disjoint import td_disjoint
from .errors import (
    GeometryError,
    InvalidInputError,
    InvariantError,
    NotDisjointError,
)
from .geom import Chain, ChainSet, dir_cross, frame_box, orient, pt


def polygon_area2(points):
    """Doubled signed area of a closed vertex cycle (positive if ccw)."""
    s = 0
    m = len(points)
    for i in range(m):
        a = points[i]
        b = points[(i + 1) % m]
        s += a[0] * b[1] - b[0] * a[1]
    return s


def point_in_polygon(p, chain):
    """Strict interior test against a closed chain, exact arithmetic.

    Boundary points report False.
    """
    if not chain.closed:
        raise InvalidInputError("point_in_polygon needs a closed chain")
    x, y = p
    inside = False
    pts = chain.points
    m = len(pts)
    for i in range(m):
        a = pts[i]
        b = pts[(i + 1) % m]
        if orient(a, b, p) == 0:
            lo, hi = (a, b) if a <= b else (b, a)
            if lo <= p <= hi:
                return False
        if (a[1] > y) != (b[1] > y):
            # p is left of the edge at height y exactly when the signed
            # area keeps the sign of the upward direction
            d = (b[0] - a[0]) * (y - a[1]) - (x - a[0]) * (b[1] - a[1])
            if (d > 0) == (b[1] > a[1]):
                inside = not inside
    return inside


def _closed_chain(obj, what):
    if isinstance(obj, Chain):
        if not obj.closed:
            raise InvalidInputError(f"{what} must be a closed chain")
        return obj
    return Chain(list(obj), closed=True)


def _oriented(chain, ccw, what):
    a2 = polygon_area2(chain.points)
    if a2 == 0:
        raise InvalidInputError(f"{what} has zero area")
    if (a2 > 0) != ccw:
        chain = Chain(list(reversed(chain.points)), closed=True)
    return chain


class PolygonWithHoles:
    """An outer boundary with disjoint holes strictly inside it.

    The outer chain is stored counterclockwise and every hole clockwise;
    inputs with the opposite orientation are reversed.  Construction
    checks simplicity, pairwise disjointness and containment and raises
    InvalidInputError for anything that is not a valid polygon.
    """

    def __init__(self, outer, holes=()):
        self.outer = _oriented(_closed_chain(outer, "outer boundary"), True,
                               "outer boundary")
        self.holes = [
            _oriented(_closed_chain(hl, f"hole {i}"), False, f"hole {i}")
            for i, hl in enumerate(holes)
        ]
        try:
            td_disjoint(self.chain_set())
        except NotDisjointError as e:
            raise InvalidInputError(f"boundaries intersect: {e}") from e
        except GeometryError as e:
            raise InvalidInputError(f"boundary is not simple: {e}") from e
        for i, hl in enumerate(self.holes):
            if not point_in_polygon(hl.points[0], self.outer):
                raise InvalidInputError(f"hole {i} lies outside the outer boundary")
            for j, other in enumerate(self.holes):
                if i != j and point_in_polygon(hl.points[0], other):
                    raise InvalidInputError(f"hole {i} is nested inside hole {j}")

    @property
    def h(self):
        return len(self.holes)

    @property
    def n(self):
        return len(self.outer.points) + sum(len(h.points) for h in self.holes)

    def chain_set(self):
        return ChainSet([self.outer] + list(self.holes))


def holes_to_chains(poly):
    """The polygon's boundaries as h + 1 disjoint closed chains."""
    return poly.chain_set()


def _angle_cmp_around(v):
    def cmp(w1, w2):
        d1 = (w1[0] - v[0], w1[1] - v[1])
        d2 = (w2[0] - v[0], w2[1] - v[1])
        h1 = 0 if (d1[1] > 0 or (d1[1] == 0 and d1[0] > 0)) else 1
        h2 = 0 if (d2[1] > 0 or (d2[1] == 0 and d2[0] > 0)) else 1
        if h1 != h2:
            return -1 if h1 < h2 else 1
        return -dir_cross(d1, d2)

    return cmp


def graph_to_chains(vertices, edges):
    """Walk a plane straight-line graph into one chain per component.

    Components whose degrees are all even are walked as one closed tour
    opened at their smallest vertex; components with odd vertices walk a
    doubled copy of every edge, so trees traverse each edge twice.
    Isolated vertices become single-vertex chains.  Edges may share only
    endpoints; crossings, overlaps or touches are rejected.
    """
    pts = [pt(x, y) for x, y in vertices]
    if len(set(pts)) != len(pts):
        raise InvalidInputError("duplicate vertices in graph")
    seen = set()
    for k, (i, j) in enumerate(edges):
        if not (0 <= i < len(pts) and 0 <= j < len(pts)):
            raise InvalidInputError(f"edge {k} references a missing vertex")
        if i == j:
            raise InvalidInputError(f"edge {k} is a loop")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise InvalidInputError(f"edge {k} duplicates another edge")
        seen.add(key)

    used_vertex = set()
    for i, j in edges:
        used_vertex.add(i)
        used_vertex.add(j)
    segs = [Seg.natural(pts[i], pts[j], k) for k, (i, j) in enumerate(edges)]
    for v in range(len(pts)):
        if v not in used_vertex:
            segs.append(Seg.marker(pts[v], ("v", v)))
    if segs:
        try:
            td = td_sweep(segs, frame_box(pts))
        except GeometryError as e:
            raise InvalidInputError(f"graph edges cross or overlap: {e}") from e
        for o1, o2, p in td.contacts:
            p_geom = sym_geom(p)
            for o in (o1, o2):
                if isinstance(o, int):
                    i, j = edges[o]
                    if p_geom != pts[i] and p_geom != pts[j]:
                        raise InvalidInputError(
                            f"edge {o} is touched at {p_geom}, not a shared endpoint"
                        )

    parent = list(range(len(pts)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        parent[find(i)] = find(j)

    comp_edges = {}
    for k, (i, j) in enumerate(edges):
        comp_edges.setdefault(find(i), []).append(k)
    comp_all = {}
    for v in range(len(pts)):
        comp_all.setdefault(find(v), []).append(v)

    chains = []
    for root in sorted(comp_all, key=lambda r: min(comp_all[r])):
        eids = comp_edges.get(root)
        if not eids:
            chains.append(Chain([pts[comp_all[root][0]]]))
            continue
        deg = {}
        for k in eids:
            i, j = edges[k]
            deg[i] = deg.get(i, 0) + 1
            deg[j] = deg.get(j, 0) + 1
        copies = 2 if any(d % 2 for d in deg.values()) else 1
        adj = {v: [] for v in deg}
        for k in eids:
            i, j = edges[k]
            for c in range(copies):
                adj[i].append((j, (k, c)))
                adj[j].append((i, (k, c)))
        for v in adj:
            adj[v].sort(key=lambda e: ((e[1][0], e[1][1]),))
            adj[v].sort(key=cmp_to_key(
                lambda e1, e2, _v=v: _angle_cmp_around(pts[_v])(
                    pts[e1[0]], pts[e2[0]])))
        start = min(deg)
        ptr = {v: 0 for v in adj}
        used = set()
        stack = [start]
        walk = []
        while stack:
            v = stack[-1]
            lst = adj[v]
            while ptr[v] < len(lst) and lst[ptr[v]][1] in used:
                ptr[v] += 1
            if ptr[v] < len(lst):
                to, key = lst[ptr[v]]
                used.add(key)
                stack.append(to)
            else:
                walk.append(stack.pop())
        walk.reverse()
        if len(used) != copies * len(eids):
            raise InvariantError("graph walk missed edges")
        chains.append(Chain([pts[v] for v in walk]))
    return ChainSet(chains)


def _und(a, b):
    return (a, b) if a <= b else (b, a)


def _faces_of(edge_pairs):
    """Faces of the subdivision, walked with the interior on the left."""
    nbr = {}
    for a, b in edge_pairs:
        nbr.setdefault(a, []).append(b)
        nbr.setdefault(b, []).append(a)
    for v, lst in nbr.items():
        lst.sort(key=cmp_to_key(_angle_cmp_around(v)))
    pos = {}
    for v, lst in nbr.items():
        for i, w in enumerate(lst):
            if (v, w) in pos:
                raise InvariantError("coincident directions around a vertex")
            pos[(v, w)] = i
    faces = []
    visited = set()
    for a, b in sorted(edge_pairs):
        for he in ((a, b), (b, a)):
            if he in visited:
                continue
            orbit = []
            cur = he
            while cur not in visited:
                visited.add(cur)
                orbit.append(cur)
                u, v = cur
                lst = nbr[v]
                w = lst[(pos[(v, u)] - 1) % len(lst)]
                cur = (v, w)
            faces.append(orbit)
    return faces


def _drop_flats(cycle, runs_out):
    """Remove straight-angle vertices from a cyclic boundary.

    Removed runs are recorded under their surviving neighbor pair so the
    finished triangles can be split back at the removed vertices.
    """
    out = []
    runs = {}

    def collapse(a, mid, b):
        runs[(a, b)] = runs.pop((a, mid), []) + [mid] + runs.pop((mid, b), [])

    for v in cycle:
        out.append(v)
        while len(out) >= 3 and orient(out[-3], out[-2], out[-1]) == 0:
            mid = out.pop(-2)
            collapse(out[-2], mid, out[-1])
    changed = True
    while changed and len(out) > 3:
        changed = False
        if orient(out[-2], out[-1], out[0]) == 0:
            mid = out.pop()
            collapse(out[-1], mid, out[0])
            changed = True
        elif orient(out[-1], out[0], out[1]) == 0:
            mid = out.pop(0)
            collapse(out[-1], mid, out[0])
            changed = True
    if len(out) < 3:
        raise InvariantError("monotone piece collapsed to a line")
    for (a, b), run in runs.items():
        key = _und(a, b)
        if key != (a, b):
            run = list(reversed(run))
        prev = runs_out.get(key)
        if prev is not None and prev != run:
            raise InvariantError("conflicting collinear runs on one chord")
        runs_out[key] = run
    return out


def _emit(a, b, c, out):
    o = orient(a, b, c)
    if o == 0:
        raise InvariantError("degenerate triangle emitted")
    out.append((a, b, c) if o > 0 else (a, c, b))


def _triangulate_monotone(cycle, runs_out, out):
    """Stack triangulation of one x-monotone ccw face boundary."""
    cleaned = _drop_flats(cycle, runs_out)
    m = len(cleaned)
    if m == 3:
        _emit(cleaned[0], cleaned[1], cleaned[2], out)
        return
    kmin = min(range(m), key=lambda i: cleaned[i])
    kmax = max(range(m), key=lambda i: cleaned[i])
    side = {}
    i = kmin
    while i != kmax:
        i = (i + 1) % m
        if i != kmax:
            side[cleaned[i]] = 0  # lower chain: ccw runs min -> max below
    i = kmax
    while i != kmin:
        i = (i + 1) % m
        if i != kmin:
            side[cleaned[i]] = 1
    merged = sorted(cleaned)
    st = [merged[0], merged[1]]
    for j in range(2, m - 1):
        v = merged[j]
        sv = side[v]
        if sv != side.get(st[-1], sv):
            for i in range(len(st) - 1):
                _emit(st[i], st[i + 1], v, out)
            st = [st[-1], v]
        else:
            top = st.pop()
            while st:
                c = orient(st[-1], top, v)
                if (sv == 0 and c > 0) or (sv == 1 and c < 0):
                    _emit(st[-1], top, v, out)
                    top = st.pop()
                else:
                    break
            st.append(top)
            st.append(v)
    v = merged[-1]
    for i in range(len(st) - 1):
        _emit(st[i], st[i + 1], v, out)


def _apply_splits(tris, runs):
    if not runs:
        return tris
    work = list(tris)
    done = []
    while work:
        tri = work.pop()
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            key = _und(a, b)
            run = runs.get(key)
            if run is not None:
                seq = [key[0]] + run + [key[1]]
                if a != key[0]:
                    seq.reverse()
                c = tri[(k + 2) % 3]
                sub = []
                for i in range(len(seq) - 1):
                    _emit(seq[i], seq[i + 1], c, sub)
                work.extend(sub)
                break
        else:
            done.append(tri)
    return done


def triangulate(poly, params=None):
    """Triangles partitioning the polygon interior, exactly n + 2h - 2.

    Every interior trapezoid of the decomposition proposes the diagonal
    between its left and right event vertices; the diagonals carve the
    interior into x-monotone faces, each triangulated by the standard
    two-chain stack pass.  Triangle vertices are input vertices only and
    every triangle comes out counterclockwise.
    """
    chains = holes_to_chains(poly)
    td = td_disjoint(chains, params)
    interior_left = set()
    poly_edges = set()
    for c in chains.chains:
        for a, b in c.edges():
            interior_left.add((a, b))
            poly_edges.add(_und(a, b))
    diagonals = set()
    for cell in td.cells:
        if cell.bot_si is None:
            continue
        cid, ei = td.segs[cell.bot_si].owner
        a, b = chains.chains[cid].edge(ei)
        if a[0] >= b[0]:
            # the boundary runs leftward here, so above is exterior
            continue
        if cell.left_ev is None or cell.right_ev is None:
            raise InvariantError("interior cell without event vertices")
        d = _und(sym_geom(cell.left_ev), sym_geom(cell.right_ev))
        if d not in poly_edges:
            diagonals.add(d)
    tris = []
    runs = {}
    for orbit in _faces_of(poly_edges | diagonals):
        inside = any(he in interior_left or _und(*he) in diagonals
                     for he in orbit)
        if not inside:
            continue
        cycle = [u for u, _ in orbit]
        if polygon_area2(cycle) <= 0:
            raise InvariantError("interior face walked with negative area")
        _triangulate_monotone(cycle, runs, tris)
    tris = _apply_splits(tris, runs)
    canon = []
    for a, b, c in tris:
        k = min(range(3), key=lambda i: (a, b, c)[i])
        t = (a, b, c)
        canon.append((t[k], t[(k + 1) % 3], t[(k + 2) % 3]))
    canon.sort()
    return canon
