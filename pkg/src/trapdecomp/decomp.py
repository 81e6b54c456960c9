"""Trapezoidal decompositions with two independent construction engines.

A decomposition is computed inside an explicit bounding frame.  Cells are
trapezoids bounded below/above by input segments (or the frame) and
left/right by vertical walls through event points (or the frame sides).

Degeneracies are handled symbolically: every point is treated as sheared by
x' = x + eps*y, so distinct points never share a vertical line.  A point is
represented by a triple (kx, ky, y): the sheared vertical line through it is
identified by (kx, ky), and y is its actual height.  Ordinary input points
have ky == y.  Derived points produced by cutting a segment where the wall
through some vertex w crosses it carry ky = w_y, which places them on w's
sheared line while keeping exact geometric coordinates.  Everything on one
sheared line at one height is identified as a single point (the eps -> 0
limit)."""

from __future__ import annotations

import bisect
import heapq
from fractions import Fraction
from functools import cmp_to_key

from .errors import GeometryError, InvalidInputError, InvariantError
from .geom import segment_intersection, sign, y_at

OUTSIDE = "outside"


def nat(p):
    """Symbolic triple for an ordinary geometric point."""
    return (p[0], p[1], p[1])


def sym_key(sp):
    """The sheared vertical line through a symbolic point."""
    return (sp[0], sp[1])


def sym_geom(sp):
    """Geometric coordinates of a symbolic point."""
    return (sp[0], sp[2])


def _clip(v, lo, hi):
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def _unfrac(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


class Seg:
    """A (piece of a) segment with symbolic endpoints and an exact carrier.

    a, b: symbolic endpoint triples, a <= b in event order.
    ca, cb: two points spanning the supporting line with full original
    precision; for pieces of a cut edge these stay the original endpoints,
    so heights are always computed on the original line.
    owner: caller-chosen hashable identity, preserved through cutting.
    A marker (a == b) is a zero-length placeholder that forces an event.
    """

    __slots__ = ("a", "b", "ca", "cb", "owner")

    def __init__(self, a, b, ca, cb, owner):
        if b < a:
            a, b = b, a
        self.a = a
        self.b = b
        if ca != cb:
            if ca[0] == cb[0]:
                if ca[1] > cb[1]:
                    ca, cb = cb, ca
            elif ca[0] > cb[0]:
                ca, cb = cb, ca
        self.ca = ca
        self.cb = cb
        self.owner = owner

    @classmethod
    def natural(cls, p, q, owner):
        return cls(nat(p), nat(q), p, q, owner)

    @classmethod
    def marker(cls, p, owner):
        return cls(nat(p), nat(p), p, p, owner)

    @property
    def is_marker(self):
        return self.a == self.b

    @property
    def vcar(self):
        # Vertical supporting line (marker excluded).
        return self.ca != self.cb and self.ca[0] == self.cb[0]

    @property
    def is_wall(self):
        return self.a != self.b and sym_key(self.a) == sym_key(self.b)

    def height_at(self, k):
        """Exact height where this segment crosses the sheared line k."""
        if self.ca == self.cb:
            raise InvariantError("height of a zero-length segment")
        if self.ca[0] == self.cb[0]:
            return _clip(k[1], self.a[2], self.b[2])
        return y_at(self.ca, self.cb, k[0])

    def rel(self, sp):
        """Sign of sp's height minus this segment's height at sp's line."""
        return sign(sp[2] - self.height_at(sym_key(sp)))

    def out_dir(self):
        """Direction of travel toward increasing event order."""
        if self.ca[0] == self.cb[0]:
            return (0, 1)
        return (self.cb[0] - self.ca[0], self.cb[1] - self.ca[1])

    def __repr__(self):
        return f"Seg({self.owner}: {self.a}..{self.b})"


def _overlap_error(s1, s2):
    err = GeometryError(f"overlapping segments {s1.owner} and {s2.owner}")
    err.owners = (s1.owner, s2.owner)
    return err


def seg_future_cross(s1, s2):
    """Interior crossing point of two segments, or None.

    Crossings at endpoints return None (those points are events already).
    Raises on positive-length collinear overlap.
    """
    if s1.is_marker or s2.is_marker:
        return None
    v1, v2 = s1.vcar, s2.vcar
    if v1 and v2:
        if s1.ca[0] == s2.ca[0] and min(s1.b, s2.b) > max(s1.a, s2.a):
            raise _overlap_error(s1, s2)
        return None
    if v1 or v2:
        sv, sn = (s1, s2) if v1 else (s2, s1)
        x = sv.ca[0]
        h = y_at(sn.ca, sn.cb, x)
        q = (x, h, h)
        if sv.a < q < sv.b and sn.a < q < sn.b:
            return q
        return None
    d1 = s1.out_dir()
    d2 = s2.out_dir()
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den == 0:
        if y_at(s1.ca, s1.cb, s2.ca[0]) != s2.ca[1]:
            return None
        if min(s1.b, s2.b) > max(s1.a, s2.a):
            raise _overlap_error(s1, s2)
        return None
    a, c = s1.ca, s2.ca
    t = Fraction((c[0] - a[0]) * d2[1] - (c[1] - a[1]) * d2[0], den)
    qx = _unfrac(a[0] + t * d1[0])
    qy = _unfrac(a[1] + t * d1[1])
    q = (qx, qy, qy)
    if s1.a < q < s1.b and s2.a < q < s2.b:
        return q
    return None


def _slope_desc_cmp(s1, s2):
    """Steeper first; verticals count as steepest.  Equal slopes raise."""
    d1 = s1.out_dir()
    d2 = s2.out_dir()
    c = d1[1] * d2[0] - d2[1] * d1[0]
    if c == 0:
        raise _overlap_error(s1, s2)
    return -1 if c > 0 else 1


class Trapezoid:
    """One cell: boundaries below/above are segment indices (None = frame),
    left/right are event points (None = frame side)."""

    __slots__ = ("id", "bot_si", "top_si", "left_ev", "right_ev", "neighbors")

    def __init__(self, tid, bot_si, top_si, left_ev):
        self.id = tid
        self.bot_si = bot_si
        self.top_si = top_si
        self.left_ev = left_ev
        self.right_ev = None
        self.neighbors = None

    @property
    def degree(self):
        return len(self.neighbors) if self.neighbors is not None else 0

    @property
    def left_x(self):
        return None if self.left_ev is None else self.left_ev[0]

    @property
    def right_x(self):
        return None if self.right_ev is None else self.right_ev[0]


def _owner_skey(o):
    return (0, "") if o is None else (1, repr(o))


def _coord_skey(v):
    return (0, 0) if v is None else (1, v)


_LO = (-1,)
_HI = (2,)


def _ikey(ev, unbounded):
    return unbounded if ev is None else (0, ev)


class TrapDecomposition:
    """Cells, walls, contacts and the per-event construction record.

    ev_records entries are (point, closed cell ids bottom-to-top, opened
    cell ids bottom-to-top, segment ids through or ending at the point,
    outgoing segment ids), in event order.
    """

    def __init__(self, segs, box):
        self.segs = segs
        self.box = box
        self.cells = []
        self.walls = {}
        self.contacts = []
        self.ev_records = []
        self.above_of = {}
        self.below_of = {}
        self._dual_built = False
        # Records carry incident segment ids only when built event by event;
        # restrict() needs those.
        self.restrictable = True

    def owner_of(self, si):
        return None if si is None else self.segs[si].owner

    @property
    def n_cells(self):
        return len(self.cells)

    def canonicalize(self):
        """Order-independent cell descriptors: (top owner, bottom owner,
        left_x, right_x) with None for frame boundaries, sorted."""
        out = [
            (self.owner_of(c.top_si), self.owner_of(c.bot_si), c.left_x, c.right_x)
            for c in self.cells
        ]
        out.sort(
            key=lambda d: (
                _owner_skey(d[0]),
                _owner_skey(d[1]),
                _coord_skey(d[2]),
                _coord_skey(d[3]),
            )
        )
        return out

    def intersections(self):
        """Distinct contact points in first-reported order."""
        seen = set()
        out = []
        for _, _, p in self.contacts:
            g = sym_geom(p)
            if g not in seen:
                seen.add(g)
                out.append(g)
        return out

    def wall_at(self, p):
        """((down owner, down y), (up owner, up y)) at an event point."""
        w = self.walls[nat(p)]
        return ((self.owner_of(w[0]), w[1]), (self.owner_of(w[2]), w[3]))

    def cell_interval(self, c, k):
        lo = self.box[1] if c.bot_si is None else self.segs[c.bot_si].height_at(k)
        hi = self.box[3] if c.top_si is None else self.segs[c.top_si].height_at(k)
        return (lo, hi)

    def ensure_dual(self):
        if self._dual_built:
            return
        pairs = set()
        for rec in self.ev_records:
            cl, op = rec[1], rec[2]
            if cl and op:
                pairs.add((cl[0], op[0]))
                pairs.add((cl[-1], op[-1]))
        for si, above in self.above_of.items():
            below = self.below_of.get(si, [])
            i = j = 0
            while i < len(above) and j < len(below):
                c1 = self.cells[above[i]]
                c2 = self.cells[below[j]]
                r1 = _ikey(c1.right_ev, _HI)
                r2 = _ikey(c2.right_ev, _HI)
                if _ikey(c1.left_ev, _LO) < r2 and _ikey(c2.left_ev, _LO) < r1:
                    pairs.add((c1.id, c2.id))
                if r1 <= r2:
                    i += 1
                else:
                    j += 1
        nb = {c.id: set() for c in self.cells}
        for u, v in pairs:
            if u != v:
                nb[u].add(v)
                nb[v].add(u)
        for c in self.cells:
            c.neighbors = sorted(nb[c.id])
        self._dual_built = True

    def adjacency_pairs(self):
        self.ensure_dual()
        out = set()
        for c in self.cells:
            for m in c.neighbors:
                out.add((min(c.id, m), max(c.id, m)))
        return out


def _contact_triple(o1, o2, p):
    if repr(o2) < repr(o1):
        o1, o2 = o2, o1
    return (o1, o2, p)


def _record_contacts(td, incident, p, seen):
    inc = sorted(set(incident))
    for i in range(len(inc)):
        for j in range(i + 1, len(inc)):
            key = _contact_triple(td.segs[inc[i]].owner, td.segs[inc[j]].owner, p)
            if key not in seen:
                seen.add(key)
                td.contacts.append(key)


def compute_box(segs):
    pts = []
    for s in segs:
        pts.append(sym_geom(s.a))
        pts.append(sym_geom(s.b))
    if not pts:
        return (-1, -1, 1, 1)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return (min(xs) - 1, min(ys) - 1, max(xs) + 1, max(ys) + 1)


def _check_inputs(segs, box):
    x0, ylow, x1, yhigh = box
    for s in segs:
        if s.is_wall:
            raise InvalidInputError("wall segments are not valid input")
        for sp in (s.a, s.b):
            if not (x0 < sp[0] < x1 and ylow < sp[2] < yhigh):
                raise InvalidInputError(f"segment {s.owner} not strictly inside frame")


def td_sweep(segs, box=None):
    """Plane sweep in shear order, scheduling crossings on the fly.

    Contacts (crossings and touches) are recorded, not judged; collinear
    positive-length overlaps raise GeometryError.
    """
    if box is None:
        box = compute_box(segs)
    _check_inputs(segs, box)
    td = TrapDecomposition(segs, box)
    _, ylow, _, yhigh = box

    registry = {}
    ends_at = {}
    heap = []
    scheduled = set()

    def push(ev):
        if ev not in scheduled:
            scheduled.add(ev)
            heapq.heappush(heap, ev)

    for si, s in enumerate(segs):
        registry.setdefault(s.a, []).append(si)
        push(s.a)
        if not s.is_marker:
            ends_at[s.b] = ends_at.get(s.b, 0) + 1
            push(s.b)

    active = []
    gaps = [Trapezoid(0, None, None, None)]
    td.cells.append(gaps[0])
    contact_seen = set()

    def new_cell(bot_si, top_si, left_ev):
        c = Trapezoid(len(td.cells), bot_si, top_si, left_ev)
        td.cells.append(c)
        if bot_si is not None:
            td.above_of.setdefault(bot_si, []).append(c.id)
        if top_si is not None:
            td.below_of.setdefault(top_si, []).append(c.id)
        return c

    while heap:
        p = heapq.heappop(heap)
        while heap and heap[0] == p:
            heapq.heappop(heap)
        starts = registry.pop(p, [])
        real_starts = [si for si in starts if not segs[si].is_marker]
        markers = [si for si in starts if segs[si].is_marker]

        lo, hi = 0, len(active)
        while lo < hi:
            mid = (lo + hi) // 2
            if segs[active[mid]].rel(p) <= 0:
                hi = mid
            else:
                lo = mid + 1
        j = lo
        bundle = []
        while j < len(active) and segs[active[j]].rel(p) == 0:
            bundle.append(active[j])
            j += 1
        hi_ex = j

        ending = [si for si in bundle if segs[si].b == p]
        through = [si for si in bundle if segs[si].b != p]
        if len(ending) != ends_at.pop(p, 0):
            raise InvariantError(f"sweep order corrupted at {p}")

        outs = sorted(
            through + real_starts,
            key=cmp_to_key(lambda u, v: -_slope_desc_cmp(segs[u], segs[v])),
        )

        _record_contacts(td, bundle + real_starts + markers, p, contact_seen)

        closing = gaps[lo : hi_ex + 1]
        for c in closing:
            c.right_ev = p

        k = sym_key(p)
        if lo > 0:
            dsi = active[lo - 1]
            down = (dsi, segs[dsi].height_at(k))
        else:
            down = (None, ylow)
        if hi_ex < len(active):
            usi = active[hi_ex]
            up = (usi, segs[usi].height_at(k))
        else:
            up = (None, yhigh)
        td.walls[p] = (down[0], down[1], up[0], up[1])

        ladder = [closing[0].bot_si] + outs + [closing[-1].top_si]
        opened = [
            new_cell(ladder[idx], ladder[idx + 1], p) for idx in range(len(outs) + 1)
        ]

        active[lo:hi_ex] = outs
        gaps[lo : hi_ex + 1] = opened

        td.ev_records.append(
            (p, [c.id for c in closing], [c.id for c in opened], bundle, outs)
        )

        for i1, i2 in ((lo - 1, lo), (lo + len(outs) - 1, lo + len(outs))):
            if 0 <= i1 < len(active) and 0 <= i2 < len(active):
                q = seg_future_cross(segs[active[i1]], segs[active[i2]])
                if q is not None and q > p:
                    push(q)

    if active:
        raise InvariantError("segments still active after final event")
    for c in gaps:
        c.right_ev = None
    return td


def td_bruteforce(segs, box=None):
    """Quadratic reference construction straight from the definition.

    Requires ordinary (unsheared) input points.  Every endpoint and pairwise
    intersection is an event; the plane is scanned slab by slab between
    consecutive events in shear order, including the zero-width slabs that
    separate events sharing an x-coordinate.
    """
    for s in segs:
        if s.a[1] != s.a[2] or s.b[1] != s.b[2]:
            raise InvalidInputError("reference construction requires ordinary points")
    if box is None:
        box = compute_box(segs)
    _check_inputs(segs, box)
    td = TrapDecomposition(segs, box)
    _, ylow, _, yhigh = box

    events = set()
    contact_seen = set()
    for s in segs:
        events.add(sym_key(s.a))
        events.add(sym_key(s.b))
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            s1, s2 = segs[i], segs[j]
            r = segment_intersection(s1.ca, s1.cb, s2.ca, s2.cb)
            if r is None:
                continue
            if r[0] == "segment":
                raise _overlap_error(s1, s2)
            pgeo = r[1]
            events.add(pgeo)
            key = _contact_triple(s1.owner, s2.owner, nat(pgeo))
            if key not in contact_seen:
                contact_seen.add(key)
                td.contacts.append(key)

    keys = sorted(events)
    add_at = {}
    del_at = {}
    spans = {}
    for si, s in enumerate(segs):
        ka, kb = sym_key(s.a), sym_key(s.b)
        if ka == kb:
            continue
        spans[si] = (ka, kb)
        add_at.setdefault(ka, []).append(si)
        del_at.setdefault(kb, []).append(si)

    def zw_cmp_factory(klo, khi):
        # Order within a zero-width slab: a vertical segment is below a
        # non-vertical one iff the latter crosses at or above the slab top;
        # two non-verticals tie only where they meet at a slab boundary, and
        # are then ordered by slope (ascending just right of the meeting
        # point, descending just left of it).
        x = klo[0]

        def cmp(i, j):
            si, sj = segs[i], segs[j]
            vi, vj = si.vcar, sj.vcar
            if vi and vj:
                raise _overlap_error(si, sj)
            if vi or vj:
                sv, sn, flip = (si, sj, 1) if vi else (sj, si, -1)
                c = y_at(sn.ca, sn.cb, x)
                if khi[1] <= c:
                    return -flip
                if klo[1] >= c:
                    return flip
                raise InvariantError("unsplit crossing inside slab")
            ci = y_at(si.ca, si.cb, x)
            cj = y_at(sj.ca, sj.cb, x)
            if ci != cj:
                return -1 if ci < cj else 1
            # Both pass through (x, ci).  That meeting point precedes the
            # slab in shear order iff ci <= slab bottom, in which case the
            # slab sees them just past the meeting (slope ascending);
            # otherwise just before it (slope descending).
            if ci <= klo[1]:
                return -_slope_desc_cmp(si, sj)
            if ci >= khi[1]:
                return _slope_desc_cmp(si, sj)
            raise InvariantError("unsplit crossing inside slab")

        return cmp

    def pw_cmp_factory(xmid):
        def cmp(i, j):
            ci = y_at(segs[i].ca, segs[i].cb, xmid)
            cj = y_at(segs[j].ca, segs[j].cb, xmid)
            if ci == cj:
                raise _overlap_error(segs[i], segs[j])
            return -1 if ci < cj else 1

        return cmp

    n_slabs = len(keys) + 1
    slab_cells = []
    cur = set()
    for j in range(n_slabs):
        if j > 0:
            k = keys[j - 1]
            for si in del_at.get(k, []):
                cur.discard(si)
            for si in add_at.get(k, []):
                cur.add(si)
        klo = keys[j - 1] if j > 0 else None
        khi = keys[j] if j < len(keys) else None
        if klo is None or khi is None:
            live = []
        else:
            live = [si for si in cur if spans[si][0] <= klo and khi <= spans[si][1]]
            if live and klo[0] == khi[0]:
                live.sort(key=cmp_to_key(zw_cmp_factory(klo, khi)))
            elif live:
                live.sort(key=cmp_to_key(pw_cmp_factory(Fraction(klo[0] + khi[0], 2))))
        bounds = [None] + live + [None]
        slab_cells.append([(bounds[t], bounds[t + 1]) for t in range(len(live) + 1)])

    flat_ids = {}
    parent = {}
    counter = 0
    for j, col in enumerate(slab_cells):
        for t in range(len(col)):
            flat_ids[(j, t)] = counter
            parent[counter] = counter
            counter += 1

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    def union(u, v):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)

    # Two cells with the same boundaries in consecutive slabs are one
    # trapezoid unless the event at the shared boundary lies between those
    # boundaries (its wall then separates them).
    for j in range(n_slabs - 1):
        k = keys[j]
        left_pos = {cell: t for t, cell in enumerate(slab_cells[j])}
        for t2, cell in enumerate(slab_cells[j + 1]):
            t1 = left_pos.get(cell)
            if t1 is None:
                continue
            bot, top = cell
            hb = None if bot is None else segs[bot].height_at(k)
            ht = None if top is None else segs[top].height_at(k)
            ye = k[1]
            blocked = (hb is None or hb <= ye) and (ht is None or ye <= ht)
            if not blocked:
                union(flat_ids[(j, t1)], flat_ids[(j + 1, t2)])

    merged = {}
    for j, col in enumerate(slab_cells):
        klo = keys[j - 1] if j > 0 else None
        khi = keys[j] if j < len(keys) else None
        lk = _ikey(None if klo is None else nat(klo), _LO)
        rk = _ikey(None if khi is None else nat(khi), _HI)
        for t, cell in enumerate(col):
            r = find(flat_ids[(j, t)])
            rec = merged.get(r)
            if rec is None:
                merged[r] = [cell[0], cell[1], lk, rk, (j, t)]
            else:
                if lk < rec[2]:
                    rec[2] = lk
                if rk > rec[3]:
                    rec[3] = rk

    for rec in sorted(merged.values(), key=lambda rec: rec[4]):
        bot, top, lk, rk, _ = rec
        c = Trapezoid(len(td.cells), bot, top, None if lk == _LO else lk[1])
        c.right_ev = None if rk == _HI else rk[1]
        td.cells.append(c)
        if bot is not None:
            td.above_of.setdefault(bot, []).append(c.id)
        if top is not None:
            td.below_of.setdefault(top, []).append(c.id)

    # The wall targets at an event are the nearest strict crossings of its
    # sheared line.  A segment crosses that line at height h + eps*t with
    # t = slope*(ky - h), so ties in h are broken by t: the down target
    # maximizes (h, t), the up target minimizes it.
    for kx, ky in keys:
        down = None
        up = None
        kk = (kx, ky)
        for si, (ka, kb) in spans.items():
            if not (ka < kk < kb):
                continue
            s = segs[si]
            h = s.height_at(kk)
            if h == ky:
                continue
            if s.vcar:
                raise InvariantError("vertical wall candidate off its line")
            t = Fraction(s.cb[1] - s.ca[1], s.cb[0] - s.ca[0]) * (ky - h)
            if h < ky:
                if down is None or (h, t) > (down[0], down[1]):
                    down = (h, t, si)
            else:
                if up is None or (h, t) < (up[0], up[1]):
                    up = (h, t, si)
        td.walls[nat(kk)] = (
            None if down is None else down[2],
            ylow if down is None else down[0],
            None if up is None else up[2],
            yhigh if up is None else up[0],
        )

    _synth_records(td)
    _direct_dual(td)
    td.restrictable = False
    return td


def _stack_cmp_factory(td, p, opening):
    """Order a vertical stack of cells at event p by their bottom boundaries.

    Frame bottom first, then by height at p's line.  Segments through p all
    tie at p's height; just left of p they stand slope-descending, just
    right of it slope-ascending."""
    k = sym_key(p)

    def cmp(c1, c2):
        b1, b2 = c1.bot_si, c2.bot_si
        if b1 == b2:
            raise InvariantError("two cells with one bottom in a stack")
        if b1 is None or b2 is None:
            return -1 if b1 is None else 1
        h1 = td.segs[b1].height_at(k)
        h2 = td.segs[b2].height_at(k)
        if h1 != h2:
            return -1 if h1 < h2 else 1
        c = _slope_desc_cmp(td.segs[b1], td.segs[b2])
        return -c if opening else c

    return cmp


def _synth_records(td):
    """Synthesize event records (point, closing ids, opening ids) for a
    decomposition built without a sweep, so the replay locator works on it
    as well."""
    by_right = {}
    by_left = {}
    for c in td.cells:
        if c.right_ev is not None:
            by_right.setdefault(c.right_ev, []).append(c)
        if c.left_ev is not None:
            by_left.setdefault(c.left_ev, []).append(c)
    for p in sorted(set(by_right) | set(by_left)):
        cl = sorted(by_right.get(p, []), key=cmp_to_key(_stack_cmp_factory(td, p, False)))
        op = sorted(by_left.get(p, []), key=cmp_to_key(_stack_cmp_factory(td, p, True)))
        td.ev_records.append((p, [c.id for c in cl], [c.id for c in op], [], []))


def _direct_dual(td):
    """Quadratic adjacency from the definition: two cells are neighbors iff
    they share a positive-length piece of boundary, along a segment or
    along a vertical wall line."""
    pairs = set()
    cells = td.cells
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            c1, c2 = cells[i], cells[j]
            shared = None
            if c1.top_si is not None and c1.top_si == c2.bot_si:
                shared = c1.top_si
            elif c1.bot_si is not None and c1.bot_si == c2.top_si:
                shared = c1.bot_si
            if shared is not None:
                if (
                    _ikey(c1.left_ev, _LO) < _ikey(c2.right_ev, _HI)
                    and _ikey(c2.left_ev, _LO) < _ikey(c1.right_ev, _HI)
                ):
                    pairs.add((c1.id, c2.id))
                    continue
            for a, b in ((c1, c2), (c2, c1)):
                if a.right_ev is not None and a.right_ev == b.left_ev:
                    k = sym_key(a.right_ev)
                    iv1 = td.cell_interval(a, k)
                    iv2 = td.cell_interval(b, k)
                    if max(iv1[0], iv2[0]) < min(iv1[1], iv2[1]):
                        pairs.add((c1.id, c2.id))
                        break
    nb = {c.id: set() for c in cells}
    for u, v in pairs:
        nb[u].add(v)
        nb[v].add(u)
    for c in cells:
        c.neighbors = sorted(nb[c.id])
    td._dual_built = True


class PointLocator:
    """Point location by replaying the recorded event sequence.

    There is no preprocessing: a batch of queries is sorted into event
    order, the per-event cell surgery is replayed once, and the live cell
    stack is binary-searched at each query's line."""

    def __init__(self, td):
        self.td = td

    def locate(self, p, bias="right"):
        return self.locate_many([(p, bias)])[0]

    def locate_many(self, queries):
        """queries: (geometric point, 'right'|'left') pairs.  Right bias
        resolves a point on a wall to the cell on the wall's right, left
        bias to its left; a point on a segment goes to the cell above it.
        Returns cell ids, or OUTSIDE for points beyond the frame."""
        td = self.td
        x0, ylow, x1, yhigh = td.box
        order = sorted(
            ((p[0], p[1]), 0 if bias == "left" else 1, qi, p)
            for qi, (p, bias) in enumerate(queries)
        )
        out = [None] * len(queries)
        first = next(
            c.id
            for c in td.cells
            if c.left_ev is None and c.bot_si is None and c.top_si is None
        )
        gaps = [first]
        pos = {first: 0}
        ri = 0
        records = td.ev_records

        def apply(rec):
            cl, op = rec[1], rec[2]
            at = pos[cl[0]]
            for cid in cl:
                del pos[cid]
            gaps[at : at + len(cl)] = op
            for idx in range(at, len(gaps)):
                pos[gaps[idx]] = idx

        for key, biasflag, qi, p in order:
            if not (x0 <= p[0] <= x1 and ylow <= p[1] <= yhigh):
                out[qi] = OUTSIDE
                continue
            if biasflag == 1:
                while ri < len(records) and sym_key(records[ri][0]) <= key:
                    apply(records[ri])
                    ri += 1
            else:
                while ri < len(records) and sym_key(records[ri][0]) < key:
                    apply(records[ri])
                    ri += 1
            lo, hi = 1, len(gaps)
            while lo < hi:
                mid = (lo + hi) // 2
                c = td.cells[gaps[mid]]
                if td.segs[c.bot_si].height_at(key) <= p[1]:
                    lo = mid + 1
                else:
                    hi = mid
            out[qi] = gaps[lo - 1]
        return out


def restrict(td, keep):
    """Decomposition of a subset of td's segments.

    keep: iterable of segment indices.  When every removed segment is
    vertical or zero-length and spans no events strictly inside its extent,
    the result is obtained by merging cells of td; otherwise it is
    recomputed by a fresh sweep.
    """
    if not td.restrictable:
        raise InvalidInputError("decomposition lacks per-event incidence records")
    keep = set(keep)
    removed = [si for si in range(len(td.segs)) if si not in keep]
    if not removed:
        return td

    ev_keys = [rec[0] for rec in td.ev_records]
    fast = True
    for si in removed:
        s = td.segs[si]
        if not (s.is_marker or s.vcar):
            fast = False
            break
        if not s.is_marker:
            i1 = bisect.bisect_right(ev_keys, s.a)
            i2 = bisect.bisect_left(ev_keys, s.b)
            if i1 != i2:
                fast = False
                break
    if not fast:
        return td_sweep([td.segs[si] for si in sorted(keep)], td.box)
    return _restrict_merge(td, keep, set(removed))


def _restrict_merge(td, keep, removed_set):
    parent = list(range(len(td.cells)))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    def union(u, v):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)

    # Across each removed segment the single cell below merges with the
    # single cell above (no interior events, so each flank is one cell).
    for si in removed_set:
        if td.segs[si].is_marker:
            continue
        above = td.above_of.get(si, [])
        below = td.below_of.get(si, [])
        if len(above) != 1 or len(below) != 1:
            raise InvariantError("removed segment with subdivided flank")
        union(above[0], below[0])

    kept_marker_points = {
        td.segs[si].a for si in keep if td.segs[si].is_marker
    }

    # An event survives if a kept segment starts, ends or sits there, or if
    # at least two kept segments pass through it (a genuine contact).  At a
    # dead event the kept through segments split the closing and opening
    # stacks into aligned groups; each group collapses into one cell.
    alive = {}
    for rec in td.ev_records:
        p, cl, op, bundle, outs = rec
        kept_through = [si for si in bundle if si in keep and td.segs[si].b != p]
        is_alive = (
            len(kept_through) >= 2
            or any(si in keep and td.segs[si].b == p for si in bundle)
            or any(si in keep and td.segs[si].a == p for si in outs)
            or p in kept_marker_points
        )
        alive[p] = is_alive
        if is_alive:
            continue
        kt = set(kept_through)
        groups_cl = [[cl[0]]]
        for idx, si in enumerate(bundle):
            if si in kt:
                groups_cl.append([])
            groups_cl[-1].append(cl[idx + 1])
        groups_op = [[op[0]]]
        for idx, si in enumerate(outs):
            if si in kt:
                groups_op.append([])
            groups_op[-1].append(op[idx + 1])
        if len(groups_cl) != len(groups_op):
            raise InvariantError("mismatched merge groups at dead event")
        for gcl, gop in zip(groups_cl, groups_op):
            for c in gcl[1:]:
                union(gcl[0], c)
            for c in gop[1:]:
                union(gop[0], c)
            union(gcl[0], gop[0])

    members = {}
    for c in td.cells:
        members.setdefault(find(c.id), []).append(c)

    new_td = TrapDecomposition(td.segs, td.box)
    root_to_new = {}
    for root in sorted(members):
        ms = members[root]
        bots = {c.bot_si for c in ms if c.bot_si is None or c.bot_si in keep}
        tops = {c.top_si for c in ms if c.top_si is None or c.top_si in keep}
        if len(bots) != 1 or len(tops) != 1:
            raise InvariantError("ambiguous merged cell boundary")
        bot = bots.pop()
        top = tops.pop()
        left = min(_ikey(c.left_ev, _LO) for c in ms)
        right = max(_ikey(c.right_ev, _HI) for c in ms)
        c = Trapezoid(len(new_td.cells), bot, top, None if left == _LO else left[1])
        c.right_ev = None if right == _HI else right[1]
        new_td.cells.append(c)
        root_to_new[root] = c.id
        if bot is not None:
            new_td.above_of.setdefault(bot, []).append(c.id)
        if top is not None:
            new_td.below_of.setdefault(top, []).append(c.id)

    def remap(ids):
        out = []
        for cid in ids:
            n = root_to_new[find(cid)]
            if not out or out[-1] != n:
                out.append(n)
        return out

    rec_by_point = {}
    for rec in td.ev_records:
        p, cl, op, bundle, outs = rec
        if not alive[p]:
            continue
        nrec = (
            p,
            remap(cl),
            remap(op),
            [si for si in bundle if si in keep],
            [si for si in outs if si in keep],
        )
        new_td.ev_records.append(nrec)
        rec_by_point[p] = nrec

    for p, w in td.walls.items():
        if not alive.get(p, False):
            continue
        dsi, dy, usi, uy = w
        if dsi in removed_set or usi in removed_set:
            nrec = rec_by_point[p]
            k = sym_key(p)
            dsi = new_td.cells[nrec[1][0]].bot_si
            dy = td.box[1] if dsi is None else td.segs[dsi].height_at(k)
            usi = new_td.cells[nrec[1][-1]].top_si
            uy = td.box[3] if usi is None else td.segs[usi].height_at(k)
        new_td.walls[p] = (dsi, dy, usi, uy)

    kept_owners = {td.segs[si].owner for si in keep}
    new_td.contacts = [
        c for c in td.contacts if c[0] in kept_owners and c[1] in kept_owners
    ]
    return new_td


def assemble(segs, targets, box, extra_points=()):
    """Build the decomposition of non-crossing segments from per-vertex wall
    targets, without any global search structure.

    segs: Seg list (no walls; segments may meet only at shared endpoints).
    targets: dict symbolic point -> segment index (or None for the frame) of
    the segment directly below; consulted exactly at the points where no
    segment ends (markers and isolated extra_points included).
    """
    _check_inputs(segs, box)
    td = TrapDecomposition(segs, box)
    incoming = {}
    outgoing = {}
    markers_at = {}
    points = set(extra_points)
    for si, s in enumerate(segs):
        points.add(s.a)
        points.add(s.b)
        if s.is_marker:
            markers_at.setdefault(s.a, []).append(si)
            continue
        outgoing.setdefault(s.a, []).append(si)
        incoming.setdefault(s.b, []).append(si)

    open_by_bottom = {}
    open_by_top = {}
    contact_seen = set()
    FRAME = "frame"

    def bkey(si):
        return FRAME if si is None else si

    def new_cell(bot_si, top_si, left_ev):
        if bkey(bot_si) in open_by_bottom or bkey(top_si) in open_by_top:
            raise InvariantError("two open cells share a boundary")
        c = Trapezoid(len(td.cells), bot_si, top_si, left_ev)
        td.cells.append(c)
        if bot_si is not None:
            td.above_of.setdefault(bot_si, []).append(c.id)
        if top_si is not None:
            td.below_of.setdefault(top_si, []).append(c.id)
        open_by_bottom[bkey(bot_si)] = c
        open_by_top[bkey(top_si)] = c
        return c

    def close_cell(c, p):
        c.right_ev = p
        open_by_bottom.pop(bkey(c.bot_si), None)
        open_by_top.pop(bkey(c.top_si), None)

    new_cell(None, None, None)

    for p in sorted(points):
        inc = sorted(
            incoming.get(p, ()),
            key=cmp_to_key(lambda u, v: _slope_desc_cmp(segs[u], segs[v])),
        )
        outs = sorted(
            outgoing.get(p, ()),
            key=cmp_to_key(lambda u, v: -_slope_desc_cmp(segs[u], segs[v])),
        )
        mk = markers_at.get(p, [])
        _record_contacts(td, inc + outs + mk, p, contact_seen)

        if inc:
            c_low = open_by_top.get(inc[0])
            if c_low is None:
                raise InvariantError(f"no open cell below {p}")
            closing = [c_low]
            for idx in range(len(inc) - 1):
                c = open_by_bottom.get(inc[idx])
                if c is None or c.top_si != inc[idx + 1]:
                    raise InvariantError(f"cell ladder mismatch at {p}")
                closing.append(c)
            c_high = open_by_bottom.get(inc[-1])
            if c_high is None:
                raise InvariantError(f"no open cell above {p}")
            closing.append(c_high)
        else:
            if p not in targets:
                raise InvariantError(f"missing wall target at {p}")
            c = open_by_bottom.get(bkey(targets[p]))
            if c is None:
                raise InvariantError(f"stale wall target {targets[p]} at {p}")
            closing = [c]

        bot_outer = closing[0].bot_si
        top_outer = closing[-1].top_si
        for c in closing:
            close_cell(c, p)
        ladder = [bot_outer] + outs + [top_outer]
        opened = [
            new_cell(ladder[idx], ladder[idx + 1], p) for idx in range(len(outs) + 1)
        ]
        k = sym_key(p)
        td.walls[p] = (
            bot_outer,
            td.box[1] if bot_outer is None else segs[bot_outer].height_at(k),
            top_outer,
            td.box[3] if top_outer is None else segs[top_outer].height_at(k),
        )
        td.ev_records.append(
            (p, [c.id for c in closing], [c.id for c in opened], list(inc), list(outs))
        )

    leftover = {c.id for c in open_by_bottom.values()}
    leftover |= {c.id for c in open_by_top.values()}
    for cid in leftover:
        c = td.cells[cid]
        if c.bot_si is not None or c.top_si is not None:
            raise InvariantError("unclosed cell after final point")
    return td
