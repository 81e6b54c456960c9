"""Tests for the decomposition engines: sweep vs direct reference scan."""

import random
from collections import Counter
from fractions import Fraction

import pytest

from trapdecomp.decomp import (
    OUTSIDE,
    PointLocator,
    Seg,
    assemble,
    nat,
    restrict,
    seg_future_cross,
    sym_geom,
    sym_key,
    td_bruteforce,
    td_sweep,
)
from trapdecomp.errors import GeometryError, InvalidInputError, InvariantError


def seg(p, q, owner):
    return Seg.natural(p, q, owner)


def descriptor(td, cid):
    c = td.cells[cid]
    return (
        td.owner_of(c.top_si),
        td.owner_of(c.bot_si),
        c.left_ev,
        c.right_ev,
    )


def edge_multiset(td):
    # Adjacency as a multiset of unordered descriptor pairs; cell ids are
    # engine-specific, descriptors are not.
    td.ensure_dual()
    out = Counter()
    for c in td.cells:
        for m in c.neighbors:
            if m > c.id:
                d1 = descriptor(td, c.id)
                d2 = descriptor(td, m)
                pair = tuple(sorted((d1, d2), key=repr))
                out[pair] += 1
    return out


def walls_by_owner(td):
    out = {}
    for p, (dsi, dy, usi, uy) in td.walls.items():
        out[p] = (td.owner_of(dsi), dy, td.owner_of(usi), uy)
    return out


def contact_set(td):
    return {(o1, o2, sym_geom(p)) for o1, o2, p in td.contacts}


def check_walls(td):
    # No segment's interior may cross the open gap between an event point
    # and either of its wall targets.
    for p, (dsi, dy, usi, uy) in td.walls.items():
        k = sym_key(p)
        py = p[2]
        assert dy < py < uy
        for s in td.segs:
            if s.is_marker:
                continue
            if not (sym_key(s.a) < k < sym_key(s.b)):
                continue
            h = s.height_at(k)
            assert not (dy < h < py), (p, s)
            assert not (py < h < uy), (p, s)


def check_dual_planarity(td):
    td.ensure_dual()
    for c in td.cells:
        for m in c.neighbors:
            assert c.id in td.cells[m].neighbors
            assert m != c.id
    v = len(td.cells)
    e = sum(len(c.neighbors) for c in td.cells) // 2
    if v >= 3:
        assert e <= 3 * v - 6


def compare_engines(segs, box=None):
    try:
        brute = td_bruteforce(segs, box)
        brute_err = None
    except GeometryError as exc:
        brute = None
        brute_err = exc
    if brute_err is not None:
        with pytest.raises(GeometryError):
            td_sweep(segs, box)
        return None, None
    sweep = td_sweep(segs, box)
    assert sweep.canonicalize() == brute.canonicalize()
    assert walls_by_owner(sweep) == walls_by_owner(brute)
    assert contact_set(sweep) == contact_set(brute)
    assert edge_multiset(sweep) == edge_multiset(brute)
    check_walls(sweep)
    check_dual_planarity(sweep)
    check_dual_planarity(brute)
    return sweep, brute


def test_empty_input():
    td = td_sweep([])
    assert td.box == (-1, -1, 1, 1)
    assert td.canonicalize() == [(None, None, None, None)]
    tb = td_bruteforce([])
    assert tb.canonicalize() == [(None, None, None, None)]


def test_single_segment_frozen():
    s = seg((0, 0), (1, 0), "e0")
    for engine in (td_sweep, td_bruteforce):
        td = engine([s])
        assert td.box == (-1, -1, 2, 1)
        assert td.canonicalize() == [
            (None, None, None, 0),
            (None, None, 1, None),
            (None, "e0", 0, 1),
            ("e0", None, 0, 1),
        ]
        assert td.wall_at((0, 0)) == ((None, -1), (None, 1))
        assert td.wall_at((1, 0)) == ((None, -1), (None, 1))


def test_single_segment_dual_five_edges():
    s = seg((0, 0), (1, 0), "e0")
    for engine in (td_sweep, td_bruteforce):
        td = engine([s])
        td.ensure_dual()
        by_desc = {}
        for c in td.cells:
            d = (td.owner_of(c.top_si), td.owner_of(c.bot_si), c.left_x, c.right_x)
            by_desc[d] = c.id
        left = by_desc[(None, None, None, 0)]
        right = by_desc[(None, None, 1, None)]
        above = by_desc[(None, "e0", 0, 1)]
        below = by_desc[("e0", None, 0, 1)]
        expect = {
            tuple(sorted(e))
            for e in [
                (left, above),
                (left, below),
                (right, above),
                (right, below),
                (above, below),
            ]
        }
        assert td.adjacency_pairs() == expect
        assert td.cells[left].degree == 2
        assert td.cells[above].degree == 3


def test_x_crossing():
    s1 = seg((0, 0), (4, 2), "a")
    s2 = seg((0, 2), (4, 0), "b")
    sweep, brute = compare_engines([s1, s2])
    assert sweep.intersections() == [(2, 1)]
    assert brute.intersections() == [(2, 1)]
    assert sweep.n_cells == 10
    assert sweep.wall_at((2, 1)) == ((None, -1), (None, 3))
    assert sweep.wall_at((0, 2)) == (("a", 0), (None, 3))
    assert sweep.wall_at((4, 0)) == ((None, -1), ("a", 2))


def test_rational_crossing_point():
    s1 = seg((0, 0), (3, 1), "a")
    s2 = seg((0, 1), (3, 0), "b")
    sweep, _ = compare_engines([s1, s2])
    assert sweep.intersections() == [(Fraction(3, 2), Fraction(1, 2))]


def test_t_junction_contact():
    s1 = seg((0, 0), (4, 0), "a")
    s2 = seg((2, 0), (2, 3), "b")
    sweep, brute = compare_engines([s1, s2])
    assert ("a", "b", (2, 0)) in contact_set(sweep)
    assert sweep.intersections() == [(2, 0)]


def test_vertical_pair_same_line_gap():
    v1 = seg((0, 0), (0, 1), "v1")
    v2 = seg((0, 2), (0, 3), "v2")
    compare_engines([v1, v2])


def test_vertical_chain_meeting():
    # Two verticals meeting at a point is a touch, not an overlap.
    v1 = seg((0, 0), (0, 1), "v1")
    v2 = seg((0, 1), (0, 2), "v2")
    sweep, _ = compare_engines([v1, v2])
    assert sweep.intersections() == [(0, 1)]


def test_overlap_rejected():
    s1 = seg((0, 0), (4, 0), "a")
    s2 = seg((1, 0), (3, 0), "b")
    with pytest.raises(GeometryError):
        td_sweep([s1, s2])
    with pytest.raises(GeometryError):
        td_bruteforce([s1, s2])
    v1 = seg((0, 0), (0, 2), "a")
    v2 = seg((0, 1), (0, 3), "b")
    with pytest.raises(GeometryError):
        td_sweep([v1, v2])
    with pytest.raises(GeometryError):
        td_bruteforce([v1, v2])


def test_wall_segments_rejected():
    w = Seg((0, 0, 0), (0, 0, 2), (0, 0), (0, 2), "w")
    assert w.is_wall
    with pytest.raises(InvalidInputError):
        td_sweep([w])


def test_marker_alone():
    m = Seg.marker((0, 0), "m")
    for engine in (td_sweep, td_bruteforce):
        td = engine([m])
        assert td.canonicalize() == [
            (None, None, None, 0),
            (None, None, 0, None),
        ]
        assert td.wall_at((0, 0)) == ((None, -1), (None, 1))


def test_marker_on_segment():
    s = seg((0, 0), (4, 2), "a")
    m = Seg.marker((2, 1), "m")
    sweep, brute = compare_engines([s, m])
    assert ("a", "m", (2, 1)) in contact_set(sweep)


def test_intersections_in_sweep_order():
    s1 = seg((0, 0), (8, 0), "a")
    s2 = seg((1, -1), (3, 1), "b")
    s3 = seg((5, 1), (7, -1), "c")
    sweep, _ = compare_engines([s1, s2, s3])
    assert sweep.intersections() == [(2, 0), (6, 0)]


def test_exact_big_coordinates():
    big = 10**12
    s1 = seg((0, 0), (big, 2), "a")
    s2 = seg((0, 2), (big, 0), "b")
    sweep, _ = compare_engines([s1, s2])
    assert sweep.intersections() == [(big // 2, 1)]


def test_seg_future_cross_cases():
    s1 = seg((0, 0), (4, 4), "a")
    s2 = seg((0, 4), (4, 0), "b")
    assert seg_future_cross(s1, s2) == (2, 2, 2)
    # Endpoint meetings are not future crossings.
    s3 = seg((4, 4), (8, 0), "c")
    assert seg_future_cross(s1, s3) is None
    v = seg((2, 0), (2, 1), "v")
    assert seg_future_cross(s1, v) is None  # crossing at (2,2) is outside v
    v2 = seg((2, 1), (2, 3), "v2")
    assert seg_future_cross(s1, v2) == (2, 2, 2)


def locate_desc(td, p, bias="right"):
    cid = PointLocator(td).locate(p, bias)
    if cid == OUTSIDE:
        return OUTSIDE
    c = td.cells[cid]
    return (td.owner_of(c.top_si), td.owner_of(c.bot_si), c.left_x, c.right_x)


def test_locate_conventions():
    s = seg((0, 0), (1, 0), "e0")
    td = td_sweep([s])
    # Interior point above the segment.
    assert locate_desc(td, (Fraction(1, 2), Fraction(1, 2))) == (None, "e0", 0, 1)
    # A point on the segment belongs to the cell above it.
    assert locate_desc(td, (Fraction(1, 2), 0)) == (None, "e0", 0, 1)
    # A point on a wall: right bias gives the right cell, left bias the left.
    assert locate_desc(td, (0, 0), "right") == (None, "e0", 0, 1)
    assert locate_desc(td, (0, 0), "left") == (None, None, None, 0)
    # Outside the frame.
    assert locate_desc(td, (10, 10)) == OUTSIDE
    assert locate_desc(td, (-5, 0)) == OUTSIDE


def test_locate_empty():
    td = td_sweep([])
    assert PointLocator(td).locate((0, 0)) == 0


def random_segs(rng, n, span=9, allow_vertical=True, allow_marker=False):
    out = []
    for i in range(n):
        while True:
            p = (rng.randint(0, span), rng.randint(0, span))
            if allow_marker and rng.random() < 0.1:
                out.append(Seg.marker(p, ("m", i)))
                break
            q = (rng.randint(0, span), rng.randint(0, span))
            if p == q:
                continue
            if not allow_vertical and p[0] == q[0]:
                continue
            out.append(seg(p, q, ("e", i)))
            break
    return out


def test_random_engine_agreement_small():
    rng = random.Random(101)
    done = 0
    for _ in range(140):
        segs = random_segs(rng, rng.randint(1, 6), span=6, allow_marker=True)
        sweep, _ = compare_engines(segs)
        if sweep is not None:
            done += 1
    assert done > 60


def test_random_engine_agreement_mid():
    rng = random.Random(202)
    done = 0
    for _ in range(30):
        segs = random_segs(rng, rng.randint(6, 14), span=12, allow_marker=True)
        sweep, brute = compare_engines(segs)
        if sweep is None:
            continue
        done += 1
        x = len(sweep.intersections())
        assert sweep.n_cells <= 3 * (len(segs) + x) + 4
        # Locator spot checks against the reference decomposition.
        qs = []
        for _ in range(6):
            qs.append(
                (
                    Fraction(rng.randint(0, 48), 4),
                    Fraction(rng.randint(0, 48), 4),
                )
            )
        loc_s = PointLocator(sweep).locate_many([(q, "right") for q in qs])
        loc_b = PointLocator(brute).locate_many([(q, "right") for q in qs])
        for q, cs, cb in zip(qs, loc_s, loc_b):
            if cs == OUTSIDE or cb == OUTSIDE:
                assert cs == cb
                continue
            assert descriptor(sweep, cs) == descriptor(brute, cb), q
    assert done > 10


def test_random_engine_agreement_larger():
    rng = random.Random(303)
    done = 0
    for _ in range(6):
        segs = random_segs(rng, 25, span=30)
        sweep, _ = compare_engines(segs)
        if sweep is not None:
            done += 1
    assert done >= 3


def test_restrict_identity():
    segs = [seg((0, 0), (4, 1), "a"), seg((1, 3), (5, 2), "b")]
    td = td_sweep(segs)
    assert restrict(td, {0, 1}) is td


def test_restrict_to_empty():
    segs = [seg((0, 0), (4, 1), "a")]
    td = td_sweep(segs)
    r = restrict(td, set())
    assert r.canonicalize() == [(None, None, None, None)]


def test_restrict_drop_joiner():
    e1 = seg((0, 0), (2, 0), "e1")
    e2 = seg((0, 2), (2, 2), "e2")
    j = seg((1, 0), (1, 2), "j")
    td = td_sweep([e1, e2, j])
    r = restrict(td, {0, 1})
    fresh = td_sweep([e1, e2])
    assert r.canonicalize() == fresh.canonicalize()
    assert walls_by_owner(r) == walls_by_owner(fresh)
    assert edge_multiset(r) == edge_multiset(fresh)
    # The junction events are gone entirely.
    assert nat((1, 0)) not in r.walls
    assert contact_set(r) == set()


def test_restrict_joiner_between_vertices():
    # Joiner endpoints at chain vertices (not edge interiors).
    e1 = seg((0, 0), (2, 0), "e1")
    e2 = seg((2, 0), (4, 0), "e2")
    f1 = seg((0, 3), (2, 3), "f1")
    f2 = seg((2, 3), (4, 3), "f2")
    j = seg((2, 0), (2, 3), "j")
    td = td_sweep([e1, e2, f1, f2, j])
    r = restrict(td, {0, 1, 2, 3})
    fresh = td_sweep([e1, e2, f1, f2])
    assert r.canonicalize() == fresh.canonicalize()
    assert walls_by_owner(r) == walls_by_owner(fresh)
    assert edge_multiset(r) == edge_multiset(fresh)


def test_restrict_fallback_on_interior_contact():
    # A segment ends on the joiner's interior: removing the joiner must
    # resweep, and the result still matches a fresh decomposition.
    v = seg((2, 0), (2, 4), "v")
    e = seg((0, 2), (2, 2), "e")
    td = td_sweep([v, e])
    r = restrict(td, {1})
    fresh = td_sweep([e], td.box)
    assert r.canonicalize() == fresh.canonicalize()


def test_restrict_nonvertical_falls_back():
    a = seg((0, 0), (3, 1), "a")
    b = seg((0, 3), (3, 2), "b")
    td = td_sweep([a, b])
    r = restrict(td, {0})
    fresh = td_sweep([a], td.box)
    assert r.canonicalize() == fresh.canonicalize()


def test_restrict_brute_output_rejected():
    td = td_bruteforce([seg((0, 0), (2, 1), "a")])
    with pytest.raises(InvalidInputError):
        restrict(td, set())


def _chain_segs(pts, tag):
    return [
        seg(pts[i], pts[i + 1], (tag, i)) for i in range(len(pts) - 1)
    ]


def test_restrict_random_joined_chains():
    rng = random.Random(404)
    rounds = 0
    for _ in range(40):
        # Two x-monotone chains one above the other, joined by verticals at
        # shared x stations; dropping the joiners must equal a fresh sweep.
        xs = sorted(rng.sample(range(0, 20), rng.randint(3, 6)))
        low = [(x, rng.randint(0, 3)) for x in xs]
        high = [(x, rng.randint(6, 9)) for x in xs]
        chain_a = _chain_segs(low, "a")
        chain_b = _chain_segs(high, "b")
        joiners = []
        for k, x in enumerate(xs):
            if rng.random() < 0.5:
                joiners.append(seg((x, low[k][1]), (x, high[k][1]), ("j", k)))
        if not joiners:
            continue
        segs = chain_a + chain_b + joiners
        td = td_sweep(segs)
        keep = set(range(len(chain_a) + len(chain_b)))
        r = restrict(td, keep)
        fresh = td_sweep(chain_a + chain_b, td.box)
        assert r.canonicalize() == fresh.canonicalize()
        assert walls_by_owner(r) == walls_by_owner(fresh)
        assert edge_multiset(r) == edge_multiset(fresh)
        rounds += 1
    assert rounds > 10


def targets_from(td):
    out = {}
    ends = {s.b for s in td.segs if not s.is_marker}
    for p, w in td.walls.items():
        if p not in ends:
            out[p] = w[0]
    return out


def test_assemble_single_chain():
    pts = [(0, 0), (2, 2), (4, 1), (6, 3)]
    segs = _chain_segs(pts, "c")
    td = td_sweep(segs)
    rebuilt = assemble(segs, targets_from(td), td.box)
    assert rebuilt.canonicalize() == td.canonicalize()
    assert walls_by_owner(rebuilt) == walls_by_owner(td)
    assert edge_multiset(rebuilt) == edge_multiset(td)


def test_assemble_needs_targets():
    segs = _chain_segs([(0, 0), (2, 1)], "c")
    td = td_sweep(segs)
    with pytest.raises(InvariantError):
        assemble(segs, {}, td.box)


def test_assemble_random_noncrossing():
    rng = random.Random(505)
    rounds = 0
    for _ in range(60):
        n_chains = rng.randint(1, 3)
        segs = []
        for ci in range(n_chains):
            y0 = 6 * ci
            xs = sorted(rng.sample(range(0, 16), rng.randint(2, 5)))
            pts = [(x, y0 + rng.randint(0, 4)) for x in xs]
            segs += _chain_segs(pts, ("c", ci))
        if rng.random() < 0.4:
            segs.append(Seg.marker((rng.randint(0, 16), 30), ("m",)))
        try:
            td = td_sweep(segs)
        except GeometryError:
            continue
        if td.intersections() != []:
            # Chains may still touch at shared station points; assembly
            # handles shared endpoints but not crossings or interior hits.
            proper = False
            endpoints = {sym_geom(s.a) for s in segs} | {
                sym_geom(s.b) for s in segs
            }
            for g in td.intersections():
                if g not in endpoints:
                    proper = True
            if proper:
                continue
        rebuilt = assemble(segs, targets_from(td), td.box)
        assert rebuilt.canonicalize() == td.canonicalize()
        assert walls_by_owner(rebuilt) == walls_by_owner(td)
        assert edge_multiset(rebuilt) == edge_multiset(td)
        rounds += 1
    assert rounds > 25


def test_locator_batch_matches_single():
    rng = random.Random(606)
    segs = random_segs(rng, 10, span=10, allow_vertical=True)
    try:
        td = td_sweep(segs)
    except GeometryError:
        pytest.skip("random draw hit an overlap")
    loc = PointLocator(td)
    queries = [
        ((Fraction(rng.randint(0, 40), 4), Fraction(rng.randint(0, 40), 4)), "right")
        for _ in range(25)
    ]
    batch = loc.locate_many(queries)
    singles = [loc.locate(p, b) for p, b in queries]
    assert batch == singles
