"""Polygon validation, graph-to-chain walks and triangulation checks."""

import random
from fractions import Fraction

import pytest

from trapdecomp.disjoint import AlgorithmParams
from trapdecomp.errors import InvalidInputError
from trapdecomp.geom import Chain, segment_intersection
from trapdecomp.poly import (
    PolygonWithHoles,
    graph_to_chains,
    holes_to_chains,
    point_in_polygon,
    polygon_area2,
    triangulate,
)

SQ = [(0, 0), (10, 0), (10, 10), (0, 10)]


def poly_area2(poly):
    a = polygon_area2(poly.outer.points)
    for h in poly.holes:
        a += polygon_area2(h.points)  # holes are clockwise: negative
    return a


def check_triangulation(poly, tris):
    assert len(tris) == poly.n + 2 * poly.h - 2
    total = 0
    for a, b, c in tris:
        a2 = polygon_area2([a, b, c])
        assert a2 > 0  # counterclockwise and non-degenerate
        total += a2
        cx = (Fraction(a[0]) + b[0] + c[0]) / 3
        cy = (Fraction(a[1]) + b[1] + c[1]) / 3
        assert point_in_polygon((cx, cy), poly.outer)
        for hl in poly.holes:
            assert not point_in_polygon((cx, cy), hl)
        for p in (a, b, c):
            assert p in _vertex_set(poly)
    assert total == poly_area2(poly)
    # edges of distinct triangles may only share endpoints or coincide
    edges = set()
    for t in tris:
        for k in range(3):
            p, q = t[k], t[(k + 1) % 3]
            edges.add((p, q) if p <= q else (q, p))
    edges = sorted(edges)
    for i in range(len(edges)):
        for j in range(i + 1, len(edges)):
            (a, b), (c, d) = edges[i], edges[j]
            hit = segment_intersection(a, b, c, d)
            if hit is None:
                continue
            kind, val = hit
            assert kind == "point" and val in (a, b) and val in (c, d)


def _vertex_set(poly):
    out = set(poly.outer.points)
    for h in poly.holes:
        out.update(h.points)
    return out


def test_orientation_normalized():
    cw_outer = list(reversed(SQ))
    poly = PolygonWithHoles(cw_outer, [[(4, 4), (6, 4), (6, 6), (4, 6)]])
    assert polygon_area2(poly.outer.points) > 0
    assert polygon_area2(poly.holes[0].points) < 0


def test_invalid_polygons():
    with pytest.raises(InvalidInputError):
        PolygonWithHoles(Chain([(0, 0), (4, 0), (4, 4)]))  # open chain
    with pytest.raises(InvalidInputError):
        PolygonWithHoles([(0, 0), (4, 0), (8, 0)])  # zero area
    with pytest.raises(InvalidInputError):
        PolygonWithHoles([(0, 0), (4, 4), (4, 0), (0, 4)])  # bowtie
    with pytest.raises(InvalidInputError):
        PolygonWithHoles(SQ, [[(8, 8), (14, 8), (14, 14), (8, 14)]])  # crosses
    with pytest.raises(InvalidInputError):
        PolygonWithHoles(SQ, [[(20, 0), (24, 0), (22, 3)]])  # outside
    with pytest.raises(InvalidInputError):
        PolygonWithHoles(SQ, [
            [(1, 1), (9, 1), (9, 9), (1, 9)],
            [(4, 4), (6, 4), (5, 6)],
        ])  # nested holes
    with pytest.raises(InvalidInputError):
        PolygonWithHoles(SQ, [[(0, 0), (4, 2), (2, 4)]])  # touches outer


def test_holes_to_chains_counts():
    tri = PolygonWithHoles([(0, 0), (8, 0), (4, 6)])
    assert holes_to_chains(tri).h == 1
    two = PolygonWithHoles(SQ, [
        [(1, 1), (3, 1), (2, 3)],
        [(6, 6), (8, 6), (7, 8)],
    ])
    cs = holes_to_chains(two)
    assert cs.h == 3 and cs.n == two.n


def test_point_in_polygon():
    sq = Chain(SQ, closed=True)
    assert point_in_polygon((5, 5), sq)
    assert not point_in_polygon((15, 5), sq)
    assert not point_in_polygon((0, 5), sq)  # boundary
    assert not point_in_polygon((0, 0), sq)  # corner
    assert not point_in_polygon((5, 10), sq)


def test_graph_single_cycle():
    cs = graph_to_chains(SQ, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert cs.h == 1
    pts = cs.chains[0].points
    assert len(pts) == 5 and pts[0] == pts[-1]


def test_graph_tree_doubles_edges():
    cs = graph_to_chains([(0, 0), (4, 0), (8, 2)], [(0, 1), (1, 2)])
    assert cs.h == 1
    assert len(cs.chains[0].points) == 5  # 2 edges walked twice
    star = graph_to_chains(
        [(0, 0), (4, 0), (0, 4), (-4, -2)], [(0, 1), (0, 2), (0, 3)])
    assert len(star.chains[0].points) == 7


def test_graph_components_and_isolated():
    cs = graph_to_chains(
        [(0, 0), (2, 0), (10, 0), (12, 1), (20, 20)],
        [(0, 1), (2, 3)])
    assert cs.h == 3
    sizes = sorted(len(c.points) for c in cs.chains)
    assert sizes == [1, 3, 3]


def test_graph_even_component_single_pass():
    pts = [(0, 0), (4, 0), (4, 4), (0, 4), (-4, 0), (-4, -4), (0, -4)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (4, 5), (5, 6), (6, 0)]
    cs = graph_to_chains(pts, edges)
    assert cs.h == 1
    walk = cs.chains[0].points
    assert len(walk) == 9 and walk[0] == walk[-1]


def test_graph_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        graph_to_chains([(0, 0), (4, 4), (0, 4), (4, 0)], [(0, 1), (2, 3)])
    with pytest.raises(InvalidInputError):  # endpoint inside another edge
        graph_to_chains([(0, 0), (4, 0), (2, 0), (2, 2)], [(0, 1), (2, 3)])
    with pytest.raises(InvalidInputError):  # isolated vertex on an edge
        graph_to_chains([(0, 0), (4, 0), (2, 0)], [(0, 1)])
    with pytest.raises(InvalidInputError):
        graph_to_chains([(0, 0), (4, 0)], [(0, 1), (1, 0)])
    with pytest.raises(InvalidInputError):
        graph_to_chains([(0, 0), (4, 0)], [(0, 0)])
    with pytest.raises(InvalidInputError):
        graph_to_chains([(0, 0), (4, 0)], [(0, 2)])


def test_triangulate_quadrilateral():
    poly = PolygonWithHoles([(0, 0), (6, 0), (7, 5), (1, 4)])
    tris = triangulate(poly)
    assert len(tris) == 2
    check_triangulation(poly, tris)


def test_triangulate_square_with_square_hole():
    poly = PolygonWithHoles(SQ, [[(4, 4), (6, 4), (6, 6), (4, 6)]])
    tris = triangulate(poly)
    assert len(tris) == 8
    check_triangulation(poly, tris)


def test_triangulate_collinear_boundary_runs():
    outer = [(0, 0), (3, 0), (7, 0), (10, 0), (10, 5), (10, 10),
             (5, 10), (0, 10), (0, 4)]
    poly = PolygonWithHoles(outer, [[(4, 4), (6, 5), (4, 6)]])
    check_triangulation(poly, triangulate(poly))


def test_triangulate_parabola_holes():
    outer = [(-16, 16), (16, 16), (0, -16)]
    holes = []
    for x in (-8, 0, 8):
        y = x * x // 16
        holes.append([(x - 1, y - 1), (x + 1, y - 1),
                      (x + 1, y + 1), (x - 1, y + 1)])
    poly = PolygonWithHoles(outer, holes)
    tris = triangulate(poly)
    assert len(tris) == poly.n + 4
    check_triangulation(poly, tris)


def test_triangulate_parameter_independent():
    poly = PolygonWithHoles(SQ, [
        [(2, 2), (4, 2), (3, 4)],
        [(6, 5), (8, 5), (8, 8), (6, 8)],
    ])
    a = triangulate(poly)
    b = triangulate(poly, AlgorithmParams(s=4, t=4, base_cutoff=0))
    assert a == b
    check_triangulation(poly, a)


def _star_points(rng, cx, cy):
    dirs = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
    pts = []
    for dx, dy in dirs:
        r = rng.randint(2, 6)
        pts.append((cx + r * dx, cy + r * dy))
    return pts


def test_triangulate_random_stars():
    rng = random.Random(41)
    for _ in range(12):
        poly = PolygonWithHoles(_star_points(rng, 0, 0))
        check_triangulation(poly, triangulate(poly))


def test_triangulate_hole_grid():
    rng = random.Random(8)
    for _ in range(4):
        holes = []
        for i in range(3):
            for j in range(2):
                cx, cy = 8 * i + 5, 8 * j + 5
                k = rng.randint(1, 2)
                holes.append([(cx - k, cy), (cx, cy - k), (cx + k, cy), (cx, cy + k)])
        poly = PolygonWithHoles([(0, 0), (26, 0), (26, 18), (0, 18)], holes)
        check_triangulation(poly, triangulate(poly))
