"""Interval tree over chain x-spans and sorted contacts along its lines.

Chains are distributed over a balanced tree of vertical lines: each chain is
kept at the highest node whose line meets the chain's x-span, so a chain
crossing several lines settles at the shallowest of them.  Along each line
the contacts of the node's chains are gathered into maximal features, sorted
by height, and consecutive features are bridged by vertical fillers.  The
fillers run through contact-free gaps, so the node's figure becomes
connected without gaining a single crossing.

The sorted contact order of disjoint simple chains is heavily constrained:
between two consecutive contacts a chain stays strictly on one side of the
line, and two such excursions on a common side can never interleave.  The
sort validates this nesting and the side bookkeeping as it goes; a violation
means the input was not disjoint (the chains cross somewhere off the line).
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass

from .decomp import Seg
from .errors import GeometryError, InvariantError, NotDisjointError
from .geom import ChainSet, sign, y_at

Feature = namedtuple("Feature", "ylo yhi cid edge dir kind")
# One maximal contact of a chain with a vertical line.  kind is "run" for a
# contact made of chain vertices (and edges lying on the line), "cross" for
# a transversal crossing through an edge interior.  dir is +1 when the chain
# passes left to right, -1 right to left, 0 for a touch.


def chain_span(chain):
    xs = [p[0] for p in chain.points]
    return min(xs), max(xs)


@dataclass
class TreeNode:
    """One vertical line of the tree and the chains kept at it."""

    id: int
    m: object
    cids: list
    depth: int = 0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None


def build_interval_tree(chains: ChainSet):
    """Balanced tree over the chain x-spans.

    The pivot of a node is the lower median of the multiset of span
    endpoints of the chains reaching it, which sends at most half of the
    endpoints to either side; the chain contributing the median stays at
    the node, so both subtrees are strictly smaller.  Returns (root, nodes)
    with nodes listed in creation order (preorder, left before right).  An
    empty input yields a single node pivoted at 0.
    """
    spans = [chain_span(c) for c in chains.chains]
    nodes = []

    def build(cids, depth):
        node = TreeNode(id=len(nodes), m=0, cids=[], depth=depth)
        nodes.append(node)
        if cids:
            ends = sorted(e for cid in cids for e in spans[cid])
            node.m = ends[(len(ends) - 1) // 2]
            node.cids = [c for c in cids if spans[c][0] <= node.m <= spans[c][1]]
            lefts = [c for c in cids if spans[c][1] < node.m]
            rights = [c for c in cids if spans[c][0] > node.m]
            if not node.cids:
                raise InvariantError("pivot misses every span")
            if lefts:
                node.left = build(lefts, depth + 1)
            if rights:
                node.right = build(rights, depth + 1)
        return node

    root = build(list(range(chains.h)), 0)
    return root, nodes


def stab_path(root, x):
    """Nodes whose line could matter for abscissa x: the search path."""
    out = []
    node = root
    while node is not None:
        out.append(node)
        if x < node.m:
            node = node.left
        elif x > node.m:
            node = node.right
        else:
            break
    return out


def _chain_walk(chain, cid, m):
    """Features of one chain on the line x = m, in walk order.

    Returns a list of (key, Feature, enter_side, exit_side) where key is the
    position along the walk, and the sides are -1/+1 for the off-line point
    just before/after the contact (None at an open chain's end on the line).
    """
    pts = chain.points
    k = len(pts)
    on = [p[0] == m for p in pts]
    if all(on):
        ys = [p[1] for p in pts]
        return [(0, Feature(min(ys), max(ys), cid, 0, 0, "run"), None, None)]

    items = []

    def emit_run(run, enter, exitp, anchor, key):
        ys = [pts[t][1] for t in run]
        es = None if enter is None else sign(enter[0] - m)
        xs = None if exitp is None else sign(exitp[0] - m)
        if es is not None and xs is not None and es != xs:
            d = 1 if xs > 0 else -1
        else:
            d = 0
        items.append((key, Feature(min(ys), max(ys), cid, anchor, d, "run"), es, xs))

    if chain.closed:
        off0 = next(t for t in range(k) if not on[t])
        order = [(off0 + t) % k for t in range(k)]
        inv = {v: i for i, v in enumerate(order)}
        i = 0
        while i < k:
            if not on[order[i]]:
                i += 1
                continue
            j = i
            while j + 1 < k and on[order[j + 1]]:
                j += 1
            run = [order[t] for t in range(i, j + 1)]
            emit_run(run, pts[(run[0] - 1) % k], pts[(run[-1] + 1) % k],
                     (run[0] - 1) % k, 2 * i)
            i = j + 1
        for ei in range(chain.num_edges):
            a, b = chain.edge(ei)
            if a[0] < m < b[0] or b[0] < m < a[0]:
                yv = y_at(a, b, m)
                d = 1 if a[0] < m else -1
                items.append((2 * inv[ei] + 1,
                              Feature(yv, yv, cid, ei, d, "cross"),
                              -d, d))
    else:
        i = 0
        while i < k:
            if not on[i]:
                i += 1
                continue
            j = i
            while j + 1 < k and on[j + 1]:
                j += 1
            run = list(range(i, j + 1))
            enter = pts[i - 1] if i > 0 else None
            exitp = pts[j + 1] if j + 1 < k else None
            emit_run(run, enter, exitp, i - 1 if i > 0 else 0, 2 * i)
            i = j + 1
        for ei in range(chain.num_edges):
            a, b = chain.edge(ei)
            if a[0] < m < b[0] or b[0] < m < a[0]:
                yv = y_at(a, b, m)
                d = 1 if a[0] < m else -1
                items.append((2 * ei + 1,
                              Feature(yv, yv, cid, ei, d, "cross"),
                              -d, d))

    items.sort(key=lambda it: it[0])
    return items


def _check_nested(intervals):
    """Intervals (a, b, cid) over feature ranks must be nested or disjoint.

    Each interval is one excursion of a chain between consecutive contacts;
    two interleaved excursions on a common side of the line would force the
    chains to cross somewhere off it.
    """
    stack = []
    for a, b, cid in sorted(intervals, key=lambda iv: (iv[0], -iv[1])):
        while stack and stack[-1][0] <= a:
            stack.pop()
        if stack and stack[-1][0] < b:
            raise NotDisjointError(("chain", stack[-1][1]), ("chain", cid))
        stack.append((b, cid))


def jordan_sort(chains: ChainSet, cids, m, tolerant=False):
    """Sorted contact features of the given chains on the line x = m.

    Features of distinct chains must not overlap; with tolerant=True they
    may share single vertex points, otherwise any shared point raises
    NotDisjointError.  A chain meeting the line twice at one point is not
    simple and raises GeometryError.  The excursion nesting described in the
    module docstring is validated as a side effect.
    """
    walks = {cid: _chain_walk(chains.chains[cid], cid, m) for cid in cids}
    feats = [it[1] for cid in cids for it in walks[cid]]
    feats.sort(key=lambda f: (f.ylo, f.yhi, f.cid, f.edge))

    on_line = None
    if tolerant:
        on_line = {cid: {p[1] for p in chains.chains[cid].points if p[0] == m}
                   for cid in cids}

    f = None
    for g in feats:
        if f is None:
            f = g
            continue
        if g.ylo < f.yhi:
            if (tolerant and f.cid != g.cid
                    and f.kind == "run" and g.kind == "run"
                    and g.ylo == g.yhi and g.ylo in on_line[f.cid]):
                # A vertex shared by both chains may sit inside the other
                # chain's stationary stretch; any deeper contact is caught
                # on the finished decomposition.
                continue
            if f.cid == g.cid:
                raise GeometryError(
                    f"chain {f.cid} meets the line x={m} twice at one point")
            raise NotDisjointError((f.cid, f.edge), (g.cid, g.edge), (m, g.ylo))
        if g.ylo == f.yhi:
            if tolerant and f.kind == "run" and g.kind == "run":
                # Stationary contacts may share one point when vertex
                # sharing is allowed, a chain split at a crossing included.
                f = g
                continue
            if f.cid == g.cid:
                raise GeometryError(
                    f"chain {f.cid} meets the line x={m} twice at one point")
            raise NotDisjointError((f.cid, f.edge), (g.cid, g.edge), (m, g.ylo))
        f = g

    rank = {}
    for r, f in enumerate(feats):
        rank[f] = r

    left_ivs = []
    right_ivs = []
    for cid in cids:
        items = walks[cid]
        if len(items) < 2 and not chains.chains[cid].closed:
            continue
        seq = list(items)
        pairs = list(zip(seq, seq[1:]))
        if chains.chains[cid].closed and len(seq) >= 2:
            pairs.append((seq[-1], seq[0]))
        for (k1, f1, es1, xs1), (k2, f2, es2, xs2) in pairs:
            if xs1 is not None and es2 is not None and xs1 != es2:
                raise InvariantError("inconsistent sides between contacts")
            side = xs1 if xs1 is not None else es2
            if side is None:
                continue
            a, b = rank[f1], rank[f2]
            if a > b:
                a, b = b, a
            if a == b:
                raise InvariantError("repeated feature along a walk")
            (left_ivs if side < 0 else right_ivs).append((a, b, cid))
    if not tolerant:
        # Chains that may share vertices can cross at them, which makes
        # interleaved excursions legal; the contact classification of the
        # finished decomposition still vets every touch.
        _check_nested(left_ivs)
        _check_nested(right_ivs)

    return feats


def line_joiners(feats, m, tag):
    """Vertical fillers bridging the gaps between consecutive features.

    Owners extend the tag tuple with a bottom-to-top counter; touching or
    contained features need no filler, so the reached height is the running
    maximum.
    """
    out = []
    top = None
    for f in feats:
        if top is not None and f.ylo > top:
            out.append(Seg.natural((m, top), (m, f.ylo), tag + (len(out),)))
        top = f.yhi if top is None else max(top, f.yhi)
    return out


def node_figure(chains: ChainSet, node: TreeNode, tolerant=False):
    """Segments of one node's connected figure plus its sorted features.

    The figure is the node's chain edges (markers for single-vertex chains)
    together with the fillers along its line.  Chain-edge owners are
    (cid, edge_index); filler owners are ("join", node.id, k).
    """
    feats = jordan_sort(chains, node.cids, node.m, tolerant)
    segs = []
    for cid in node.cids:
        ch = chains.chains[cid]
        if len(ch.points) == 1:
            segs.append(Seg.marker(ch.points[0], (cid, 0)))
        else:
            for i in range(ch.num_edges):
                a, b = ch.edge(i)
                segs.append(Seg.natural(a, b, (cid, i)))
    segs.extend(line_joiners(feats, node.m, ("join", node.id)))
    return segs, feats
