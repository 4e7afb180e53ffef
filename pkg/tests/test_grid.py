import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from stokes_fdm import geometry as geo
from stokes_fdm import grid as G


def classified(domain, h):
    g = G.build(domain, h)
    return g, G.classify(g, domain)


@pytest.mark.parametrize("k,expect", [(1, 9), (2, 49), (3, 225)])
def test_square_unknown_counts(k, expect):
    g = G.Grid(geo.square_domain(), 2.0 ** -k, check_features=False)
    assert g.n_unknowns == expect
    assert g.n_nodes == (2 ** (k + 1) + 1) ** 2


def test_square_classes_at_h_eighth():
    g, cls = classified(geo.square_domain(), 1 / 8)
    c = cls.counts()
    assert c["side-x"] == 26 and c["side-y"] == 26
    assert c["corner-adj"] == 4 and c["special"] == 0
    assert c["interior"] == 13 * 13
    for e_id in range(4):
        assert (cls.edge[cls.kind == G.SIDE_X] == e_id).sum() + (cls.edge[cls.kind == G.SIDE_Y] == e_id).sum() == 13


def test_lshape_corner_classes():
    g, cls = classified(geo.lshape_domain(), 1 / 4)
    c = cls.counts()
    assert c["corner-adj"] == 8
    assert c["special"] == 2
    # the two special nodes sit one step from the reentrant corner (0, 0) on its edge lines
    spec = cls.members(G.SPECIAL)
    pts = sorted((float(g.x(g.nodes_i[k])), float(g.y(g.nodes_j[k]))) for k in spec)
    assert pts == [(-0.25, 0.0), (0.0, 0.25)]
    # variants name the direction from the node to the corner
    re = [cid for cid, cn in enumerate(g.corners) if len(cn.quadrant) == 3]
    variants = sorted(cls.VARIANTS[cls.variant[k]] for k in cls.members(G.CORNER_ADJ) if cls.corner[k] in re)
    assert variants == ["left-bot", "right-bot", "right-up"]


def test_triply_connected_needs_h_sixteenth():
    with pytest.raises(G.FeatureTooSmall):
        G.build(geo.triply_connected_domain(), 1 / 8)
    g, cls = classified(geo.triply_connected_domain(), 1 / 16)
    assert sum(cls.counts().values()) == g.n_unknowns
    assert cls.counts()["special"] == 24


def test_nonconforming_mesh_is_rejected():
    with pytest.raises(G.NonconformingMesh):
        G.build(geo.square_domain(), 0.3)
    with pytest.raises(G.GridError):
        G.build(geo.square_domain(), -1.0)


@st.composite
def notched_rectangles(draw):
    """Lattice rectangles with a rectangular notch cut from one corner and an optional hole."""
    W = draw(st.integers(9, 20))
    H = draw(st.integers(9, 20))
    nw = draw(st.integers(0, W - 5))
    nh = draw(st.integers(4, H - 5)) if nw >= 4 else 0
    outer = [(0, 0), (W, 0), (W, H), (0, H)]
    if nw >= 4:
        corner = draw(st.integers(0, 3))
        pts = {
            0: [(nw, 0), (W, 0), (W, H), (0, H), (0, nh), (nw, nh)],
            1: [(0, 0), (W - nw, 0), (W - nw, nh), (W, nh), (W, H), (0, H)],
            2: [(0, 0), (W, 0), (W, H - nh), (W - nw, H - nh), (W - nw, H), (0, H)],
            3: [(0, 0), (W, 0), (W, H), (nw, H), (nw, H - nh), (0, H - nh)],
        }
        outer = pts[corner]
    holes = []
    if draw(st.booleans()) and W >= 16 and H >= 16:
        x0 = draw(st.integers(6, W - 10))
        y0 = draw(st.integers(6, H - 10))
        holes = [[(x0, y0), (x0 + 4, y0), (x0 + 4, y0 + 4), (x0, y0 + 4)]]
    return outer, holes


@settings(max_examples=60, deadline=None)
@given(notched_rectangles())
def test_classes_partition_the_unknowns(spec):
    outer, holes = spec
    try:
        dom = geo.RectilinearDomain(outer, holes)
        g, cls = classified(dom, 1.0)
    except (geo.InvalidDomain, G.GridError):
        assume(False)
    assert len(cls) == g.n_unknowns
    assert sum(cls.counts().values()) == g.n_unknowns
    assert (cls.kind >= 0).all()
    ni, nj = g.nodes_i, g.nodes_j
    for k in cls.members(G.INTERIOR):
        for di in range(-2, 3):
            for dj in range(-2, 3):
                assert g.code_at(ni[k] + di, nj[k] + dj) <= 1
    for kind in (G.SIDE_X, G.SIDE_Y):
        for k in cls.members(kind):
            e = g.edges[cls.edge[k]]
            fixed, along = (ni[k], nj[k]) if kind == G.SIDE_X else (nj[k], ni[k])
            assert fixed == e.fixed + e.sigma
            assert e.a + 2 <= along <= e.b - 2
    for k in cls.members(G.CORNER_ADJ):
        cn = g.corners[cls.corner[k]]
        assert abs(ni[k] - cn.i) == 1 and abs(nj[k] - cn.j) == 1


def test_dump_csv_lists_every_closed_domain_node():
    g, cls = classified(geo.lshape_domain(), 1 / 4)
    rows = G.dump_csv(g, cls).strip().splitlines()
    assert rows[0] == "i,j,x,y,class,detail"
    assert len(rows) - 1 == g.n_nodes
    names = {r.split(",")[4] for r in rows[1:]}
    assert {"boundary", "interior", "side-x", "side-y", "corner-adj", "special"} <= names
