import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkising.errors import EmptyDomain, UnknownSite
from fkising.lattice import (BoundaryCondition, build_domain, domain_from_json,
                             domain_to_json, grid_domain, neighbors)


def test_2x2_counts():
    d = build_domain(1.0, (0, 0, 1, 1))
    assert (d.n_sites, d.n_internal, d.n_external) == (4, 4, 8)


def test_single_site_counts():
    d = build_domain(1.0, (0, 0, 0.5, 0.5))
    assert (d.n_sites, d.n_internal, d.n_external) == (1, 0, 4)


def test_half_spacing_unit_square():
    assert build_domain(0.5, (0, 0, 1, 1)).n_sites == 9


def test_closed_boundary_membership():
    # lattice points on the rectangle edge are inside
    d = build_domain(1.0, (0, 0, 2, 1))
    assert d.n_sites == 6


def test_empty_domain_raises():
    with pytest.raises(EmptyDomain):
        build_domain(1.0, (0.1, 0.1, 0.9, 0.9))


def test_degenerate_rect_raises():
    with pytest.raises(ValueError):
        build_domain(1.0, (1, 0, 0, 1))
    with pytest.raises(ValueError):
        build_domain(-1.0, (0, 0, 1, 1))


def test_every_external_edge_has_one_inside_endpoint():
    d = build_domain(1.0, (0, 0, 3, 2))
    for k in range(d.n_external):
        jx, jy = d.ext_edge_out[k]
        assert not (0 <= jx < d.nx and 0 <= jy < d.ny)
        s = d.ext_edge_site[k]
        assert 0 <= s < d.n_sites


def test_boundary_set_is_exactly_adjacent_outside_points():
    d = build_domain(1.0, (0, 0, 2, 2))
    boundary = {tuple(xy) for xy in d.ext_edge_out}
    expected = set()
    for ix in range(3):
        expected.add((ix, -1))
        expected.add((ix, 3))
    for iy in range(3):
        expected.add((-1, iy))
        expected.add((3, iy))
    assert boundary == expected


def test_edge_count_identity():
    # every site has exactly 4 incident edges in E
    for rect in [(0, 0, 1, 1), (0, 0, 4, 2), (0, 0, 0.5, 3)]:
        d = build_domain(1.0, rect)
        assert 2 * d.n_internal + d.n_external == 4 * d.n_sites


def test_neighbors_corner_interior_single():
    d22 = build_domain(1.0, (0, 0, 1, 1))
    corner = neighbors(d22, 0)
    assert sum(nb.internal for nb in corner) == 2
    d33 = build_domain(1.0, (0, 0, 2, 2))
    center = neighbors(d33, 4)
    assert sum(nb.internal for nb in center) == 4
    d1 = build_domain(1.0, (0, 0, 0.4, 0.4))
    lone = neighbors(d1, 0)
    assert sum(nb.internal for nb in lone) == 0
    assert len(lone) == 4


def test_neighbors_unknown_site():
    d = build_domain(1.0, (0, 0, 1, 1))
    with pytest.raises(UnknownSite):
        neighbors(d, 99)


def test_neighbor_edges_consistent_with_edge_sets():
    d = build_domain(1.0, (0, 0, 3, 2))
    for s in range(d.n_sites):
        for nb in neighbors(d, s):
            assert d.is_internal_edge(nb.edge) == nb.internal


def test_row_major_site_order():
    d = build_domain(1.0, (0, 0, 2, 1))
    pos = d.positions()
    assert pos[0].tolist() == [0, 0]
    assert pos[1].tolist() == [1, 0]
    assert pos[3].tolist() == [0, 1]


def test_serialization_round_trip():
    d = build_domain(0.25, (0.5, -1, 2, 0.75))
    text = domain_to_json(d, BoundaryCondition.PLUS_WIRED)
    d2, bc = domain_from_json(text)
    assert bc is BoundaryCondition.PLUS_WIRED
    assert d2.nx == d.nx and d2.ny == d.ny
    assert np.array_equal(d2.internal_edges, d.internal_edges)
    assert np.array_equal(d2.ext_edge_site, d.ext_edge_site)
    assert np.allclose(d2.positions(), d.positions())
    assert json.loads(text)["a"] == 0.25


@settings(max_examples=40, deadline=None)
@given(nx=st.integers(1, 7), ny=st.integers(1, 7),
       tx=st.integers(-5, 5), ty=st.integers(-5, 5))
def test_translation_consistency(nx, ny, tx, ty):
    a = 0.5
    base = build_domain(a, (0, 0, (nx - 1) * a, (ny - 1) * a))
    moved = build_domain(a, (tx * a, ty * a, (tx + nx - 1) * a, (ty + ny - 1) * a))
    assert moved.n_sites == base.n_sites
    assert moved.n_internal == base.n_internal
    assert moved.n_external == base.n_external
    assert np.array_equal(moved.internal_edges, base.internal_edges)
    assert np.allclose(moved.positions() - [tx * a, ty * a], base.positions())


def test_grid_domain_and_midpoints():
    d = grid_domain(3, a=2.0)
    assert d.n_sites == 9
    # internal H edge 0 joins sites 0 and 1: midpoint at (1, 0)
    assert d.edge_midpoint(0) == (1.0, 0.0)
