import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FREE, PLUS, random_bonds
from fkising.clusters import find_clusters
from fkising.errors import UnsupportedBC
from fkising.lattice import build_domain, grid_domain
from fkising.loops import (dual_cluster_info, largest_dual_diameter,
                           loop_stats, trace_loops)
from fkising.oracle import bfs_clusters
from fkising.state import BondConfig


def test_single_site_loop():
    d = build_domain(1.0, (0, 0, 0.4, 0.4))
    loops = trace_loops(BondConfig.all_closed(d))
    assert len(loops) == 1
    lp = loops[0]
    assert lp.length == 4
    verts = {tuple(v) for v in lp.vertices}
    assert verts == {(-0.5, 0.0), (0.5, 0.0), (0.0, -0.5), (0.0, 0.5)}


def test_domino_single_loop(dom_2site):
    omega = BondConfig.all_closed(dom_2site)
    omega.values[0] = 1
    loops = trace_loops(omega)
    assert len(loops) == 1
    assert loops[0].length == 8  # covers all 4N medial edges


def test_two_sites_closed_two_loops(dom_2site):
    loops = trace_loops(BondConfig.all_closed(dom_2site))
    assert sorted(lp.length for lp in loops) == [4, 4]


def test_empty_2x2_four_unit_loops(dom_2x2):
    loops = trace_loops(BondConfig.all_closed(dom_2x2))
    assert sorted(lp.length for lp in loops) == [4, 4, 4, 4]


def test_open_plaquette_inner_diamond(dom_2x2):
    omega = BondConfig.all_closed(dom_2x2)
    omega.values[: dom_2x2.n_internal] = 1
    loops = trace_loops(omega)
    # outer loop around the 4-cluster plus the diamond inside the plaquette
    assert sorted(lp.length for lp in loops) == [4, 12]


def test_wired_style_config_rejected(dom_2x2):
    omega = BondConfig.all_closed(dom_2x2)
    omega.values[dom_2x2.n_internal] = 1
    with pytest.raises(UnsupportedBC):
        trace_loops(omega)


def test_loop_cluster_reference(dom_3x3):
    rng = np.random.default_rng(5)
    omega = BondConfig(dom_3x3, random_bonds(dom_3x3, rng))
    loops = trace_loops(omega)
    decomp = find_clusters(omega, FREE)
    # each cluster is bounded by at least one loop; references are valid sites
    referenced = {decomp.labels[lp.cluster_site] for lp in loops}
    assert referenced == set(range(decomp.n_clusters))


@settings(max_examples=80, deadline=None)
@given(nx=st.integers(1, 9), ny=st.integers(1, 9), seed=st.integers(0, 99999),
       p=st.floats(0.05, 0.95))
def test_partition_and_euler_identity(nx, ny, seed, p):
    domain = build_domain(1.0, (0, 0, nx - 1 + 0.1, ny - 1 + 0.1))
    rng = np.random.default_rng(seed)
    vals = random_bonds(domain, rng, p=p)
    n_loops, total, lengths = loop_stats(vals, domain)
    assert total == 4 * domain.n_sites          # medial-edge partition
    assert lengths.sum() == total
    n_clusters = len(bfs_clusters(domain, vals, False)[1])
    n_dual, _ = dual_cluster_info(vals, domain)
    assert n_loops == n_clusters + n_dual - 1   # Euler relation


def test_dual_count_examples(dom_2x2):
    # all closed: one dual sea
    n_dual, _ = dual_cluster_info(BondConfig.all_closed(dom_2x2).values, dom_2x2)
    assert n_dual == 1
    # all internal open: sea plus isolated plaquette face
    omega = BondConfig.all_closed(dom_2x2)
    omega.values[: dom_2x2.n_internal] = 1
    n_dual2, _ = dual_cluster_info(omega.values, dom_2x2)
    assert n_dual2 == 2


def test_largest_dual_diameter_all_closed(dom_2x2):
    # all primal closed: the dual sea spans all 3x3 faces
    d = largest_dual_diameter(BondConfig.all_closed(dom_2x2).values, dom_2x2)
    assert d == pytest.approx(2 * np.sqrt(2))


def test_loop_vertices_are_edge_midpoints(dom_3x3):
    rng = np.random.default_rng(11)
    omega = BondConfig(dom_3x3, random_bonds(dom_3x3, rng))
    for lp in trace_loops(omega):
        frac = lp.vertices - np.floor(lp.vertices)
        # exactly one coordinate sits on a half-integer
        halves = np.isclose(frac, 0.5)
        assert np.all(halves.sum(axis=1) == 1)
        # consecutive vertices are medial-lattice neighbors (distance
        # sqrt(2)/2 at unit spacing)
        nxt = np.roll(lp.vertices, -1, axis=0)
        dist = np.linalg.norm(lp.vertices - nxt, axis=1)
        assert np.allclose(dist, np.sqrt(0.5))
