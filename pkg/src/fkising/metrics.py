"""Distances between loops, loop ensembles, cluster collections, and finite
measure collections.

d_loop is the cyclic discrete Frechet distance: the monotone-reparametrization
optimum over polygonal loops, minimized over cyclic shifts.  On polygonal
curves it upper-bounds the continuous Frechet distance by at most one edge
length.  The Prokhorov distance is computed exactly for finite atomic
measures by reducing the subset inequalities to a max-flow feasibility check
at each pairwise-distance breakpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from .errors import (DegenerateLoop, EmptyCollection, EmptyEnsemble)


@dataclass
class PolyLoop:
    """Closed polygonal curve given by its cyclic vertex list."""

    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        if len(self.vertices) < 3:
            raise DegenerateLoop("a loop needs at least 3 vertices")


@dataclass
class FiniteMeasure2D:
    """Finite nonnegative atomic measure in the plane."""

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 2)
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(self.positions) != len(self.weights):
            raise ValueError("positions/weights length mismatch")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


@njit(cache=True)
def _dfd(p, q, shift, ca):
    n = p.shape[0]
    m = q.shape[0]
    for i in range(n):
        for j in range(m):
            qj = (j + shift) % m
            dx = p[i, 0] - q[qj, 0]
            dy = p[i, 1] - q[qj, 1]
            d = np.sqrt(dx * dx + dy * dy)
            if i == 0 and j == 0:
                ca[0, 0] = d
            elif i == 0:
                ca[0, j] = max(ca[0, j - 1], d)
            elif j == 0:
                ca[i, 0] = max(ca[i - 1, 0], d)
            else:
                best = ca[i - 1, j]
                if ca[i - 1, j - 1] < best:
                    best = ca[i - 1, j - 1]
                if ca[i, j - 1] < best:
                    best = ca[i, j - 1]
                ca[i, j] = max(best, d)
    return ca[n - 1, m - 1]


@njit(cache=True)
def _cyclic_dfd(p, q):
    m = q.shape[0]
    ca = np.empty((p.shape[0], m), dtype=np.float64)
    best = 1e300
    for shift in range(m):
        d = _dfd(p, q, shift, ca)
        if d < best:
            best = d
    return best


def loop_distance(l1, l2) -> float:
    """Cyclic discrete Frechet distance between two closed polygonal loops."""
    p = l1.vertices if isinstance(l1, PolyLoop) else PolyLoop(l1).vertices
    q = l2.vertices if isinstance(l2, PolyLoop) else PolyLoop(l2).vertices
    # minimizing over shifts of the shorter loop bounds the work; the metric
    # is symmetric either way
    if len(q) <= len(p):
        return float(_cyclic_dfd(p, q))
    return float(_cyclic_dfd(q, p))


def _hausdorff_over(d, items1, items2) -> float:
    best = 0.0
    for a in items1:
        best = max(best, min(d(a, b) for b in items2))
    for b in items2:
        best = max(best, min(d(a, b) for a in items1))
    return best


def loop_ensemble_distance(f1, f2) -> float:
    """Hausdorff distance between loop sets under d_loop."""
    f1, f2 = list(f1), list(f2)
    if not f1 or not f2:
        raise EmptyEnsemble("loop ensembles must be nonempty")
    return _hausdorff_over(loop_distance, f1, f2)


def hausdorff_distance(a, b) -> float:
    """Hausdorff distance between two nonempty point sets."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise EmptyCollection("point sets must be nonempty")
    ta, tb = cKDTree(a), cKDTree(b)
    return float(max(tb.query(a)[0].max(), ta.query(b)[0].max()))


def cluster_collection_distance(s1, s2) -> float:
    """Hausdorff-of-Hausdorff distance between collections of point sets."""
    s1, s2 = list(s1), list(s2)
    if not s1 or not s2:
        raise EmptyCollection("collections must be nonempty")
    return _hausdorff_over(hausdorff_distance, s1, s2)


def _max_flow_dense(cap_sp, cap_st, adj):
    """Edmonds-Karp on the bipartite transport graph.

    cap_sp: source->mu-atom capacities; cap_st: nu-atom->sink; adj[i, j]
    True where transport between atoms i, j is allowed (unbounded capacity).
    """
    k1, k2 = adj.shape
    n = k1 + k2 + 2
    src, snk = n - 2, n - 1
    cap = np.zeros((n, n), dtype=np.float64)
    cap[src, :k1] = cap_sp
    cap[k1: k1 + k2, snk] = cap_st
    big = cap_sp.sum() + cap_st.sum() + 1.0
    cap[:k1, k1: k1 + k2] = np.where(adj, big, 0.0)
    flow = 0.0
    from collections import deque
    while True:
        # BFS (Edmonds-Karp) for a shortest augmenting path
        prev = np.full(n, -1, dtype=np.int64)
        prev[src] = src
        queue = deque([src])
        while queue and prev[snk] < 0:
            u = queue.popleft()
            for v in np.flatnonzero(cap[u] > 1e-14):
                if prev[v] < 0:
                    prev[v] = u
                    queue.append(v)
        if prev[snk] < 0:
            return flow
        aug = np.inf
        v = snk
        while v != src:
            u = prev[v]
            aug = min(aug, cap[u, v])
            v = u
        v = snk
        while v != src:
            u = prev[v]
            cap[u, v] -= aug
            cap[v, u] += aug
            v = u
        flow += aug


def prokhorov_distance(mu: FiniteMeasure2D, nu: FiniteMeasure2D) -> float:
    """Exact Prokhorov distance between finite atomic measures.

    The defining inequalities mu(A) <= nu(A^eps) + eps and the symmetric one
    need only be checked on atom subsets; by min-cut duality the worst-case
    subset defect at level eps equals total_mass - max_flow over the graph
    joining atoms within distance eps, so the smallest feasible eps is found
    exactly by scanning the pairwise-distance breakpoints.
    """
    m1, m2 = mu.total_mass, nu.total_mass
    if len(mu.positions) == 0 or len(nu.positions) == 0:
        return max(m1, m2)
    diff = mu.positions[:, None, :] - nu.positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    breakpoints = np.unique(np.concatenate(([0.0], dist.ravel())))
    max_tot = max(m1, m2)

    def defect(eps):
        flow = _max_flow_dense(mu.weights, nu.weights, dist <= eps + 1e-15)
        return max_tot - flow

    best = np.inf
    for k, d_k in enumerate(breakpoints):
        c_k = defect(d_k)
        x = max(d_k, c_k)
        upper = breakpoints[k + 1] if k + 1 < len(breakpoints) else np.inf
        if x < upper:
            best = min(best, x)
        if c_k <= d_k:
            break  # defect only shrinks while the interval floor grows
    return float(best)


def measure_collection_distance(s1, s2) -> float:
    """Hausdorff distance between measure collections under the Prokhorov
    metric."""
    s1, s2 = list(s1), list(s2)
    if not s1 or not s2:
        raise EmptyCollection("measure collections must be nonempty")
    return _hausdorff_over(prokhorov_distance, s1, s2)
