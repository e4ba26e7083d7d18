"""FK cluster decomposition, rescaled counting measures, and the
diameter-cutoff magnetization field."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import EmptyCluster, MissingSign
from .lattice import MAG_EXPONENT, BoundaryCondition, LatticeDomain
from .state import BondConfig


@dataclass
class ClusterDecomposition:
    """Partition of domain sites into FK clusters.

    labels[s] is the cluster index of site s; indices run over first-visit
    row-major order.  boundary_label is -1 when no site connects to the
    wired boundary (always under free bc).
    """

    domain: LatticeDomain
    labels: np.ndarray
    sizes: np.ndarray
    boundary_label: int

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)

    @property
    def n_internal(self) -> int:
        return self.n_clusters - (1 if self.boundary_label >= 0 else 0)

    def is_boundary(self, c: int) -> bool:
        return c == self.boundary_label

    def cluster_sites(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def internal_sizes(self) -> np.ndarray:
        if self.boundary_label < 0:
            return self.sizes
        return np.delete(self.sizes, self.boundary_label)

    def boundary_size(self) -> int:
        return int(self.sizes[self.boundary_label]) if self.boundary_label >= 0 else 0


def find_clusters(omega: BondConfig, bc: BoundaryCondition) -> ClusterDecomposition:
    """Decompose a bond configuration into clusters (union-find).

    Two sites share a cluster iff joined by a path of open edges; open
    external edges join sites through the identified boundary vertex.
    """
    omega.check_bc(bc)
    dom = omega.domain
    n = dom.n_sites
    wired = bc is BoundaryCondition.PLUS_WIRED
    parent = np.empty(n + 1, dtype=np.int32)
    labels = np.empty(n, dtype=np.int32)
    sizes = np.empty(n + 1, dtype=np.int64)
    root_label = np.empty(n + 1, dtype=np.int32)
    n_clusters, boundary_label = _kernels.label_bonds(
        dom.internal_edges[:, 0], dom.internal_edges[:, 1], omega.values,
        dom.n_internal, dom.ext_edge_site, wired,
        parent, labels, sizes, root_label)
    return ClusterDecomposition(domain=dom, labels=labels,
                                sizes=sizes[:n_clusters].copy(),
                                boundary_label=boundary_label)


def cluster_diameter(points) -> float:
    """Exact Euclidean diameter (max pairwise distance) of a point set."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    k = len(pts)
    if k == 0:
        raise EmptyCluster("diameter of an empty site set")
    if k == 1:
        return 0.0
    if k <= 512:
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        return float(np.sqrt(d2.max()))
    from scipy.spatial import ConvexHull, QhullError
    try:
        hull = pts[ConvexHull(pts).vertices]
    except QhullError:
        # collinear set: extremes along the spanning direction
        direction = pts[np.argmax(np.abs(pts - pts[0]).sum(axis=1))] - pts[0]
        proj = pts @ direction
        return float(np.linalg.norm(pts[np.argmax(proj)] - pts[np.argmin(proj)]))
    d2 = ((hull[:, None, :] - hull[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


@dataclass
class CountingMeasure:
    """Atomic measure with equal atom weights on a cluster's sites."""

    positions: np.ndarray      # (k, 2)
    weight: float
    cluster_index: int = -1
    is_boundary: bool = False

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    @property
    def mass(self) -> float:
        return self.weight * self.n_atoms

    @cached_property
    def diameter(self) -> float:
        return cluster_diameter(self.positions)

    def integrate(self, f) -> float:
        """Pair the measure with a test function (vectorized over (k,2))."""
        return self.weight * float(np.sum(f(self.positions)))


def rescaled_measures(decomp: ClusterDecomposition, a: float | None = None) -> list:
    """One counting measure per cluster, atom weight a**(15/8)."""
    if a is None:
        a = decomp.domain.a
    pos = decomp.domain.positions()
    weight = a ** MAG_EXPONENT
    out = []
    order = np.argsort(decomp.labels, kind="stable")
    bounds = np.searchsorted(decomp.labels[order], np.arange(decomp.n_clusters + 1))
    for c in range(decomp.n_clusters):
        sites = order[bounds[c]:bounds[c + 1]]
        out.append(CountingMeasure(positions=pos[sites], weight=weight,
                                   cluster_index=c,
                                   is_boundary=decomp.is_boundary(c)))
    return out


def cutoff_field_eval(measures, signs, epsilon: float, f) -> float:
    """Evaluate the cutoff field: sum of sign * measure(f) over clusters of
    diameter > epsilon (epsilon <= 0 keeps every cluster, recovering the
    full rescaled lattice field)."""
    signs = np.asarray(signs, dtype=np.float64)
    if signs.shape != (len(measures),) or not np.all(np.isfinite(signs)):
        raise MissingSign("need one finite sign per cluster")
    total = 0.0
    for mu, s in zip(measures, signs):
        if mu.is_boundary and s != 1:
            raise MissingSign("boundary cluster sign must be +1")
        if epsilon <= 0 or mu.diameter > epsilon:
            total += s * mu.integrate(f)
    return total


def cluster_diameters_above(decomp: ClusterDecomposition, min_diam_grid: float):
    """Exact diameters (grid units) of clusters whose bounding box allows a
    diameter > min_diam_grid; cheap bbox screen first, hull only as needed.

    Returns (cluster_indices, diameters_grid).
    """
    dom = decomp.domain
    ncl = decomp.n_clusters
    bbox = np.empty((ncl, 4), dtype=np.int32)
    _kernels.cluster_bboxes(decomp.labels, dom.nx, dom.ny, ncl, bbox)
    w = (bbox[:, 1] - bbox[:, 0]).astype(np.float64)
    h = (bbox[:, 3] - bbox[:, 2]).astype(np.float64)
    diag = np.hypot(w, h)
    cand = np.flatnonzero(diag > min_diam_grid)
    out_idx = []
    out_diam = []
    xs = np.empty(dom.n_sites, dtype=np.int64)
    ys = np.empty(dom.n_sites, dtype=np.int64)
    for c in cand:
        k = _kernels.gather_cluster(decomp.labels, c, xs, ys, dom.nx)
        d = np.sqrt(_kernels.diameter_sq_grid(xs[:k], ys[:k], k))
        if d > min_diam_grid:
            out_idx.append(int(c))
            out_diam.append(float(d))
    return np.asarray(out_idx, dtype=np.int64), np.asarray(out_diam)


def largest_internal_diameter(decomp: ClusterDecomposition) -> float:
    """Exact diameter (grid units) of the largest internal cluster."""
    dom = decomp.domain
    ncl = decomp.n_clusters
    bbox = np.empty((ncl, 4), dtype=np.int32)
    _kernels.cluster_bboxes(decomp.labels, dom.nx, dom.ny, ncl, bbox)
    w = (bbox[:, 1] - bbox[:, 0]).astype(np.float64)
    h = (bbox[:, 3] - bbox[:, 2]).astype(np.float64)
    if decomp.boundary_label >= 0:
        w[decomp.boundary_label] = -1.0
        h[decomp.boundary_label] = -1.0
    lower = np.maximum(w, h).max()
    diag = np.hypot(np.maximum(w, 0), np.maximum(h, 0))
    best = 0.0
    xs = np.empty(dom.n_sites, dtype=np.int64)
    ys = np.empty(dom.n_sites, dtype=np.int64)
    for c in np.flatnonzero(diag >= lower):
        if decomp.is_boundary(int(c)):
            continue
        k = _kernels.gather_cluster(decomp.labels, int(c), xs, ys, dom.nx)
        d = np.sqrt(_kernels.diameter_sq_grid(xs[:k], ys[:k], k))
        best = max(best, float(d))
    return best
