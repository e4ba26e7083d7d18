"""Medial-lattice loops separating FK clusters from dual clusters.

Geometry conventions (free boundary condition, rectangular domains):
the square Q=(qx,qy), qx in [0,nx], qy in [0,ny], covers site-grid cell
[qx-1,qx]x[qy-1,qy].  A medial edge is the corner connection (Q, c) with
c in {0:SW, 1:SE, 2:NE, 3:NW}; it exists iff the corner is a domain site,
and it joins the midpoints of the two sides of Q meeting at that corner.
Every domain site contributes exactly four medial edges, so the medial
graph has 4*n_sites edges and every loop decomposition partitions them.

At each primal-edge midpoint the two crossing connections pair up away
from the open bond: an open primal edge makes loops run alongside it
(same square, corner flips within the side), a closed edge - equivalently
an open dual bond - makes them wrap around the shared corner site
(same corner, square reflects across the edge).  Orientation follows the
traversal below, which keeps the adjacent cluster on a fixed side.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit

from . import _kernels
from .clusters import cluster_diameter
from .errors import UnsupportedBC
from .lattice import BoundaryCondition, LatticeDomain
from .state import BondConfig


def bond_grids(domain: LatticeDomain, values: np.ndarray):
    """Scatter a flat bond array onto dense H/V edge grids.

    omega_h[iy, ex] is the H-edge joining (ex-1,iy)-(ex,iy); omega_v[ey, ix]
    joins (ix,ey-1)-(ix,ey).  Rows/columns 0 and nx (ny) are the external
    edges.
    """
    nx, ny = domain.nx, domain.ny
    n_h = ny * (nx - 1)
    n_int = domain.n_internal
    omega_h = np.zeros((ny, nx + 1), dtype=np.uint8)
    omega_v = np.zeros((ny + 1, nx), dtype=np.uint8)
    if nx > 1:
        omega_h[:, 1:nx] = values[:n_h].reshape(ny, nx - 1)
    if ny > 1:
        omega_v[1:ny, :] = values[n_h:n_int].reshape(ny - 1, nx)
    for k in range(domain.n_external):
        val = values[n_int + k]
        if not val:
            continue
        s = int(domain.ext_edge_site[k])
        ix, iy = s % nx, s // nx
        jx, jy = (int(c) for c in domain.ext_edge_out[k])
        if jx == ix + 1:
            omega_h[iy, nx] = val
        elif jx == ix - 1:
            omega_h[iy, 0] = val
        elif jy == iy + 1:
            omega_v[ny, ix] = val
        else:
            omega_v[0, ix] = val
    return omega_h, omega_v


@njit(cache=True)
def _corner_site(qx, qy, c, nx, ny):
    if c == 0:
        cx, cy = qx - 1, qy - 1
    elif c == 1:
        cx, cy = qx, qy - 1
    elif c == 2:
        cx, cy = qx, qy
    else:
        cx, cy = qx - 1, qy
    if 0 <= cx < nx and 0 <= cy < ny:
        return cy * nx + cx
    return -1


@njit(cache=True)
def trace_loops_kernel(nx, ny, omega_h, omega_v, vx, vy, offsets, corner_site):
    """Trace every medial loop; vertices come out in half-unit grid coords.

    Returns (n_loops, total_vertices).  vx/vy/corner arrays must hold
    4*nx*ny entries, offsets one more slot than the loop count.
    """
    n_sq = (nx + 1) * (ny + 1)
    visited = np.zeros(n_sq * 4, dtype=np.uint8)
    n_loops = 0
    pos = 0
    offsets[0] = 0
    for qy0 in range(ny + 1):
        for qx0 in range(nx + 1):
            for c0 in range(4):
                eid0 = (qy0 * (nx + 1) + qx0) * 4 + c0
                if visited[eid0]:
                    continue
                if _corner_site(qx0, qy0, c0, nx, ny) < 0:
                    continue
                corner_site[n_loops] = _corner_site(qx0, qy0, c0, nx, ny)
                qx, qy, c = qx0, qy0, c0
                to_h = True
                while True:
                    visited[(qy * (nx + 1) + qx) * 4 + c] = 1
                    if to_h:
                        ex = qx
                        iy = qy - 1 if c < 2 else qy
                        vx[pos] = 2 * ex - 1
                        vy[pos] = 2 * iy
                        pos += 1
                        if omega_h[iy, ex]:
                            c = c ^ 1
                        else:
                            qy = 2 * iy + 1 - qy
                            c = c ^ 3
                    else:
                        ix = qx - 1 if (c == 0 or c == 3) else qx
                        ey = qy
                        vx[pos] = 2 * ix
                        vy[pos] = 2 * ey - 1
                        pos += 1
                        if omega_v[ey, ix]:
                            c = c ^ 3
                        else:
                            qx = 2 * ix + 1 - qx
                            c = c ^ 1
                    to_h = not to_h
                    if to_h and qx == qx0 and qy == qy0 and c == c0:
                        break
                n_loops += 1
                offsets[n_loops] = pos
    return n_loops, pos


@njit(cache=True)
def dual_labels_kernel(nx, ny, omega_h, omega_v, parent, labels, sizes,
                       root_label):
    """Label dual clusters on the (nx+1)x(ny+1) face grid.

    A dual bond crosses each primal edge and is open iff the primal edge is
    closed.  Returns the number of dual clusters.
    """
    n = (nx + 1) * (ny + 1)
    for i in range(n):
        parent[i] = i
        sizes[i] = 1
    for qy in range(ny + 1):
        for qx in range(nx):
            if omega_v[qy, qx] == 0:
                ru = _kernels.uf_find(parent, qy * (nx + 1) + qx)
                rv = _kernels.uf_find(parent, qy * (nx + 1) + qx + 1)
                if ru != rv:
                    if sizes[ru] < sizes[rv]:
                        ru, rv = rv, ru
                    parent[rv] = ru
                    sizes[ru] += sizes[rv]
    for qy in range(ny):
        for qx in range(nx + 1):
            if omega_h[qy, qx] == 0:
                ru = _kernels.uf_find(parent, qy * (nx + 1) + qx)
                rv = _kernels.uf_find(parent, (qy + 1) * (nx + 1) + qx)
                if ru != rv:
                    if sizes[ru] < sizes[rv]:
                        ru, rv = rv, ru
                    parent[rv] = ru
                    sizes[ru] += sizes[rv]
    for i in range(n):
        root_label[i] = -1
    count = 0
    for q in range(n):
        r = _kernels.uf_find(parent, q)
        if root_label[r] < 0:
            root_label[r] = count
            count += 1
        labels[q] = root_label[r]
    return count


@dataclass
class MedialLoop:
    """Closed loop on the medial lattice with its adjacent FK cluster."""

    loop_id: int
    vertices: np.ndarray       # (k, 2) positions, cyclic
    cluster_site: int          # a domain site of the cluster the loop bounds

    @property
    def length(self) -> int:
        return len(self.vertices)

    @cached_property
    def diameter(self) -> float:
        return cluster_diameter(self.vertices)


def trace_loops(omega: BondConfig, domain: LatticeDomain | None = None) -> list:
    """All medial loops of a free-bc-style configuration.

    Every medial edge of the domain (4 per site) is traversed by exactly one
    loop.  Raises UnsupportedBC when an external edge is open.
    """
    if domain is None:
        domain = omega.domain
    if omega.external.any():
        raise UnsupportedBC("loop tracing is defined for closed external edges")
    nx, ny = domain.nx, domain.ny
    omega_h, omega_v = bond_grids(domain, omega.values)
    n_med = 4 * domain.n_sites
    vx = np.empty(n_med, dtype=np.int64)
    vy = np.empty(n_med, dtype=np.int64)
    offsets = np.empty(n_med + 1, dtype=np.int64)
    corner = np.empty(n_med, dtype=np.int64)
    n_loops, total = trace_loops_kernel(nx, ny, omega_h, omega_v,
                                        vx, vy, offsets, corner)
    a = domain.a
    out = []
    for i in range(n_loops):
        lo, hi = offsets[i], offsets[i + 1]
        verts = np.empty((hi - lo, 2), dtype=np.float64)
        verts[:, 0] = (domain.gx0 + 0.5 * vx[lo:hi]) * a
        verts[:, 1] = (domain.gy0 + 0.5 * vy[lo:hi]) * a
        out.append(MedialLoop(loop_id=i, vertices=verts,
                              cluster_site=int(corner[i])))
    return out


def loop_stats(omega_values: np.ndarray, domain: LatticeDomain):
    """(n_loops, total_medial_edges, per-loop lengths) without materializing
    vertex lists; used by invariants and bulk statistics."""
    omega_h, omega_v = bond_grids(domain, omega_values)
    n_med = 4 * domain.n_sites
    vx = np.empty(n_med, dtype=np.int64)
    vy = np.empty(n_med, dtype=np.int64)
    offsets = np.empty(n_med + 1, dtype=np.int64)
    corner = np.empty(n_med, dtype=np.int64)
    n_loops, total = trace_loops_kernel(domain.nx, domain.ny, omega_h, omega_v,
                                        vx, vy, offsets, corner)
    return n_loops, total, np.diff(offsets[: n_loops + 1])


def dual_cluster_info(omega_values: np.ndarray, domain: LatticeDomain):
    """(n_dual_clusters, labels over the face grid)."""
    omega_h, omega_v = bond_grids(domain, omega_values)
    n = (domain.nx + 1) * (domain.ny + 1)
    parent = np.empty(n, dtype=np.int32)
    labels = np.empty(n, dtype=np.int32)
    sizes = np.empty(n, dtype=np.int64)
    root_label = np.empty(n, dtype=np.int32)
    count = dual_labels_kernel(domain.nx, domain.ny, omega_h, omega_v,
                               parent, labels, sizes, root_label)
    return count, labels


def largest_dual_diameter(omega_values: np.ndarray, domain: LatticeDomain) -> float:
    """Exact diameter (grid units) of the largest dual cluster.

    Dual sites sit at face centers, half a unit off the primal grid; in the
    doubled (half-unit) grid their coordinates are (2*qx-1, 2*qy-1), and the
    result is reported in primal grid units.
    """
    count, labels = dual_cluster_info(omega_values, domain)
    nqx = domain.nx + 1
    nqy = domain.ny + 1
    bbox = np.empty((count, 4), dtype=np.int32)
    _kernels.cluster_bboxes(labels, nqx, nqy, count, bbox)
    w = (bbox[:, 1] - bbox[:, 0]).astype(np.float64)
    h = (bbox[:, 3] - bbox[:, 2]).astype(np.float64)
    lower = np.maximum(w, h).max()
    diag = np.hypot(w, h)
    xs = np.empty(nqx * nqy, dtype=np.int64)
    ys = np.empty(nqx * nqy, dtype=np.int64)
    best = 0.0
    for c in np.flatnonzero(diag >= lower):
        k = _kernels.gather_cluster(labels, int(c), xs, ys, nqx)
        d = np.sqrt(_kernels.diameter_sq_grid(xs[:k], ys[:k], k))
        best = max(best, float(d))
    return best


def loops_to_jsonl(loops, fh):
    import json
    for lp in loops:
        fh.write(json.dumps({
            "loop_id": lp.loop_id,
            "length": lp.length,
            "vertices": [[float(x), float(y)] for x, y in lp.vertices],
        }) + "\n")
