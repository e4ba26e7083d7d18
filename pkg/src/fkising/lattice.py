"""Rectangular domains of the square lattice a*Z^2.

A domain is the set of lattice sites falling inside an axis-aligned closed
rectangle, together with the internal edges (both endpoints inside) and
external edges (one endpoint inside, one in the site boundary).  Sites are
indexed row-major (y outer, x inner); edges are indexed internal-first, in a
deterministic order documented below.  Everything is immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import EmptyDomain, UnknownSite

# Scaling exponent of the 2D Ising magnetization: fields and counting
# measures are rescaled by a**(15/8).
MAG_EXPONENT = 15.0 / 8.0

# Critical inverse temperature of the square-lattice Ising model.
BETA_C = 0.5 * math.log(1.0 + math.sqrt(2.0))

_EPS = 1e-9


class BoundaryCondition(Enum):
    FREE = "free"
    PLUS_WIRED = "plus"

    @classmethod
    def parse(cls, name: str) -> "BoundaryCondition":
        name = name.strip().lower()
        for bc in cls:
            if bc.value == name:
                return bc
        raise ValueError(f"unknown boundary condition {name!r}")


class Neighbor(NamedTuple):
    edge: int            # flat edge index
    other_site: int      # site index, or -1 if the other endpoint is outside
    other_pos: tuple     # position of the other endpoint
    internal: bool


@dataclass(frozen=True)
class LatticeDomain:
    """Sites of a*Z^2 inside a closed rectangle, with edge bookkeeping.

    Site s at grid offset (ix, iy) has index s = iy*nx + ix and position
    ((gx0+ix)*a, (gy0+iy)*a).  Edge order: horizontal internal edges
    row-major by left endpoint, then vertical internal edges row-major by
    bottom endpoint, then external edges grouped by site (row-major) in
    direction order +x, -x, +y, -y.
    """

    a: float
    rect: tuple          # (x0, y0, x1, y1)
    gx0: int             # integer lattice coordinate of the leftmost column
    gy0: int
    nx: int
    ny: int
    internal_edges: np.ndarray = field(repr=False)   # (n_int, 2) site pairs
    ext_edge_site: np.ndarray = field(repr=False)    # (n_ext,) inner endpoint
    ext_edge_out: np.ndarray = field(repr=False)     # (n_ext, 2) outer grid coords
    nbr_edge: np.ndarray = field(repr=False)         # (N, 4) flat edge ids
    nbr_site: np.ndarray = field(repr=False)         # (N, 4) site ids or -1

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    @property
    def n_internal(self) -> int:
        return len(self.internal_edges)

    @property
    def n_external(self) -> int:
        return len(self.ext_edge_site)

    @property
    def n_edges(self) -> int:
        return self.n_internal + self.n_external

    def site_grid(self, s: int) -> tuple:
        return (s % self.nx, s // self.nx)

    def site_position(self, s: int) -> tuple:
        ix, iy = self.site_grid(s)
        return ((self.gx0 + ix) * self.a, (self.gy0 + iy) * self.a)

    def positions(self) -> np.ndarray:
        """(N, 2) array of site positions in row-major site order."""
        ix = np.arange(self.nx)
        iy = np.arange(self.ny)
        xs = (self.gx0 + ix) * self.a
        ys = (self.gy0 + iy) * self.a
        out = np.empty((self.n_sites, 2), dtype=np.float64)
        out[:, 0] = np.tile(xs, self.ny)
        out[:, 1] = np.repeat(ys, self.nx)
        return out

    def edge_endpoints_grid(self, e: int) -> tuple:
        """Grid coordinates of both endpoints of flat edge e."""
        if e < 0 or e >= self.n_edges:
            raise IndexError(f"edge index {e} out of range")
        if e < self.n_internal:
            u, v = self.internal_edges[e]
            return (self.site_grid(int(u)), self.site_grid(int(v)))
        k = e - self.n_internal
        s = int(self.ext_edge_site[k])
        return (self.site_grid(s), tuple(int(c) for c in self.ext_edge_out[k]))

    def edge_midpoint(self, e: int) -> tuple:
        """Midpoint of a primal edge: the medial-lattice vertex on it."""
        (ax, ay), (bx, by) = self.edge_endpoints_grid(e)
        return ((self.gx0 + 0.5 * (ax + bx)) * self.a,
                (self.gy0 + 0.5 * (ay + by)) * self.a)

    def is_internal_edge(self, e: int) -> bool:
        return 0 <= e < self.n_internal


def build_domain(a: float, rect) -> LatticeDomain:
    """Discretize a closed rectangle into sites and edges of a*Z^2.

    Lattice points on the rectangle edge count as inside (closed
    convention).  Raises EmptyDomain when no lattice point qualifies.
    """
    if a <= 0:
        raise ValueError("lattice spacing must be positive")
    x0, y0, x1, y1 = (float(c) for c in rect)
    if x1 < x0 or y1 < y0:
        raise ValueError("rectangle is degenerate (x1 < x0 or y1 < y0)")
    gx0 = math.ceil(x0 / a - _EPS)
    gx1 = math.floor(x1 / a + _EPS)
    gy0 = math.ceil(y0 / a - _EPS)
    gy1 = math.floor(y1 / a + _EPS)
    nx = gx1 - gx0 + 1
    ny = gy1 - gy0 + 1
    if nx <= 0 or ny <= 0:
        raise EmptyDomain(f"no point of {a}*Z^2 inside rect {rect}")

    n = nx * ny
    sid = np.arange(n, dtype=np.int64).reshape(ny, nx)

    # Horizontal internal edges (left endpoint row-major), then vertical.
    h_left = sid[:, :-1].ravel()
    h_right = sid[:, 1:].ravel()
    v_bot = sid[:-1, :].ravel()
    v_top = sid[1:, :].ravel()
    internal = np.empty((len(h_left) + len(v_bot), 2), dtype=np.int32)
    internal[: len(h_left), 0] = h_left
    internal[: len(h_left), 1] = h_right
    internal[len(h_left):, 0] = v_bot
    internal[len(h_left):, 1] = v_top

    nbr_edge = np.full((n, 4), -1, dtype=np.int32)
    nbr_site = np.full((n, 4), -1, dtype=np.int32)
    # directions: 0:+x 1:-x 2:+y 3:-y
    dirs = ((1, 0), (-1, 0), (0, 1), (0, -1))

    # internal edge ids into the neighbor table
    n_h = len(h_left)
    for iy in range(ny):
        for ix in range(nx - 1):
            e = iy * (nx - 1) + ix
            nbr_edge[sid[iy, ix], 0] = e
            nbr_site[sid[iy, ix], 0] = sid[iy, ix + 1]
            nbr_edge[sid[iy, ix + 1], 1] = e
            nbr_site[sid[iy, ix + 1], 1] = sid[iy, ix]
    for iy in range(ny - 1):
        for ix in range(nx):
            e = n_h + iy * nx + ix
            nbr_edge[sid[iy, ix], 2] = e
            nbr_site[sid[iy, ix], 2] = sid[iy + 1, ix]
            nbr_edge[sid[iy + 1, ix], 3] = e
            nbr_site[sid[iy + 1, ix], 3] = sid[iy, ix]

    ext_site = []
    ext_out = []
    n_int = len(internal)
    for s in range(n):
        ix, iy = s % nx, s // nx
        for d, (dx, dy) in enumerate(dirs):
            jx, jy = ix + dx, iy + dy
            if 0 <= jx < nx and 0 <= jy < ny:
                continue
            e = n_int + len(ext_site)
            ext_site.append(s)
            ext_out.append((jx, jy))
            nbr_edge[s, d] = e
    ext_site = np.asarray(ext_site, dtype=np.int32)
    ext_out = np.asarray(ext_out, dtype=np.int32).reshape(-1, 2)

    return LatticeDomain(
        a=a, rect=(x0, y0, x1, y1), gx0=gx0, gy0=gy0, nx=nx, ny=ny,
        internal_edges=internal, ext_edge_site=ext_site, ext_edge_out=ext_out,
        nbr_edge=nbr_edge, nbr_site=nbr_site,
    )


def grid_domain(n: int, a: float = 1.0, origin=(0.0, 0.0)) -> LatticeDomain:
    """Convenience: an n-by-n site domain with spacing a."""
    ox, oy = origin
    return build_domain(a, (ox, oy, ox + (n - 1) * a, oy + (n - 1) * a))


def neighbors(domain: LatticeDomain, site: int) -> list:
    """The four incident edges of a site with endpoints and internal flags."""
    if not isinstance(site, (int, np.integer)) or site < 0 or site >= domain.n_sites:
        raise UnknownSite(f"site {site!r} not in domain")
    out = []
    a = domain.a
    ix, iy = domain.site_grid(site)
    dirs = ((1, 0), (-1, 0), (0, 1), (0, -1))
    for d, (dx, dy) in enumerate(dirs):
        e = int(domain.nbr_edge[site, d])
        other = int(domain.nbr_site[site, d])
        pos = ((domain.gx0 + ix + dx) * a, (domain.gy0 + iy + dy) * a)
        out.append(Neighbor(edge=e, other_site=other, other_pos=pos,
                            internal=other >= 0))
    return out


def domain_to_json(domain: LatticeDomain, bc: BoundaryCondition) -> str:
    x0, y0, x1, y1 = domain.rect
    return json.dumps({"a": domain.a, "rect": [x0, y0, x1, y1], "bc": bc.value})


def domain_from_json(text: str):
    d = json.loads(text)
    return build_domain(d["a"], tuple(d["rect"])), BoundaryCondition.parse(d["bc"])
