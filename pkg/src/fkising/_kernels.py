"""Numba kernels for the hot paths: cluster labeling, the field-coupled
Swendsen-Wang sweep, and window estimators folded over sweeps.

All kernels operate on preallocated buffers owned by the calling chain; no
shared mutable state exists between chains.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def uf_find(parent, x):
    # path halving
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def label_bonds(edges_u, edges_v, omega, n_int, ext_sites, wired,
                parent, labels, sizes, root_label):
    """Label FK clusters of a bond configuration.

    Sites connected through open internal edges share a label; under wired
    bc, sites with an open external edge are joined through the boundary
    super-vertex (node n_sites in the union-find forest).  Labels are
    assigned in row-major first-visit order.  Returns (n_clusters,
    boundary_label); boundary_label is -1 when no site touches the boundary.
    """
    n = labels.shape[0]
    for i in range(n + 1):
        parent[i] = i
        sizes[i] = 1
    # union by size; sizes doubles as the component-size table until relabel
    for e in range(n_int):
        if omega[e]:
            ru = uf_find(parent, edges_u[e])
            rv = uf_find(parent, edges_v[e])
            if ru != rv:
                if sizes[ru] < sizes[rv]:
                    ru, rv = rv, ru
                parent[rv] = ru
                sizes[ru] += sizes[rv]
    if wired:
        for k in range(ext_sites.shape[0]):
            if omega[n_int + k]:
                ru = uf_find(parent, ext_sites[k])
                rb = uf_find(parent, n)
                if ru != rb:
                    if sizes[ru] < sizes[rb]:
                        ru, rb = rb, ru
                    parent[rb] = ru
                    sizes[ru] += sizes[rb]
    for i in range(n + 1):
        root_label[i] = -1
    broot = uf_find(parent, n) if wired else -1
    count = 0
    for s in range(n):
        r = uf_find(parent, s)
        if root_label[r] < 0:
            root_label[r] = count
            count += 1
        labels[s] = root_label[r]
    for c in range(count):
        sizes[c] = 0
    for s in range(n):
        sizes[labels[s]] += 1
    boundary_label = -1
    if wired and broot >= 0:
        boundary_label = root_label[broot]
    return count, boundary_label


@njit(cache=True)
def sample_bonds_kernel(sigma, omega, p, wired, edges_u, edges_v, ext_sites,
                        n_int, rng):
    """Open each aligned edge independently with probability p.

    External edges see an implicit +1 boundary spin under wired bc and stay
    closed under free bc.  Uniform variates are drawn in one batch per edge
    class to keep the scan branch-light.
    """
    u01 = rng.random(n_int)
    for e in range(n_int):
        if sigma[edges_u[e]] == sigma[edges_v[e]] and u01[e] < p:
            omega[e] = 1
        else:
            omega[e] = 0
    if wired:
        u01e = rng.random(ext_sites.shape[0])
        for k in range(ext_sites.shape[0]):
            if sigma[ext_sites[k]] == 1 and u01e[k] < p:
                omega[n_int + k] = 1
            else:
                omega[n_int + k] = 0
    else:
        for k in range(ext_sites.shape[0]):
            omega[n_int + k] = 0


@njit(cache=True)
def sample_spins_kernel(sigma, labels, sizes, n_clusters, boundary_label,
                        beta_H, signs, rng):
    """Draw cluster signs: +1 with prob 1/(1+exp(-2*beta*H*|C|)); boundary
    cluster forced +1; then broadcast signs to sites."""
    for c in range(n_clusters):
        if c == boundary_label:
            signs[c] = 1
        else:
            p_plus = 1.0 / (1.0 + np.exp(-2.0 * beta_H * sizes[c]))
            signs[c] = 1 if rng.random() < p_plus else -1
    for s in range(sigma.shape[0]):
        sigma[s] = signs[labels[s]]


@njit(cache=True)
def pair_connectivity(labels, nx, wx0, wx1, wy0, wy1, rs, out_same, out_npairs):
    """Count same-cluster pairs at separations rs along both axes inside the
    window [wx0,wx1]x[wy0,wy1] (inclusive, grid coords)."""
    for ri in range(rs.shape[0]):
        r = rs[ri]
        same = 0
        npairs = 0
        for iy in range(wy0, wy1 + 1):
            base = iy * nx
            for ix in range(wx0, wx1 + 1 - r):
                if labels[base + ix] == labels[base + ix + r]:
                    same += 1
                npairs += 1
        for iy in range(wy0, wy1 + 1 - r):
            for ix in range(wx0, wx1 + 1):
                if labels[iy * nx + ix] == labels[(iy + r) * nx + ix]:
                    same += 1
                npairs += 1
        out_same[ri] += same
        out_npairs[ri] += npairs


@njit(cache=True)
def pair_spinprod(sigma, nx, wx0, wx1, wy0, wy1, rs, out_prod, out_npairs):
    """Accumulate spin products at separations rs (both axes) in the window."""
    for ri in range(rs.shape[0]):
        r = rs[ri]
        tot = 0
        npairs = 0
        for iy in range(wy0, wy1 + 1):
            base = iy * nx
            for ix in range(wx0, wx1 + 1 - r):
                tot += sigma[base + ix] * sigma[base + ix + r]
                npairs += 1
        for iy in range(wy0, wy1 + 1 - r):
            for ix in range(wx0, wx1 + 1):
                tot += sigma[iy * nx + ix] * sigma[(iy + r) * nx + ix]
                npairs += 1
        out_prod[ri] += tot
        out_npairs[ri] += npairs


@njit(cache=True)
def cluster_tanh(sizes, n_clusters, boundary_label, beta_H, tcl):
    """Per-cluster conditional mean spin tanh(beta*H*|C|), 1 for boundary."""
    for c in range(n_clusters):
        if c == boundary_label:
            tcl[c] = 1.0
        else:
            tcl[c] = np.tanh(beta_H * sizes[c])


@njit(cache=True)
def pair_rao_blackwell(labels, tcl, nx, wx0, wx1, wy0, wy1, rs, out_pair,
                       tsite):
    """Accumulate cluster-conditional pair expectations and site means.

    E[s_x s_y | bonds] is 1 for same-cluster pairs and t(x)t(y) otherwise,
    with t(x) the conditional mean spin of x's cluster.  tsite accumulates
    t(x) per window site (row-major within the window).
    """
    wnx = wx1 - wx0 + 1
    for iy in range(wy0, wy1 + 1):
        base = iy * nx
        wbase = (iy - wy0) * wnx
        for ix in range(wx0, wx1 + 1):
            tsite[wbase + ix - wx0] += tcl[labels[base + ix]]
    for ri in range(rs.shape[0]):
        r = rs[ri]
        acc = 0.0
        for iy in range(wy0, wy1 + 1):
            base = iy * nx
            for ix in range(wx0, wx1 + 1 - r):
                la = labels[base + ix]
                lb = labels[base + ix + r]
                acc += 1.0 if la == lb else tcl[la] * tcl[lb]
        for iy in range(wy0, wy1 + 1 - r):
            for ix in range(wx0, wx1 + 1):
                la = labels[iy * nx + ix]
                lb = labels[(iy + r) * nx + ix]
                acc += 1.0 if la == lb else tcl[la] * tcl[lb]
        out_pair[ri] += acc


@njit(cache=True)
def block_sum(sigma, nx, bx0, bx1, by0, by1):
    tot = 0
    for iy in range(by0, by1 + 1):
        base = iy * nx
        for ix in range(bx0, bx1 + 1):
            tot += sigma[base + ix]
    return tot


@njit(cache=True)
def sum_sizes_sq(sizes, n_clusters):
    tot = 0.0
    for c in range(n_clusters):
        tot += float(sizes[c]) * float(sizes[c])
    return tot


@njit(cache=True)
def cluster_bboxes(labels, nx, ny, n_clusters, bbox):
    """Per-cluster bounding boxes in grid coords: (minx, maxx, miny, maxy)."""
    for c in range(n_clusters):
        bbox[c, 0] = nx
        bbox[c, 1] = -1
        bbox[c, 2] = ny
        bbox[c, 3] = -1
    for iy in range(ny):
        base = iy * nx
        for ix in range(nx):
            c = labels[base + ix]
            if ix < bbox[c, 0]:
                bbox[c, 0] = ix
            if ix > bbox[c, 1]:
                bbox[c, 1] = ix
            if iy < bbox[c, 2]:
                bbox[c, 2] = iy
            if iy > bbox[c, 3]:
                bbox[c, 3] = iy


@njit(cache=True)
def gather_cluster(labels, target, xs, ys, nx):
    """Collect grid coordinates of all sites with the given label."""
    k = 0
    for s in range(labels.shape[0]):
        if labels[s] == target:
            xs[k] = s % nx
            ys[k] = s // nx
            k += 1
    return k


@njit(cache=True)
def _diameter_sq_brute(xs, ys, k):
    best = 0
    for i in range(k):
        for j in range(i + 1, k):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            d2 = dx * dx + dy * dy
            if d2 > best:
                best = d2
    return best


@njit(cache=True)
def diameter_sq_grid(xs, ys, k):
    """Exact squared Euclidean diameter of k grid points (int64 coords).

    Brute force for small point sets, convex hull (monotone chain) plus
    pairwise scan over hull vertices otherwise.
    """
    if k <= 1:
        return 0
    if k <= 64:
        return _diameter_sq_brute(xs, ys, k)
    key = np.empty(k, dtype=np.int64)
    for i in range(k):
        key[i] = xs[i] * 2_000_003 + ys[i]
    order = np.argsort(key)
    px = np.empty(k, dtype=np.int64)
    py = np.empty(k, dtype=np.int64)
    for i in range(k):
        px[i] = xs[order[i]]
        py[i] = ys[order[i]]
    hull_x = np.empty(2 * k + 1, dtype=np.int64)
    hull_y = np.empty(2 * k + 1, dtype=np.int64)
    m = 0
    for i in range(k):
        while m >= 2 and ((hull_x[m - 1] - hull_x[m - 2]) * (py[i] - hull_y[m - 2])
                          - (hull_y[m - 1] - hull_y[m - 2]) * (px[i] - hull_x[m - 2])) <= 0:
            m -= 1
        hull_x[m] = px[i]
        hull_y[m] = py[i]
        m += 1
    lower = m + 1
    for i in range(k - 2, -1, -1):
        while m >= lower and ((hull_x[m - 1] - hull_x[m - 2]) * (py[i] - hull_y[m - 2])
                              - (hull_y[m - 1] - hull_y[m - 2]) * (px[i] - hull_x[m - 2])) <= 0:
            m -= 1
        hull_x[m] = px[i]
        hull_y[m] = py[i]
        m += 1
    return _diameter_sq_brute(hull_x, hull_y, m - 1)


@njit(cache=True)
def cluster_coeff_sq_sum(xs, ys, k, sx, sy, basis_m, basis_n, lam_neg_alpha):
    """Sum over basis functions of lam^(-alpha) * (sum_{sites} u_i(site))^2
    for one cluster; sx[m, ix], sy[n, iy] are precomputed sine tables."""
    nb = basis_m.shape[0]
    tot = 0.0
    for b in range(nb):
        mrow = basis_m[b]
        nrow = basis_n[b]
        acc = 0.0
        for i in range(k):
            acc += sx[mrow, xs[i]] * sy[nrow, ys[i]]
        tot += lam_neg_alpha[b] * acc * acc
    return tot


@njit(cache=True)
def field_coeffs_lattice(xs, ys, wgt, sx, sy, basis_m, basis_n, out):
    """Coefficients a_b = sum_atoms w * u_b(atom) for lattice-aligned atoms."""
    nb = basis_m.shape[0]
    for b in range(nb):
        mrow = basis_m[b]
        nrow = basis_n[b]
        acc = 0.0
        for i in range(xs.shape[0]):
            acc += wgt[i] * sx[mrow, xs[i]] * sy[nrow, ys[i]]
        out[b] = acc


@njit(cache=True)
def tiny_chain_counts(sigma, omega, p, beta_H, wired, nx, ny,
                      ext_sites, n_int, parent, labels, sizes, root_label,
                      signs, rng, n_steps, n_var, counts):
    """Run n_steps full sweeps on a tiny domain, counting encoded
    (spins, variable bonds) states into a flat table."""
    n = sigma.shape[0]
    for _ in range(n_steps):
        sw_sweep_grid(sigma, omega, p, beta_H, wired, nx, ny, ext_sites,
                      n_int, parent, labels, sizes, root_label, signs, rng)
        key = 0
        for s in range(n):
            key = (key << 1) | (1 if sigma[s] > 0 else 0)
        for e in range(n_var):
            key = (key << 1) | omega[e]
        counts[key] += 1


@njit(cache=True)
def sign_draw_counts(labels, sizes, n_clusters, boundary_label, beta_H,
                     n_draws, rng, plus_counts):
    """Repeatedly draw cluster signs through the sampling kernel and count
    +1 outcomes per cluster."""
    n = labels.shape[0]
    sigma = np.empty(n, dtype=np.int8)
    signs = np.empty(n_clusters, dtype=np.int8)
    first_site = np.full(n_clusters, -1, dtype=np.int64)
    for s in range(n):
        if first_site[labels[s]] < 0:
            first_site[labels[s]] = s
    for _ in range(n_draws):
        sample_spins_kernel(sigma, labels, sizes, n_clusters, boundary_label,
                            beta_H, signs, rng)
        for c in range(n_clusters):
            if sigma[first_site[c]] > 0:
                plus_counts[c] += 1


@njit(cache=True)
def sw_sweep_grid(sigma, omega, p, beta_H, wired, nx, ny, ext_sites,
                  n_int, parent, labels, sizes, root_label, signs, rng):
    """Fused sweep for rectangular domains: bond sampling and union-find in
    one pass over the H/V edge grids, then cluster signs.

    Edge layout: horizontal internal edges iy*(nx-1)+ix joining s and s+1,
    then vertical internal edges n_h + iy*nx+ix joining s and s+nx, then
    external edges in domain order.  Semantically identical to sw_sweep.
    """
    n = nx * ny
    n_h = ny * (nx - 1)
    for i in range(n + 1):
        parent[i] = i
        sizes[i] = 1
    u01 = rng.random(n_int)
    e = 0
    for iy in range(ny):
        base = iy * nx
        for ix in range(nx - 1):
            s = base + ix
            if sigma[s] == sigma[s + 1] and u01[e] < p:
                omega[e] = 1
                ru = uf_find(parent, s)
                rv = uf_find(parent, s + 1)
                if ru != rv:
                    if sizes[ru] < sizes[rv]:
                        ru, rv = rv, ru
                    parent[rv] = ru
                    sizes[ru] += sizes[rv]
            else:
                omega[e] = 0
            e += 1
    for iy in range(ny - 1):
        base = iy * nx
        for ix in range(nx):
            s = base + ix
            if sigma[s] == sigma[s + nx] and u01[e] < p:
                omega[e] = 1
                ru = uf_find(parent, s)
                rv = uf_find(parent, s + nx)
                if ru != rv:
                    if sizes[ru] < sizes[rv]:
                        ru, rv = rv, ru
                    parent[rv] = ru
                    sizes[ru] += sizes[rv]
            else:
                omega[e] = 0
            e += 1
    if wired:
        u01e = rng.random(ext_sites.shape[0])
        for k in range(ext_sites.shape[0]):
            s = ext_sites[k]
            if sigma[s] == 1 and u01e[k] < p:
                omega[n_int + k] = 1
                ru = uf_find(parent, s)
                rb = uf_find(parent, n)
                if ru != rb:
                    if sizes[ru] < sizes[rb]:
                        ru, rb = rb, ru
                    parent[rb] = ru
                    sizes[ru] += sizes[rb]
            else:
                omega[n_int + k] = 0
    else:
        for k in range(ext_sites.shape[0]):
            omega[n_int + k] = 0
    for i in range(n + 1):
        root_label[i] = -1
    broot = uf_find(parent, n) if wired else -1
    count = 0
    for s in range(n):
        r = uf_find(parent, s)
        if root_label[r] < 0:
            root_label[r] = count
            count += 1
        labels[s] = root_label[r]
    for c in range(count):
        sizes[c] = 0
    for s in range(n):
        sizes[labels[s]] += 1
    boundary_label = -1
    if wired and broot >= 0:
        boundary_label = root_label[broot]
    sample_spins_kernel(sigma, labels, sizes, count, boundary_label,
                        beta_H, signs, rng)
    return count, boundary_label
