"""Brute-force enumeration of spin, bond, and joint distributions on tiny
domains: the ground truth for sampler and coupling tests.

Clustering here is an independent breadth-first search, deliberately not
sharing code with the union-find used by the samplers.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DomainTooLarge
from .lattice import BoundaryCondition, LatticeDomain
from .sampler import log_cosh
from .state import BondConfig, SimParams

LOG2 = math.log(2.0)


def bfs_clusters(domain: LatticeDomain, omega_flat: np.ndarray, wired: bool):
    """Reference decomposition by BFS; labels in first-visit row-major order.

    Returns (labels, sizes, boundary_label), matching the union-find
    conventions exactly so decompositions can be compared elementwise.
    """
    n = domain.n_sites
    n_int = domain.n_internal
    attached = np.zeros(n, dtype=bool)
    if wired:
        seeds = [int(domain.ext_edge_site[k])
                 for k in range(domain.n_external) if omega_flat[n_int + k]]
        queue = deque()
        for s in seeds:
            if not attached[s]:
                attached[s] = True
                queue.append(s)
        while queue:
            s = queue.popleft()
            for d in range(4):
                e = domain.nbr_edge[s, d]
                t = domain.nbr_site[s, d]
                if t >= 0 and omega_flat[e] and not attached[t]:
                    attached[t] = True
                    queue.append(t)
    labels = np.full(n, -1, dtype=np.int32)
    sizes = []
    boundary_label = -1
    for s0 in range(n):
        if labels[s0] >= 0:
            continue
        lab = len(sizes)
        if attached[s0]:
            members = np.flatnonzero(attached)
            labels[members] = lab
            sizes.append(len(members))
            boundary_label = lab
            continue
        count = 0
        queue = deque([s0])
        labels[s0] = lab
        while queue:
            s = queue.popleft()
            count += 1
            for d in range(4):
                e = domain.nbr_edge[s, d]
                t = domain.nbr_site[s, d]
                if t >= 0 and omega_flat[e] and labels[t] < 0 and not attached[t]:
                    labels[t] = lab
                    queue.append(t)
        sizes.append(count)
    return labels, np.asarray(sizes, dtype=np.int64), boundary_label


@dataclass
class ExactDistribution:
    """Fully enumerated distribution over encoded states.

    keys encode states as integers: spins use bit (n_sites-1-i) for site i,
    bonds bit (n_var-1-e) for variable edge e; joint keys are
    (spin_bits << n_var) | bond_bits, matching FKChain.state_key.
    """

    kind: str
    keys: np.ndarray
    log_weights: np.ndarray
    log_Z: float
    n_sites: int
    n_var: int
    extras: dict = field(default_factory=dict)

    @property
    def probs(self) -> np.ndarray:
        ld = np.exp((self.log_weights - self.log_Z).astype(np.longdouble))
        return (ld / ld.sum()).astype(np.float64)

    def prob_dict(self) -> dict:
        return dict(zip((int(k) for k in self.keys), self.probs))

    def expectation(self, values) -> float:
        return float(np.dot(self.probs, np.asarray(values, dtype=np.float64)))

    def total_variation_from(self, counts: dict, n_samples: int) -> float:
        """TV distance between this law and an empirical state-count table."""
        tv = 0.0
        probs = self.prob_dict()
        for k, c in counts.items():
            tv += abs(c / n_samples - probs.pop(k, 0.0))
        tv += sum(probs.values())
        return 0.5 * tv


def expected_tv_floor(probs: np.ndarray, n_samples: int) -> float:
    """Expected TV distance between the law and n iid samples from it
    (large-n normal approximation, per-state E|phat - p|)."""
    p = np.asarray(probs, dtype=np.float64)
    return float(0.5 * np.sum(np.sqrt(2.0 * p * (1.0 - p) / (math.pi * n_samples))))


def _spin_matrix(n_sites: int, states: np.ndarray) -> np.ndarray:
    shifts = (n_sites - 1 - np.arange(n_sites)).astype(np.int64)
    bits = (states[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def decode_spins(dist: ExactDistribution) -> np.ndarray:
    """(M, n_sites) matrix of spin values for spin or joint distributions."""
    keys = dist.keys >> dist.n_var if dist.kind == "joint" else dist.keys
    return _spin_matrix(dist.n_sites, keys)


def _var_edges(domain: LatticeDomain, bc: BoundaryCondition) -> int:
    return domain.n_edges if bc is BoundaryCondition.PLUS_WIRED else domain.n_internal


def enumerate_ising(domain: LatticeDomain, params: SimParams,
                    bc: BoundaryCondition, max_sites: int = 12) -> ExactDistribution:
    """Exact spin distribution from the Gibbs weights."""
    n = domain.n_sites
    if n > max_sites:
        raise DomainTooLarge(f"{n} sites exceeds cap {max_sites}")
    states = np.arange(1 << n, dtype=np.int64)
    spins = _spin_matrix(n, states).astype(np.int64)
    u = domain.internal_edges[:, 0]
    v = domain.internal_edges[:, 1]
    pair_sum = (spins[:, u] * spins[:, v]).sum(axis=1)
    mag = spins.sum(axis=1)
    lw = params.beta * pair_sum + params.beta * params.H * mag
    if bc is BoundaryCondition.PLUS_WIRED:
        lw = lw + params.beta * spins[:, domain.ext_edge_site].sum(axis=1)
    lw = lw.astype(np.float64)
    return ExactDistribution(kind="spin", keys=states, log_weights=lw,
                             log_Z=float(logsumexp(lw)), n_sites=n, n_var=0,
                             extras={"mag": mag})


def enumerate_fk(domain: LatticeDomain, params: SimParams,
                 bc: BoundaryCondition, with_field: bool = False,
                 max_edges: int = 12) -> ExactDistribution:
    """Exact bond distribution, optionally with the cluster-field tilt."""
    n_var = _var_edges(domain, bc)
    if n_var > max_edges:
        raise DomainTooLarge(f"{n_var} edges exceeds cap {max_edges}")
    wired = bc is BoundaryCondition.PLUS_WIRED
    p = params.p
    bH = params.beta * params.H
    m = 1 << n_var
    states = np.arange(m, dtype=np.int64)
    lw = np.empty(m, dtype=np.float64)
    tilt = np.empty(m, dtype=np.float64)
    labels_all = np.empty((m, domain.n_sites), dtype=np.int8)
    n_internal_all = np.empty(m, dtype=np.int64)
    bsize_all = np.empty(m, dtype=np.int64)
    omega = np.zeros(domain.n_edges, dtype=np.uint8)
    for s in range(m):
        for e in range(n_var):
            omega[e] = (s >> (n_var - 1 - e)) & 1
        labels, sizes, blabel = bfs_clusters(domain, omega, wired)
        n1 = int(omega[:n_var].sum())
        n0 = n_var - n1
        n_internal = len(sizes) - (1 if blabel >= 0 else 0)
        base = n_internal * LOG2
        if n1:
            base += n1 * math.log(p)
        if n0:
            base += n0 * math.log1p(-p)
        bsize = int(sizes[blabel]) if blabel >= 0 else 0
        t = bH * bsize
        for c, sz in enumerate(sizes):
            if c != blabel:
                t += float(log_cosh(bH * sz))
        lw[s] = base
        tilt[s] = t
        labels_all[s] = labels
        n_internal_all[s] = n_internal
        bsize_all[s] = bsize
    total = lw + tilt if with_field else lw
    return ExactDistribution(
        kind="bond", keys=states, log_weights=total,
        log_Z=float(logsumexp(total)), n_sites=domain.n_sites, n_var=n_var,
        extras={"labels": labels_all, "n_internal": n_internal_all,
                "boundary_size": bsize_all, "log_tilt": tilt,
                "log_weights_nofield": lw})


def enumerate_joint(domain: LatticeDomain, params: SimParams,
                    bc: BoundaryCondition, max_bits: int = 20,
                    check_marginals: bool = True) -> ExactDistribution:
    """Exact joint spin/bond distribution of the coupled field measure.

    Verifies on construction that both marginals reproduce the spin and
    tilted-bond enumerations to 1e-10 (the coupling's defining property).
    """
    n = domain.n_sites
    n_var = _var_edges(domain, bc)
    if n + n_var > max_bits:
        raise DomainTooLarge(f"{n}+{n_var} bits exceeds cap {max_bits}")
    wired = bc is BoundaryCondition.PLUS_WIRED
    p = params.p
    bH = params.beta * params.H
    keys = []
    lws = []
    omega = np.zeros(domain.n_edges, dtype=np.uint8)
    all_plus = (1 << n) - 1
    for s in range(1 << n_var):
        for e in range(n_var):
            omega[e] = (s >> (n_var - 1 - e)) & 1
        labels, sizes, blabel = bfs_clusters(domain, omega, wired)
        n1 = int(omega[:n_var].sum())
        n0 = n_var - n1
        base = 0.0
        if n1:
            base += n1 * math.log(p)
        if n0:
            base += n0 * math.log1p(-p)
        internal = [c for c in range(len(sizes)) if c != blabel]
        masks = []
        for c in internal:
            mask = 0
            for site in np.flatnonzero(labels == c):
                mask |= 1 << (n - 1 - int(site))
            masks.append(mask)
        bsize = int(sizes[blabel]) if blabel >= 0 else 0
        for assign in range(1 << len(internal)):
            spin_bits = all_plus
            mag = bsize
            for i, c in enumerate(internal):
                if (assign >> i) & 1:
                    spin_bits ^= masks[i]
                    mag -= int(sizes[c])
                else:
                    mag += int(sizes[c])
            keys.append((spin_bits << n_var) | s)
            lws.append(base + bH * mag)
    keys = np.asarray(keys, dtype=np.int64)
    lws = np.asarray(lws, dtype=np.float64)
    dist = ExactDistribution(kind="joint", keys=keys, log_weights=lws,
                             log_Z=float(logsumexp(lws)), n_sites=n, n_var=n_var)
    if check_marginals:
        _verify_marginals(dist, domain, params, bc)
    return dist


def _verify_marginals(joint: ExactDistribution, domain, params, bc, tol=1e-10):
    probs = joint.probs
    spin_keys = joint.keys >> joint.n_var
    bond_keys = joint.keys & ((1 << joint.n_var) - 1)
    spin_marg = np.zeros(1 << joint.n_sites)
    np.add.at(spin_marg, spin_keys, probs)
    bond_marg = np.zeros(1 << joint.n_var)
    np.add.at(bond_marg, bond_keys, probs)
    ising = enumerate_ising(domain, params, bc)
    fk = enumerate_fk(domain, params, bc, with_field=True,
                      max_edges=joint.n_var)
    ising_dev = float(np.abs(spin_marg - ising.probs).max())
    fk_dev = float(np.abs(bond_marg - fk.probs).max())
    if ising_dev > tol or fk_dev > tol:
        raise RuntimeError(
            f"joint marginals deviate: spin {ising_dev:.2e}, bond {fk_dev:.2e}")


@dataclass
class ClusterSignLaw:
    sizes: np.ndarray
    p_plus: np.ndarray
    is_boundary: np.ndarray
    labels: np.ndarray


def exact_conditional_eta(omega: BondConfig, params: SimParams,
                          bc: BoundaryCondition) -> ClusterSignLaw:
    """Exact conditional sign law per cluster given the bonds."""
    wired = bc is BoundaryCondition.PLUS_WIRED
    labels, sizes, blabel = bfs_clusters(omega.domain, omega.values, wired)
    bH = params.beta * params.H
    p_plus = 1.0 / (1.0 + np.exp(-2.0 * bH * sizes.astype(np.float64)))
    is_boundary = np.zeros(len(sizes), dtype=bool)
    if blabel >= 0:
        p_plus[blabel] = 1.0
        is_boundary[blabel] = True
    return ClusterSignLaw(sizes=sizes, p_plus=p_plus,
                          is_boundary=is_boundary, labels=labels)


def pf_field_identity(domain: LatticeDomain, params: SimParams,
                      bc: BoundaryCondition):
    """Check Z(beta,H) = Z(beta,0) * E_FK[exp(bH|C_b|) prod cosh(bH|C_i|)].

    Returns (lhs, rhs, relative error) with both sides in log form.
    """
    params0 = SimParams(beta=params.beta, h=0.0, a=params.a)
    log_ratio_spin = (enumerate_ising(domain, params, bc).log_Z
                      - enumerate_ising(domain, params0, bc).log_Z)
    fk0 = enumerate_fk(domain, params, bc, with_field=False,
                       max_edges=_var_edges(domain, bc))
    lw0 = fk0.extras["log_weights_nofield"]
    tilt = fk0.extras["log_tilt"]
    log_ratio_fk = float(logsumexp(lw0 + tilt) - logsumexp(lw0))
    rel = abs(log_ratio_spin - log_ratio_fk) / max(abs(log_ratio_spin), 1e-30)
    return log_ratio_spin, log_ratio_fk, rel


def oracle_report(domain: LatticeDomain, params: SimParams,
                  bc: BoundaryCondition) -> dict:
    """Summary observables for export."""
    dist = enumerate_ising(domain, params, bc)
    spins = decode_spins(dist).astype(np.float64)
    probs = dist.probs
    mag = dist.extras["mag"].astype(np.float64)
    report = {
        "n_sites": domain.n_sites,
        "log_Z": dist.log_Z,
        "mean_bare_mag": float(np.dot(probs, mag)),
        "mean_spin_site0": float(np.dot(probs, spins[:, 0])),
    }
    if domain.n_sites >= 2:
        report["two_point_first_last"] = float(
            np.dot(probs, spins[:, 0] * spins[:, -1]))
    lhs, rhs, rel = pf_field_identity(domain, params, bc)
    report["pf_identity_rel_err"] = rel
    return report
