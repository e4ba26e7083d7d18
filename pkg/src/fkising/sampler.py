"""Weights and Markov-chain samplers for the coupled spin/bond measures.

The chain alternates the two exact conditionals of the joint spin-bond law
with external field: bonds open independently with probability p on aligned
edges, then every cluster draws a sign with the size-tilted probability
exp(beta*H*|C|) / (2*cosh(beta*H*|C|)), the wired boundary cluster being
forced to +1.  The alternation is exactly stationary for the joint measure,
so no Metropolis correction is involved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clusters import ClusterDecomposition, find_clusters
from .errors import DegenerateWeights, IncompatibleState
from .lattice import MAG_EXPONENT, BoundaryCondition, LatticeDomain
from .state import BondConfig, SimParams, SpinConfig

LOG2 = math.log(2.0)


def log_cosh(t):
    """log cosh(t), stable for large |t|."""
    t = np.abs(t)
    return t + np.log1p(np.exp(-2.0 * t)) - LOG2


def gibbs_log_weight(sigma: SpinConfig, params: SimParams,
                     bc: BoundaryCondition) -> float:
    """Log of the unnormalized Gibbs weight of a spin configuration.

    Free bc: beta * sum_{internal} s_x s_y + beta*H * sum s_x.  Plus bc adds
    beta * s_x for every external edge at x (boundary spins +1).
    """
    dom = sigma.domain
    s = sigma.values
    u = dom.internal_edges[:, 0]
    v = dom.internal_edges[:, 1]
    pair_sum = int(np.sum(s[u].astype(np.int64) * s[v]))
    mag = int(s.sum())
    lw = params.beta * pair_sum + params.beta * params.H * mag
    if bc is BoundaryCondition.PLUS_WIRED:
        lw += params.beta * int(np.sum(s[dom.ext_edge_site].astype(np.int64)))
    return float(lw)


def rc_log_weight(omega: BondConfig, p: float, bc: BoundaryCondition) -> float:
    """Log of the unnormalized random-cluster weight p^open (1-p)^closed
    2^clusters, counted over the edges the boundary condition leaves free
    (internal only under free bc) and internal clusters only."""
    omega.check_bc(bc)
    dom = omega.domain
    if bc is BoundaryCondition.FREE:
        values = omega.internal
    else:
        values = omega.values
    n1 = int(values.sum())
    n0 = values.size - n1
    decomp = find_clusters(omega, bc)
    lw = decomp.n_internal * LOG2
    if n1:
        lw += n1 * math.log(p)
    if n0:
        lw += n0 * math.log1p(-p)
    return lw


def field_fk_log_weight(omega: BondConfig, params: SimParams,
                        bc: BoundaryCondition,
                        decomp: ClusterDecomposition | None = None) -> float:
    """Random-cluster log weight at p = 1-exp(-2 beta) tilted by the field:
    adds beta*H*|C_b| plus sum over internal clusters of log cosh(beta*H*|C|)."""
    if decomp is None:
        decomp = find_clusters(omega, bc)
    lw = rc_log_weight(omega, params.p, bc)
    bH = params.beta * params.H
    lw += bH * decomp.boundary_size()
    lw += float(np.sum(log_cosh(bH * decomp.internal_sizes().astype(np.float64))))
    return lw


def cluster_field_log_weight(decomp: ClusterDecomposition, params: SimParams) -> float:
    """The field tilt alone: beta*H*|C_b| + sum_internal log cosh(beta*H*|C|).

    This is the log Radon-Nikodym factor of the field measure with respect
    to the critical one, used for importance reweighting.
    """
    bH = params.beta * params.H
    return bH * decomp.boundary_size() + float(
        np.sum(log_cosh(bH * decomp.internal_sizes().astype(np.float64))))


def is_compatible(sigma: SpinConfig, omega: BondConfig,
                  bc: BoundaryCondition) -> bool:
    """True iff every open edge joins equal spins (boundary spins +1)."""
    dom = sigma.domain
    s = sigma.values
    w = omega.values
    u = dom.internal_edges[:, 0]
    v = dom.internal_edges[:, 1]
    open_int = w[: dom.n_internal].astype(bool)
    if np.any(s[u[open_int]] != s[v[open_int]]):
        return False
    open_ext = w[dom.n_internal:].astype(bool)
    if bc is BoundaryCondition.FREE:
        return not open_ext.any()
    return bool(np.all(s[dom.ext_edge_site[open_ext]] == 1))


def sample_bonds_given_spins(sigma: SpinConfig, params: SimParams,
                             bc: BoundaryCondition,
                             rng: np.random.Generator) -> BondConfig:
    """Exact conditional of bonds given spins: aligned edges open
    independently with probability p; disagreeing edges closed; external
    edges closed under free bc."""
    dom = sigma.domain
    omega = np.zeros(dom.n_edges, dtype=np.uint8)
    _kernels.sample_bonds_kernel(
        sigma.values, omega, params.p,
        bc is BoundaryCondition.PLUS_WIRED,
        dom.internal_edges[:, 0], dom.internal_edges[:, 1],
        dom.ext_edge_site, dom.n_internal, rng)
    return BondConfig(dom, omega)


def sample_spins_given_bonds(omega: BondConfig, params: SimParams,
                             bc: BoundaryCondition, rng: np.random.Generator,
                             decomp: ClusterDecomposition | None = None) -> SpinConfig:
    """Exact conditional of spins given bonds: boundary cluster +1, internal
    cluster C gets +1 with probability exp(bH|C|)/(2 cosh(bH|C|))."""
    dom = omega.domain
    if decomp is None:
        decomp = find_clusters(omega, bc)
    sigma = np.empty(dom.n_sites, dtype=np.int8)
    signs = np.empty(decomp.n_clusters, dtype=np.int8)
    _kernels.sample_spins_kernel(
        sigma, decomp.labels, decomp.sizes, decomp.n_clusters,
        decomp.boundary_label, params.beta * params.H, signs, rng)
    return SpinConfig(dom, sigma)


def sw_field_step(state, params: SimParams, bc: BoundaryCondition,
                  rng: np.random.Generator):
    """One full alternation (bonds given spins, spins given bonds).

    The input pair must be compatible; the output pair is compatible and
    the alternation leaves the joint field measure invariant.
    """
    sigma, omega = state
    if not is_compatible(sigma, omega, bc):
        raise IncompatibleState("input pair violates cluster-spin compatibility")
    new_omega = sample_bonds_given_spins(sigma, params, bc, rng)
    new_sigma = sample_spins_given_bonds(new_omega, params, bc, rng)
    return new_sigma, new_omega


def magnetization(sigma: SpinConfig, a: float | None = None):
    """(bare, rescaled) magnetization: sum of spins and a**(15/8) times it."""
    if a is None:
        a = sigma.domain.a
    bare = int(sigma.values.sum())
    return bare, a ** MAG_EXPONENT * bare


def reweight_to_field(samples, params: SimParams, ess_floor: float = 100.0):
    """Importance-reweight critical-ensemble samples to the field measure.

    samples: iterable of (ClusterDecomposition, g_value) drawn at H = 0.
    Weights are exp(beta*H*|C_b|) * prod_internal cosh(beta*H*|C|), handled
    in log space.  Raises DegenerateWeights when the effective sample size
    falls below ess_floor.
    """
    log_w = []
    g = []
    for decomp, value in samples:
        log_w.append(cluster_field_log_weight(decomp, params))
        g.append(value)
    if not log_w:
        raise DegenerateWeights("no samples")
    log_w = np.asarray(log_w)
    g = np.asarray(g, dtype=np.float64)
    w = np.exp(log_w - log_w.max())
    ess = w.sum() ** 2 / np.sum(w * w)
    if ess < ess_floor:
        raise DegenerateWeights(
            f"effective sample size {ess:.1f} below floor {ess_floor}")
    return float(np.sum(w * g) / w.sum())


class FKChain:
    """Mutable state of one Monte Carlo chain (exclusively owned).

    Sweeps run through preallocated buffers; after each sweep the cluster
    labels/sizes of the intermediate bond draw are available.
    """

    def __init__(self, domain: LatticeDomain, params: SimParams,
                 bc: BoundaryCondition, rng: np.random.Generator | None = None):
        self.domain = domain
        self.params = params
        self.bc = bc
        self.wired = bc is BoundaryCondition.PLUS_WIRED
        self.rng = rng if rng is not None else params.rng()
        n = domain.n_sites
        self.sigma = np.ones(n, dtype=np.int8)
        self.omega = np.zeros(domain.n_edges, dtype=np.uint8)
        self._parent = np.empty(n + 1, dtype=np.int32)
        self.labels = np.empty(n, dtype=np.int32)
        self.sizes = np.empty(n + 1, dtype=np.int64)
        self._root_label = np.empty(n + 1, dtype=np.int32)
        self._signs = np.empty(n + 1, dtype=np.int8)
        self.n_clusters = 0
        self.boundary_label = -1
        self._eu = np.ascontiguousarray(domain.internal_edges[:, 0])
        self._ev = np.ascontiguousarray(domain.internal_edges[:, 1])

    def sweep(self, n: int = 1):
        dom = self.domain
        for _ in range(n):
            self.n_clusters, self.boundary_label = _kernels.sw_sweep_grid(
                self.sigma, self.omega, self.params.p,
                self.params.beta * self.params.H, self.wired,
                dom.nx, dom.ny, dom.ext_edge_site, dom.n_internal,
                self._parent, self.labels, self.sizes, self._root_label,
                self._signs, self.rng)
        return self

    def burn_in(self):
        return self.sweep(self.params.burn_in) if self.params.burn_in else self

    def decomposition(self) -> ClusterDecomposition:
        return ClusterDecomposition(
            domain=self.domain, labels=self.labels.copy(),
            sizes=self.sizes[: self.n_clusters].copy(),
            boundary_label=self.boundary_label)

    def spin_config(self) -> SpinConfig:
        return SpinConfig(self.domain, self.sigma.copy())

    def bond_config(self) -> BondConfig:
        return BondConfig(self.domain, self.omega.copy())

    def state_key(self) -> int:
        """Encode (spins, variable bonds) as one integer (tiny domains only)."""
        key = 0
        for s in self.sigma:
            key = (key << 1) | (1 if s > 0 else 0)
        n_var = self.domain.n_edges if self.wired else self.domain.n_internal
        for e in range(n_var):
            key = (key << 1) | int(self.omega[e])
        return key


@dataclass
class ChainRecords:
    """Per-retained-sweep summary stream of one chain (JSON-lines schema)."""

    chain_id: np.ndarray
    sweep: np.ndarray
    bare_mag: np.ndarray
    rescaled_mag: np.ndarray
    n_clusters: np.ndarray
    max_cluster: np.ndarray
    boundary_cluster_size: np.ndarray

    def __len__(self):
        return len(self.sweep)

    def to_jsonl(self, fh):
        for i in range(len(self)):
            fh.write(json.dumps({
                "chain_id": int(self.chain_id[i]),
                "sweep": int(self.sweep[i]),
                "bare_mag": int(self.bare_mag[i]),
                "rescaled_mag": float(self.rescaled_mag[i]),
                "n_clusters": int(self.n_clusters[i]),
                "max_cluster": int(self.max_cluster[i]),
                "boundary_cluster_size": int(self.boundary_cluster_size[i]),
            }) + "\n")

    @classmethod
    def from_jsonl(cls, fh):
        rows = [json.loads(line) for line in fh if line.strip()]
        rows.sort(key=lambda r: (r["chain_id"], r["sweep"]))
        def col(name, dtype):
            return np.array([r[name] for r in rows], dtype=dtype)
        return cls(chain_id=col("chain_id", np.int64),
                   sweep=col("sweep", np.int64),
                   bare_mag=col("bare_mag", np.int64),
                   rescaled_mag=col("rescaled_mag", np.float64),
                   n_clusters=col("n_clusters", np.int64),
                   max_cluster=col("max_cluster", np.int64),
                   boundary_cluster_size=col("boundary_cluster_size", np.int64))


def run_chain_records(domain: LatticeDomain, params: SimParams,
                      bc: BoundaryCondition, thin: int = 1) -> ChainRecords:
    """Run one chain and emit the standard record stream."""
    chain = FKChain(domain, params, bc)
    chain.burn_in()
    n_keep = params.sweeps // thin
    scale = params.a ** MAG_EXPONENT
    out = {name: np.empty(n_keep, dtype=np.int64)
           for name in ("chain_id", "sweep", "bare_mag", "n_clusters",
                        "max_cluster", "boundary_cluster_size")}
    rescaled = np.empty(n_keep, dtype=np.float64)
    for i in range(n_keep):
        chain.sweep(thin)
        bare = int(chain.sigma.sum())
        out["chain_id"][i] = params.chain_id
        out["sweep"][i] = (i + 1) * thin
        out["bare_mag"][i] = bare
        rescaled[i] = scale * bare
        out["n_clusters"][i] = chain.n_clusters
        out["max_cluster"][i] = int(chain.sizes[: chain.n_clusters].max())
        out["boundary_cluster_size"][i] = (
            int(chain.sizes[chain.boundary_label])
            if chain.boundary_label >= 0 else 0)
    return ChainRecords(chain_id=out["chain_id"], sweep=out["sweep"],
                        bare_mag=out["bare_mag"], rescaled_mag=rescaled,
                        n_clusters=out["n_clusters"],
                        max_cluster=out["max_cluster"],
                        boundary_cluster_size=out["boundary_cluster_size"])
