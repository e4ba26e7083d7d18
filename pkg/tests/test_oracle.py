import math

import numpy as np
import pytest

from conftest import FREE, PLUS, random_bonds
from fkising import oracle
from fkising.errors import DomainTooLarge
from fkising.lattice import BETA_C, build_domain
from fkising.state import BondConfig, SimParams


def spins_expect(dist, values):
    return float(np.dot(dist.probs, values))


def test_two_site_free_tanh(dom_2site):
    dist = oracle.enumerate_ising(dom_2site, SimParams(beta=0.37), FREE)
    s = oracle.decode_spins(dist).astype(float)
    assert spins_expect(dist, s[:, 0] * s[:, 1]) == pytest.approx(math.tanh(0.37), abs=1e-14)


def test_single_site_field_tanh(dom_1site):
    p = SimParams(beta=0.5, h=0.7)
    dist = oracle.enumerate_ising(dom_1site, p, FREE)
    s = oracle.decode_spins(dist).astype(float)
    assert spins_expect(dist, s[:, 0]) == pytest.approx(math.tanh(0.5 * 0.7), abs=1e-14)


def test_infinite_temperature_uniform(dom_2x2):
    dist = oracle.enumerate_ising(dom_2x2, SimParams(beta=0.0), FREE)
    assert np.allclose(dist.probs, 1 / 16, atol=1e-15)


def test_probabilities_sum_to_one(dom_2x2):
    for bc in (FREE, PLUS):
        for dist in (oracle.enumerate_ising(dom_2x2, SimParams(beta=0.4, h=0.2), bc),
                     oracle.enumerate_fk(dom_2x2, SimParams(beta=0.4, h=0.2), bc,
                                         with_field=True),
                     oracle.enumerate_joint(dom_2x2, SimParams(beta=0.4, h=0.2), bc)):
            assert abs(dist.probs.sum() - 1.0) < 1e-12


def test_spin_support_size(dom_2x2):
    dist = oracle.enumerate_ising(dom_2x2, SimParams(beta=0.4), FREE)
    assert len(dist.keys) == 2 ** 4
    fk = oracle.enumerate_fk(dom_2x2, SimParams(beta=0.4), FREE)
    assert len(fk.keys) == 2 ** 4  # 4 variable internal edges


def test_single_edge_open_probability(dom_2site):
    # one internal edge: P(open) = 2p / (2p + 4(1-p))
    p = SimParams(beta=0.3)
    fk = oracle.enumerate_fk(dom_2site, p, FREE)
    popen = fk.probs[fk.keys == 1].sum()
    pv = p.p
    assert popen == pytest.approx(2 * pv / (2 * pv + 4 * (1 - pv)), abs=1e-14)


def test_p_one_all_open(dom_2x2):
    # beta -> infinity is p -> 1; use a large beta
    fk = oracle.enumerate_fk(dom_2x2, SimParams(beta=12.0), FREE)
    assert fk.probs[fk.keys == 0b1111] == pytest.approx(1.0, abs=1e-8)


def test_field_flag_off_equals_h_zero(dom_2x2):
    pr = SimParams(beta=0.4, h=0.0)
    d1 = oracle.enumerate_fk(dom_2x2, pr, PLUS, with_field=False)
    d2 = oracle.enumerate_fk(dom_2x2, pr, PLUS, with_field=True)
    assert np.allclose(d1.probs, d2.probs, atol=1e-14)


def test_joint_marginals_and_compatibility(dom_2x2):
    # enumerate_joint verifies both marginal identities to 1e-10 internally;
    # here also check incompatible pairs are absent from the support
    pr = SimParams(beta=0.4, h=0.3)
    for bc in (FREE, PLUS):
        j = oracle.enumerate_joint(dom_2x2, pr, bc)
        labels = oracle.enumerate_fk(dom_2x2, pr, bc).extras["labels"]
        n_var = j.n_var
        for key in j.keys[:200]:
            bond = int(key) & ((1 << n_var) - 1)
            spin = int(key) >> n_var
            lab = labels[bond]
            spins = [(spin >> (j.n_sites - 1 - i)) & 1 for i in range(j.n_sites)]
            for c in set(lab):
                vals = {spins[i] for i in range(j.n_sites) if lab[i] == c}
                assert len(vals) == 1


def test_joint_sigma_marginal_matches_ising_2x2(dom_2x2):
    pr = SimParams(beta=0.4, h=0.3)
    j = oracle.enumerate_joint(dom_2x2, pr, FREE)
    spin_marg = np.zeros(16)
    np.add.at(spin_marg, j.keys >> j.n_var, j.probs)
    ising = oracle.enumerate_ising(dom_2x2, pr, FREE)
    assert np.abs(spin_marg - ising.probs).max() < 1e-10


def test_pf_field_identity_enumerable_domains():
    domains = [build_domain(1.0, r) for r in
               [(0, 0, 0.5, 0.5), (0, 0, 1, 0.3), (0, 0, 1, 1), (0, 0, 2, 1)]]
    pr = SimParams(beta=0.4, h=0.3)
    for d in domains:
        for bc in (FREE, PLUS):
            if (d.n_edges if bc is PLUS else d.n_internal) > 12:
                continue
            lhs, rhs, rel = oracle.pf_field_identity(d, pr, bc)
            assert rel < 1e-10


def test_expectation_transfer_identity(dom_2x2):
    # E_{beta,H}(g) = E_{beta,0}(g e^{beta H M}) / E_{beta,0}(e^{beta H M})
    pr = SimParams(beta=0.45, h=0.37)
    pr0 = SimParams(beta=0.45, h=0.0)
    for bc in (FREE, PLUS):
        dh = oracle.enumerate_ising(dom_2x2, pr, bc)
        d0 = oracle.enumerate_ising(dom_2x2, pr0, bc)
        s_h = oracle.decode_spins(dh).astype(float)
        s_0 = oracle.decode_spins(d0).astype(float)
        mag0 = d0.extras["mag"].astype(float)
        tilt = np.exp(pr.beta * pr.H * mag0)
        cases = [(s_h[:, 0], s_0[:, 0]),
                 (s_h[:, 0] * s_h[:, -1], s_0[:, 0] * s_0[:, -1])]
        for g_h, g_0 in cases:
            lhs = spins_expect(dh, g_h)
            rhs = float(np.dot(d0.probs, g_0 * tilt) / np.dot(d0.probs, tilt))
            assert lhs == pytest.approx(rhs, abs=1e-12)


def test_two_point_equals_connectivity(dom_2x2):
    pr = SimParams(beta=0.42)
    ising = oracle.enumerate_ising(dom_2x2, pr, FREE)
    s = oracle.decode_spins(ising).astype(float)
    two_pt = spins_expect(ising, s[:, 0] * s[:, 3])
    fk = oracle.enumerate_fk(dom_2x2, pr, FREE)
    labels = fk.extras["labels"]
    connected = (labels[:, 0] == labels[:, 3]).astype(float)
    assert two_pt == pytest.approx(float(np.dot(fk.probs, connected)), abs=1e-12)


def test_exact_conditional_eta(dom_2x2):
    pr = SimParams(beta=0.4, h=0.5)
    # open one edge: cluster of size 2 plus two singletons
    omega = BondConfig.all_closed(dom_2x2)
    omega.values[0] = 1
    law = oracle.exact_conditional_eta(omega, pr, FREE)
    assert sorted(law.sizes.tolist()) == [1, 1, 2]
    for sz, pp in zip(law.sizes, law.p_plus):
        t = pr.beta * pr.H * sz
        assert pp == pytest.approx(math.exp(t) / (2 * math.cosh(t)), abs=1e-14)


def test_eta_half_at_zero_field_and_boundary_one(dom_2x2):
    omega = BondConfig.all_closed(dom_2x2)
    law = oracle.exact_conditional_eta(omega, SimParams(beta=0.4, h=0.0), FREE)
    assert np.allclose(law.p_plus, 0.5)
    wired = BondConfig.all_closed(dom_2x2)
    wired.values[dom_2x2.n_internal] = 1  # one external edge open
    law2 = oracle.exact_conditional_eta(wired, SimParams(beta=0.4, h=0.0), PLUS)
    assert law2.p_plus[law2.is_boundary].tolist() == [1.0]


def test_eta_three_quarters():
    # beta*H*|C| = ln(3)/2 -> P(+) = 3/4
    d = build_domain(1.0, (0, 0, 1, 0.3))
    h = math.log(3.0) / 2 / 0.4 / 2  # size-2 cluster
    pr = SimParams(beta=0.4, h=h)
    omega = BondConfig.all_closed(d)
    omega.values[0] = 1
    law = oracle.exact_conditional_eta(omega, pr, FREE)
    big = int(np.argmax(law.sizes))
    assert law.p_plus[big] == pytest.approx(0.75, abs=1e-12)


def test_domain_too_large():
    big = build_domain(1.0, (0, 0, 4, 3))
    with pytest.raises(DomainTooLarge):
        oracle.enumerate_ising(big, SimParams(beta=0.4), FREE)
    with pytest.raises(DomainTooLarge):
        oracle.enumerate_fk(big, SimParams(beta=0.4), FREE)
    with pytest.raises(DomainTooLarge):
        oracle.enumerate_joint(big, SimParams(beta=0.4), FREE)


def test_summation_order_stability(dom_2x2):
    # log_Z from a random permutation of states agrees to >= 10 digits
    pr = SimParams(beta=BETA_C, h=0.5)
    dist = oracle.enumerate_joint(dom_2x2, pr, PLUS)
    rng = np.random.default_rng(0)
    from scipy.special import logsumexp
    for _ in range(5):
        perm = rng.permutation(len(dist.log_weights))
        z2 = float(logsumexp(dist.log_weights[perm]))
        assert abs(z2 - dist.log_Z) < 1e-10 * max(1.0, abs(dist.log_Z))


def test_bfs_clusters_wired_boundary(dom_2x2):
    vals = np.zeros(dom_2x2.n_edges, dtype=np.uint8)
    vals[dom_2x2.n_internal] = 1  # attach site of first external edge
    labels, sizes, blabel = oracle.bfs_clusters(dom_2x2, vals, True)
    assert blabel >= 0
    assert sizes[blabel] == 1
    assert len(sizes) == 4
