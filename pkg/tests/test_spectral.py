import itertools
import math

import numpy as np
import pytest

from conftest import FREE
from fkising.errors import (AtomOutsideDomain, InsufficientSamples,
                            TruncationTooSmall)
from fkising.lattice import BETA_C, grid_domain
from fkising.sampler import FKChain
from fkising.spectral import (CoefficientVector, cutoff_cauchy_diagnostic,
                              eigen_pairs, field_coefficients, sine_tables,
                              sobolev_norm, sup_norm_bound_check, weyl_check)
from fkising.state import SimParams

UNIT = (0.0, 0.0, 1.0, 1.0)


def test_unit_square_spectrum():
    ps = eigen_pairs(UNIT, 12)
    assert ps[0].eigenvalue == pytest.approx(2 * math.pi ** 2)
    assert (ps[0].m, ps[0].n) == (1, 1)
    # degenerate pair 5 pi^2 with lexicographic tie-break
    assert ps[1].eigenvalue == pytest.approx(5 * math.pi ** 2)
    assert ps[2].eigenvalue == pytest.approx(5 * math.pi ** 2)
    assert (ps[1].m, ps[1].n) == (1, 2)
    assert (ps[2].m, ps[2].n) == (2, 1)
    lams = [p.eigenvalue for p in ps]
    assert lams == sorted(lams)


def test_rectangle_spectrum_and_sup_norm():
    ps = eigen_pairs((0, 0, 2, 1), 5)
    assert ps[0].eigenvalue == pytest.approx(5 * math.pi ** 2 / 4)
    assert ps[0].sup_norm == pytest.approx(math.sqrt(2))
    usq = eigen_pairs(UNIT, 5)
    assert usq[0].sup_norm == pytest.approx(2.0)


def test_weyl_check():
    ps = eigen_pairs(UNIT, 700)
    rep = weyl_check(ps, 2000.0)
    assert rep.predicted == pytest.approx(2000 / (4 * math.pi))
    assert rep.relative_deviation < 0.10
    with pytest.raises(TruncationTooSmall):
        weyl_check(ps[:5], 2000.0)
    assert weyl_check(ps, 10.0).count == 0  # below lambda_1


def test_weyl_prediction_area_linearity():
    p1 = eigen_pairs(UNIT, 50)
    p2 = eigen_pairs((0, 0, 2, 1), 50)
    assert (weyl_check(p2, 300.0).predicted
            == pytest.approx(2 * weyl_check(p1, 300.0).predicted))


def test_sup_norm_bound_report():
    ps = eigen_pairs(UNIT, 30)
    rep = sup_norm_bound_check(ps)
    assert rep.holds
    assert rep.sup_norm == pytest.approx(2.0)
    assert rep.constant == pytest.approx(2 * (2 * math.pi ** 2) ** -0.25)


def test_orthonormality_quadrature():
    ps = eigen_pairs(UNIT, 6)
    grid = 256
    x = (np.arange(grid) + 0.5) / grid
    xx, yy = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    for i, j in itertools.combinations_with_replacement(range(6), 2):
        q = float(np.sum(ps[i](pts) * ps[j](pts)) / grid ** 2)
        assert q == pytest.approx(1.0 if i == j else 0.0, abs=1e-8)


def test_field_coefficients_examples():
    ps = eigen_pairs(UNIT, 8)
    cv = field_coefficients([[0.5, 0.5]], [0.3], ps)
    assert cv.values[0] == pytest.approx(0.6)   # u_11(center) = 2
    zero = field_coefficients(np.empty((0, 2)), [], ps)
    assert np.allclose(zero.values, 0.0)
    # linearity
    rng = np.random.default_rng(0)
    pos1, w1 = rng.random((5, 2)), rng.normal(size=5)
    pos2, w2 = rng.random((4, 2)), rng.normal(size=4)
    c1 = field_coefficients(pos1, w1, ps).values
    c2 = field_coefficients(pos2, w2, ps).values
    c12 = field_coefficients(np.vstack([pos1, pos2]),
                             np.concatenate([w1, w2]), ps).values
    assert np.allclose(c12, c1 + c2, atol=1e-12)
    with pytest.raises(AtomOutsideDomain):
        field_coefficients([[1.5, 0.5]], [1.0], ps)


def test_sobolev_norm_examples():
    ps = eigen_pairs(UNIT, 10)
    lams = np.array([p.eigenvalue for p in ps])
    e1 = np.zeros(10)
    e1[0] = 1.0
    cv = CoefficientVector(values=e1, eigenvalues=lams)
    for alpha in (2.0, 3.0):
        sn = sobolev_norm(cv, alpha)
        assert sn.norm == pytest.approx((2 * math.pi ** 2) ** (-alpha / 2))
    zero = CoefficientVector(values=np.zeros(10), eigenvalues=lams)
    assert sobolev_norm(zero, 2.0).norm == 0.0
    # homogeneity
    rng = np.random.default_rng(1)
    vals = rng.normal(size=10)
    cv2 = CoefficientVector(values=vals, eigenvalues=lams)
    n1 = sobolev_norm(cv2, 2.0).norm
    n3 = sobolev_norm(CoefficientVector(values=3 * vals, eigenvalues=lams), 2.0).norm
    assert n3 == pytest.approx(3 * n1)
    with pytest.warns(UserWarning):
        sobolev_norm(cv2, 1.0)


def test_sobolev_norm_triangle_inequality():
    ps = eigen_pairs(UNIT, 12)
    lams = np.array([p.eigenvalue for p in ps])
    rng = np.random.default_rng(2)
    for _ in range(20):
        u = rng.normal(size=12)
        v = rng.normal(size=12)
        nu = sobolev_norm(CoefficientVector(u, lams), 2.0).norm
        nv = sobolev_norm(CoefficientVector(v, lams), 2.0).norm
        nuv = sobolev_norm(CoefficientVector(u + v, lams), 2.0).norm
        assert nuv <= nu + nv + 1e-12


def test_sine_tables_match_eigenpairs():
    domain = grid_domain(9, a=0.125)
    ps = eigen_pairs(domain.rect, 20)
    sx, sy, bm, bn, norm = sine_tables(domain, domain.rect, ps)
    pos = domain.positions()
    for b in (0, 3, 11, 19):
        direct = ps[b](pos)
        ix = np.round(pos[:, 0] / domain.a).astype(int) - domain.gx0
        iy = np.round(pos[:, 1] / domain.a).astype(int) - domain.gy0
        table = norm * sx[bm[b], ix] * sy[bn[b], iy]
        assert np.allclose(table, direct, atol=1e-12)


def test_cutoff_cauchy_validation():
    domain = grid_domain(16, a=1 / 16)
    params = SimParams(beta=BETA_C, a=1 / 16, seed=0)
    chain = FKChain(domain, params, FREE).sweep(30)
    samples = [chain.decomposition()]
    with pytest.raises(InsufficientSamples):
        cutoff_cauchy_diagnostic(samples, [0.5, 0.25], alpha=2.0, n_basis=8)
    chain.sweep(1)
    samples.append(chain.decomposition())
    with pytest.raises(ValueError):
        cutoff_cauchy_diagnostic(samples, [0.25, 0.5], alpha=2.0, n_basis=8)


def test_field_norm_bound_invariant():
    """Sampled second moment of the field norm obeys the sup-norm/Weyl
    comparison: E||Phi||^2_{H^-a'} <= (sum ||u||_inf^2 / lam^a') E[(Phi(1))^2],
    with three-sigma slack."""
    L, a = 48, 1 / 48
    domain = grid_domain(L, a)
    params = SimParams(beta=BETA_C, a=a, seed=6)
    chain = FKChain(domain, params, FREE).sweep(200)
    ps = eigen_pairs(domain.rect, 64)
    lams = np.array([p.eigenvalue for p in ps])
    alpha_p = 1.75
    pos = domain.positions()
    basis_vals = np.column_stack([p(pos) for p in ps])
    scale = a ** (15 / 8)
    norms = []
    mags = []
    n = 400
    for _ in range(n):
        chain.sweep(2)
        w = scale * chain.sigma.astype(float)
        coeffs = w @ basis_vals
        norms.append(float(np.sum(lams ** -alpha_p * coeffs ** 2)))
        mags.append(float(w.sum()) ** 2)
    lhs = np.mean(norms)
    bound_const = float(np.sum(np.array([p.sup_norm for p in ps]) ** 2
                               / lams ** alpha_p))
    rhs = bound_const * np.mean(mags)
    se = math.sqrt(np.var(norms) / n + bound_const ** 2 * np.var(mags) / n)
    assert lhs <= rhs + 3 * se
