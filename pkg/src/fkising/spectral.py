"""Dirichlet Laplacian eigenbasis on rectangles and negative-Sobolev-norm
diagnostics for magnetization field samples.

The basis is analytic: u_{m,n}(x,y) = 2/sqrt(Lx*Ly) sin(m pi (x-x0)/Lx)
sin(n pi (y-y0)/Ly) with eigenvalue pi^2 (m^2/Lx^2 + n^2/Ly^2), so there is
no discretization error in the eigenpairs themselves.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .clusters import ClusterDecomposition, cluster_diameters_above
from .errors import (AtomOutsideDomain, InsufficientSamples,
                     TruncationTooSmall)
from .lattice import MAG_EXPONENT, LatticeDomain


@dataclass(frozen=True)
class EigenPair:
    """One Dirichlet eigenpair of -Laplace on the rectangle."""

    m: int
    n: int
    eigenvalue: float
    rect: tuple

    @property
    def sup_norm(self) -> float:
        x0, y0, x1, y1 = self.rect
        return 2.0 / math.sqrt((x1 - x0) * (y1 - y0))

    def __call__(self, points) -> np.ndarray:
        x0, y0, x1, y1 = self.rect
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return (self.sup_norm
                * np.sin(self.m * np.pi * (pts[:, 0] - x0) / (x1 - x0))
                * np.sin(self.n * np.pi * (pts[:, 1] - y0) / (y1 - y0)))


def eigen_pairs(rect, n_pairs: int) -> list:
    """The n_pairs smallest Dirichlet eigenpairs, ascending, ties broken by
    (m, n) lexicographic order."""
    if n_pairs < 1:
        raise ValueError("need at least one eigenpair")
    x0, y0, x1, y1 = (float(c) for c in rect)
    lx, ly = x1 - x0, y1 - y0
    if lx <= 0 or ly <= 0:
        raise ValueError("degenerate rectangle")
    mmax, nmax = 8, 8
    while True:
        m = np.arange(1, mmax + 1)
        n = np.arange(1, nmax + 1)
        lam = (np.pi ** 2) * (m[:, None] ** 2 / lx ** 2 + n[None, :] ** 2 / ly ** 2)
        # pairs with lam <= lam_complete are guaranteed all generated
        lam_complete = (np.pi ** 2) * min((mmax + 1) ** 2 / lx ** 2,
                                          (nmax + 1) ** 2 / ly ** 2)
        complete = lam[lam <= lam_complete]
        if complete.size >= n_pairs:
            break
        mmax *= 2
        nmax *= 2
    entries = [(float(lam[i, j]), int(m[i]), int(n[j]))
               for i in range(len(m)) for j in range(len(n))
               if lam[i, j] <= lam_complete]
    entries.sort()
    return [EigenPair(m=mm, n=nn, eigenvalue=lv, rect=(x0, y0, x1, y1))
            for lv, mm, nn in entries[:n_pairs]]


@dataclass
class WeylReport:
    ell: float
    count: int
    predicted: float

    @property
    def relative_deviation(self) -> float:
        return abs(self.count - self.predicted) / self.predicted


def weyl_check(pairs, ell: float) -> WeylReport:
    """Compare the eigenvalue counting function at ell with Area/(4 pi) * ell."""
    lams = np.array([p.eigenvalue for p in pairs])
    if ell >= lams.max():
        raise TruncationTooSmall(
            f"ell={ell} is not below the largest computed eigenvalue {lams.max():.3f}")
    x0, y0, x1, y1 = pairs[0].rect
    area = (x1 - x0) * (y1 - y0)
    return WeylReport(ell=ell, count=int((lams <= ell).sum()),
                      predicted=area / (4.0 * np.pi) * ell)


@dataclass
class SupNormReport:
    sup_norm: float
    constant: float          # smallest c with sup_norm <= c * lam^(1/4) for all pairs
    holds: bool


def sup_norm_bound_check(pairs) -> SupNormReport:
    """For the sine basis the sup norm is constant, so the quarter-power
    eigenvalue bound holds with c = sup_norm / lambda_1^(1/4)."""
    sup = pairs[0].sup_norm
    lam_min = min(p.eigenvalue for p in pairs)
    c = sup / lam_min ** 0.25
    holds = all(sup <= c * p.eigenvalue ** 0.25 + 1e-12 for p in pairs)
    return SupNormReport(sup_norm=sup, constant=c, holds=holds)


@dataclass
class CoefficientVector:
    """Basis coefficients a_i of a field sample with their eigenvalues."""

    values: np.ndarray
    eigenvalues: np.ndarray
    alpha: float | None = None

    def __len__(self):
        return len(self.values)


def field_coefficients(positions, weights, pairs) -> CoefficientVector:
    """a_i = sum over atoms of weight * u_i(position), exact summation."""
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    wgt = np.asarray(weights, dtype=np.float64).reshape(-1)
    x0, y0, x1, y1 = pairs[0].rect
    tol = 1e-9 * max(x1 - x0, y1 - y0)
    if len(pts) and (pts[:, 0].min() < x0 - tol or pts[:, 0].max() > x1 + tol
                     or pts[:, 1].min() < y0 - tol or pts[:, 1].max() > y1 + tol):
        raise AtomOutsideDomain("field atom outside the eigenbasis rectangle")
    vals = np.array([float(np.dot(wgt, p(pts))) for p in pairs])
    lams = np.array([p.eigenvalue for p in pairs])
    return CoefficientVector(values=vals, eigenvalues=lams)


@dataclass
class SobolevNorm:
    norm: float
    tail_bound: float
    alpha: float
    n_truncation: int


def sobolev_norm(coeffs: CoefficientVector, alpha: float,
                 total_abs_mass: float | None = None) -> SobolevNorm:
    """Truncated negative-Sobolev norm sqrt(sum lam_i^-alpha a_i^2).

    The reported tail bound uses the sup-norm bound |a_i| <= ||u||_inf * |mass|
    and the Weyl eigenvalue density Area/(4 pi): an estimate of the norm the
    discarded tail could contribute at most.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha <= 1.5:
        warnings.warn("alpha <= 3/2: the cutoff-field limit is not guaranteed "
                      "to exist in this norm", stacklevel=2)
    lam = coeffs.eigenvalues
    norm = float(np.sqrt(np.sum(lam ** (-alpha) * coeffs.values ** 2)))
    tail = float("nan")
    if total_abs_mass is not None and alpha > 1:
        # sup norm of the sine basis is 4/Area per unit mass squared
        lam_max = float(lam.max())
        density_tail = lam_max ** (1.0 - alpha) / (alpha - 1.0) / (4.0 * np.pi)
        tail = math.sqrt(4.0 * total_abs_mass ** 2 * density_tail)
    return SobolevNorm(norm=norm, tail_bound=tail, alpha=alpha,
                       n_truncation=len(coeffs))


def sine_tables(domain: LatticeDomain, rect, pairs):
    """Per-axis sine tables for lattice-aligned atoms: sx[m-1, ix] and
    sy[n-1, iy]; the basis normalization 2/sqrt(Lx Ly) is returned separately."""
    x0, y0, x1, y1 = rect
    lx, ly = x1 - x0, y1 - y0
    ms = np.array([p.m for p in pairs])
    ns = np.array([p.n for p in pairs])
    xs = (domain.gx0 + np.arange(domain.nx)) * domain.a
    ys = (domain.gy0 + np.arange(domain.ny)) * domain.a
    mm = np.arange(1, ms.max() + 1)
    nn = np.arange(1, ns.max() + 1)
    sx = np.sin(np.pi * mm[:, None] * (xs[None, :] - x0) / lx)
    sy = np.sin(np.pi * nn[:, None] * (ys[None, :] - y0) / ly)
    norm = 2.0 / math.sqrt(lx * ly)
    return (np.ascontiguousarray(sx), np.ascontiguousarray(sy),
            ms.astype(np.int64) - 1, ns.astype(np.int64) - 1, norm)


@dataclass
class CauchyRow:
    eps: float
    eps_prime: float
    second_moment: float
    stderr: float


@dataclass
class CauchyDiagnostic:
    rows: list
    slope: float
    slope_se: float
    n_samples: int
    n_basis: int


def cutoff_cauchy_diagnostic(samples, epsilons, alpha: float,
                             n_basis: int = 128) -> CauchyDiagnostic:
    """Monte Carlo estimate of E || Phi_eps - Phi_eps' ||^2 in H^{-alpha} for
    consecutive cutoff pairs, with the fitted log-log decay exponent.

    samples: iterable of critical free-bc ClusterDecompositions.  The sign
    average is taken analytically (cross terms vanish for symmetric cluster
    signs), leaving sum over clusters in the diameter band of the squared
    coefficient norm.
    """
    eps = list(epsilons)
    if len(eps) < 2 or any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    samples = list(samples)
    if len(samples) < 2:
        raise InsufficientSamples("need at least two chain samples")
    dom = samples[0].domain
    rect = dom.rect
    pairs = eigen_pairs(rect, n_basis)
    sx, sy, bm, bn, norm = sine_tables(dom, rect, pairs)
    lam = np.array([p.eigenvalue for p in pairs])
    wb = lam ** (-alpha) * norm * norm
    theta2 = dom.a ** (2 * MAG_EXPONENT)
    n_pairs_out = len(eps) - 1
    per_sample = np.zeros((len(samples), n_pairs_out))
    eps_grid = [e / dom.a for e in eps]
    neg_eps = -np.asarray(eps_grid)
    xs = np.empty(dom.n_sites, dtype=np.int64)
    ys = np.empty(dom.n_sites, dtype=np.int64)
    for si, decomp in enumerate(samples):
        idx, diam = cluster_diameters_above(decomp, eps_grid[-1])
        for c, d in zip(idx, diam):
            if d > eps_grid[0]:
                continue
            # band j holds clusters with eps[j+1] < diam <= eps[j]
            band = int(np.searchsorted(neg_eps, -d, side="right")) - 1
            k = _kernels.gather_cluster(decomp.labels, int(c), xs, ys, dom.nx)
            contrib = theta2 * _kernels.cluster_coeff_sq_sum(
                xs[:k], ys[:k], k, sx, sy, bm, bn, wb)
            per_sample[si, band] += contrib
    means = per_sample.mean(axis=0)
    ses = per_sample.std(axis=0, ddof=1) / math.sqrt(len(samples))
    rows = [CauchyRow(eps=eps[k], eps_prime=eps[k + 1],
                      second_moment=float(means[k]), stderr=float(ses[k]))
            for k in range(n_pairs_out)]
    if np.any(means <= 0):
        raise InsufficientSamples("empty diameter band; increase samples or L")
    logx = np.log([eps[k] for k in range(n_pairs_out)])
    logy = np.log(means)
    sig = ses / means
    wfit = 1.0 / np.maximum(sig, 1e-12) ** 2
    xbar = np.average(logx, weights=wfit)
    ybar = np.average(logy, weights=wfit)
    sxx = np.sum(wfit * (logx - xbar) ** 2)
    slope = float(np.sum(wfit * (logx - xbar) * (logy - ybar)) / sxx)
    slope_se = float(math.sqrt(1.0 / sxx))
    return CauchyDiagnostic(rows=rows, slope=slope, slope_se=slope_se,
                            n_samples=len(samples), n_basis=n_basis)
