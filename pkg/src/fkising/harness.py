"""Estimators and statistical tests for the quantitative scaling laws:
critical decay exponent, magnetization normalization, near-critical
truncated correlations and mass gap, scaling covariance, free-vs-wired
comparisons.

Every estimator is a pure fold over per-block record arrays produced by a
chain driver; replaying the same records reproduces the estimate exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .clusters import largest_internal_diameter
from .errors import (CorrelationLengthTooLarge, IncompatibleLambda,
                     InsufficientStatistics)
from .lattice import (BETA_C, MAG_EXPONENT, BoundaryCondition, LatticeDomain,
                      grid_domain)
from .loops import largest_dual_diameter, loop_stats
from .sampler import FKChain
from .state import SimParams

MASS_EXPONENT = 8.0 / 15.0


@dataclass
class ExponentFit:
    abscissae: np.ndarray
    ordinates: np.ndarray
    slope: float
    intercept: float
    stderr: float
    window: tuple

    def __post_init__(self):
        if len(self.abscissae) < 3:
            raise InsufficientStatistics("exponent fit needs >= 3 points")
        if not (np.isfinite(self.slope) and np.isfinite(self.stderr)):
            raise InsufficientStatistics("non-finite fit")


@dataclass
class TruncatedCorrelationEstimate:
    r: float                 # separation in lattice units
    estimate: float
    stderr: float
    h: float
    a: float
    L: int


def _wls(x, y, w):
    """Weighted least squares line fit; returns slope, intercept."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    xb = np.average(x, weights=w)
    yb = np.average(y, weights=w)
    sxx = np.sum(w * (x - xb) ** 2)
    slope = np.sum(w * (x - xb) * (y - yb)) / sxx
    return float(slope), float(yb - slope * xb)


def _jackknife(values):
    """(mean of replicates, jackknife standard error)."""
    values = np.asarray(values, dtype=np.float64)
    b = len(values)
    mean = values.mean()
    se = math.sqrt((b - 1) / b * np.sum((values - mean) ** 2))
    return float(mean), se


def _central_window(n: int, frac: float = 0.5):
    """Inclusive grid bounds of the centered frac-by-frac sub-square."""
    half = int(round(n * frac / 2))
    mid = n // 2
    return mid - half, mid + half - 1


# ---------------------------------------------------------------------------
# critical two-point function
# ---------------------------------------------------------------------------

@dataclass
class PairCountRecords:
    """Per-block same-cluster and spin-product pair counts at separations rs."""

    rs: np.ndarray
    same: np.ndarray          # (blocks, len(rs))
    npairs: np.ndarray
    spinprod: np.ndarray
    L: int
    a: float
    beta: float
    sweeps: int


def run_pair_counts(L: int, a: float, r_list, sweeps: int, beta: float = BETA_C,
                    seed: int = 0, burn_in: int = 200, n_blocks: int = 20,
                    thin: int = 1,
                    bc: BoundaryCondition = BoundaryCondition.FREE) -> PairCountRecords:
    domain = grid_domain(L, a)
    params = SimParams(beta=beta, h=0.0, a=a, sweeps=sweeps, burn_in=burn_in,
                       seed=seed)
    rs = np.asarray(sorted(r_list), dtype=np.int64)
    if rs[0] < 1 or rs[-1] > L // 4:
        raise ValueError("separations must lie in [1, L/4]")
    wx0, wx1 = _central_window(domain.nx)
    wy0, wy1 = _central_window(domain.ny)
    chain = FKChain(domain, params, bc)
    chain.burn_in()
    n_keep = sweeps // thin
    bounds = np.linspace(0, n_keep, n_blocks + 1).astype(int)
    same = np.zeros((n_blocks, len(rs)))
    npairs = np.zeros((n_blocks, len(rs)))
    sprod = np.zeros((n_blocks, len(rs)))
    sp_tmp = np.zeros(len(rs))
    np_tmp = np.zeros(len(rs))
    for b in range(n_blocks):
        for _ in range(bounds[b], bounds[b + 1]):
            chain.sweep(thin)
            _kernels.pair_connectivity(chain.labels, domain.nx, wx0, wx1,
                                       wy0, wy1, rs, same[b], npairs[b])
            sp_tmp[:] = 0.0
            np_tmp[:] = 0.0
            _kernels.pair_spinprod(chain.sigma, domain.nx, wx0, wx1, wy0, wy1,
                                   rs, sp_tmp, np_tmp)
            sprod[b] += sp_tmp
    return PairCountRecords(rs=rs, same=same, npairs=npairs, spinprod=sprod,
                            L=L, a=a, beta=beta, sweeps=sweeps)


@dataclass
class Critical2ptResult:
    fit: ExponentFit
    rs: np.ndarray
    corr_fk: np.ndarray
    corr_fk_se: np.ndarray
    corr_spin: np.ndarray
    corr_spin_se: np.ndarray


def fold_critical_2pt(recs, slope_se_cap: float | None = None) -> Critical2ptResult:
    """Log-log fit of the FK connectivity estimator of the critical
    two-point function against separation.

    recs may be one PairCountRecords or a list (e.g. one free-bc and one
    wired-bc run); the correlation estimate averages the per-record
    connectivities, which cancels the leading finite-volume boundary
    corrections when the pair is a free/wired duality pair.
    """
    if isinstance(recs, PairCountRecords):
        recs = [recs]
    rs = recs[0].rs
    n_blocks = recs[0].same.shape[0]
    for rec in recs:
        if np.any(rec.same.sum(axis=0) <= 0):
            raise InsufficientStatistics("zero connectivity at some separation")

    def estimates(leave_out=None):
        p_fk = np.zeros(len(rs))
        p_spin = np.zeros(len(rs))
        for rec in recs:
            same = rec.same.sum(axis=0)
            pairs = rec.npairs.sum(axis=0)
            spin = rec.spinprod.sum(axis=0)
            if leave_out is not None:
                same = same - rec.same[leave_out]
                pairs = pairs - rec.npairs[leave_out]
                spin = spin - rec.spinprod[leave_out]
            p_fk += same / pairs / len(recs)
            p_spin += spin / pairs / len(recs)
        return p_fk, p_spin

    p_fk, p_spin = estimates()
    logr = np.log(rs.astype(np.float64))
    slopes = np.empty(n_blocks)
    p_fk_reps = np.empty((n_blocks, len(rs)))
    p_spin_reps = np.empty((n_blocks, len(rs)))
    for b in range(n_blocks):
        p_b, ps_b = estimates(leave_out=b)
        p_fk_reps[b] = p_b
        p_spin_reps[b] = ps_b
        slopes[b], _ = _wls(logr, np.log(p_b), np.ones_like(logr))
    slope_full, icept = _wls(logr, np.log(p_fk), np.ones_like(logr))
    _, slope_se = _jackknife(slopes)
    fit = ExponentFit(abscissae=logr, ordinates=np.log(p_fk), slope=slope_full,
                      intercept=icept, stderr=slope_se,
                      window=(int(rs[0]), int(rs[-1])))
    if slope_se_cap is not None and slope_se > slope_se_cap:
        raise InsufficientStatistics(
            f"slope stderr {slope_se:.4f} above cap {slope_se_cap}")
    def col_se(reps):
        return np.sqrt((n_blocks - 1) / n_blocks
                       * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0))
    return Critical2ptResult(fit=fit, rs=rs, corr_fk=p_fk,
                             corr_fk_se=col_se(p_fk_reps), corr_spin=p_spin,
                             corr_spin_se=col_se(p_spin_reps))


def estimate_critical_2pt(L: int, a: float, r_list, sweeps: int,
                          seed: int = 0, bc_average: bool = True,
                          **kw) -> Critical2ptResult:
    """Critical two-point decay fit via the FK connectivity estimator.

    With bc_average the sweep budget is split between a free and a wired
    chain and the two connectivity estimates are averaged: at the self-dual
    point their finite-box corrections have opposite sign and cancel to
    leading order.
    """
    cap = kw.pop("slope_se_cap", None)
    if not bc_average:
        rec = run_pair_counts(L, a, r_list, sweeps, seed=seed, **kw)
        return fold_critical_2pt(rec, slope_se_cap=cap)
    half = sweeps // 2
    rec_f = run_pair_counts(L, a, r_list, half, seed=seed,
                            bc=BoundaryCondition.FREE, **kw)
    rec_w = run_pair_counts(L, a, r_list, half, seed=seed + 1,
                            bc=BoundaryCondition.PLUS_WIRED, **kw)
    return fold_critical_2pt([rec_f, rec_w], slope_se_cap=cap)


# ---------------------------------------------------------------------------
# second-moment normalization
# ---------------------------------------------------------------------------

@dataclass
class MomentRecords:
    a: float
    n_sites: int
    block_m2: np.ndarray      # per-block sums of (bare magnetization)^2
    block_m4: np.ndarray
    block_s2: np.ndarray      # per-block sums of sum_i |C_i|^2
    block_n: np.ndarray


def run_moments(a: float, sweeps: int, rect=(0.0, 0.0, 1.0, 1.0),
                beta: float = BETA_C, seed: int = 0, burn_in: int = 300,
                n_blocks: int = 20, thin: int = 1) -> MomentRecords:
    from .lattice import build_domain
    domain = build_domain(a, rect)
    params = SimParams(beta=beta, h=0.0, a=a, sweeps=sweeps, burn_in=burn_in,
                       seed=seed)
    chain = FKChain(domain, params, BoundaryCondition.FREE)
    chain.burn_in()
    n_keep = sweeps // thin
    bounds = np.linspace(0, n_keep, n_blocks + 1).astype(int)
    m2 = np.zeros(n_blocks)
    m4 = np.zeros(n_blocks)
    s2 = np.zeros(n_blocks)
    cnt = np.zeros(n_blocks)
    for b in range(n_blocks):
        for _ in range(bounds[b], bounds[b + 1]):
            chain.sweep(thin)
            mag = float(chain.sigma.sum())
            m2[b] += mag * mag
            m4[b] += mag ** 4
            s2[b] += _kernels.sum_sizes_sq(chain.sizes, chain.n_clusters)
            cnt[b] += 1
    return MomentRecords(a=a, n_sites=domain.n_sites, block_m2=m2,
                         block_m4=m4, block_s2=s2, block_n=cnt)


@dataclass
class NormalizationRow:
    a: float
    msq_spin: float
    msq_spin_se: float
    msq_fk: float
    msq_fk_se: float
    diff_se: float
    msq_wrong_exponent: float


def fold_normalization(rec: MomentRecords) -> NormalizationRow:
    theta2 = rec.a ** (2 * MAG_EXPONENT)
    tot_n = rec.block_n.sum()
    spin = theta2 * rec.block_m2.sum() / tot_n
    fk = theta2 * rec.block_s2.sum() / tot_n
    b = len(rec.block_n)
    reps_spin = np.empty(b)
    reps_fk = np.empty(b)
    reps_diff = np.empty(b)
    for i in range(b):
        n_i = tot_n - rec.block_n[i]
        reps_spin[i] = theta2 * (rec.block_m2.sum() - rec.block_m2[i]) / n_i
        reps_fk[i] = theta2 * (rec.block_s2.sum() - rec.block_s2[i]) / n_i
        reps_diff[i] = reps_spin[i] - reps_fk[i]
    _, se_spin = _jackknife(reps_spin)
    _, se_fk = _jackknife(reps_fk)
    _, se_diff = _jackknife(reps_diff)
    wrong = rec.a ** 4 * rec.block_m2.sum() / tot_n
    return NormalizationRow(a=rec.a, msq_spin=spin, msq_spin_se=se_spin,
                            msq_fk=fk, msq_fk_se=se_fk, diff_se=se_diff,
                            msq_wrong_exponent=wrong)


def second_moment_normalization(a_list, sweeps: int, seed: int = 0,
                                **kw) -> list:
    return [fold_normalization(run_moments(a, sweeps, seed=seed + i, **kw))
            for i, a in enumerate(a_list)]


# ---------------------------------------------------------------------------
# near-critical truncated two-point function
# ---------------------------------------------------------------------------

@dataclass
class TruncPairRecords:
    rs: np.ndarray
    pair_rb: np.ndarray        # (blocks, R) sums of cluster-conditional pair means
    npairs: np.ndarray         # (R,) pairs per sweep at each r
    tsite: np.ndarray          # (blocks, window sites) sums of conditional site means
    block_sweeps: np.ndarray
    wshape: tuple              # (wny, wnx)
    L: int
    a: float
    h: float
    beta: float


def run_trunc_pairs(L: int, a: float, h: float, r_list, sweeps: int,
                    bc: BoundaryCondition = BoundaryCondition.PLUS_WIRED,
                    beta: float = BETA_C, seed: int = 0, burn_in: int = 300,
                    n_blocks: int = 16, thin: int = 1) -> TruncPairRecords:
    domain = grid_domain(L, a)
    params = SimParams(beta=beta, h=h, a=a, sweeps=sweeps, burn_in=burn_in,
                       seed=seed)
    rs = np.asarray(sorted(r_list), dtype=np.int64)
    wx0, wx1 = _central_window(domain.nx)
    wy0, wy1 = _central_window(domain.ny)
    if rs[-1] > wx1 - wx0:
        raise ValueError("separation exceeds measurement window")
    wnx = wx1 - wx0 + 1
    wny = wy1 - wy0 + 1
    chain = FKChain(domain, params, bc)
    chain.burn_in()
    n_keep = sweeps // thin
    bounds = np.linspace(0, n_keep, n_blocks + 1).astype(int)
    pair_rb = np.zeros((n_blocks, len(rs)))
    tsite = np.zeros((n_blocks, wny * wnx))
    tcl = np.empty(domain.n_sites + 1, dtype=np.float64)
    bH = params.beta * params.H
    for b in range(n_blocks):
        for _ in range(bounds[b], bounds[b + 1]):
            chain.sweep(thin)
            _kernels.cluster_tanh(chain.sizes, chain.n_clusters,
                                  chain.boundary_label, bH, tcl)
            _kernels.pair_rao_blackwell(chain.labels, tcl, domain.nx,
                                        wx0, wx1, wy0, wy1, rs,
                                        pair_rb[b], tsite[b])
    npairs = np.array([(wnx - r) * wny + (wny - r) * wnx for r in rs],
                      dtype=np.float64)
    return TruncPairRecords(rs=rs, pair_rb=pair_rb, npairs=npairs,
                            tsite=tsite, block_sweeps=np.diff(bounds).astype(float),
                            wshape=(wny, wnx), L=L, a=a, h=h, beta=beta)


def _mean_pair_product(tmean: np.ndarray, wshape, rs):
    """Average over window pairs of m(x) m(x+r) for each separation."""
    wny, wnx = wshape
    grid = tmean.reshape(wny, wnx)
    out = np.empty(len(rs))
    for i, r in enumerate(rs):
        acc = (grid[:, :-r] * grid[:, r:]).sum() + (grid[:-r, :] * grid[r:, :]).sum()
        out[i] = acc / ((wnx - r) * wny + (wny - r) * wnx)
    return out


def fold_truncated_2pt(rec: TruncPairRecords) -> list:
    """Jackknife-corrected truncated correlations per separation."""
    n_blocks = len(rec.block_sweeps)
    tot_sweeps = rec.block_sweeps.sum()
    reps = np.empty((n_blocks, len(rec.rs)))
    for b in range(n_blocks):
        n_b = tot_sweeps - rec.block_sweeps[b]
        pair = (rec.pair_rb.sum(axis=0) - rec.pair_rb[b]) / n_b / rec.npairs
        tmean = (rec.tsite.sum(axis=0) - rec.tsite[b]) / n_b
        reps[b] = pair - _mean_pair_product(tmean, rec.wshape, rec.rs)
    pair_full = rec.pair_rb.sum(axis=0) / tot_sweeps / rec.npairs
    tmean_full = rec.tsite.sum(axis=0) / tot_sweeps
    full = pair_full - _mean_pair_product(tmean_full, rec.wshape, rec.rs)
    # jackknife bias correction: n*theta_full - (n-1)*mean(replicates)
    corrected = n_blocks * full - (n_blocks - 1) * reps.mean(axis=0)
    se = np.sqrt((n_blocks - 1) / n_blocks
                 * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0))
    return [TruncatedCorrelationEstimate(r=float(r), estimate=float(corrected[i]),
                                         stderr=float(se[i]), h=rec.h, a=rec.a,
                                         L=rec.L)
            for i, r in enumerate(rec.rs)]


def truncated_2pt(L: int, a: float, h: float, r_list, sweeps: int,
                  **kw) -> list:
    return fold_truncated_2pt(run_trunc_pairs(L, a, h, r_list, sweeps, **kw))


# ---------------------------------------------------------------------------
# mass-gap extraction
# ---------------------------------------------------------------------------

@dataclass
class MassEstimate:
    h: float
    mass: float               # decay rate per lattice unit
    mass_se: float
    window: tuple
    xi_lattice: float
    estimates: list


@dataclass
class MassFitResult:
    fit: ExponentFit          # slope of log m(h) vs log h
    masses: list
    box_over_xi_min: float


def _fit_rate(rs, vals, ses, window):
    """Exponential rate of vals ~ exp(-m r) over the window (r^{1/4} already
    multiplied in by the caller)."""
    sel = (rs >= window[0]) & (rs <= window[1]) & (vals > 0)
    if sel.sum() < 3:
        raise CorrelationLengthTooLarge("tail window has fewer than 3 usable points")
    x = rs[sel]
    y = np.log(vals[sel])
    w = (vals[sel] / np.maximum(ses[sel], 1e-300)) ** 2
    slope, _ = _wls(x, y, w)
    return -slope


def extract_mass(estimates, min_decades: float = 3.0) -> MassEstimate:
    """Fitted exponential decay rate of the truncated correlation tail.

    The r^{-1/4} short-distance prefactor is divided out, a first pass over
    all separations picks the scale, and the final fit runs over the window
    [1/m, 4/m]; the window must span at least min_decades decay lengths.
    """
    rs = np.array([e.r for e in estimates])
    vals = np.array([e.estimate for e in estimates]) * rs ** 0.25
    ses = np.array([e.stderr for e in estimates]) * rs ** 0.25
    usable = vals > 2.0 * ses
    if usable.sum() < 3:
        raise InsufficientStatistics("truncated correlations below noise")
    m0 = _fit_rate(rs[usable], vals[usable], ses[usable],
                   (rs[usable][0], rs[usable][-1]))
    if m0 <= 0:
        raise InsufficientStatistics("no decay detected (non-positive rate)")
    window = (1.0 / m0, 4.0 / m0)
    r_hi_avail = rs[usable][-1]
    if (min(window[1], r_hi_avail) - window[0]) * m0 < min_decades - 1e-9:
        raise CorrelationLengthTooLarge(
            f"tail window shorter than {min_decades} decay lengths "
            f"(xi={1/m0:.1f} lattice units, window to r={r_hi_avail})")
    m_hat = _fit_rate(rs, vals, ses, window)
    return MassEstimate(h=estimates[0].h, mass=m_hat, mass_se=float("nan"),
                        window=window, xi_lattice=1.0 / m_hat,
                        estimates=list(estimates))


def mass_at_h(L: int, a: float, h: float, sweeps: int, r_list=None,
              seed: int = 0, n_blocks: int = 16, **kw) -> MassEstimate:
    if r_list is None:
        r_max = int(L * 0.45)
        r_list = np.unique(np.geomspace(2, r_max, 28).astype(int))
    rec = run_trunc_pairs(L, a, h, r_list, sweeps, seed=seed,
                          n_blocks=n_blocks, **kw)
    est = fold_truncated_2pt(rec)
    me = extract_mass(est)
    # jackknife the rate over blocks with the window held fixed
    n_b = len(rec.block_sweeps)
    tot = rec.block_sweeps.sum()
    rates = []
    rs = np.array([e.r for e in est])
    for b in range(n_b):
        nn = tot - rec.block_sweeps[b]
        pair = (rec.pair_rb.sum(axis=0) - rec.pair_rb[b]) / nn / rec.npairs
        tmean = (rec.tsite.sum(axis=0) - rec.tsite[b]) / nn
        vals = (pair - _mean_pair_product(tmean, rec.wshape, rec.rs)) * rs ** 0.25
        ses = np.array([e.stderr for e in est]) * rs ** 0.25
        try:
            rates.append(_fit_rate(rs, vals, ses, me.window))
        except CorrelationLengthTooLarge:
            pass
    if len(rates) >= 3:
        _, se = _jackknife(np.array(rates))
        me.mass_se = se
    return me


def fit_mass(h_list, L: int, a: float, sweeps: int, seed: int = 0,
             **kw) -> MassFitResult:
    """Per-h mass extraction and the log m vs log h exponent fit."""
    masses = [mass_at_h(L, a, h, sweeps, seed=seed + i, **kw)
              for i, h in enumerate(sorted(h_list))]
    hs = np.array([m.h for m in masses])
    ms = np.array([m.mass for m in masses])
    ses = np.array([m.mass_se for m in masses])
    w = (ms / np.where(np.isfinite(ses) & (ses > 0), ses, ms * 0.05)) ** 2
    slope, icept = _wls(np.log(hs), np.log(ms), w)
    # scatter-based slope error on the weighted fit
    xb = np.average(np.log(hs), weights=w)
    sxx = np.sum(w * (np.log(hs) - xb) ** 2)
    resid = np.log(ms) - (slope * np.log(hs) + icept)
    dof = max(len(hs) - 2, 1)
    se_scatter = math.sqrt(max(np.sum(w * resid ** 2) / dof, 1.0) / sxx)
    fit = ExponentFit(abscissae=np.log(hs), ordinates=np.log(ms), slope=slope,
                      intercept=icept, stderr=se_scatter,
                      window=(float(hs[0]), float(hs[-1])))
    box_over_xi = min(L / m.xi_lattice for m in masses)
    return MassFitResult(fit=fit, masses=masses, box_over_xi_min=box_over_xi)


# ---------------------------------------------------------------------------
# scaling covariance (block magnetization KS test)
# ---------------------------------------------------------------------------

@dataclass
class BlockMagRecords:
    values: np.ndarray        # rescaled block magnetizations
    L: int
    a: float
    h: float


def run_block_mags(L: int, a: float, h: float, n_samples: int,
                   bc: BoundaryCondition = BoundaryCondition.PLUS_WIRED,
                   beta: float = BETA_C, seed: int = 0, burn_in: int = 300,
                   thin: int = 4, block_frac: float = 0.5) -> BlockMagRecords:
    domain = grid_domain(L, a)
    params = SimParams(beta=beta, h=h, a=a, sweeps=n_samples * thin,
                       burn_in=burn_in, seed=seed)
    bx0, bx1 = _central_window(domain.nx, block_frac)
    by0, by1 = _central_window(domain.ny, block_frac)
    chain = FKChain(domain, params, bc)
    chain.burn_in()
    out = np.empty(n_samples)
    scale = a ** MAG_EXPONENT
    for i in range(n_samples):
        chain.sweep(thin)
        out[i] = scale * _kernels.block_sum(chain.sigma, domain.nx,
                                            bx0, bx1, by0, by1)
    return BlockMagRecords(values=out, L=L, a=a, h=h)


@dataclass
class ScalingTestResult:
    ks_stat: float
    pvalue: float
    n_base: int
    n_scaled: int
    lam: float
    h: float


def scaling_covariance_test(L: int, a: float, h: float, lam: float,
                            n_samples: int = 10_000, seed: int = 0,
                            **kw) -> ScalingTestResult:
    """Compare lam^{-15/8} * block magnetization of the lam-scaled domain at
    field lam^{-15/8} h against the base domain at h."""
    lam_l = lam * L
    if abs(lam_l - round(lam_l)) > 1e-9:
        raise IncompatibleLambda(f"lambda*L = {lam_l} is not integral")
    base = run_block_mags(L, a, h, n_samples, seed=seed, **kw)
    h_scaled = lam ** (-MAG_EXPONENT) * h
    scaled = run_block_mags(int(round(lam_l)), a, h_scaled, n_samples,
                            seed=seed + 1, **kw)
    ks = stats.ks_2samp(base.values, lam ** (-MAG_EXPONENT) * scaled.values)
    return ScalingTestResult(ks_stat=float(ks.statistic),
                             pvalue=float(ks.pvalue), n_base=len(base.values),
                             n_scaled=len(scaled.values), lam=lam, h=h)


# ---------------------------------------------------------------------------
# free vs wired comparison
# ---------------------------------------------------------------------------

@dataclass
class BCStatRecords:
    largest_internal: np.ndarray   # grid units
    largest_dual: np.ndarray       # grid units (wired runs; NaN otherwise)
    n_loops_large: np.ndarray      # free runs: loops with diameter > L/8
    largest_loop: np.ndarray       # free runs: largest loop diameter
    bc: str
    beta: float
    L: int


def run_bc_stats(L: int, beta: float, bc: BoundaryCondition, n_samples: int,
                 seed: int = 0, burn_in: int = 300, thin: int = 3,
                 with_loops: bool = False, with_dual: bool = False) -> BCStatRecords:
    domain = grid_domain(L, 1.0)
    params = SimParams(beta=beta, h=0.0, a=1.0, sweeps=n_samples * thin,
                       burn_in=burn_in, seed=seed)
    chain = FKChain(domain, params, bc)
    chain.burn_in()
    li = np.empty(n_samples)
    ld = np.full(n_samples, np.nan)
    nl = np.full(n_samples, np.nan)
    ll = np.full(n_samples, np.nan)
    for i in range(n_samples):
        chain.sweep(thin)
        decomp = chain.decomposition()
        li[i] = largest_internal_diameter(decomp)
        if with_dual:
            ld[i] = largest_dual_diameter(chain.omega, domain)
        if with_loops and bc is BoundaryCondition.FREE:
            from .loops import trace_loops
            from .state import BondConfig
            loops = trace_loops(BondConfig(domain, chain.omega.copy()), domain)
            diams = np.array([lp.diameter for lp in loops])
            nl[i] = int((diams > L / 8).sum())
            ll[i] = diams.max()
    return BCStatRecords(largest_internal=li, largest_dual=ld,
                         n_loops_large=nl, largest_loop=ll, bc=bc.value,
                         beta=beta, L=L)


@dataclass
class BCTestResult:
    ks_internal: float
    ks_internal_p: float
    ks_dual_matched: float     # free primal vs wired dual (self-duality pairing)
    n_samples: int
    beta: float


def free_vs_wired_test(L: int, beta: float, n_samples: int, seed: int = 0,
                       **kw) -> BCTestResult:
    free = run_bc_stats(L, beta, BoundaryCondition.FREE, n_samples,
                        seed=seed, **kw)
    wired = run_bc_stats(L, beta, BoundaryCondition.PLUS_WIRED, n_samples,
                         seed=seed + 1, with_dual=True, **kw)
    ks_i = stats.ks_2samp(free.largest_internal, wired.largest_internal)
    ks_d = stats.ks_2samp(free.largest_internal, wired.largest_dual)
    return BCTestResult(ks_internal=float(ks_i.statistic),
                        ks_internal_p=float(ks_i.pvalue),
                        ks_dual_matched=float(ks_d.statistic),
                        n_samples=n_samples, beta=beta)


# ---------------------------------------------------------------------------
# field covariance decay across translated test blocks
# ---------------------------------------------------------------------------

@dataclass
class CovarianceDecayResult:
    us: np.ndarray            # strip separations, lattice units
    cov: np.ndarray
    cov_se: np.ndarray
    rate: float
    rate_se: float


def covariance_decay_field(L: int, a: float, h: float, u_list, sweeps: int,
                           strip_width: int = 4, seed: int = 0,
                           beta: float = BETA_C, burn_in: int = 300,
                           n_blocks: int = 16, thin: int = 1) -> CovarianceDecayResult:
    """Covariance of the field paired with a fixed strip indicator and its
    u-translates, with the fitted exponential tail rate.

    Strips are vertical, strip_width sites wide, spanning the central half
    in y; u translates along x.  The r^{-1/4} prefactor is divided out of
    |Cov| before the rate fit, mirroring the mass extraction.
    """
    domain = grid_domain(L, a)
    us = np.asarray(sorted(u_list), dtype=np.int64)
    params = SimParams(beta=beta, h=h, a=a, sweeps=sweeps, burn_in=burn_in,
                       seed=seed)
    wy0, wy1 = _central_window(domain.ny)
    x_f0 = domain.nx // 4
    if x_f0 + strip_width + us[-1] > domain.nx * 3 // 4:
        raise ValueError("largest translate leaves the measurement window")
    chain = FKChain(domain, params, BoundaryCondition.PLUS_WIRED)
    chain.burn_in()
    n_keep = sweeps // thin
    bounds = np.linspace(0, n_keep, n_blocks + 1).astype(int)
    n_series = 1 + len(us)
    sums = np.zeros((n_blocks, n_series))
    prods = np.zeros((n_blocks, len(us)))
    counts = np.zeros(n_blocks)
    for b in range(n_blocks):
        for _ in range(bounds[b], bounds[b + 1]):
            chain.sweep(thin)
            f_val = float(_kernels.block_sum(chain.sigma, domain.nx, x_f0,
                                             x_f0 + strip_width - 1, wy0, wy1))
            sums[b, 0] += f_val
            for i, u in enumerate(us):
                g_val = float(_kernels.block_sum(
                    chain.sigma, domain.nx, x_f0 + u,
                    x_f0 + u + strip_width - 1, wy0, wy1))
                sums[b, 1 + i] += g_val
                prods[b, i] += f_val * g_val
            counts[b] += 1
    tot = counts.sum()
    reps = np.empty((n_blocks, len(us)))
    for bb in range(n_blocks):
        n_i = tot - counts[bb]
        s = (sums.sum(axis=0) - sums[bb]) / n_i
        pr = (prods.sum(axis=0) - prods[bb]) / n_i
        reps[bb] = pr - s[0] * s[1:]
    cov_full = prods.sum(axis=0) / tot - (sums.sum(axis=0)[0] / tot) * (sums.sum(axis=0)[1:] / tot)
    cov = n_blocks * cov_full - (n_blocks - 1) * reps.mean(axis=0)
    se = np.sqrt((n_blocks - 1) / n_blocks
                 * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0))
    vals = np.abs(cov) * us.astype(float) ** 0.25
    vses = se * us.astype(float) ** 0.25
    sel = vals > 2 * vses
    if sel.sum() < 3:
        raise InsufficientStatistics("covariances below noise")
    rate = _fit_rate(us[sel].astype(float), vals[sel], vses[sel],
                     (float(us[sel][0]), float(us[sel][-1])))
    # block-jackknife the rate
    rates = []
    for bb in range(n_blocks):
        v = np.abs(reps[bb]) * us.astype(float) ** 0.25
        try:
            rates.append(_fit_rate(us[sel].astype(float), v[sel], vses[sel],
                                   (float(us[sel][0]), float(us[sel][-1]))))
        except (CorrelationLengthTooLarge, FloatingPointError):
            pass
    rate_se = _jackknife(np.array(rates))[1] if len(rates) >= 3 else float("nan")
    theta2 = (a ** MAG_EXPONENT) ** 2
    return CovarianceDecayResult(us=us, cov=cov * theta2, cov_se=se * theta2,
                                 rate=rate, rate_se=rate_se)
