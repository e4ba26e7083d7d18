"""Command-line entry points.

Estimator subcommands run desk-scale defaults (overridable), write CSV
tables plus a JSON summary {test_name, target, estimate, stderr, pass} into
the output directory (FKISING_OUTDIR or cwd), and exit nonzero when a
declared tolerance fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import harness
from .config import Tolerances, load_config, output_dir, write_csv, write_summary
from .lattice import BETA_C, BoundaryCondition, build_domain, grid_domain
from .sampler import run_chain_records
from .state import BondConfig, SimParams


def _out(name: str) -> str:
    d = output_dir()
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, name)


def _add_lattice_args(p, L=128, a=1.0):
    p.add_argument("--L", type=int, default=L, help="sites per side")
    p.add_argument("--a", type=float, default=a, help="lattice spacing")
    p.add_argument("--beta", type=float, default=BETA_C)
    p.add_argument("--h", type=float, default=0.0, help="continuum field strength")
    p.add_argument("--bc", choices=["free", "plus"], default="free")
    p.add_argument("--sweeps", type=int, default=5000)
    p.add_argument("--burn-in", type=int, default=300, dest="burn_in")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--thin", type=int, default=1)


def cmd_sample(args) -> int:
    domain = grid_domain(args.L, args.a)
    sink = open(args.out, "w") if args.out else sys.stdout
    try:
        for cid in range(args.chains):
            params = SimParams(beta=args.beta, h=args.h, a=args.a,
                               sweeps=args.sweeps, burn_in=args.burn_in,
                               seed=args.seed, chain_id=cid)
            rec = run_chain_records(domain, params,
                                    BoundaryCondition.parse(args.bc),
                                    thin=args.thin)
            rec.to_jsonl(sink)
    finally:
        if args.out:
            sink.close()
    return 0


def cmd_oracle(args) -> int:
    from .oracle import oracle_report
    domain = grid_domain(args.L, args.a)
    params = SimParams(beta=args.beta, h=args.h, a=args.a)
    bc = BoundaryCondition.parse(args.bc)
    report = oracle_report(domain, params, bc)
    rec = {"domain": {"a": args.a, "L": args.L}, "params":
           {"beta": args.beta, "h": args.h}, "bc": args.bc,
           "observables": report, "Z": report["log_Z"]}
    path = _out("oracle.json")
    with open(path, "w") as fh:
        json.dump(rec, fh, indent=2)
    print(path)
    return 0


def cmd_exponent_2pt(args, tol: Tolerances) -> int:
    rs = [4, 6, 8, 11, 16, 23, 32] if args.L >= 128 else [2, 3, 4, 6, 8]
    res = harness.estimate_critical_2pt(args.L, args.a, rs, args.sweeps,
                                        seed=args.seed)
    write_csv(_out("exponent_2pt.csv"), ["r", "corr_fk", "corr_fk_se",
                                         "corr_spin", "corr_spin_se"],
              zip(res.rs, res.corr_fk, res.corr_fk_se, res.corr_spin,
                  res.corr_spin_se))
    ok = abs(res.fit.slope - tol.slope_2pt_target) <= tol.slope_2pt_tol
    rec = write_summary(_out("exponent_2pt_summary.json"), "critical-2pt-slope",
                        tol.slope_2pt_target, res.fit.slope, res.fit.stderr, ok)
    print(json.dumps(rec))
    return 0 if ok else 1


def cmd_normalization(args, tol: Tolerances) -> int:
    a_list = [float(x) for x in args.a_list.split(",")]
    rows = harness.second_moment_normalization(a_list, args.sweeps,
                                               seed=args.seed)
    write_csv(_out("normalization.csv"),
              ["a", "msq_spin", "msq_spin_se", "msq_fk", "msq_fk_se",
               "diff_se", "msq_wrong_exponent"],
              [(r.a, r.msq_spin, r.msq_spin_se, r.msq_fk, r.msq_fk_se,
                r.diff_se, r.msq_wrong_exponent) for r in rows])
    vals = [r.msq_spin for r in rows]
    spread = (max(vals) - min(vals)) / float(np.mean(vals))
    agree = all(abs(r.msq_spin - r.msq_fk)
                <= tol.agree_sigmas * max(r.diff_se, 1e-300) for r in rows)
    ok = spread <= tol.norm_spread_max and agree
    rec = write_summary(_out("normalization_summary.json"),
                        "second-moment-normalization", tol.norm_spread_max,
                        spread, float(np.std(vals)), ok,
                        {"estimator_agreement": agree})
    print(json.dumps(rec))
    return 0 if ok else 1


def cmd_mass(args, tol: Tolerances) -> int:
    h_list = [float(x) for x in args.h_list.split(",")]
    res = harness.fit_mass(h_list, args.L, args.a, args.sweeps, seed=args.seed)
    write_csv(_out("mass.csv"), ["h", "mass", "mass_se", "xi_lattice",
                                 "window_lo", "window_hi"],
              [(m.h, m.mass, m.mass_se, m.xi_lattice, m.window[0], m.window[1])
               for m in res.masses])
    ok = abs(res.fit.slope - tol.mass_target) <= tol.mass_tol
    rec = write_summary(_out("mass_summary.json"), "mass-gap-exponent",
                        tol.mass_target, res.fit.slope, res.fit.stderr, ok,
                        {"box_over_xi_min": res.box_over_xi_min})
    print(json.dumps(rec))
    return 0 if ok else 1


def cmd_scaling_test(args, tol: Tolerances) -> int:
    res = harness.scaling_covariance_test(args.L, args.a, args.h, args.lam,
                                          n_samples=args.samples,
                                          seed=args.seed)
    cap = tol.ks_scaling_h0 if args.h == 0 else tol.ks_scaling_h1
    ok = res.ks_stat < cap
    rec = write_summary(_out("scaling_test_summary.json"), "scaling-covariance",
                        cap, res.ks_stat, None, ok,
                        {"lam": args.lam, "h": args.h,
                         "n": [res.n_base, res.n_scaled]})
    print(json.dumps(rec))
    return 0 if ok else 1


def cmd_bc_test(args, tol: Tolerances) -> int:
    res = harness.free_vs_wired_test(args.L, args.beta, args.samples,
                                     seed=args.seed)
    ctrl = harness.free_vs_wired_test(args.L, 0.9 * BETA_C, args.samples // 4,
                                      seed=args.seed + 100)
    ok = res.ks_dual_matched < tol.ks_bc and ctrl.ks_dual_matched > tol.ks_bc
    write_csv(_out("bc_test.csv"),
              ["beta", "ks_dual_matched", "ks_internal_primal", "n"],
              [(res.beta, res.ks_dual_matched, res.ks_internal, res.n_samples),
               (ctrl.beta, ctrl.ks_dual_matched, ctrl.ks_internal,
                ctrl.n_samples)])
    rec = write_summary(_out("bc_test_summary.json"), "free-vs-wired",
                        tol.ks_bc, res.ks_dual_matched, None, ok,
                        {"control_ks": ctrl.ks_dual_matched})
    print(json.dumps(rec))
    return 0 if ok else 1


def cmd_sobolev(args, tol: Tolerances) -> int:
    from .sampler import FKChain
    from .spectral import cutoff_cauchy_diagnostic
    domain = grid_domain(args.L, args.a)
    params = SimParams(beta=BETA_C, h=0.0, a=args.a, sweeps=args.samples,
                       burn_in=args.burn_in, seed=args.seed)
    chain = FKChain(domain, params, BoundaryCondition.FREE)
    chain.burn_in()
    samples = []
    for _ in range(args.samples):
        chain.sweep(args.thin)
        samples.append(chain.decomposition())
    eps = [float(x) for x in args.epsilons.split(",")]
    diag = cutoff_cauchy_diagnostic(samples, eps, alpha=tol.sobolev_alpha,
                                    n_basis=args.basis)
    write_csv(_out("sobolev_cauchy.csv"),
              ["eps", "eps_prime", "second_moment", "stderr"],
              [(r.eps, r.eps_prime, r.second_moment, r.stderr)
               for r in diag.rows])
    ok = diag.slope >= tol.sobolev_slope_min
    rec = write_summary(_out("sobolev_summary.json"), "cutoff-cauchy-rate",
                        tol.sobolev_slope_min, diag.slope, diag.slope_se, ok,
                        {"alpha": tol.sobolev_alpha, "n_basis": diag.n_basis})
    print(json.dumps(rec))
    return 0 if ok else 1


def cmd_loops(args) -> int:
    from .clusters import find_clusters, rescaled_measures
    from .loops import loops_to_jsonl, trace_loops
    from .sampler import FKChain
    domain = grid_domain(args.L, args.a)
    params = SimParams(beta=args.beta, h=0.0, a=args.a, sweeps=1,
                       burn_in=args.burn_in, seed=args.seed)
    chain = FKChain(domain, params, BoundaryCondition.FREE)
    chain.burn_in()
    chain.sweep(1)
    omega = chain.bond_config()
    loops = trace_loops(omega, domain)
    with open(_out("loops.jsonl"), "w") as fh:
        loops_to_jsonl(loops, fh)
    decomp = find_clusters(omega, BoundaryCondition.FREE)
    with open(_out("measures.jsonl"), "w") as fh:
        for mu in rescaled_measures(decomp):
            pos = mu.positions
            fh.write(json.dumps({
                "cluster_id": mu.cluster_index, "size": mu.n_atoms,
                "mass": mu.mass, "diameter": mu.diameter,
                "bbox": [float(pos[:, 0].min()), float(pos[:, 1].min()),
                         float(pos[:, 0].max()), float(pos[:, 1].max())],
            }) + "\n")
    print(_out("loops.jsonl"), _out("measures.jsonl"))
    return 0


def cmd_metrics(args) -> int:
    """Mesh-refinement diagnostic: ensemble distances between spacings a and
    a/2 (reported as data, not asserted)."""
    from .clusters import find_clusters, rescaled_measures
    from .loops import trace_loops
    from .metrics import (cluster_collection_distance, FiniteMeasure2D,
                          loop_ensemble_distance, measure_collection_distance,
                          PolyLoop)
    from .sampler import FKChain
    rows = []
    eps_cut = args.eps_cutoff
    for a in [float(x) for x in args.a_list.split(",")]:
        ensembles = {}
        for aa in (a, a / 2):
            domain = build_domain(aa, (0, 0, 1, 1))
            params = SimParams(beta=BETA_C, h=0.0, a=aa, sweeps=1,
                               burn_in=args.burn_in, seed=args.seed)
            chain = FKChain(domain, params, BoundaryCondition.FREE)
            chain.burn_in()
            chain.sweep(1)
            decomp = chain.decomposition()
            measures = [m for m in rescaled_measures(decomp)
                        if m.diameter > eps_cut]
            loops = [lp for lp in trace_loops(chain.bond_config(), domain)
                     if lp.diameter > eps_cut]
            ensembles[aa] = (decomp, measures, loops)
        _, mu1, lp1 = ensembles[a]
        _, mu2, lp2 = ensembles[a / 2]

        def thin_measure(m):
            k = max(1, m.n_atoms // args.max_atoms)
            pos = m.positions[::k]
            return FiniteMeasure2D(pos, np.full(len(pos),
                                                m.weight * m.n_atoms / len(pos)))

        def thin_loop(lp):
            k = max(1, lp.length // args.max_atoms)
            return PolyLoop(lp.vertices[::k]) if lp.length // k >= 3 else None

        d_cl = cluster_collection_distance([m.positions for m in mu1],
                                           [m.positions for m in mu2])
        d_meas = measure_collection_distance([thin_measure(m) for m in mu1],
                                             [thin_measure(m) for m in mu2])
        pl1 = [t for t in (thin_loop(lp) for lp in lp1) if t]
        pl2 = [t for t in (thin_loop(lp) for lp in lp2) if t]
        d_le = loop_ensemble_distance(pl1, pl2)
        rows.append((a, a / 2, d_cl, d_meas, d_le, len(mu1), eps_cut))
    write_csv(_out("metrics_refinement.csv"),
              ["a", "a_half", "d_cl", "d_meas", "d_LE", "n_clusters_large",
               "epsilon_cutoff"], rows)
    print(_out("metrics_refinement.csv"))
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="fkising")
    ap.add_argument("--config", default=None, help="INI config file")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("sample", help="run chains, emit JSON-lines records")
    _add_lattice_args(p)
    p.add_argument("--out", default=None)

    p = sub.add_parser("oracle", help="exact enumeration on a tiny domain")
    _add_lattice_args(p, L=2)

    p = sub.add_parser("exponent-2pt", help="critical decay exponent")
    _add_lattice_args(p, L=256)
    p.set_defaults(sweeps=20000)

    p = sub.add_parser("normalization", help="second-moment stability in a")
    p.add_argument("--a-list", default="0.015625,0.0078125,0.00390625")
    p.add_argument("--sweeps", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("mass", help="near-critical mass-gap exponent")
    _add_lattice_args(p, L=256, a=1 / 32)
    p.add_argument("--h-list", default="0.5,1,2,4")
    p.set_defaults(sweeps=6000)

    p = sub.add_parser("scaling-test", help="block-magnetization KS test")
    _add_lattice_args(p, L=128, a=1 / 64)
    p.add_argument("--lam", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=4000)

    p = sub.add_parser("bc-test", help="free vs wired largest-cluster KS")
    _add_lattice_args(p, L=128)
    p.add_argument("--samples", type=int, default=4000)

    p = sub.add_parser("sobolev", help="cutoff-field Cauchy diagnostic")
    _add_lattice_args(p, L=128, a=1 / 128)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--epsilons", default="0.25,0.125,0.0625,0.03125")
    p.add_argument("--basis", type=int, default=128)
    p.set_defaults(thin=3)

    p = sub.add_parser("loops", help="trace and export medial loops")
    _add_lattice_args(p, L=64)

    p = sub.add_parser("metrics", help="mesh-refinement distance diagnostic")
    p.add_argument("--a-list", default="0.0625")
    p.add_argument("--eps-cutoff", type=float, default=0.25)
    p.add_argument("--max-atoms", type=int, default=48)
    p.add_argument("--burn-in", type=int, default=300, dest="burn_in")
    p.add_argument("--seed", type=int, default=0)

    args = ap.parse_args(argv)
    tol = load_config(args.config).tolerances
    dispatch = {
        "sample": lambda: cmd_sample(args),
        "oracle": lambda: cmd_oracle(args),
        "exponent-2pt": lambda: cmd_exponent_2pt(args, tol),
        "normalization": lambda: cmd_normalization(args, tol),
        "mass": lambda: cmd_mass(args, tol),
        "scaling-test": lambda: cmd_scaling_test(args, tol),
        "bc-test": lambda: cmd_bc_test(args, tol),
        "sobolev": lambda: cmd_sobolev(args, tol),
        "loops": lambda: cmd_loops(args),
        "metrics": lambda: cmd_metrics(args),
    }
    return dispatch[args.cmd]()


if __name__ == "__main__":
    sys.exit(main())
