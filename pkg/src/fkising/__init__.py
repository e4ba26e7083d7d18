"""FK random-cluster simulation of the critical and near-critical 2D Ising
magnetization field: ghost-free cluster-field coupling, loop and measure
ensembles, cutoff fields, Sobolev diagnostics, and scaling-law estimators."""

from .lattice import (BETA_C, MAG_EXPONENT, BoundaryCondition, LatticeDomain,
                      build_domain, domain_from_json, domain_to_json,
                      grid_domain, neighbors)
from .state import BondConfig, SimParams, SpinConfig
from .clusters import (ClusterDecomposition, CountingMeasure, cluster_diameter,
                       cutoff_field_eval, find_clusters, rescaled_measures)
from .sampler import (FKChain, field_fk_log_weight, gibbs_log_weight,
                      is_compatible, magnetization, rc_log_weight,
                      reweight_to_field, run_chain_records,
                      sample_bonds_given_spins, sample_spins_given_bonds,
                      sw_field_step)
from .loops import MedialLoop, trace_loops
from .metrics import (FiniteMeasure2D, PolyLoop, cluster_collection_distance,
                      loop_distance, loop_ensemble_distance,
                      measure_collection_distance, prokhorov_distance)
from .spectral import (CoefficientVector, EigenPair, cutoff_cauchy_diagnostic,
                       eigen_pairs, field_coefficients, sobolev_norm,
                       sup_norm_bound_check, weyl_check)

__version__ = "0.1.0"
