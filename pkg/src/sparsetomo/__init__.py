"""Sparse-angle tomographic reconstruction over compactly supported wavelet
dictionaries, with numerical certification of the recovery machinery."""

from .weights import (CoefficientVector, SparseApproxResult, WeightVector,
                      best_sparse_approx_bruteforce, quasi_best_sparse_approx,
                      stechkin_bound, weighted_norm, weighted_size)
from .wavelets import (AtomIndex, DictionaryAtlas, GridSpec, WaveletFilter,
                       analysis, build_atlas, build_filter, discrete_gram,
                       synthesis, truncation_positions, truncation_set)
from .models import (FanBeamModel, FourierWaveletModel, LegendrePointModel,
                     RadonModel, SampledSystem, SyntheticDiagonalModel,
                     assemble_system, draw_samples, population_gram_matrix,
                     radon_image)
from .certify import (GramCertificate, RipEstimate, compute_gram,
                      delta_star_bruteforce, delta_star_montecarlo,
                      estimate_quasi_diag, rnsp_witness_search,
                      sample_complexity, scale_decay_fit, truncation_residual)
from .solve import (SolveConfig, SolveResult, reconstruct_image,
                    solve_constrained_l1, solve_penalized_path)
from .phantoms import PhantomSpec, make_phantom
from .experiments import (ExperimentConfig, SweepRecord,
                          calibrate_recovery_constant, fit_scaling,
                          fit_scaling_windowed, j0_for_beta,
                          recovery_rule_m, run_certification_report,
                          run_recovery_sweep)

__version__ = "0.1.0"
