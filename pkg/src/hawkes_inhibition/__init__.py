"""Multivariate Hawkes processes with excitation and inhibition.

The intensity of dimension ``i`` is the ReLU-clamped activation
``max(0, mu_i + sum_j sum_{t_jl < t} K_ji beta_ji exp(-beta_ji (t - t_jl)))``;
negative entries of K inhibit.
"""

from .core import (ZERO_LIKELIHOOD, DomainError, EventData, KernelSpec, ModelParams,
                   intensity, is_zero_likelihood, log_likelihood, raw_activation)
from .diagnostics import ChainSummary, ParameterSummary, effective_sample_size, split_rhat, summarize
from .inference import PosteriorChains, PosteriorSample, PriorSpec, SamplerDiagnosticsError, run_mcmc
from .integration import (Crossing, SegmentGrid, compensator_exact_equal_beta, compensator_simpson,
                          roots_equal_beta)
from .reparam import DegenerateParameterError, expected_counts, k_to_kstar, kstar_to_k
from .simulation import (BranchingRecord, SimConfig, SimulationExplosion, UnstableParametersError,
                         simulate, simulate_branching_positive, thin_branching, thin_classic)
from .stability import (StabilityReport, check_c1, check_c2, check_c3, spectral_radius,
                        stability_report)

__version__ = "0.1.0"
