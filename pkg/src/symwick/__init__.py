"""Symmetric operator ordering, its Wick-style expansion over c-number
contractions, and a truncated-Wigner trajectory engine whose output is
reassembled into normally-ordered correlators.  A dense Fock-space oracle
provides exact references for everything the sampler estimates."""

from .errors import (SymwickError, DuplicateTime, MissingBranchTag, SizeLimit,
                     KindMismatch, EqualRank, DimensionLimit, OrderViolation,
                     EqualTime, UnsupportedState, StepMismatch, TimeOffGrid,
                     ConfigError)
from .states import SiteState, RingParams, coherent, thermal, vacuum
from .sources import Kick, SmoothSource, SourceProfile
from .operator_algebra import (LadderFactor, OperatorMonomial, OperatorSum,
                               FreeFieldConvention, a, adag, normal_form,
                               equals, max_coeff_deviation,
                               time_symmetric_expand, schwinger_enumerate,
                               weyl_symmetric_form, reduce_free_field,
                               bh_interaction_weyl, wick_expand,
                               branch_ordered_product, to_text, from_text)
from .contractions import (ContractionKernel, KernelSet, Regularization,
                           default_regularization, retarded_green,
                           symmetric_contraction, generalized_contraction,
                           contour_order, decompose_check, conjugation_check)
from .fock_oracle import (BHParams, FockBasis, InitialDensity, OracleSession,
                          build_hamiltonian, site_annihilators, evolve,
                          multitime_average, kubo_response_exact)
from .wigner_engine import (InitialStateSpec, EnsembleSpec, TrajectoryEnsemble,
                            CorrelatorRequest, EstimatorResult,
                            ResponseEstimate, TwoPointResult, sample_initial,
                            build_ensemble, integrate_trajectory,
                            estimate_time_symmetric, response_derivative,
                            time_normal_two_point, third_order_cumulants,
                            classical_energy, conservation_drift)
from .config import RunConfig, ReorderSpec, parse_config, load_config

__version__ = "0.1.0"
