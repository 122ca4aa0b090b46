"""Treed Gaussian-process Bayesian optimisation.

A decision tree over the input space with GP leaves, per-leaf hyper-parameters
learned from a depth-weighted marginal pseudo-likelihood, optional Beta-CDF
input warping, and expected-improvement acquisition over Sobol grids or
finite candidate pools.
"""

from .acquisition import (CandidateSet, ei_over_tree, expected_improvement,
                          next_query, sobol_candidates)
from .benchmarks import (ColumnSpec, ObjectiveSpec, PoolDataset, exp2d,
                         get_objective, list_objectives, load_manifest,
                         load_pool_csv, rkhs_hetero, synth_hetero_surface)
from .errors import (ChainInitError, IllConditionedKernelError,
                     InvalidHyperparameterError, ObjectiveEvaluationError,
                     PoolExhausted, PoolLoadError, TreedboError,
                     UnfittedLeafError)
from .gp import (Dataset, GpPosterior, Hyperparams, fit, kernel,
                 log_marginal_likelihood, predict, warp_input)
from .hypers import (HyperPrior, PriorSpec, WeightedFactor, default_prior,
                     infer_leaf_hypers, leaf_factors, path_weights,
                     slice_sample, weighted_log_posterior)
from .optimize import (OptimizerConfig, RepeatSummary, Trace, TraceRecord,
                       minimization_view, run, run_repeated)
from .tree import (Internal, Leaf, PathInfo, build_tree, leaf_paths, leaves,
                   node_uncertainty, route, single_leaf_tree, split_gain)

__version__ = "0.1.0"
