"""Primal-dual bandits with long-term constraints.

A library and CLI harness pairing weakly adaptive primal learners (a
finite-arm exponential-weights learner with implicit exploration, and an
inverse-gap-weighting contextual learner over online regression oracles)
with an unprojected gradient-ascent dual player, plus scripted and stochastic
benchmark instances and LP-based baselines.
"""

from .core import (DualVector, FrameworkConfig, Outcome, RoundRecord, Trace,
                   concentration_constant, default_primal_bound, eta_ogd, lagrangian)
from .dual import OgdDual, audit_dual_link, drift_violations
from .environments import (BaselineReport, ContextualEnv, ContextualInstance, InstanceSpec,
                           Phase, ScriptedEnv, ScriptedInstance, StochasticEnv,
                           StochasticInstance, baselines, instance_from_json, instance_to_json,
                           load_instance, make_contextual_linear, make_env, make_example1,
                           make_lowerbound, make_stochastic, save_instance)
from .exp3six import Exp3Six
from .harness import (MetricsReport, ScriptedDual, ScriptedPrimal, SweepSpec, builtin_instance,
                      compute_metrics, lazy_counterexample, practical_dual_eta, run_contextual,
                      run_primal_dual, scripted_pair_regrets, sweep)
from .igw import IgwConfig, IgwDecision, default_igw_eta, igw_act, igw_distribution
from .lp import InfeasibleError, minimax_mixture, solve_lp
from .regression import (FiniteClassOracle, OracleErrorLedger, RidgeOracle,
                         lagrangian_error_bound_check)

__version__ = "0.1.0"
