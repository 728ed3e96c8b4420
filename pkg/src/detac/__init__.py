"""detac: actor-critic updates for continuous deterministic policies, with
exact dynamic-programming verification oracles."""

from .agents import (AgentConfig, BanditConfig, BatchActorCritic,
                     IncrementalActorCritic, evaluate_deterministic,
                     make_agent, run_bandit)
from .config import ExperimentConfig, parse_config
from .critics import (CompatibleQCritic, ConstantVCritic, MlpVCritic,
                      TabularVCritic, fitted_value_iteration, lambda_returns,
                      td_error)
from .envs import (EnvSpec, FiniteMdp, PointMass, QuadraticBandit,
                   make_quadratic_bandit, random_finite_mdp)
from .nets import Adam, MlpNet, gradient_check
from .oracle import (DpSolution, LipschitzGaussianChain, adaptive_simpson,
                     check_lemma2_identity, dp_solve, epsilon_smoothed,
                     estimate_gplus, gated_direction_ratio,
                     occupancy_shift_bound_check, performance_difference_residual,
                     performance_j, theorem1_bound_check)
from .policies import (GaussianExploration, LinearPolicy, MlpPolicy,
                       TileCoding, TileCodingPolicy)
from .trajectory import Trajectory
from .updates import (TrustRegionState, UpdateDirection, adapt_beta,
                      batch_gated_direction, cac_direction, cacla_direction,
                      dpg_direction, penfac_actor_gradient,
                      policy_distance_dhat, ro_accept, spg_direction)

__version__ = "0.1.0"
