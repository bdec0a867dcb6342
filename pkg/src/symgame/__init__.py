"""Payoff-blind copycat learners for symmetric zero-sum Markov games."""

from .game import (
    GameValidationError,
    LayeredGame,
    ShapeError,
    Trajectory,
    best_response,
    constant_policy,
    evaluate_value,
    occupancy,
    safety_level_policy,
    sample_trajectory,
    state_visitation,
    trajectory_payoff,
    uniform_policy,
    validate_game,
)
from .harness import AdversaryConfig, RunResult, emit_results, load_results, make_adversary, run_experiment
from .hsg import equivalent_matrix_game, expand_histories, hsg_learner_step, init_hsg_learner, verify_hsg
from .io import load_game, load_payoff, save_game, save_payoff
from .matrix_copycat import init_matrix_learner, matrix_copycat_step, project_skew_box
from .matrix_game import MatrixGameError, solve_matrix_game
from .msg import MsgSet, ProjectionError, msg_episode_step, msg_membership, project_msg
from .msg_basis import build_orthogonal_family, contract_payoff, nonsym_policies
from .ssg import init_markov_learner, project_ssg, ssg_episode_step

__version__ = "0.1.0"
