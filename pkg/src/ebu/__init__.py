"""Episodic backward update for value-based reinforcement learning.

Backward target generation over whole replayed episodes, the episodic
backward operator on deterministic MDPs, toy and maze domains, and a small
experiment harness.
"""
from .approximator import QFunctionParams, grad_step, init_params, predict
from .backward_operator import (
    OperatorConfig,
    apply_operator,
    contraction_ratio,
    enumerate_paths,
    fixed_point,
    horizon_bound,
    random_schedules,
    uniform_schedules,
)
from .environments import branching_episode, fig1_episode, make_branching, make_chain, random_deterministic_mdp
from .maze import MazeSpec, generate_maze, maze_step, maze_to_mdp, shortest_path_len
from .mdp import Episode, TabularMDP, Transition, rollout, value_iteration
from .replay import ReplayMemory
from .targets import (
    RetraceConfig,
    ebu_targets,
    nstep_targets,
    one_step_target,
    one_step_targets,
    retrace_targets,
    tabular_ebu_update,
    watkins_q_lambda_update,
)
from .training import TrainConfig, train

__version__ = "0.1.0"
