"""Deep Q-learning for the battery-powered link, with DP baselines."""

from .agent import (
    DqnAgent,
    DqnConfig,
    ReplayBuffer,
    action_grid,
    dqn_network,
    select_action,
)
from .training import TrainTrace, dqn_train, dqn_train_select, epsilon_at, rolling_mean
from .evaluate import (
    evaluate_policies,
    greedy_policy,
    mdp_policy,
    random_policy,
    rollout,
)

__all__ = [
    "DqnAgent",
    "DqnConfig",
    "ReplayBuffer",
    "TrainTrace",
    "action_grid",
    "dqn_network",
    "dqn_train",
    "dqn_train_select",
    "epsilon_at",
    "evaluate_policies",
    "greedy_policy",
    "mdp_policy",
    "random_policy",
    "rollout",
    "rolling_mean",
    "select_action",
]
