from .testcases import TestCase, gen_grid_testcase, gen_steadystate_testcase, gen_motor_profile
from .metrics import Trajectory, mean_task_reward, steady_state_metric, box_stats
from .experiment import (
    AgentPolicy,
    ControllerPolicy,
    ExperimentPlan,
    rollout,
    run_experiment,
)

__all__ = [
    "TestCase",
    "gen_grid_testcase",
    "gen_steadystate_testcase",
    "gen_motor_profile",
    "Trajectory",
    "mean_task_reward",
    "steady_state_metric",
    "box_stats",
    "AgentPolicy",
    "ControllerPolicy",
    "ExperimentPlan",
    "rollout",
    "run_experiment",
]
