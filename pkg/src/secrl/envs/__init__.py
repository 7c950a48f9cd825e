from .base import LtiStepper, HistoryRing
from .grid import GridParams, GridEnv, grid_task_reward, LoadProcess
from .motor import MotorParams, MotorEnv, motor_task_reward, ReferenceGenerator

__all__ = [
    "LtiStepper",
    "HistoryRing",
    "GridParams",
    "GridEnv",
    "grid_task_reward",
    "LoadProcess",
    "MotorParams",
    "MotorEnv",
    "motor_task_reward",
    "ReferenceGenerator",
]
