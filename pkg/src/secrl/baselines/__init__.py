from .pi import PiController, symmetrical_optimum_gains, MotorPiPolicy
from .grid_cascade import CascadeGains, GridCascadePolicy, analytic_cascade_gains, tune_grid_cascade

__all__ = [
    "PiController",
    "symmetrical_optimum_gains",
    "MotorPiPolicy",
    "CascadeGains",
    "GridCascadePolicy",
    "analytic_cascade_gains",
    "tune_grid_cascade",
]
