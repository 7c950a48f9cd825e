"""Steady-state error compensation for actor-critic control agents.

The package bundles a small dense-network/optimizer stack, a DDPG learner,
an integral-action actor augmentation that mimics a PI controller's memory,
two electrical benchmark plants (grid-forming inverter, PMSM current
control), classical PI baselines, and a seeded evaluation harness.
"""

__version__ = "0.1.0"


class ConfigurationError(ValueError):
    """Invalid configuration value, shape, or schema key."""


class TrainingFault(RuntimeError):
    """Non-finite loss/gradient or other unrecoverable learner failure."""


class EnvironmentFault(RuntimeError):
    """Plant state became non-finite or the environment was misused."""
