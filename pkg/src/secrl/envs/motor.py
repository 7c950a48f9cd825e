"""PMSM stator-current control in the rotating dq frame.

Reference-tracking task at fixed electrical speed: drive the dq currents to
a changing reference under voltage-limit coupling and back-EMF.  Fully
observed (no measurement noise); one control period of actuation dead time
as in the grid plant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import ConfigurationError, EnvironmentFault
from ..seeding import STREAM_ENV, derive_rng
from .base import HistoryRing, LtiStepper


@dataclass
class MotorParams:
    """Electrical PMSM constants (small servo class, fixed speed)."""

    r_s: float = 0.25             # ohm stator resistance
    l_d: float = 1.2e-3           # H
    l_q: float = 1.2e-3           # H
    psi_pm: float = 50e-3         # Wb permanent-magnet flux
    omega_el: float = 2.0 * np.pi * 100.0  # rad/s electrical, fixed
    v_dc: float = 350.0           # V DC-link
    i_lim: float = 20.0           # A
    dt: float = 1e-4              # s
    substeps: int = 10
    history_length: int = 5
    reference_radius: float = 0.9  # feasibility factor on i_lim
    reference_hold_prob: float = 0.99  # per-step prob. of keeping the reference

    def __post_init__(self):
        for name in ("r_s", "l_d", "l_q", "psi_pm", "v_dc", "i_lim", "dt"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"motor parameter {name} must be > 0")
        if self.omega_el < 0:
            raise ConfigurationError("omega_el must be >= 0 (fixed electrical speed)")
        if self.substeps < 1 or self.history_length < 0:
            raise ConfigurationError("substeps must be >= 1 and history_length >= 0")
        if not 0 < self.reference_radius <= 1:
            raise ConfigurationError("reference_radius must be in (0, 1]")
        if not 0 <= self.reference_hold_prob < 1:
            raise ConfigurationError("reference_hold_prob must be in [0, 1)")


def motor_task_reward(i_ref: np.ndarray, i_meas: np.ndarray, i_lim: float, gamma: float) -> float:
    """Mean root error over dq; error ratios saturate at 1 (see grid)."""
    ratio = np.minimum(np.abs(np.asarray(i_ref) - np.asarray(i_meas)) / i_lim, 1.0)
    return float(-(1.0 - gamma) / 2.0 * np.sum(np.sqrt(ratio)))


class ReferenceGenerator:
    """Uniform draws from the feasible current disc |i*| <= radius*i_lim,
    held with a configurable per-step probability."""

    def __init__(self, i_lim: float, radius: float, hold_prob: float):
        self.max_norm = radius * i_lim
        self.hold_prob = hold_prob

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        r = self.max_norm * np.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * np.pi)
        return np.array([r * np.cos(phi), r * np.sin(phi)])

    def step(self, current: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if rng.uniform() < self.hold_prob:
            return current
        return self.draw(rng)


class MotorEnv:
    """dq current-control environment over the PMSM electrical dynamics."""

    def __init__(
        self,
        params: MotorParams | None = None,
        gamma: float = 0.946,
        seed: int = 0,
        terminate_on_violation: bool = False,
    ):
        self.params = params or MotorParams()
        self.gamma = float(gamma)
        self.terminate_on_violation = bool(terminate_on_violation)
        self.action_dim = 2
        self.obs_dim = 10 + 2 * self.params.history_length
        self._hist = HistoryRing(self.params.history_length, 2)
        p = self.params
        a = np.array([
            [-p.r_s / p.l_d, p.omega_el * p.l_q / p.l_d],
            [-p.omega_el * p.l_d / p.l_q, -p.r_s / p.l_q],
        ])
        b = np.array([[1.0 / p.l_d, 0.0], [0.0, 1.0 / p.l_q]])
        c = np.array([0.0, -p.omega_el * p.psi_pm / p.l_q])
        self._stepper = LtiStepper(a, b, c, p.dt, p.substeps)
        self._refgen = ReferenceGenerator(p.i_lim, p.reference_radius, p.reference_hold_prob)
        self._ref_schedule: np.ndarray | None = None
        self._seed = int(seed)
        self._rng_env = derive_rng(self._seed, STREAM_ENV)
        self.reset()

    def set_reference_schedule(self, series: np.ndarray | None) -> None:
        """Replay a frozen (steps, 2) reference series instead of random draws."""
        if series is not None:
            series = np.asarray(series, dtype=np.float64)
            if series.ndim != 2 or series.shape[1] != 2:
                raise ConfigurationError("reference schedule must have shape (steps, 2)")
        self._ref_schedule = series

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._seed = int(seed)
            self._rng_env = derive_rng(self._seed, STREAM_ENV)
        self._x = np.zeros(2)
        self._pending_u = np.zeros(2)
        self._hist.reset()
        self._step_in_episode = 0
        self._terminal = False
        if self._ref_schedule is not None:
            self.i_ref = self._ref_schedule[0].copy()
        else:
            self.i_ref = self._refgen.draw(self._rng_env)
        obs = self._features(self._x.copy(), np.zeros(2), np.zeros(2))
        self._hist.push(self._x)
        return obs

    def _features(self, i_meas, raw_p, raw_i) -> np.ndarray:
        p = self.params
        err = 0.5 * (self.i_ref - i_meas)
        return np.concatenate([
            i_meas / p.i_lim,
            self.i_ref / p.i_lim,
            err / p.i_lim,
            raw_p,
            raw_i,
            self._hist.flat() / p.i_lim,
        ])

    def step(self, u: np.ndarray, raw_p: np.ndarray | None = None, raw_i: np.ndarray | None = None):
        if self._terminal:
            raise EnvironmentFault("step() called on terminal environment; reset first")
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (2,):
            raise ConfigurationError(f"motor action must have shape (2,), got {u.shape}")
        if np.any(np.abs(u) > 1.0 + 1e-9):
            raise ConfigurationError(f"action outside [-1, 1]: {u}")
        u = np.clip(u, -1.0, 1.0)
        p = self.params
        if self._ref_schedule is not None:
            if self._step_in_episode >= len(self._ref_schedule):
                raise EnvironmentFault("reference schedule exhausted")
            self.i_ref = self._ref_schedule[self._step_in_episode].copy()
        else:
            self.i_ref = self._refgen.step(self.i_ref, self._rng_env)
        v_stator = self._pending_u * (p.v_dc / 2.0)
        self._x = self._stepper.propagate(self._x, v_stator)
        if not np.isfinite(self._x).all():
            raise EnvironmentFault("motor plant state became non-finite")
        i_meas = self._x.copy()
        reward = motor_task_reward(self.i_ref, i_meas, p.i_lim, self.gamma)
        violation = bool(np.any(np.abs(self._x) > p.i_lim))
        terminal = violation and self.terminate_on_violation
        self._terminal = terminal
        rp = np.zeros(2) if raw_p is None else np.asarray(raw_p, dtype=np.float64)
        ri = np.zeros(2) if raw_i is None else np.asarray(raw_i, dtype=np.float64)
        obs = self._features(i_meas, rp, ri)
        self._hist.push(i_meas)
        self._pending_u = u.copy()
        self._step_in_episode += 1
        info = {
            "task_reward": reward,
            "i_meas": i_meas,
            "i_ref": self.i_ref.copy(),
            "limit_violation": violation,
        }
        return obs, reward, terminal, info

    def measurements(self) -> dict:
        return {"i": self._x.copy(), "ref": self.i_ref.copy()}

    @property
    def plant_state(self) -> np.ndarray:
        return self._x.copy()

    @plant_state.setter
    def plant_state(self, x: np.ndarray) -> None:
        self._x = np.asarray(x, dtype=np.float64).copy()

    def state_dict(self) -> dict:
        return {
            "x": self._x.copy(),
            "pending_u": self._pending_u.copy(),
            "hist": self._hist._buf.copy(),
            "step_in_episode": self._step_in_episode,
            "terminal": self._terminal,
            "i_ref": self.i_ref.copy(),
            "rng_env": self._rng_env.bit_generator.state,
        }

    def load_state_dict(self, s: dict) -> None:
        self._x = np.asarray(s["x"], dtype=np.float64).copy()
        self._pending_u = np.asarray(s["pending_u"], dtype=np.float64).copy()
        self._hist._buf = np.asarray(s["hist"], dtype=np.float64).copy()
        self._step_in_episode = int(s["step_in_episode"])
        self._terminal = bool(s["terminal"])
        self.i_ref = np.asarray(s["i_ref"], dtype=np.float64).copy()
        self._rng_env.bit_generator.state = s["rng_env"]
