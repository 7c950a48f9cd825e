"""Grid-forming inverter with LC filter feeding a stochastic resistive load.

Disturbance-rejection task: hold a constant dq0 voltage reference while the
load resistance wanders (partially observable — the load is never measured,
only mitigated through past-measurement features).  Simulated natively in
the rotating dq0 frame; the frame transform is considered part of the
plant.  One control period of actuation dead time models digital
controller latency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import ConfigurationError, EnvironmentFault
from ..seeding import STREAM_ENV, STREAM_LOAD, STREAM_NOISE, derive_rng
from .base import HistoryRing, LtiStepper

R_LOAD_MIN = 14.0
R_LOAD_MAX = 200.0
LOAD_EVENT_PROB = 0.002
LOAD_STIFFNESS_RANGE = (10.0, 1200.0)
LOAD_DIFFUSION_RANGE = (1.0, 150.0)
DRIFT_STEPS_RANGE = (10, 1000)


@dataclass
class GridParams:
    """LC-filter plant constants (representative 120 V / 60 Hz class)."""

    inductance: float = 2.3e-3      # H
    resistance: float = 0.4         # ohm, filter series resistance
    capacitance: float = 10e-6      # F
    frequency: float = 60.0         # Hz grid frequency
    v_dc: float = 600.0             # V DC-link
    v_nom: float = 120.0 * np.sqrt(2.0)  # V peak, d-axis reference
    v_lim: float = 1.5 * 120.0 * np.sqrt(2.0)
    i_lim: float = 30.0             # A
    dt: float = 1e-4                # s control period
    substeps: int = 10
    # Noise level chosen so the measurement-noise floor of the mean-root
    # error metric stays consistent with the reference controller scores.
    noise_v: float = 0.25           # V measurement noise std (0 disables)
    noise_i: float = 0.05           # A
    history_length: int = 5         # past voltage measurements in features

    def __post_init__(self):
        for name in ("inductance", "resistance", "capacitance", "frequency",
                     "v_dc", "v_nom", "v_lim", "i_lim", "dt"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"grid parameter {name} must be > 0")
        if self.substeps < 1 or self.history_length < 0:
            raise ConfigurationError("substeps must be >= 1 and history_length >= 0")
        # RK4 needs several substeps per LC resonance period.
        resonance_period = 2.0 * np.pi * np.sqrt(self.inductance * self.capacitance)
        if resonance_period <= 4.0 * self.dt / self.substeps:
            raise ConfigurationError(
                "substep too coarse for the LC resonance; increase substeps"
            )

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.frequency

    @property
    def v_ref(self) -> np.ndarray:
        return np.array([self.v_nom, 0.0, 0.0])


def grid_task_reward(v_ref: np.ndarray, v_meas: np.ndarray, v_lim: float, gamma: float) -> float:
    """Mean root error over dq0; each channel's error ratio saturates at 1
    so the per-step reward stays within [-(1-gamma), 0]."""
    ratio = np.minimum(np.abs(np.asarray(v_ref) - np.asarray(v_meas)) / v_lim, 1.0)
    return float(-(1.0 - gamma) / 3.0 * np.sum(np.sqrt(ratio)))


class LoadProcess:
    """Mean-reverting random walk on the load resistance.

    Each step advances an OU recursion; with 0.2 % probability per step the
    (stiffness, diffusion, mean) triple is redrawn — half the time the mean
    jumps immediately, half the time it drifts linearly to the new value
    over 10..1000 steps.  Output is always clipped to [14, 200] ohm.
    """

    def __init__(self, stiffness: float, diffusion: float, mean: float, value: float, dt: float):
        self.stiffness = stiffness
        self.diffusion = diffusion
        self.mean = mean
        self.value = value
        self.dt = dt
        self._drift_target = mean
        self._drift_rate = 0.0
        self._drift_left = 0
        self.event_count = 0

    @classmethod
    def draw(cls, rng: np.random.Generator, dt: float) -> "LoadProcess":
        lam = rng.uniform(*LOAD_STIFFNESS_RANGE)
        sig = rng.uniform(*LOAD_DIFFUSION_RANGE)
        eta = rng.uniform(R_LOAD_MIN, R_LOAD_MAX)
        return cls(stiffness=lam, diffusion=sig, mean=eta, value=eta, dt=dt)

    def _draw_mean(self, rng: np.random.Generator) -> float:
        # Lower clip bound is itself jittered, biasing occupancy toward the
        # high-demand (low resistance) end.
        lo = R_LOAD_MIN + rng.normal(0.0, 2.0)
        return float(np.clip(rng.uniform(-10.0, R_LOAD_MAX), lo, R_LOAD_MAX))

    def step(self, rng: np.random.Generator) -> float:
        if rng.uniform() < LOAD_EVENT_PROB:
            self.event_count += 1
            self.stiffness = rng.uniform(*LOAD_STIFFNESS_RANGE)
            self.diffusion = rng.uniform(*LOAD_DIFFUSION_RANGE)
            new_mean = self._draw_mean(rng)
            if rng.uniform() < 0.5:
                self.mean = new_mean
                self._drift_left = 0
            else:
                steps = int(rng.integers(DRIFT_STEPS_RANGE[0], DRIFT_STEPS_RANGE[1] + 1))
                self._drift_target = new_mean
                self._drift_rate = (new_mean - self.mean) / steps
                self._drift_left = steps
        if self._drift_left > 0:
            self.mean += self._drift_rate
            self._drift_left -= 1
            if self._drift_left == 0:
                self.mean = self._drift_target
        shock = self.diffusion * np.sqrt(self.dt) * rng.standard_normal()
        self.value += self.stiffness * (self.mean - self.value) * self.dt + shock
        self.value = float(np.clip(self.value, R_LOAD_MIN, R_LOAD_MAX))
        return self.value

    def state_dict(self) -> dict:
        return {
            "stiffness": self.stiffness, "diffusion": self.diffusion,
            "mean": self.mean, "value": self.value,
            "drift_target": self._drift_target, "drift_rate": self._drift_rate,
            "drift_left": self._drift_left, "event_count": self.event_count,
        }

    def load_state_dict(self, s: dict) -> None:
        self.stiffness = float(s["stiffness"])
        self.diffusion = float(s["diffusion"])
        self.mean = float(s["mean"])
        self.value = float(s["value"])
        self._drift_target = float(s["drift_target"])
        self._drift_rate = float(s["drift_rate"])
        self._drift_left = int(s["drift_left"])
        self.event_count = int(s["event_count"])


class GridEnv:
    """dq0 voltage-control environment over the LC-filter plant."""

    def __init__(
        self,
        params: GridParams | None = None,
        gamma: float = 0.946,
        seed: int = 0,
        terminate_on_violation: bool = False,
    ):
        self.params = params or GridParams()
        self.gamma = float(gamma)
        self.terminate_on_violation = bool(terminate_on_violation)
        self.action_dim = 3
        self.obs_dim = 18 + 3 * self.params.history_length
        self._hist = HistoryRing(self.params.history_length, 3)
        self._b = np.zeros((6, 3))
        self._b[0, 0] = self._b[1, 1] = self._b[2, 2] = 1.0 / self.params.inductance
        self._c = np.zeros(6)
        self._a_template = self._make_a_template()
        self._load_schedule: np.ndarray | None = None
        self._seed = int(seed)
        self._derive_rngs(self._seed)
        self.reset()

    def _derive_rngs(self, seed: int) -> None:
        self._rng_env = derive_rng(seed, STREAM_ENV)
        self._rng_load = derive_rng(seed, STREAM_LOAD)
        self._rng_noise = derive_rng(seed, STREAM_NOISE)

    def _make_a_template(self) -> np.ndarray:
        p = self.params
        w = p.omega
        a = np.zeros((6, 6))
        a[0, 0] = a[1, 1] = a[2, 2] = -p.resistance / p.inductance
        a[0, 1] = w
        a[1, 0] = -w
        a[0, 3] = a[1, 4] = a[2, 5] = -1.0 / p.inductance
        a[3, 0] = a[4, 1] = a[5, 2] = 1.0 / p.capacitance
        a[3, 4] = w
        a[4, 3] = -w
        # v-row diagonals (-1/(R C)) are filled per step from the live load.
        return a

    def _stepper_for(self, r_load: float) -> LtiStepper:
        a = self._a_template.copy()
        g = -1.0 / (r_load * self.params.capacitance)
        a[3, 3] = a[4, 4] = a[5, 5] = g
        return LtiStepper(a, self._b, self._c, self.params.dt, self.params.substeps)

    def set_load_schedule(self, series: np.ndarray | None) -> None:
        """Replay a frozen per-step load series instead of the live process."""
        self._load_schedule = None if series is None else np.asarray(series, dtype=np.float64)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._seed = int(seed)
            self._derive_rngs(self._seed)
        self._x = np.zeros(6)
        self._pending_u = np.zeros(3)
        self._hist.reset()
        self._step_in_episode = 0
        self._terminal = False
        if self._load_schedule is None:
            self._load = LoadProcess.draw(self._rng_load, self.params.dt)
        self.r_load = (
            float(self._load_schedule[0]) if self._load_schedule is not None else self._load.value
        )
        v_meas, i_meas = self._measure()
        obs = self._features(v_meas, i_meas, np.zeros(3), np.zeros(3))
        self._hist.push(v_meas)
        self._last_meas = (v_meas, i_meas)
        return obs

    def _measure(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        v = self._x[3:6].copy()
        i = self._x[0:3].copy()
        if p.noise_v > 0:
            v += p.noise_v * self._rng_noise.standard_normal(3)
        if p.noise_i > 0:
            i += p.noise_i * self._rng_noise.standard_normal(3)
        return v, i

    def _features(self, v_meas, i_meas, raw_p, raw_i) -> np.ndarray:
        p = self.params
        v_ref = p.v_ref
        err = 0.5 * (v_ref - v_meas)
        return np.concatenate([
            i_meas / p.i_lim,
            v_meas / p.v_lim,
            v_ref / p.v_lim,
            err / p.v_lim,
            raw_p,
            raw_i,
            self._hist.flat() / p.v_lim,
        ])

    def step(self, u: np.ndarray, raw_p: np.ndarray | None = None, raw_i: np.ndarray | None = None):
        if self._terminal:
            raise EnvironmentFault("step() called on terminal environment; reset first")
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (3,):
            raise ConfigurationError(f"grid action must have shape (3,), got {u.shape}")
        if np.any(np.abs(u) > 1.0 + 1e-9):
            raise ConfigurationError(f"action outside [-1, 1]: {u}")
        u = np.clip(u, -1.0, 1.0)
        p = self.params
        if self._load_schedule is not None:
            if self._step_in_episode >= len(self._load_schedule):
                raise EnvironmentFault("load schedule exhausted")
            self.r_load = float(self._load_schedule[self._step_in_episode])
        else:
            self.r_load = self._load.step(self._rng_load)
        # Dead time: the voltage applied this period is last step's command.
        v_inverter = self._pending_u * (p.v_dc / 2.0)
        self._x = self._stepper_for(self.r_load).propagate(self._x, v_inverter)
        if not np.isfinite(self._x).all():
            raise EnvironmentFault("grid plant state became non-finite")
        v_meas, i_meas = self._measure()
        reward = grid_task_reward(p.v_ref, v_meas, p.v_lim, self.gamma)
        violation = bool(
            np.any(np.abs(self._x[3:6]) > p.v_lim) or np.any(np.abs(self._x[0:3]) > p.i_lim)
        )
        terminal = violation and self.terminate_on_violation
        self._terminal = terminal
        rp = np.zeros(3) if raw_p is None else np.asarray(raw_p, dtype=np.float64)
        ri = np.zeros(3) if raw_i is None else np.asarray(raw_i, dtype=np.float64)
        obs = self._features(v_meas, i_meas, rp, ri)
        self._hist.push(v_meas)
        self._pending_u = u.copy()
        self._step_in_episode += 1
        self._last_meas = (v_meas, i_meas)
        info = {
            "task_reward": reward,
            "v_meas": v_meas,
            "i_meas": i_meas,
            "v_ref": p.v_ref,
            "r_load": self.r_load,
            "limit_violation": violation,
        }
        return obs, reward, terminal, info

    def measurements(self) -> dict:
        v, i = self._last_meas
        return {"v": v.copy(), "i": i.copy(), "ref": self.params.v_ref}

    @property
    def plant_state(self) -> np.ndarray:
        """True (noise-free) state [i_dq0, v_dq0]; for tests and logging."""
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
            "load": self._load.state_dict(),
            "rng_env": self._rng_env.bit_generator.state,
            "rng_load": self._rng_load.bit_generator.state,
            "rng_noise": self._rng_noise.bit_generator.state,
            "last_v": self._last_meas[0].copy(),
            "last_i": self._last_meas[1].copy(),
        }

    def load_state_dict(self, s: dict) -> None:
        self._x = np.asarray(s["x"], dtype=np.float64).copy()
        self._pending_u = np.asarray(s["pending_u"], dtype=np.float64).copy()
        self._hist._buf = np.asarray(s["hist"], dtype=np.float64).copy()
        self._step_in_episode = int(s["step_in_episode"])
        self._terminal = bool(s["terminal"])
        self._load.load_state_dict(s["load"])
        self._rng_env.bit_generator.state = s["rng_env"]
        self._rng_load.bit_generator.state = s["rng_load"]
        self._rng_noise.bit_generator.state = s["rng_noise"]
        self._last_meas = (
            np.asarray(s["last_v"], dtype=np.float64).copy(),
            np.asarray(s["last_i"], dtype=np.float64).copy(),
        )
        self.r_load = self._load.value
