"""Run configuration: flat dotted-key schema, defaults, validation, echo.

Keys are normative (e.g. ``agent.gamma``, ``sec.t_i``, ``env.grid.v_dc``).
Defaults are the tuned configuration; hyperparameters carry their search
ranges and anything outside is rejected unless ``allow_out_of_range`` is
set.  Schedule breakpoints are stated on the full-scale training horizon
(``train.schedule_horizon``) and rescaled proportionally when a shorter
``train.steps`` is requested, so desk-scale runs keep the same schedule
shape.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import ConfigurationError
from .ddpg.agent import AgentConfig
from .ddpg.train import TrainSettings
from .envs.grid import GridParams
from .envs.motor import MotorParams
from .sec import SecRewardConfig

FULL_SCALE_STEPS = 5_000_000

_INT = "int"
_FLOAT = "float"
_BOOL = "bool"
_STR = "str"
_INT_LIST = "int_list"
_STR_LIST = "str_list"


@dataclass(frozen=True)
class _Key:
    default: object
    type: str
    lo: float | None = None          # inclusive range, None = unchecked
    hi: float | None = None
    choices: tuple | None = None
    scaled_by_horizon: bool = False  # breakpoint rescaled by steps/schedule_horizon


SCHEMA: dict[str, _Key] = {
    "seed": _Key(0, _INT),
    "out_dir": _Key("runs/out", _STR),
    "allow_out_of_range": _Key(False, _BOOL),
    # training horizon and loop cadence
    "train.steps": _Key(200_000, _INT, lo=0),
    "train.schedule_horizon": _Key(FULL_SCALE_STEPS, _INT, lo=1),
    "train.rescale_schedules": _Key(True, _BOOL),
    "train.episode_steps": _Key(2811, _INT, lo=1, hi=5000),
    "train.sampling_time": _Key(1e-4, _FLOAT, lo=1e-9),
    "train.progress_every": _Key(0, _INT, lo=0),
    "train.checkpoint_every": _Key(0, _INT, lo=0),
    # agent hyperparameters (tuned values; ranges from the search setting)
    "agent.variant": _Key("sec-ddpg", _STR, choices=("ddpg", "sec-ddpg", "pi")),
    "agent.gamma": _Key(0.946, _FLOAT, lo=0.5, hi=0.999),
    "agent.lr": _Key(3.75e-4, _FLOAT, lo=1e-6, hi=5e-2),
    "agent.lr_final": _Key(3.13e-4, _FLOAT, lo=1e-12, hi=5e-2),
    "agent.lr_decay_start": _Key(1_375_000, _INT, lo=0, scaled_by_horizon=True),
    "agent.lr_decay_end": _Key(1_620_000, _INT, lo=0, scaled_by_horizon=True),
    "agent.optimizer": _Key("adam", _STR, choices=("adam", "sgd", "rmsprop")),
    "agent.buffer_size": _Key(3_870_000, _INT, lo=20_000),
    "agent.batch_size": _Key(261, _INT, lo=16, hi=1024),
    "agent.tau": _Key(2.61e-3, _FLOAT, lo=1e-4, hi=3e-1),
    "agent.weight_scale": _Key(8.5e-4, _FLOAT, lo=5e-5, hi=2e-1),
    "agent.bias_scale": _Key(2e-2, _FLOAT, lo=5e-4, hi=2e-1),
    "agent.train_freq": _Key(2, _INT, lo=1, hi=15_000),
    "agent.actor.beta": _Key(0.208, _FLOAT, lo=1e-3, hi=0.5),
    "agent.actor.layers": _Key(2, _INT, lo=1, hi=4),
    "agent.actor.units": _Key(25, _INT, lo=10, hi=200),
    "agent.critic.beta": _Key(6.79e-3, _FLOAT, lo=1e-3, hi=0.5),
    "agent.critic.layers": _Key(4, _INT, lo=1, hi=4),
    "agent.critic.units": _Key(295, _INT, lo=10, hi=300),
    "agent.noise.stiffness": _Key(31.58, _FLOAT, lo=1.0, hi=50.0),
    "agent.noise.diffusion": _Key(2.6e-2, _FLOAT, lo=1e-2, hi=1.0),
    # integral-action augmentation
    "sec.t_i": _Key(0.31, _FLOAT, lo=5e-3, hi=2.0),
    "sec.t_aw": _Key(0.66, _FLOAT, lo=1e-5, hi=1.0),
    "sec.kappa_p": _Key(1.48, _FLOAT, lo=0.0, hi=2.0),
    "sec.kappa_i": _Key(1.13, _FLOAT, lo=0.0, hi=2.0),
    "sec.kappa_p_decay_start": _Key(1_150_000, _INT, lo=0, scaled_by_horizon=True),
    "sec.kappa_i_decay_start": _Key(2_750_000, _INT, lo=0, scaled_by_horizon=True),
    # environments
    "env.kind": _Key("grid", _STR, choices=("grid", "motor")),
    "env.past_measurements": _Key(5, _INT, lo=0, hi=50),
    # Training runs every episode to the step cap.  With always-negative
    # rewards, ending an episode at a limit violation *pays* (terminal cuts
    # the stream of penalties), and agents demonstrably learn to crash; the
    # violation-terminal machinery stays available behind this switch.
    "env.terminate_on_violation": _Key(False, _BOOL),
    "env.grid.inductance": _Key(2.3e-3, _FLOAT, lo=0.0),
    "env.grid.resistance": _Key(0.4, _FLOAT, lo=0.0),
    "env.grid.capacitance": _Key(1e-5, _FLOAT, lo=0.0),
    "env.grid.frequency": _Key(60.0, _FLOAT, lo=0.0),
    "env.grid.v_dc": _Key(600.0, _FLOAT, lo=0.0),
    "env.grid.v_nom": _Key(120.0 * math.sqrt(2.0), _FLOAT, lo=0.0),
    "env.grid.v_lim": _Key(1.5 * 120.0 * math.sqrt(2.0), _FLOAT, lo=0.0),
    "env.grid.i_lim": _Key(30.0, _FLOAT, lo=0.0),
    "env.grid.substeps": _Key(10, _INT, lo=1),
    "env.grid.noise_v": _Key(0.25, _FLOAT, lo=0.0),
    "env.grid.noise_i": _Key(0.05, _FLOAT, lo=0.0),
    "env.motor.r_s": _Key(0.25, _FLOAT, lo=0.0),
    "env.motor.l_d": _Key(1.2e-3, _FLOAT, lo=0.0),
    "env.motor.l_q": _Key(1.2e-3, _FLOAT, lo=0.0),
    "env.motor.psi_pm": _Key(5e-2, _FLOAT, lo=0.0),
    "env.motor.omega_el": _Key(2.0 * math.pi * 100.0, _FLOAT, lo=0.0),
    "env.motor.v_dc": _Key(350.0, _FLOAT, lo=0.0),
    "env.motor.i_lim": _Key(20.0, _FLOAT, lo=0.0),
    "env.motor.substeps": _Key(10, _INT, lo=1),
    "env.motor.reference_hold_prob": _Key(0.99, _FLOAT, lo=0.0, hi=0.999999),
    "env.motor.reference_radius": _Key(0.9, _FLOAT, lo=0.0, hi=1.0),
    # experiment harness
    "experiment.variants": _Key(["ddpg", "sec-ddpg", "pi"], _STR_LIST),
    "experiment.seeds": _Key([1, 2, 3, 4, 5], _INT_LIST),
    "experiment.workers": _Key(1, _INT, lo=1),
    "experiment.testcase_seed": _Key(97, _INT),
    "experiment.grid_transient_steps": _Key(100_000, _INT, lo=1),
    "experiment.motor_profile_steps": _Key(10_000, _INT, lo=1),
    "experiment.segments": _Key(20, _INT, lo=1),
    "experiment.segment_length": _Key(500, _INT, lo=2),
    "experiment.save_trajectories": _Key(False, _BOOL),
    "experiment.pi_tune_steps": _Key(10_000, _INT, lo=100),
    "experiment.pi_tune_seed": _Key(11, _INT),
}


def _coerce(key: str, value):
    spec = SCHEMA[key]
    try:
        if spec.type == _INT:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if spec.type == _FLOAT:
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
        if spec.type == _BOOL:
            if isinstance(value, bool):
                return value
            if isinstance(value, str):
                if value.lower() in ("true", "1", "yes"):
                    return True
                if value.lower() in ("false", "0", "no"):
                    return False
            raise ValueError(value)
        if spec.type == _STR:
            return str(value)
        if spec.type == _INT_LIST:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            elif not isinstance(value, (list, tuple)):
                value = [value]
            return [int(v) for v in value]
        if spec.type == _STR_LIST:
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",") if v.strip()]
            elif not isinstance(value, (list, tuple)):
                value = [value]
            return [str(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"config key {key!r}: cannot parse {value!r}") from exc
    raise ConfigurationError(f"config key {key!r}: unknown type {spec.type}")  # pragma: no cover


class RunConfig:
    """Validated flat configuration with derived desk-scale schedule values."""

    def __init__(self, values: dict):
        self.values = values
        self.derived = self._derive()

    def __getitem__(self, key: str):
        if key in self.derived:
            return self.derived[key]
        return self.values[key]

    def raw(self, key: str):
        return self.values[key]

    def _derive(self) -> dict:
        v = self.values
        derived = {}
        steps = v["train.steps"]
        horizon = v["train.schedule_horizon"]
        if v["train.rescale_schedules"] and steps != horizon and steps > 0:
            factor = steps / horizon
            for key in ("agent.lr_decay_start", "agent.lr_decay_end",
                        "sec.kappa_p_decay_start", "sec.kappa_i_decay_start"):
                derived[key] = int(round(v[key] * factor))
        # Ring capacity never exceeds the number of transitions generated.
        derived["agent.buffer_size"] = max(1, min(v["agent.buffer_size"], max(steps, 1)))
        return derived

    # -- builders ---------------------------------------------------------

    def grid_params(self) -> GridParams:
        v = self.values
        return GridParams(
            inductance=v["env.grid.inductance"],
            resistance=v["env.grid.resistance"],
            capacitance=v["env.grid.capacitance"],
            frequency=v["env.grid.frequency"],
            v_dc=v["env.grid.v_dc"],
            v_nom=v["env.grid.v_nom"],
            v_lim=v["env.grid.v_lim"],
            i_lim=v["env.grid.i_lim"],
            dt=v["train.sampling_time"],
            substeps=v["env.grid.substeps"],
            noise_v=v["env.grid.noise_v"],
            noise_i=v["env.grid.noise_i"],
            history_length=v["env.past_measurements"],
        )

    def motor_params(self) -> MotorParams:
        v = self.values
        return MotorParams(
            r_s=v["env.motor.r_s"],
            l_d=v["env.motor.l_d"],
            l_q=v["env.motor.l_q"],
            psi_pm=v["env.motor.psi_pm"],
            omega_el=v["env.motor.omega_el"],
            v_dc=v["env.motor.v_dc"],
            i_lim=v["env.motor.i_lim"],
            dt=v["train.sampling_time"],
            substeps=v["env.motor.substeps"],
            history_length=v["env.past_measurements"],
            reference_radius=v["env.motor.reference_radius"],
            reference_hold_prob=v["env.motor.reference_hold_prob"],
        )

    def agent_config(self, obs_dim: int, action_dim: int) -> AgentConfig:
        v = self.values
        return AgentConfig(
            obs_dim=obs_dim,
            action_dim=action_dim,
            actor_hidden=[v["agent.actor.units"]] * v["agent.actor.layers"],
            critic_hidden=[v["agent.critic.units"]] * v["agent.critic.layers"],
            beta_actor=v["agent.actor.beta"],
            beta_critic=v["agent.critic.beta"],
            gamma=v["agent.gamma"],
            tau=v["agent.tau"],
            batch_size=v["agent.batch_size"],
            train_freq=v["agent.train_freq"],
            buffer_capacity=self["agent.buffer_size"],
            optimizer=v["agent.optimizer"],
            weight_scale=v["agent.weight_scale"],
            bias_scale=v["agent.bias_scale"],
            lr=v["agent.lr"],
            lr_final=v["agent.lr_final"],
            lr_decay_start=self["agent.lr_decay_start"],
            lr_decay_end=self["agent.lr_decay_end"],
        )

    def sec_reward_config(self) -> SecRewardConfig:
        v = self.values
        total = max(v["train.steps"], 1)
        # A decay start at/after the horizon means the penalty never decays.
        return SecRewardConfig(
            kappa_p=v["sec.kappa_p"],
            kappa_i=v["sec.kappa_i"],
            kappa_p_decay_start=min(self["sec.kappa_p_decay_start"], total),
            kappa_i_decay_start=min(self["sec.kappa_i_decay_start"], total),
            total_steps=total,
            gamma=v["agent.gamma"],
        )

    def train_settings(self, **overrides) -> TrainSettings:
        v = self.values
        kw = dict(
            total_steps=v["train.steps"],
            episode_steps=v["train.episode_steps"],
            noise_stiffness=v["agent.noise.stiffness"],
            noise_diffusion=v["agent.noise.diffusion"],
            noise_dt=v["train.sampling_time"],
            progress_every=v["train.progress_every"],
            checkpoint_every=v["train.checkpoint_every"],
        )
        kw.update(overrides)
        return TrainSettings(**kw)

    # -- io ---------------------------------------------------------------

    def echo(self, path: str | Path) -> None:
        """Write the effective configuration (raw keys plus derived values)."""
        payload = dict(sorted(self.values.items()))
        payload["_derived"] = dict(sorted(self.derived.items()))
        Path(path).write_text(yaml.safe_dump(payload, sort_keys=False))

    def to_json(self) -> str:
        return json.dumps({"values": self.values, "derived": self.derived}, default=str)


def _validate_ranges(values: dict) -> None:
    if values["allow_out_of_range"]:
        return
    problems = []
    horizon = values["train.schedule_horizon"]
    for key, spec in SCHEMA.items():
        val = values[key]
        if spec.choices is not None and val not in spec.choices:
            problems.append(f"{key}={val!r} not in {spec.choices}")
            continue
        if spec.type in (_INT, _FLOAT):
            lo = spec.lo
            hi = spec.hi if not spec.scaled_by_horizon else horizon
            if lo is not None and val < lo:
                problems.append(f"{key}={val} below {lo}")
            if hi is not None and val > hi:
                problems.append(f"{key}={val} above {hi}")
    if values["agent.lr_final"] > values["agent.lr"]:
        problems.append("agent.lr_final must not exceed agent.lr")
    if values["agent.lr_decay_end"] < values["agent.lr_decay_start"]:
        problems.append("agent.lr_decay_end must be >= agent.lr_decay_start")
    for variant in values["experiment.variants"]:
        if variant not in ("ddpg", "sec-ddpg", "pi"):
            problems.append(f"experiment.variants contains unknown variant {variant!r}")
    if problems:
        raise ConfigurationError(
            "configuration outside the accepted ranges "
            "(set allow_out_of_range to force):\n  " + "\n  ".join(problems)
        )


def parse_config(
    path: str | Path | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Merge defaults < file < overrides, reject unknown keys, validate."""
    values = {key: spec.default for key, spec in SCHEMA.items()}
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text())
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigurationError(f"config file {path} must be a flat mapping")
        for key, val in raw.items():
            if key not in SCHEMA:
                raise ConfigurationError(f"unknown config key {key!r} in {path}")
            values[key] = _coerce(key, val)
    for key, val in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigurationError(f"unknown config key {key!r} in overrides")
        values[key] = _coerce(key, val)
    _validate_ranges(values)
    return RunConfig(values)


def parse_override_strings(pairs: list[str]) -> dict:
    """Parse repeated ``key=value`` strings; values go through YAML typing."""
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(f"override {pair!r} is not of the form key=value")
        key, _, raw = pair.partition("=")
        out[key.strip()] = yaml.safe_load(raw.strip())
    return out
