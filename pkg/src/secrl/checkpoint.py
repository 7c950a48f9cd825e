"""Self-describing npz checkpoints.

Three levels: bare network parameters, a full agent (networks, targets,
optimizer moments), and a complete training snapshot (agent plus replay
buffer, noise/integrator state, rng states, and environment state) that
resumes bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import ConfigurationError
from .ddpg.agent import AgentConfig, DdpgAgent
from .nn.mlp import MlpParams
from .nn.optim import AdamState, RmsPropState, SgdState

FORMAT_VERSION = 1


def _jsonable(obj):
    """Recursively convert numpy values so json can store them."""
    if isinstance(obj, np.ndarray):
        return {"__nd__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _unjsonable(obj):
    if isinstance(obj, dict):
        if "__nd__" in obj:
            return np.asarray(obj["__nd__"], dtype=obj.get("dtype", "float64"))
        return {k: _unjsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_unjsonable(v) for v in obj]
    return obj


# -- bare networks ---------------------------------------------------------

def save_network(path: str | Path, params: MlpParams) -> None:
    arrays = {}
    for j, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{j}"] = w
        arrays[f"b{j}"] = b
    meta = {
        "version": FORMAT_VERSION,
        "layer_sizes": params.layer_sizes,
        "beta": params.beta,
        "output_activation": params.output_activation,
    }
    np.savez(path, meta=json.dumps(meta), **arrays)


def load_network(path: str | Path) -> MlpParams:
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["meta"]))
    if meta.get("version") != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported network checkpoint version {meta.get('version')}")
    sizes = meta["layer_sizes"]
    weights = [data[f"w{j}"] for j in range(len(sizes) - 1)]
    biases = [data[f"b{j}"] for j in range(len(sizes) - 1)]
    params = MlpParams(sizes, weights, biases, meta["beta"], meta["output_activation"])
    params.validate()
    return params


# -- optimizer states ------------------------------------------------------

def _pack_optimizer(prefix: str, state, arrays: dict) -> dict:
    if isinstance(state, AdamState):
        for j, (mw, mb, vw, vb) in enumerate(zip(state.m_w, state.m_b, state.v_w, state.v_b)):
            arrays[f"{prefix}_mw{j}"] = mw
            arrays[f"{prefix}_mb{j}"] = mb
            arrays[f"{prefix}_vw{j}"] = vw
            arrays[f"{prefix}_vb{j}"] = vb
        return {"kind": "adam", "step": state.step, "beta1": state.beta1,
                "beta2": state.beta2, "eps": state.eps, "layers": len(state.m_w)}
    if isinstance(state, SgdState):
        for j, (vw, vb) in enumerate(zip(state.vel_w, state.vel_b)):
            arrays[f"{prefix}_vw{j}"] = vw
            arrays[f"{prefix}_vb{j}"] = vb
        return {"kind": "sgd", "momentum": state.momentum, "layers": len(state.vel_w)}
    if isinstance(state, RmsPropState):
        for j, (sw, sb) in enumerate(zip(state.sq_w, state.sq_b)):
            arrays[f"{prefix}_sw{j}"] = sw
            arrays[f"{prefix}_sb{j}"] = sb
        return {"kind": "rmsprop", "rho": state.rho, "eps": state.eps, "layers": len(state.sq_w)}
    raise ConfigurationError(f"unknown optimizer state {type(state)!r}")


def _unpack_optimizer(prefix: str, meta: dict, data):
    n = meta["layers"]
    if meta["kind"] == "adam":
        return AdamState(
            m_w=[data[f"{prefix}_mw{j}"] for j in range(n)],
            m_b=[data[f"{prefix}_mb{j}"] for j in range(n)],
            v_w=[data[f"{prefix}_vw{j}"] for j in range(n)],
            v_b=[data[f"{prefix}_vb{j}"] for j in range(n)],
            step=meta["step"], beta1=meta["beta1"], beta2=meta["beta2"], eps=meta["eps"],
        )
    if meta["kind"] == "sgd":
        return SgdState(
            momentum=meta["momentum"],
            vel_w=[data[f"{prefix}_vw{j}"] for j in range(n)],
            vel_b=[data[f"{prefix}_vb{j}"] for j in range(n)],
        )
    if meta["kind"] == "rmsprop":
        return RmsPropState(
            sq_w=[data[f"{prefix}_sw{j}"] for j in range(n)],
            sq_b=[data[f"{prefix}_sb{j}"] for j in range(n)],
            rho=meta["rho"], eps=meta["eps"],
        )
    raise ConfigurationError(f"unknown optimizer kind {meta['kind']!r}")


def _pack_network(prefix: str, params: MlpParams, arrays: dict) -> dict:
    for j, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"{prefix}_w{j}"] = w
        arrays[f"{prefix}_b{j}"] = b
    return {
        "layer_sizes": params.layer_sizes,
        "beta": params.beta,
        "output_activation": params.output_activation,
    }


def _unpack_network(prefix: str, meta: dict, data) -> MlpParams:
    sizes = meta["layer_sizes"]
    return MlpParams(
        layer_sizes=sizes,
        weights=[data[f"{prefix}_w{j}"].copy() for j in range(len(sizes) - 1)],
        biases=[data[f"{prefix}_b{j}"].copy() for j in range(len(sizes) - 1)],
        beta=meta["beta"],
        output_activation=meta["output_activation"],
    )


# -- full agents -----------------------------------------------------------

def save_agent(path: str | Path, agent: DdpgAgent, extra: dict | None = None) -> None:
    arrays: dict = {}
    meta = {
        "version": FORMAT_VERSION,
        "agent_config": _jsonable(vars(agent.config)),
        "actor": _pack_network("actor", agent.actor, arrays),
        "critic": _pack_network("critic", agent.critic, arrays),
        "actor_target": _pack_network("actor_t", agent.actor_target, arrays),
        "critic_target": _pack_network("critic_t", agent.critic_target, arrays),
        "actor_opt": _pack_optimizer("aopt", agent.actor_opt, arrays),
        "critic_opt": _pack_optimizer("copt", agent.critic_opt, arrays),
        "extra": _jsonable(extra or {}),
    }
    np.savez(path, meta=json.dumps(meta), **arrays)


def load_agent(path: str | Path) -> tuple[DdpgAgent, dict]:
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["meta"]))
    if meta.get("version") != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported agent checkpoint version {meta.get('version')}")
    cfg = AgentConfig(**_unjsonable(meta["agent_config"]))
    agent = DdpgAgent.__new__(DdpgAgent)
    agent.config = cfg
    agent.actor = _unpack_network("actor", meta["actor"], data)
    agent.critic = _unpack_network("critic", meta["critic"], data)
    agent.actor_target = _unpack_network("actor_t", meta["actor_target"], data)
    agent.critic_target = _unpack_network("critic_t", meta["critic_target"], data)
    agent.actor_opt = _unpack_optimizer("aopt", meta["actor_opt"], data)
    agent.critic_opt = _unpack_optimizer("copt", meta["critic_opt"], data)
    return agent, _unjsonable(meta["extra"])


# -- full training snapshots ------------------------------------------------

def save_trainer(path: str | Path, trainer, config_echo: dict | None = None) -> None:
    arrays: dict = {}
    agent = trainer.agent
    state = trainer.state_dict()
    buffer = state.pop("buffer")
    for key, val in buffer.items():
        if isinstance(val, np.ndarray):
            arrays[f"buf_{key}"] = val
    meta = {
        "version": FORMAT_VERSION,
        "agent_config": _jsonable(vars(agent.config)),
        "actor": _pack_network("actor", agent.actor, arrays),
        "critic": _pack_network("critic", agent.critic, arrays),
        "actor_target": _pack_network("actor_t", agent.actor_target, arrays),
        "critic_target": _pack_network("critic_t", agent.critic_target, arrays),
        "actor_opt": _pack_optimizer("aopt", agent.actor_opt, arrays),
        "critic_opt": _pack_optimizer("copt", agent.critic_opt, arrays),
        "trainer_state": _jsonable(state),
        "buffer_scalars": {"cursor": buffer["cursor"], "count": buffer["count"]},
        "config_echo": _jsonable(config_echo or {}),
    }
    np.savez_compressed(path, meta=json.dumps(meta), **arrays)


def load_trainer_into(path: str | Path, trainer) -> None:
    """Restore a snapshot into a Trainer built from the identical config."""
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["meta"]))
    if meta.get("version") != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported trainer checkpoint version {meta.get('version')}")
    agent = trainer.agent
    agent.actor = _unpack_network("actor", meta["actor"], data)
    agent.critic = _unpack_network("critic", meta["critic"], data)
    agent.actor_target = _unpack_network("actor_t", meta["actor_target"], data)
    agent.critic_target = _unpack_network("critic_t", meta["critic_target"], data)
    agent.actor_opt = _unpack_optimizer("aopt", meta["actor_opt"], data)
    agent.critic_opt = _unpack_optimizer("copt", meta["critic_opt"], data)
    state = _unjsonable(meta["trainer_state"])
    state["buffer"] = {
        "obs": data["buf_obs"], "act": data["buf_act"], "rew": data["buf_rew"],
        "next": data["buf_next"], "term": data["buf_term"],
        "cursor": meta["buffer_scalars"]["cursor"],
        "count": meta["buffer_scalars"]["count"],
    }
    trainer.load_state_dict(state)
