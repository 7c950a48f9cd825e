from .replay import Experience, ReplayBuffer
from .noise import OuNoise
from .schedule import LinearSchedule
from .agent import DdpgAgent, AgentConfig, soft_update, critic_update, actor_update
from .train import train, TrainResult

__all__ = [
    "Experience",
    "ReplayBuffer",
    "OuNoise",
    "LinearSchedule",
    "DdpgAgent",
    "AgentConfig",
    "soft_update",
    "critic_update",
    "actor_update",
    "train",
    "TrainResult",
]
