from .mlp import MlpParams, ParamGrads, mlp_init, mlp_forward, mlp_backward
from .optim import AdamState, SgdState, RmsPropState, make_optimizer, optimizer_step

__all__ = [
    "MlpParams",
    "ParamGrads",
    "mlp_init",
    "mlp_forward",
    "mlp_backward",
    "AdamState",
    "SgdState",
    "RmsPropState",
    "make_optimizer",
    "optimizer_step",
]
