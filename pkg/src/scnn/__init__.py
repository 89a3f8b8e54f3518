"""Swarm-filter networks and the baselines they are compared against, in numpy."""

from .layers import swarm_filter_backward, swarm_filter_forward
from .models import ModelConfig, build_model, count_params, predict, scnn_closed_form
from .tensor import Prng, Tensor

__all__ = [
    "ModelConfig", "Prng", "Tensor", "build_model", "count_params", "predict",
    "scnn_closed_form", "swarm_filter_backward", "swarm_filter_forward",
]
__version__ = "0.1.0"
