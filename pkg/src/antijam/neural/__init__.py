"""From-scratch recurrent learning core (numpy, float64)."""

from .gru import GruParams, gru_backward, gru_forward, sigmoid
from .layers import DenseHead, Mlp, head_forward, loss, softmax
from .model import GruModel, TrainConfig, TrainingDiverged, TrainResult, bptt, train
from .optim import Adam, adam_step

__all__ = [
    "Adam", "DenseHead", "GruModel", "GruParams", "Mlp", "TrainConfig", "TrainResult",
    "TrainingDiverged", "adam_step", "bptt", "gru_backward", "gru_forward", "head_forward",
    "loss", "sigmoid", "softmax", "train",
]
