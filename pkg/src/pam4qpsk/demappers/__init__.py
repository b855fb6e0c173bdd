from .hard import HardDemapper, hard_decide, saturated_llrs
from .linear import LinearEqualizerDemapper, fit_linear_equalizer, linear_equalize
from .mlp import (
    Adam,
    MlpModel,
    NonFiniteActivationError,
    TrainConfig,
    TrainingDivergedError,
    bit_cross_entropy,
    gradient_check,
    mlp_train,
)
from .neural import NeuralDemapper

__all__ = [
    "Adam",
    "HardDemapper",
    "LinearEqualizerDemapper",
    "MlpModel",
    "NeuralDemapper",
    "NonFiniteActivationError",
    "TrainConfig",
    "TrainingDivergedError",
    "bit_cross_entropy",
    "fit_linear_equalizer",
    "gradient_check",
    "hard_decide",
    "linear_equalize",
    "mlp_train",
    "saturated_llrs",
]
