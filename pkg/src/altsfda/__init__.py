"""Adaptive local transfer for source-free domain adaptation, at desk scale."""

from .bank import FeatureBank, init_bank
from .config import AdaptConfig
from .division import LearningState, partition
from .model import ModelParams, forward, init_params, lambda_schedule, loss_gradients

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig", "FeatureBank", "LearningState", "ModelParams",
    "forward", "init_bank", "init_params", "lambda_schedule", "loss_gradients", "partition",
]
