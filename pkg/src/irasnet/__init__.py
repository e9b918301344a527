"""Desk-scale SAR target recognition with clutter reduction and domain generalisation.

Submodules: ``sar_scene`` and ``scenarios`` (synthetic chips and domains),
``segmentation``, ``scr_lab`` (signal-to-clutter tools), ``domain_aug``,
``nn_core``/``crm``/``network`` (the model), ``trainer``, ``evalkit``,
``protocol`` (the toy DG protocol), ``corpus``/``checkpoint`` (file formats)
and ``cli``.
"""
from .errors import (
    ConfigurationError, ContractError, CorruptCheckpointError, TrainingDivergedError,
)
from .network import IrasNet, ModelConfig
from .sar_scene import ChipSpec, SarChip, render_chip
from .trainer import TrainConfig, infer, train

__version__ = "0.1.0"

__all__ = [
    "ChipSpec", "SarChip", "render_chip", "IrasNet", "ModelConfig", "TrainConfig", "train",
    "infer", "ConfigurationError", "ContractError", "CorruptCheckpointError",
    "TrainingDivergedError",
]
