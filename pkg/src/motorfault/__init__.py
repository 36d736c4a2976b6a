"""Induction motor fault detection with a from-scratch feedforward network."""
from ._backend import NAME as BACKEND
from .dataset import Dataset, FaultClass, LabeledSample, PhaseSample
from .errors import (
    DivergenceError,
    MotorFaultError,
    ParseError,
    ProtocolError,
    StructuralError,
    UsageError,
)
from .neuralnet import Network, NetworkConfig, TrainReport, load_model, save_model, train

__all__ = [
    "BACKEND",
    "Dataset",
    "DivergenceError",
    "FaultClass",
    "LabeledSample",
    "MotorFaultError",
    "Network",
    "NetworkConfig",
    "ParseError",
    "PhaseSample",
    "ProtocolError",
    "StructuralError",
    "TrainReport",
    "UsageError",
    "load_model",
    "save_model",
    "train",
]
