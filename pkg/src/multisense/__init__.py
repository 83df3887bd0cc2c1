"""Multimodal object recognition: camera CNN streams, a depth MLP, decision-level and intermediate fusion."""
from .errors import (
    ArgumentError,
    ConfigError,
    DimensionError,
    FormatError,
    IncompatibilityError,
    IngestionError,
    StateError,
    TrainingError,
)
from .graph import Graph, Node
from .optim import TrainConfig

__version__ = "0.1.0"
