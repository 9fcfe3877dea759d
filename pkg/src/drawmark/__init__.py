"""drawmark: behavioral and neural marker identification for DBS drawing sessions."""

from .errors import DrawmarkError
from .io import load_session, save_session
from .kinematics import FeatureSet
from .model import (
    Block,
    DbsCondition,
    ExclusionReason,
    Modality,
    NeuralEpoch,
    PenSample,
    Session,
    Trace,
    Trial,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "DbsCondition",
    "DrawmarkError",
    "ExclusionReason",
    "FeatureSet",
    "Modality",
    "NeuralEpoch",
    "PenSample",
    "Session",
    "Trace",
    "Trial",
    "load_session",
    "save_session",
    "__version__",
]
