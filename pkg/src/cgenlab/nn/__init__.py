"""Network roles, default architectures and checkpoints."""

from cgenlab.nn.architectures import build_classifier, build_generator, build_predictor
from cgenlab.nn.checkpoint import clone_model, load_checkpoint, save_checkpoint
from cgenlab.nn.models import (
    ClassifierModel,
    GeneratorModel,
    GeneratorOutput,
    Model,
    PredictorModel,
    SequentialModel,
    build_model,
    kl_to_standard_normal,
)

__all__ = [
    "ClassifierModel",
    "GeneratorModel",
    "GeneratorOutput",
    "Model",
    "PredictorModel",
    "SequentialModel",
    "build_classifier",
    "build_generator",
    "build_model",
    "build_predictor",
    "clone_model",
    "kl_to_standard_normal",
    "load_checkpoint",
    "save_checkpoint",
]
