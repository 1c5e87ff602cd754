"""Counterfactual generation: losses, trainers, latent search and evaluation."""

from cgenlab.cgen.evaluation import (
    alpha_sweep,
    evaluate_classification,
    forward_counterfactuals,
    reexecute_stones,
)
from cgenlab.cgen.explain import counterfactual_diff, denoise
from cgenlab.cgen.latent_search import latent_counterfactual_search, search_many
from cgenlab.cgen.losses import (
    LossTerms,
    cgen_loss,
    cgen_loss_classification,
    cgen_loss_regression,
)
from cgenlab.cgen.results import CounterfactualResult, load_losses, save_result
from cgenlab.cgen.training import (
    CGenTrainingResult,
    TrainingLog,
    pretrain_classifier,
    pretrain_generator,
    train_cgen_classification,
    train_cgen_regression,
    train_membership_classifier,
    train_predictor,
)

__all__ = [
    "CGenTrainingResult",
    "CounterfactualResult",
    "LossTerms",
    "TrainingLog",
    "alpha_sweep",
    "cgen_loss",
    "cgen_loss_classification",
    "cgen_loss_regression",
    "counterfactual_diff",
    "denoise",
    "evaluate_classification",
    "forward_counterfactuals",
    "latent_counterfactual_search",
    "load_losses",
    "pretrain_classifier",
    "pretrain_generator",
    "reexecute_stones",
    "save_result",
    "search_many",
    "train_cgen_classification",
    "train_cgen_regression",
    "train_membership_classifier",
    "train_predictor",
]
