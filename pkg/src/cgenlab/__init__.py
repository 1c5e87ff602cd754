"""Public facade for high-level API."""
from __future__ import annotations

from cgenlab.cgen.latent_search import latent_counterfactual_search
from cgenlab.cgen.training import train_cgen_classification, train_cgen_regression
from cgenlab.envs.datasets import generate_dataset, load_dataset
from cgenlab.robustness.compare import robustness_compare

__all__ = [
    "generate_dataset",
    "latent_counterfactual_search",
    "load_dataset",
    "robustness_compare",
    "train_cgen_classification",
    "train_cgen_regression",
]
