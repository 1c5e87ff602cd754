"""
Per-instance counterfactual search over the latent code of a VAE.

Only the code ``z`` moves: it starts at the posterior mean of the input and
follows plain gradient descent on the cGen objective evaluated at
``decode(z)``. The search keeps the best iterate seen so far and stops once
the relative improvement of the objective has stayed below the tolerance
for ``patience`` consecutive steps, or when the step budget runs out.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from cgenlab.autodiff import ops
from cgenlab.autodiff.optim import SGD
from cgenlab.autodiff.tensor import Tensor, backward, no_grad, parameter
from cgenlab.cgen.losses import LossTerms, cgen_loss, require_frozen
from cgenlab.cgen.results import CounterfactualResult
from cgenlab.errors import DimensionError, UnsupportedOperationError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from cgenlab.cgen.losses import TensorMap
    from cgenlab.nn.models import GeneratorModel
    from cgenlab.schemas.training.cgen import CGenWeights, LatentSearchConfig

logger = logging.getLogger(__name__)


@dataclass
class LatentTrace:
    """Outcome of one latent search."""

    z: np.ndarray
    losses: dict[str, float]
    iterations: int
    converged: bool
    optimized_variables: int
    best_history: list[float] = field(default_factory=list)


def search_latent(  # noqa: PLR0913
    decode: TensorMap,
    classifier: TensorMap,
    x: Tensor,
    z0: np.ndarray,
    weights: CGenWeights,
    *,
    config: LatentSearchConfig,
    predictor: TensorMap | None = None,
    t_r: np.ndarray | Sequence[float] | None = None,
    t_c: int = 1,
) -> LatentTrace:
    """
    Gradient descent on ``z`` alone.

    ``decode`` maps a ``1 × l`` code to an image batch shaped like ``x``;
    ``best_history[k]`` is the best objective after ``k`` updates, so it is
    non-increasing by construction.
    """
    start = np.asarray(z0).reshape(-1)
    z = parameter(start.copy(), "z", dtype=x.dtype)
    optimizer = SGD([z], learning_rate=config.learning_rate)
    if len(optimizer.params) != 1 or optimizer.params[0].size != start.size:
        msg = "latent search must optimize exactly the latent code"
        raise DimensionError(msg)

    def evaluate() -> LossTerms:
        x_prime = decode(ops.reshape(z, (1, start.size)))
        return cgen_loss(
            x,
            x_prime,
            classifier,
            weights,
            predictor=predictor,
            t_r=t_r,
            t_c=t_c,
        )

    terms = evaluate()
    best = terms.total.item()
    best_z = z.data.copy()
    best_losses = terms.values()
    history = [best]
    stalled = 0
    converged = False
    steps = 0
    for step in range(1, config.steps + 1):
        if terms.total.entry is None:
            # every weight is zero: nothing depends on z
            converged = True
            break
        backward(terms.total)
        optimizer.step()
        terms = evaluate()
        value = terms.total.item()
        scale = max(abs(best), np.finfo(np.float64).tiny)
        improvement = (best - value) / scale
        if value < best:
            best = value
            best_z = z.data.copy()
            best_losses = terms.values()
        history.append(best)
        steps = step
        stalled = stalled + 1 if improvement < config.tolerance else 0
        if stalled >= config.patience:
            converged = True
            break

    logger.debug(
        "latent search: %d steps, best l_total %.6g, converged=%s",
        steps,
        best,
        converged,
    )
    return LatentTrace(
        z=best_z,
        losses=best_losses,
        iterations=steps,
        converged=converged,
        optimized_variables=z.size,
        best_history=history,
    )


def latent_counterfactual_search(  # noqa: PLR0913
    generator: GeneratorModel,
    classifier: TensorMap,
    x: np.ndarray,
    weights: CGenWeights,
    *,
    config: LatentSearchConfig,
    predictor: TensorMap | None = None,
    t_r: np.ndarray | Sequence[float] | None = None,
    t_c: int = 1,
) -> CounterfactualResult:
    """
    Counterfactual of one image ``x`` (``C×H×W``) by latent search.

    The generator, the classifier and the predictor must all be frozen.
    """
    if not generator.variational:
        msg = "latent search needs a variational generator"
        raise UnsupportedOperationError(msg)
    for model, role in ((generator, "generator"), (classifier, "classifier")):
        require_frozen(model, role)
    if predictor is not None:
        require_frozen(predictor, "predictor")

    image = np.asarray(x, dtype=generator.dtype)
    if image.shape != generator.input_shape:
        want = generator.input_shape
        msg = f"latent search takes one {want} image, got {image.shape}"
        raise DimensionError(msg)
    batch = Tensor(image[None], dtype=generator.dtype)
    with no_grad():
        z0 = generator.encode_mu(batch).numpy()[0]

    trace = search_latent(
        generator.decode_latent,
        classifier,
        batch,
        z0,
        weights,
        config=config,
        predictor=predictor,
        t_r=t_r,
        t_c=t_c,
    )
    with no_grad():
        code = Tensor(trace.z, dtype=generator.dtype)
        counterfactual = generator.decode_latent(code)
        prob = classifier(counterfactual).item()
        prediction = (
            predictor(counterfactual).numpy()[0] if predictor is not None else None
        )
    return CounterfactualResult(
        original=image,
        counterfactual=counterfactual.numpy()[0],
        losses=trace.losses,
        weights=weights,
        classifier_prob=prob,
        prediction=prediction,
        goal=None if t_r is None else np.asarray(t_r, dtype=np.float64),
        iterations=trace.iterations,
        converged=trace.converged,
        optimized_variables=trace.optimized_variables,
        best_history=trace.best_history,
    )


def search_many(  # noqa: PLR0913
    generator: GeneratorModel,
    classifier: TensorMap,
    images: np.ndarray,
    goals: Sequence[np.ndarray | None],
    weights: CGenWeights,
    *,
    config: LatentSearchConfig,
    predictor: TensorMap | None = None,
    workers: int = 1,
) -> list[CounterfactualResult]:
    """Independent latent searches, one per image, on a thread pool."""
    if len(goals) != len(images):
        msg = f"{len(images)} images but {len(goals)} goals"
        raise DimensionError(msg)

    def one(i: int) -> CounterfactualResult:
        return latent_counterfactual_search(
            generator,
            classifier,
            images[i],
            weights,
            config=config,
            predictor=predictor,
            t_r=goals[i],
        )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(images))))

