"""
Training loops: pre-training, surrogate fitting and adversarial cGen rounds.

Every loop draws its batch order from a Philox stream derived from the
configured seed, so a rerun with the same config reproduces the weights
bitwise. The adversarial trainers alternate whole epochs: generator epochs
update the generator with the classifier frozen, classifier epochs update
the classifier with the generator frozen, and a weight hash of the frozen
side is compared before and after every epoch.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from cgenlab.autodiff import ops
from cgenlab.autodiff.optim import Optimizer, make_optimizer
from cgenlab.autodiff.rng import make_rng
from cgenlab.autodiff.tensor import Tensor, backward, no_grad
from cgenlab.cgen.losses import (
    LossTerms,
    cgen_loss_classification,
    cgen_loss_regression,
    constant_like,
    require_frozen,
)
from cgenlab.config.constants import CGenMode, TrainingLogColumn, TrainingPhase
from cgenlab.errors import (
    ConfigurationError,
    DimensionError,
    EmptyDatasetError,
    ModelNotFrozenError,
    UnsupportedOperationError,
)
from cgenlab.io.records import write_csv
from cgenlab.nn.models import kl_to_standard_normal

if TYPE_CHECKING:
    from pathlib import Path

    from cgenlab.nn.models import (
        ClassifierModel,
        GeneratorModel,
        Model,
        PredictorModel,
    )
    from cgenlab.schemas.training.cgen import PretrainConfig, TrainConfig

logger = logging.getLogger(__name__)

_DECISION = 0.5


# ----------------------------------------------------------------------------
# Training log
# ----------------------------------------------------------------------------


@dataclass
class EpochRecord:
    """Mean losses of one epoch; columns that do not apply stay ``None``."""

    epoch: int
    phase: TrainingPhase
    l_g: float | None = None
    l_c: float | None = None
    l_p: float | None = None
    l_total: float | None = None
    classifier_acc: float | None = None

    def row(self) -> dict[str, object]:
        """CSV row keyed by ``TrainingLogColumn``."""
        return {c.value: getattr(self, c.value) for c in TrainingLogColumn}


@dataclass
class TrainingLog:
    """Per-epoch records plus warnings and outcome flags of one run."""

    records: list[EpochRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    flags: dict[str, bool] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)

    def append(self, record: EpochRecord) -> None:
        """Store ``record`` and log it."""
        self.records.append(record)
        parts = [
            f"{name}={value:.6g}"
            for name, value in (
                ("l_g", record.l_g),
                ("l_c", record.l_c),
                ("l_p", record.l_p),
                ("l_total", record.l_total),
                ("acc", record.classifier_acc),
            )
            if value is not None
        ]
        logger.info("epoch %d [%s] %s", record.epoch, record.phase, " ".join(parts))

    def warn(self, message: str) -> None:
        """Record a recoverable anomaly and emit it as a warning."""
        self.warnings.append(message)
        logger.warning(message)

    def series(
        self,
        column: TrainingLogColumn | str,
        phase: TrainingPhase | None = None,
    ) -> np.ndarray:
        """One column as floats, ``NaN`` where unset; optionally one phase only."""
        name = TrainingLogColumn(column).value
        values = [
            getattr(r, name)
            for r in self.records
            if phase is None or r.phase == phase
        ]
        return np.array([math.nan if v is None else v for v in values], dtype=float)

    def write_csv(self, path: str | Path) -> None:
        """Write the documented header and one row per epoch."""
        columns = [c.value for c in TrainingLogColumn]
        write_csv(path, columns, (r.row() for r in self.records))

    def extend(self, other: TrainingLog) -> None:
        """Append another run's records, warnings, flags and metrics."""
        offset = len(self.records)
        for record in other.records:
            self.records.append(
                EpochRecord(
                    epoch=offset + record.epoch,
                    phase=record.phase,
                    l_g=record.l_g,
                    l_c=record.l_c,
                    l_p=record.l_p,
                    l_total=record.l_total,
                    classifier_acc=record.classifier_acc,
                ),
            )
        self.warnings += other.warnings
        self.flags.update(other.flags)
        self.metrics.update(other.metrics)


def smoothed(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average (``len − window + 1`` points)."""
    arr = np.asarray(values, dtype=float)
    if window <= 1 or arr.size < window:
        return arr
    return np.convolve(arr, np.ones(window) / window, mode="valid")


# ----------------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------------


def _batches(
    n: int,
    batch_size: int,
    rng: np.random.Generator,
) -> Iterator[np.ndarray]:
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _require_samples(images: np.ndarray, what: str) -> int:
    n = int(np.asarray(images).shape[0]) if np.ndim(images) else 0
    if n == 0:
        msg = f"{what} is empty"
        raise EmptyDatasetError(msg)
    return n


def _batch(model: Model, images: np.ndarray) -> Tensor:
    return Tensor(images, dtype=model.dtype)


def _accuracy(prob: np.ndarray, label: np.ndarray) -> float:
    predicted = prob.reshape(-1) > _DECISION
    return float(np.mean(predicted == (label.reshape(-1) > _DECISION)))


def _bce_step(
    classifier: ClassifierModel,
    images: np.ndarray,
    labels: np.ndarray,
    optimizer: Optimizer,
) -> tuple[float, float]:
    prob = classifier(_batch(classifier, images))
    target = Tensor(labels.reshape(-1, 1), dtype=prob.dtype)
    loss = ops.bce(prob, target)
    backward(loss)
    optimizer.step()
    return loss.item(), _accuracy(prob.data, labels)


def reconstruction_error(
    generator: GeneratorModel,
    images: np.ndarray,
    batch_size: int = 64,
) -> float:
    """Mean squared reconstruction error (posterior mean for a VAE)."""
    n = _require_samples(images, "reconstruction set")
    total = 0.0
    for start in range(0, n, batch_size):
        chunk = images[start : start + batch_size]
        recon = generator.reconstruct(chunk)
        total += float(np.sum((recon - chunk) ** 2))
    return total / float(np.asarray(images).size)


# ----------------------------------------------------------------------------
# Pre-training
# ----------------------------------------------------------------------------


def pretrain_generator(
    generator: GeneratorModel,
    images: np.ndarray,
    *,
    config: PretrainConfig,
    validation: np.ndarray | None = None,
) -> TrainingLog:
    """
    Reconstruction pre-training (plus the KL term for a VAE).

    The final reconstruction error is measured on ``validation`` (the
    training images when no validation set is given); when it exceeds the
    configured threshold the log carries a warning and the
    ``reconstruction_ok`` flag is false.
    """
    n = _require_samples(images, "pre-training set")
    rng = make_rng(config.seed, "pretrain", "generator")
    generator.unfreeze()
    optimizer = make_optimizer(
        config.optimizer,
        generator.parameters(),
        config.learning_rate,
    )
    log = TrainingLog()
    for epoch in range(config.epochs):
        recon_sum = total_sum = 0.0
        for idx in _batches(n, config.batch_size, rng):
            x = _batch(generator, images[idx])
            out = generator.forward(x, rng=rng if generator.variational else None)
            recon = ops.mse(x, out.x_prime)
            total = recon
            if out.mu is not None and out.log_var is not None and config.kl_weight > 0:
                kl = kl_to_standard_normal(out.mu, out.log_var)
                total = ops.add(recon, ops.scale(kl, config.kl_weight))
            backward(total)
            optimizer.step()
            recon_sum += recon.item() * len(idx)
            total_sum += total.item() * len(idx)
        log.append(
            EpochRecord(
                epoch=epoch,
                phase=TrainingPhase.PRETRAIN,
                l_g=recon_sum / n,
                l_total=total_sum / n,
            ),
        )

    held_out = validation if validation is not None and len(validation) else images
    error = reconstruction_error(generator, held_out)
    log.metrics["reconstruction_mse"] = error
    log.flags["reconstruction_ok"] = error <= config.reconstruction_threshold
    if not log.flags["reconstruction_ok"]:
        log.warn(
            f"reconstruction mse {error:.4g} is above the threshold "
            f"{config.reconstruction_threshold:.4g}",
        )
    return log


def pretrain_classifier(  # noqa: PLR0913
    classifier: ClassifierModel,
    images: np.ndarray,
    labels: np.ndarray,
    *,
    config: PretrainConfig,
    target_class: int,
) -> TrainingLog:
    """Binary ``target_class``-vs-rest cross-entropy training on real data."""
    n = _require_samples(images, "classifier training set")
    binary = (np.asarray(labels).reshape(-1) == target_class).astype(np.float64)
    rng = make_rng(config.seed, "pretrain", "classifier")
    classifier.unfreeze()
    optimizer = make_optimizer(
        config.optimizer,
        classifier.parameters(),
        config.learning_rate,
    )
    log = TrainingLog()
    for epoch in range(config.epochs):
        loss_sum = acc_sum = 0.0
        for idx in _batches(n, config.batch_size, rng):
            loss, acc = _bce_step(classifier, images[idx], binary[idx], optimizer)
            loss_sum += loss * len(idx)
            acc_sum += acc * len(idx)
        log.append(
            EpochRecord(
                epoch=epoch,
                phase=TrainingPhase.CLASSIFIER,
                l_c=loss_sum / n,
                l_total=loss_sum / n,
                classifier_acc=acc_sum / n,
            ),
        )
    return log


def train_predictor(
    predictor: PredictorModel,
    images: np.ndarray,
    targets: np.ndarray,
    *,
    config: PretrainConfig,
) -> TrainingLog:
    """Squared-error fit of a surrogate controller; the result is frozen."""
    n = _require_samples(images, "predictor training set")
    goals = np.asarray(targets, dtype=np.float64).reshape(n, -1)
    if goals.shape[1] != predictor.output_dim:
        msg = (
            f"targets have {goals.shape[1]} components, "
            f"the predictor emits {predictor.output_dim}"
        )
        raise DimensionError(msg)
    rng = make_rng(config.seed, "pretrain", "predictor")
    predictor.unfreeze()
    optimizer = make_optimizer(
        config.optimizer,
        predictor.parameters(),
        config.learning_rate,
    )
    log = TrainingLog()
    for epoch in range(config.epochs):
        loss_sum = 0.0
        for idx in _batches(n, config.batch_size, rng):
            out = predictor(_batch(predictor, images[idx]))
            loss = ops.mse(out, Tensor(goals[idx], dtype=out.dtype))
            backward(loss)
            optimizer.step()
            loss_sum += loss.item() * len(idx)
        log.append(
            EpochRecord(
                epoch=epoch,
                phase=TrainingPhase.PREDICTOR,
                l_p=loss_sum / n,
                l_total=loss_sum / n,
            ),
        )
    predictor.freeze()
    return log


def predictor_mse(
    predictor: PredictorModel,
    images: np.ndarray,
    targets: np.ndarray,
) -> float:
    """Mean squared error of ``predictor`` on a labelled set."""
    n = _require_samples(images, "evaluation set")
    out = predictor.predict(images)
    return float(np.mean((out - np.asarray(targets).reshape(n, -1)) ** 2))


def train_membership_classifier(
    classifier: ClassifierModel,
    real_images: np.ndarray,
    generator: GeneratorModel,
    *,
    config: PretrainConfig,
) -> TrainingLog:
    """
    Real-vs-generated discriminator for a pre-trained VAE.

    Real images are labelled 1, decodes of prior draws ``z ~ N(0, I)`` are
    labelled 0. The generator is frozen for the whole run.
    """
    if not generator.variational:
        msg = "membership training samples the prior of a variational generator"
        raise UnsupportedOperationError(msg)
    n = _require_samples(real_images, "membership training set")
    rng = make_rng(config.seed, "pretrain", "membership")
    generator.freeze()
    classifier.unfreeze()
    optimizer = make_optimizer(
        config.optimizer,
        classifier.parameters(),
        config.learning_rate,
    )
    log = TrainingLog()
    for epoch in range(config.epochs):
        loss_sum = acc_sum = 0.0
        for idx in _batches(n, config.batch_size, rng):
            z = rng.standard_normal((len(idx), generator.latent_dim))
            with no_grad():
                fake = generator.decode_latent(Tensor(z, dtype=generator.dtype)).data
            loss, acc = _real_fake_step(classifier, real_images[idx], fake, optimizer)
            loss_sum += loss * len(idx)
            acc_sum += acc * len(idx)
        log.append(
            EpochRecord(
                epoch=epoch,
                phase=TrainingPhase.CLASSIFIER,
                l_c=loss_sum / n,
                l_total=loss_sum / n,
                classifier_acc=acc_sum / n,
            ),
        )
    return log


def _real_fake_step(
    classifier: ClassifierModel,
    real: np.ndarray,
    fake: np.ndarray,
    optimizer: Optimizer,
) -> tuple[float, float]:
    p_real = classifier(_batch(classifier, real))
    p_fake = classifier(_batch(classifier, fake))
    loss = ops.scale(
        ops.add(
            ops.bce(p_real, constant_like(p_real, 1.0)),
            ops.bce(p_fake, constant_like(p_fake, 0.0)),
        ),
        0.5,
    )
    backward(loss)
    optimizer.step()
    hits = np.sum(p_real.data > _DECISION) + np.sum(p_fake.data <= _DECISION)
    return loss.item(), float(hits) / (len(real) + len(fake))


# ----------------------------------------------------------------------------
# Adversarial cGen training
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CGenTrainingResult:
    """Trained generator and classifier with the run log."""

    generator: GeneratorModel
    classifier: ClassifierModel
    log: TrainingLog


class AdversarialTrainer:
    """Epoch alternation and freeze bookkeeping shared by both cGen modes."""

    def __init__(
        self,
        generator: GeneratorModel,
        classifier: ClassifierModel,
        *,
        config: TrainConfig,
        generator_pretrained: bool = True,
        classifier_pretrained: bool = True,
    ) -> None:
        """Set up one optimizer per side; missing pre-training is only flagged."""
        self.generator = generator
        self.classifier = classifier
        self.config = config
        self.rng = make_rng(config.seed, "cgen", config.weights.mode)
        self.log = TrainingLog()
        generator.unfreeze()
        classifier.unfreeze()
        self.generator_optimizer = make_optimizer(
            config.optimizer,
            generator.parameters(),
            config.generator_lr,
        )
        self.classifier_optimizer = make_optimizer(
            config.optimizer,
            classifier.parameters(),
            config.classifier_lr,
        )
        self.log.flags["generator_pretrained"] = generator_pretrained
        self.log.flags["classifier_pretrained"] = classifier_pretrained
        if not generator_pretrained:
            self.log.warn("generator was not pre-trained")
        if not classifier_pretrained:
            self.log.warn("classifier was not pre-trained")

    def phase(self, epoch: int) -> TrainingPhase:
        """Generator for the first ``k`` epochs of every ``k + 1`` cycle."""
        k = self.config.generator_epochs_per_round
        if epoch % (k + 1) < k:
            return TrainingPhase.GENERATOR
        return TrainingPhase.CLASSIFIER

    @contextmanager
    def only(self, train: Model, hold: Model) -> Iterator[None]:
        """Freeze ``hold`` for the block and check its weights stay put."""
        hold.freeze()
        train.unfreeze()
        before = hold.weights_hash()
        yield
        if hold.weights_hash() != before:
            msg = f"frozen {hold.kind} changed during a {train.kind} epoch"
            raise ModelNotFrozenError(msg)

    def generator_epoch(
        self,
        epoch: int,
        originals: np.ndarray,
        loss_fn: Callable[[Tensor, Tensor, np.ndarray], LossTerms],
    ) -> EpochRecord:
        """One pass over ``originals`` minimizing ``loss_fn``."""
        n = originals.shape[0]
        sums = {"l_g": 0.0, "l_c": 0.0, "l_p": 0.0, "l_total": 0.0}
        has_p = False
        with self.only(self.generator, self.classifier):
            for idx in _batches(n, self.config.batch_size, self.rng):
                x = _batch(self.generator, originals[idx])
                terms = loss_fn(x, self.generator(x), idx)
                if terms.total.entry is not None:
                    # all-zero weights leave nothing to descend on
                    backward(terms.total)
                    self.generator_optimizer.step()
                for name, value in terms.values().items():
                    sums[name] += value * len(idx)
                has_p = has_p or terms.l_p is not None
        return EpochRecord(
            epoch=epoch,
            phase=TrainingPhase.GENERATOR,
            l_g=sums["l_g"] / n,
            l_c=sums["l_c"] / n,
            l_p=sums["l_p"] / n if has_p else None,
            l_total=sums["l_total"] / n,
        )

    def classifier_epoch(
        self,
        epoch: int,
        real: np.ndarray,
        sources: np.ndarray,
    ) -> EpochRecord:
        """Cross-entropy on real images (1) against generator outputs (0)."""
        n_real, n_src = real.shape[0], sources.shape[0]
        loss_sum = acc_sum = 0.0
        with self.only(self.classifier, self.generator):
            src_order = self.rng.permutation(n_src)
            start = 0
            for idx in _batches(n_real, self.config.batch_size, self.rng):
                picks = src_order[np.arange(start, start + len(idx)) % n_src]
                start += len(idx)
                with no_grad():
                    fake = self.generator(_batch(self.generator, sources[picks])).data
                loss, acc = _real_fake_step(
                    self.classifier,
                    real[idx],
                    fake,
                    self.classifier_optimizer,
                )
                loss_sum += loss * len(idx)
                acc_sum += acc * len(idx)
        return EpochRecord(
            epoch=epoch,
            phase=TrainingPhase.CLASSIFIER,
            l_c=loss_sum / n_real,
            l_total=loss_sum / n_real,
            classifier_acc=acc_sum / n_real,
        )

    def run(
        self,
        originals: np.ndarray,
        real: np.ndarray,
        loss_fn: Callable[[Tensor, Tensor, np.ndarray], LossTerms],
    ) -> CGenTrainingResult:
        """Alternate for ``config.epochs`` epochs, then freeze both models."""
        _require_samples(originals, "counterfactual source set")
        _require_samples(real, "real image pool")
        for epoch in range(self.config.epochs):
            if self.phase(epoch) == TrainingPhase.GENERATOR:
                record = self.generator_epoch(epoch, originals, loss_fn)
            else:
                record = self.classifier_epoch(epoch, real, originals)
            self.log.append(record)
        self.generator.freeze()
        self.classifier.freeze()
        return CGenTrainingResult(self.generator, self.classifier, self.log)


def train_cgen_classification(  # noqa: PLR0913
    generator: GeneratorModel,
    classifier: ClassifierModel,
    originals: np.ndarray,
    target_images: np.ndarray,
    *,
    config: TrainConfig,
    generator_pretrained: bool = True,
    classifier_pretrained: bool = True,
) -> CGenTrainingResult:
    """
    Adversarial classification training.

    Args:
        generator: pre-trained generator mapping originals to counterfactuals.
        classifier: pre-trained ``t_c``-vs-rest classifier.
        originals: images whose class should flip to ``t_c``.
        target_images: real images of class ``t_c`` (the classifier's 1s).
        config: budget, learning rates and ``alpha``.
        generator_pretrained: recorded in the log when false.
        classifier_pretrained: recorded in the log when false.

    """
    if config.weights.mode != CGenMode.CLASSIFICATION:
        msg = "classification training needs classification weights"
        raise ConfigurationError(msg)
    alpha = config.weights.alpha
    t_c = config.target_class

    def loss_fn(x: Tensor, x_prime: Tensor, idx: np.ndarray) -> LossTerms:
        del idx
        return cgen_loss_classification(x, x_prime, classifier, t_c, alpha)

    trainer = AdversarialTrainer(
        generator,
        classifier,
        config=config,
        generator_pretrained=generator_pretrained,
        classifier_pretrained=classifier_pretrained,
    )
    return trainer.run(originals, target_images, loss_fn)


def train_cgen_regression(  # noqa: PLR0913
    generator: GeneratorModel,
    classifier: ClassifierModel,
    predictor: PredictorModel,
    originals: np.ndarray,
    goals: np.ndarray,
    real_images: np.ndarray,
    *,
    config: TrainConfig,
    generator_pretrained: bool = True,
    classifier_pretrained: bool = True,
) -> CGenTrainingResult:
    """
    Adversarial regression training against a frozen predictor.

    ``goals`` holds one ``m``-vector per original (or a single vector shared
    by all). ``real_images`` are the predictor's training images, the pool
    the classifier learns to call real.
    """
    if config.weights.mode != CGenMode.REGRESSION:
        msg = "regression training needs regression weights"
        raise ConfigurationError(msg)
    require_frozen(predictor, "predictor")
    n = _require_samples(originals, "counterfactual source set")
    targets = np.asarray(goals, dtype=np.float64)
    if targets.ndim == 1:
        targets = np.broadcast_to(targets, (n, targets.shape[0]))
    if targets.shape != (n, predictor.output_dim):
        msg = (
            f"goals of shape {targets.shape} do not match {n} originals "
            f"and a {predictor.output_dim}-output predictor"
        )
        raise DimensionError(msg)
    before = predictor.weights_hash()
    weights = config.weights

    def loss_fn(x: Tensor, x_prime: Tensor, idx: np.ndarray) -> LossTerms:
        return cgen_loss_regression(
            x,
            x_prime,
            classifier,
            predictor,
            targets[idx],
            weights,
        )

    trainer = AdversarialTrainer(
        generator,
        classifier,
        config=config,
        generator_pretrained=generator_pretrained,
        classifier_pretrained=classifier_pretrained,
    )
    result = trainer.run(originals, real_images, loss_fn)
    if predictor.weights_hash() != before:
        msg = "predictor weights changed during cGen training"
        raise ModelNotFrozenError(msg)
    result.log.flags["predictor_unchanged"] = True
    return result
