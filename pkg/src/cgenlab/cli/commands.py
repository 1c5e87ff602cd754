"""
Sub-command bodies of the ``cgen`` command line.

Each command receives the validated run config and the runtime settings,
writes its artifacts plus ``resolved_config.yaml`` into the output
directory and returns an exit code. Failures are raised as ``CGenError``
subclasses; ``cgenlab.cli.main`` maps them onto exit codes.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, TypeVar

import numpy as np

from cgenlab.autodiff.rng import derive_seed
from cgenlab.autodiff.tensor import Tensor, no_grad
from cgenlab.cgen.evaluation import (
    evaluate_classification,
    forward_counterfactuals,
    reexecute_stones,
)
from cgenlab.cgen.explain import counterfactual_diff, denoise
from cgenlab.cgen.latent_search import latent_counterfactual_search
from cgenlab.cgen.losses import cgen_loss
from cgenlab.cgen.results import CounterfactualResult, save_result
from cgenlab.cgen.training import (
    TrainingLog,
    predictor_mse,
    pretrain_classifier,
    pretrain_generator,
    train_cgen_classification,
    train_cgen_regression,
    train_membership_classifier,
    train_predictor,
)
from cgenlab.cli.config_loader import load_run_config, write_resolved_config
from cgenlab.config.constants import (
    ArtifactName,
    CGenMode,
    DatasetSplit,
    EnvName,
    ExitCode,
    GoalKind,
    PretrainRole,
    RobustnessDefaults,
)
from cgenlab.envs.datasets import generate_dataset, load_dataset, write_dataset
from cgenlab.envs.nav import goal_from_angle
from cgenlab.errors import (
    ConfigurationError,
    MissingPrerequisiteError,
    UnsupportedOperationError,
)
from cgenlab.io.pgm import read_pgm
from cgenlab.io.records import write_yaml
from cgenlab.nn.architectures import build_classifier, build_generator, build_predictor
from cgenlab.nn.checkpoint import load_checkpoint, save_checkpoint
from cgenlab.nn.models import ClassifierModel, GeneratorModel, Model, PredictorModel
from cgenlab.robustness.compare import robustness_compare, select_scenarios
from cgenlab.robustness.controllers import (
    load_controllers,
    save_family,
    train_controller_family,
)
from cgenlab.robustness.report import write_report
from cgenlab.schemas.training.cgen import CGenWeights

if TYPE_CHECKING:
    from collections.abc import Sequence

    from cgenlab.envs.datasets import LoadedDataset
    from cgenlab.schemas.payload import RunConfig
    from cgenlab.schemas.settings.runtime import CgenSettings

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=Model)


# ----------------------------------------------------------------------------
# Shared helpers
# ----------------------------------------------------------------------------


def out_dir(config: RunConfig) -> Path:
    """Configured output directory, created on demand."""
    if config.paths.out is None:
        msg = "no output directory given (--out or paths.out)"
        raise ConfigurationError(msg)
    target = Path(config.paths.out)
    target.mkdir(parents=True, exist_ok=True)
    return target


def require_path(value: str | None, key: str) -> Path:
    """Existing path configured under ``key``."""
    if value is None:
        msg = f"{key} is not set; run the stage that produces it first"
        raise MissingPrerequisiteError(msg)
    path = Path(value)
    if not path.exists():
        msg = f"{key} not found: {path}"
        raise MissingPrerequisiteError(msg)
    return path


def load_role(path: Path, role: type[M]) -> M:
    """Checkpoint at ``path``, checked to hold a ``role`` model."""
    model = load_checkpoint(path)
    if not isinstance(model, role):
        msg = f"{path} holds a {model.kind}, expected a {role.kind}"
        raise UnsupportedOperationError(msg)
    return model


def _first_label(dataset: LoadedDataset) -> np.ndarray:
    return dataset.labels[:, 0]


def _init_seed(config: RunConfig, role: str) -> int:
    return derive_seed(config.pretrain.seed, "init", role) & 0x7FFFFFFF


# ----------------------------------------------------------------------------
# gen-data
# ----------------------------------------------------------------------------


def gen_data(config: RunConfig, settings: CgenSettings) -> int:
    """Render a dataset directory."""
    target = out_dir(config)
    data = config.data
    dataset = generate_dataset(
        data.env,
        data.count,
        config.seed,
        complexity=data.complexity,
        delta=data.delta,
        augment=data.augment,
        validation_fraction=data.validation_fraction,
        workers=settings.workers,
    )
    write_dataset(dataset, target)
    write_resolved_config(config, target)
    return ExitCode.OK


# ----------------------------------------------------------------------------
# pretrain / train-predictor / train-controllers
# ----------------------------------------------------------------------------


def _autoencoder(
    config: RunConfig,
    size: int,
    *,
    variational: bool,
    role: str,
) -> GeneratorModel:
    return build_generator(
        size,
        variational=variational,
        latent_dim=config.model.latent_dim,
        code_dim=config.model.code_dim,
        base_channels=config.model.base_channels,
        seed=_init_seed(config, role),
    )


def _classifier(config: RunConfig, size: int, role: str) -> ClassifierModel:
    return build_classifier(
        size,
        base_channels=config.model.base_channels,
        hidden_units=config.model.hidden_units,
        seed=_init_seed(config, role),
    )


def pretrain(role: PretrainRole, config: RunConfig, settings: CgenSettings) -> int:
    """
    Pre-train one network on the dataset under ``paths.data``.

    ``generator`` reconstructs the source class of a classification set (all
    samples otherwise); ``vae`` trains a variational generator on every
    sample plus the real-vs-generated membership classifier used by latent
    search; ``denoiser`` is a plain autoencoder of real images;
    ``classifier`` is the target-class-vs-rest discriminator.
    """
    del settings
    target = out_dir(config)
    dataset = load_dataset(require_path(config.paths.data, "paths.data"))
    train = dataset.split(DatasetSplit.TRAIN)
    held = dataset.split(DatasetSplit.VALIDATION)
    size = int(train.images.shape[-1])
    is_shapes = dataset.manifest.generator == EnvName.SHAPES
    t_c = config.training.target_class
    pre = config.pretrain

    log: TrainingLog
    match role:
        case PretrainRole.GENERATOR | PretrainRole.DENOISER:
            images, validation = train.images, held.images
            if role == PretrainRole.GENERATOR and is_shapes:
                images = train.images[_first_label(train) != t_c]
                validation = held.images[_first_label(held) != t_c]
            variational = config.model.variational and role == PretrainRole.GENERATOR
            model = _autoencoder(config, size, variational=variational, role=role)
            log = pretrain_generator(model, images, config=pre, validation=validation)
            model.freeze()
            name = (
                ArtifactName.GENERATOR
                if role == PretrainRole.GENERATOR
                else ArtifactName.DENOISER
            )
            save_checkpoint(model, target / name)
        case PretrainRole.VAE:
            vae = _autoencoder(config, size, variational=True, role=role)
            log = pretrain_generator(
                vae,
                train.images,
                config=pre,
                validation=held.images,
            )
            vae.freeze()
            membership = _classifier(config, size, "membership")
            log.extend(
                train_membership_classifier(
                    membership,
                    train.images,
                    vae,
                    config=pre,
                ),
            )
            save_checkpoint(vae, target / ArtifactName.VAE)
            save_checkpoint(membership, target / ArtifactName.MEMBERSHIP)
        case PretrainRole.CLASSIFIER:
            classifier = _classifier(config, size, role)
            log = pretrain_classifier(
                classifier,
                train.images,
                _first_label(train),
                config=pre,
                target_class=t_c,
            )
            classifier.freeze()
            save_checkpoint(classifier, target / ArtifactName.CLASSIFIER)

    log.write_csv(target / ArtifactName.TRAINING_LOG)
    write_resolved_config(config, target)
    return ExitCode.OK


def train_predictor_cmd(config: RunConfig, settings: CgenSettings) -> int:
    """Fit a surrogate controller to the labels of ``paths.data``."""
    del settings
    target = out_dir(config)
    dataset = load_dataset(require_path(config.paths.data, "paths.data"))
    train = dataset.split(DatasetSplit.TRAIN)
    held = dataset.split(DatasetSplit.VALIDATION)
    predictor = build_predictor(
        int(train.images.shape[-1]),
        int(train.labels.shape[1]),
        base_channels=config.model.base_channels,
        hidden_units=config.model.hidden_units,
        seed=_init_seed(config, "predictor"),
    )
    log = train_predictor(predictor, train.images, train.labels, config=config.pretrain)
    if len(held):
        log.metrics["validation_mse"] = predictor_mse(
            predictor,
            held.images,
            held.labels,
        )
    save_checkpoint(predictor, target / ArtifactName.PREDICTOR)
    log.write_csv(target / ArtifactName.TRAINING_LOG)
    write_yaml(target / ArtifactName.EVALUATION, {"metrics": log.metrics})
    write_resolved_config(config, target)
    return ExitCode.OK


def train_controllers(
    dataset_dirs: Sequence[str],
    config: RunConfig,
    settings: CgenSettings,
) -> int:
    """Train the controller family, one controller per dataset directory."""
    del settings
    target = out_dir(config)
    tags = RobustnessDefaults.CONTROLLER_TAGS
    if not dataset_dirs or len(dataset_dirs) > len(tags):
        msg = f"train-controllers takes 1 to {len(tags)} dataset directories"
        raise ConfigurationError(msg)
    datasets = {
        tag: load_dataset(require_path(path, f"dataset {tag}"))
        for tag, path in zip(tags, dataset_dirs, strict=False)
    }
    family = train_controller_family(
        datasets,
        model=config.model,
        config=config.pretrain,
        seed=_init_seed(config, "controllers"),
    )
    save_family(family, target)
    for tag, log in family.logs.items():
        log.write_csv(target / f"training_log_{tag}.csv")
    write_yaml(
        target / ArtifactName.SUMMARY,
        {
            "controllers": list(family.controllers),
            "datasets": dict(zip(tags, dataset_dirs, strict=False)),
            "validation_mse": family.validation_mse,
            "weights_hash": family.hashes(),
            "distinct_weights": family.distinct,
            "warnings": family.warnings,
        },
    )
    write_resolved_config(config, target)
    return ExitCode.OK


# ----------------------------------------------------------------------------
# train-cgen
# ----------------------------------------------------------------------------


def _regression_goal(config: RunConfig, width: int) -> np.ndarray:
    goal = config.training.goal
    if goal is None:
        return np.zeros(width)
    if len(goal) != width:
        msg = f"training.goal has {len(goal)} values, the predictor emits {width}"
        raise ConfigurationError(msg)
    return np.asarray(goal, dtype=np.float64)


def _train_classification(
    config: RunConfig,
    generator: GeneratorModel,
    classifier: ClassifierModel,
    pretrained: bool,  # noqa: FBT001
    dataset: LoadedDataset,
    denoiser: GeneratorModel | None,
) -> tuple[TrainingLog, dict[str, Any]]:
    t_c = config.training.target_class
    train = dataset.split(DatasetSplit.TRAIN)
    held = dataset.split(DatasetSplit.VALIDATION)
    labels = _first_label(train)
    run = train_cgen_classification(
        generator,
        classifier,
        train.images[labels != t_c],
        train.images[labels == t_c],
        config=config.training,
        classifier_pretrained=pretrained,
    )
    held_labels = _first_label(held)
    # the baseline needs both classes among the scored images
    pool = held if np.any(held_labels == t_c) and np.any(held_labels != t_c) else train
    held_labels = _first_label(pool)
    originals = pool.images[held_labels != t_c]
    produced = forward_counterfactuals(run.generator, originals)
    if denoiser is not None:
        produced = denoise(produced, denoiser)
    summary = evaluate_classification(
        run.generator,
        run.classifier,
        originals,
        pool.images[held_labels == t_c],
        seed=config.training.seed,
        counterfactuals=produced,
    )
    return run.log, {
        "count": summary.count,
        "success_rate": summary.success_rate,
        "mean_l_g": summary.mean_l_g,
        "mean_l_c": summary.mean_l_c,
        "baseline_l_g": summary.baseline_l_g,
        "closer_than_baseline": summary.closer_than_baseline,
    }


def _train_regression(  # noqa: PLR0913
    config: RunConfig,
    generator: GeneratorModel,
    classifier: ClassifierModel,
    pretrained: bool,  # noqa: FBT001
    dataset: LoadedDataset,
    predictor: PredictorModel,
    denoiser: GeneratorModel | None,
) -> tuple[TrainingLog, dict[str, Any]]:
    train = dataset.split(DatasetSplit.TRAIN)
    held = dataset.split(DatasetSplit.VALIDATION)
    stones = dataset.manifest.generator == EnvName.STONES
    goal = _regression_goal(config, predictor.output_dim)

    def sources(part: LoadedDataset) -> np.ndarray:
        # stepping-stones counterfactuals start from failed scenes
        return part.images[_first_label(part) > 0.0] if stones else part.images

    if config.paths.real_data is not None:
        real = load_dataset(require_path(config.paths.real_data, "paths.real_data"))
        real_images = real.split(DatasetSplit.TRAIN).images
    else:
        real_images = train.images
    run = train_cgen_regression(
        generator,
        classifier,
        predictor,
        sources(train),
        goal,
        real_images,
        config=config.training,
        classifier_pretrained=pretrained,
    )
    originals = sources(held) if len(sources(held)) else sources(train)
    produced = forward_counterfactuals(run.generator, originals)
    if denoiser is not None:
        produced = denoise(produced, denoiser)
    evaluation: dict[str, Any] = {"count": len(originals)}
    if stones:
        delta = float(dataset.manifest.params.get("delta", config.data.delta))
        outcome = reexecute_stones(
            originals,
            produced,
            predictor=predictor,
            goal=float(goal[0]),
            delta=delta,
        )
        evaluation |= {
            "oracle_success_rate": outcome.success_rate,
            "l_p_improvement_rate": outcome.improvement_rate,
            "median_l_p_improved": outcome.median_improved,
            "extraction_failures": len(outcome.failures),
        }
    else:
        before = np.mean((predictor.predict(originals) - goal) ** 2, axis=1)
        after = np.mean((predictor.predict(produced) - goal) ** 2, axis=1)
        evaluation |= {
            "l_p_improvement_rate": float(np.mean(after < before)),
            "median_l_p_original": float(np.median(before)),
            "median_l_p_counterfactual": float(np.median(after)),
        }
    return run.log, evaluation


def train_cgen(config: RunConfig, settings: CgenSettings) -> int:
    """Adversarial cGen training in the mode of ``training.weights``."""
    del settings
    target = out_dir(config)
    generator = load_role(
        require_path(config.paths.generator, "paths.generator"),
        GeneratorModel,
    )
    dataset = load_dataset(require_path(config.paths.data, "paths.data"))
    size = int(dataset.images.shape[-1])
    if config.paths.classifier is not None:
        classifier = load_role(
            require_path(config.paths.classifier, "paths.classifier"),
            ClassifierModel,
        )
        pretrained = True
    else:
        logger.info("paths.classifier unset; starting from an untrained classifier")
        classifier = _classifier(config, size, "classifier")
        pretrained = False
    denoiser = None
    if config.training.denoise:
        denoiser = load_role(
            require_path(config.paths.denoiser, "paths.denoiser"),
            GeneratorModel,
        )
        denoiser.freeze()

    if config.training.weights.mode == CGenMode.CLASSIFICATION:
        log, evaluation = _train_classification(
            config,
            generator,
            classifier,
            pretrained,
            dataset,
            denoiser,
        )
    else:
        predictor = load_role(
            require_path(config.paths.predictor, "paths.predictor"),
            PredictorModel,
        )
        predictor.freeze()
        log, evaluation = _train_regression(
            config,
            generator,
            classifier,
            pretrained,
            dataset,
            predictor,
            denoiser,
        )
        save_checkpoint(predictor, target / ArtifactName.PREDICTOR)

    save_checkpoint(generator, target / ArtifactName.GENERATOR)
    save_checkpoint(classifier, target / ArtifactName.CLASSIFIER)
    if denoiser is not None:
        save_checkpoint(denoiser, target / ArtifactName.DENOISER)
    log.write_csv(target / ArtifactName.TRAINING_LOG)
    write_yaml(
        target / ArtifactName.EVALUATION,
        {
            "mode": config.training.weights.mode.value,
            "evaluation": evaluation,
            "flags": log.flags,
            "metrics": log.metrics,
            "warnings": log.warnings,
        },
    )
    write_resolved_config(config, target)
    return ExitCode.OK


# ----------------------------------------------------------------------------
# counterfactual
# ----------------------------------------------------------------------------


def parse_goal(spec: str) -> tuple[GoalKind, np.ndarray]:
    """``class:1``, ``angle:15`` or ``vector:v1,...,vm``."""
    prefix, sep, body = spec.partition(":")
    try:
        kind = GoalKind(prefix.strip())
    except ValueError as exc:
        allowed = ", ".join(f"{k.value}:" for k in GoalKind)
        msg = f"goal '{spec}' must start with one of {allowed}"
        raise ConfigurationError(msg) from exc
    if not sep or not body.strip():
        msg = f"goal '{spec}' has no value"
        raise ConfigurationError(msg)
    try:
        values = np.array([float(v) for v in body.split(",")], dtype=np.float64)
    except ValueError as exc:
        msg = f"goal '{spec}' holds a non-numeric value"
        raise ConfigurationError(msg) from exc
    match kind:
        case GoalKind.CLASS:
            if values.size != 1 or values[0] not in (0.0, 1.0):
                msg = f"class goal must be 0 or 1, got '{body}'"
                raise ConfigurationError(msg)
        case GoalKind.ANGLE:
            if values.size != 1:
                msg = f"angle goal takes one value, got '{body}'"
                raise ConfigurationError(msg)
            values = goal_from_angle(float(values[0]))
        case GoalKind.VECTOR:
            pass
    return kind, values


def _trained_class(root: Path) -> int:
    """``training.target_class`` the model directory was trained towards."""
    resolved = root / ArtifactName.RESOLVED_CONFIG
    require_path(str(resolved), "model config")
    return load_run_config(resolved).training.target_class


def _weights_for(config: RunConfig, mode: CGenMode) -> CGenWeights:
    weights = config.training.weights
    if weights.mode == mode:
        return weights
    if mode == CGenMode.CLASSIFICATION:
        return CGenWeights.classification()
    return CGenWeights.regression()


def counterfactual(  # noqa: PLR0913
    model_dir: str,
    input_path: str,
    goal_spec: str,
    config: RunConfig,
    settings: CgenSettings,
    *,
    latent: bool,
) -> int:
    """Counterfactual of one PGM image under a trained model directory."""
    del settings
    target = out_dir(config)
    root = Path(model_dir)
    if not root.is_dir():
        msg = f"model directory not found: {root}"
        raise MissingPrerequisiteError(msg)
    kind, goal = parse_goal(goal_spec)
    predictor_file = root / ArtifactName.PREDICTOR
    mode = CGenMode.REGRESSION if predictor_file.is_file() else CGenMode.CLASSIFICATION
    if (kind == GoalKind.CLASS) != (mode == CGenMode.CLASSIFICATION):
        msg = f"a {kind.value} goal does not fit the {mode.value} model in {root}"
        raise ConfigurationError(msg)

    predictor: PredictorModel | None = None
    t_r: np.ndarray | None = None
    t_c = 1
    if mode == CGenMode.REGRESSION:
        predictor = load_role(predictor_file, PredictorModel)
        predictor.freeze()
        if goal.size != predictor.output_dim:
            width = predictor.output_dim
            msg = f"goal has {goal.size} values, the predictor emits {width}"
            raise ConfigurationError(msg)
        t_r = goal
    else:
        t_c = int(goal[0])
        trained = _trained_class(root)
        if t_c != trained:
            msg = f"{root} was trained towards class {trained}, not class {t_c}"
            raise ConfigurationError(msg)
    weights = _weights_for(config, mode)

    generator_file = root / (ArtifactName.VAE if latent else ArtifactName.GENERATOR)
    generator = load_role(
        require_path(str(generator_file), "generator"),
        GeneratorModel,
    )
    classifier_file = root / ArtifactName.CLASSIFIER
    if latent and (root / ArtifactName.MEMBERSHIP).is_file():
        classifier_file = root / ArtifactName.MEMBERSHIP
    classifier = load_role(
        require_path(str(classifier_file), "classifier"),
        ClassifierModel,
    )
    for model in (generator, classifier):
        model.freeze()

    image = read_pgm(input_path)[None].astype(generator.dtype)
    if image.shape != generator.input_shape:
        msg = f"input image {image.shape[1:]} does not fit {generator.input_shape[1:]}"
        raise ConfigurationError(msg)

    if latent:
        result = latent_counterfactual_search(
            generator,
            classifier,
            image,
            weights,
            config=config.search,
            predictor=predictor,
            t_r=t_r,
            t_c=t_c,
        )
    else:
        produced = generator.reconstruct(image[None])
        denoiser_file = root / ArtifactName.DENOISER
        if denoiser_file.is_file():
            denoiser = load_role(denoiser_file, GeneratorModel)
            denoiser.freeze()
            produced = denoise(produced, denoiser)
        with no_grad():
            terms = cgen_loss(
                Tensor(image[None], dtype=generator.dtype),
                Tensor(produced, dtype=generator.dtype),
                classifier,
                weights,
                predictor=predictor,
                t_r=t_r,
                t_c=t_c,
            )
        result = CounterfactualResult(
            original=image,
            counterfactual=produced[0],
            losses=terms.values(),
            weights=weights,
            classifier_prob=float(classifier.predict(produced)[0, 0]),
            prediction=None if predictor is None else predictor.predict(produced)[0],
            goal=t_r,
        )

    explanation = counterfactual_diff(result.original, result.counterfactual)
    save_result(
        result,
        target,
        extra={
            "mode": mode.value,
            "goal_spec": goal_spec,
            "latent": latent,
            "changed_regions": [
                {
                    "row": r.row,
                    "col": r.col,
                    "pixels": r.pixels,
                    "mean_change": r.mean_change,
                }
                for r in explanation.regions
            ],
        },
    )
    write_resolved_config(config, target)
    return ExitCode.OK


# ----------------------------------------------------------------------------
# robustness
# ----------------------------------------------------------------------------


def robustness(config: RunConfig, settings: CgenSettings) -> int:
    """Compare the configured controllers over the scenario grid."""
    target = out_dir(config)
    if not config.paths.controllers:
        msg = "no controllers given (--controllers or paths.controllers)"
        raise MissingPrerequisiteError(msg)
    controllers = load_controllers(config.paths.controllers)
    generator = load_role(require_path(config.paths.vae, "paths.vae"), GeneratorModel)
    classifier = load_role(
        require_path(config.paths.classifier, "paths.classifier"),
        ClassifierModel,
    )
    for model in (generator, classifier):
        model.freeze()
    dataset = load_dataset(require_path(config.paths.scenarios, "paths.scenarios"))
    infos, images = select_scenarios(dataset, config.robustness.scenarios)
    report = robustness_compare(
        controllers,
        infos,
        images,
        config.robustness.goals_deg,
        generator=generator,
        classifier=classifier,
        weights=_weights_for(config, CGenMode.REGRESSION),
        search=config.search,
        probe=config.probe,
        workers=settings.workers,
    )
    write_report(report, target)
    write_resolved_config(config, target)
    return ExitCode.OK
