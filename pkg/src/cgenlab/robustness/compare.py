"""
Counterfactual-loss comparison of controllers.

Every (controller, scenario, goal) cell runs an independent latent search on
the shared generator and membership classifier, with the controller as the
frozen predictor and the straight trajectory at the goal angle as target.
Cells run on a thread pool; a cell that raises is kept as a failure with its
reason. The noise probe runs once per (controller, scenario), with the same
noise draws for every controller.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

import numpy as np

from cgenlab.cgen.latent_search import latent_counterfactual_search
from cgenlab.cgen.losses import require_frozen
from cgenlab.envs.nav import goal_from_angle
from cgenlab.errors import (
    CGenError,
    ConfigurationError,
    DimensionError,
    ModelNotFrozenError,
)
from cgenlab.robustness.noise_probe import noise_probe
from cgenlab.robustness.report import CellResult, RobustnessReport, ScenarioInfo
from cgenlab.schemas.robustness.probe import NoiseProbeConfig
from cgenlab.schemas.training.cgen import CGenWeights, LatentSearchConfig

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from cgenlab.envs.datasets import LoadedDataset
    from cgenlab.nn.models import ClassifierModel, GeneratorModel, PredictorModel

logger = logging.getLogger(__name__)


def _cell(  # noqa: PLR0913
    tag: str,
    controller: PredictorModel,
    scenario: ScenarioInfo,
    image: np.ndarray,
    goal_deg: float,
    *,
    generator: GeneratorModel,
    classifier: ClassifierModel,
    weights: CGenWeights,
    search: LatentSearchConfig,
) -> CellResult:
    try:
        result = latent_counterfactual_search(
            generator,
            classifier,
            image,
            weights,
            config=search,
            predictor=controller,
            t_r=goal_from_angle(goal_deg),
        )
    except (CGenError, ValueError, FloatingPointError) as exc:
        logger.warning(
            "cell %s/%d/%+.0f failed: %s",
            tag,
            scenario.scenario_id,
            goal_deg,
            exc,
        )
        return CellResult(
            controller=tag,
            scenario_id=scenario.scenario_id,
            goal_deg=goal_deg,
            failure=f"{type(exc).__name__}: {exc}",
        )
    return CellResult(
        controller=tag,
        scenario_id=scenario.scenario_id,
        goal_deg=goal_deg,
        losses=dict(result.losses),
        iterations=result.iterations,
        converged=result.converged,
    )


def robustness_compare(  # noqa: PLR0913
    controllers: Mapping[str, PredictorModel],
    scenarios: Sequence[ScenarioInfo],
    images: np.ndarray,
    goals_deg: Sequence[float],
    *,
    generator: GeneratorModel,
    classifier: ClassifierModel,
    weights: CGenWeights | None = None,
    search: LatentSearchConfig | None = None,
    probe: NoiseProbeConfig | None = None,
    workers: int = 1,
) -> RobustnessReport:
    """
    Fill the comparison grid and reduce it into a report.

    Args:
        controllers: frozen controllers by tag, in the order the ordering
            verdict checks (richest demonstrations first).
        scenarios: metadata of each scenario image.
        images: one ``C×H×W`` image per scenario.
        goals_deg: goal angles of the grid.
        generator: shared frozen variational generator.
        classifier: frozen membership classifier of the regression loss.
        weights: regression weights of the search.
        search: step budget of each latent search.
        probe: noise probe settings.
        workers: threads evaluating cells.

    Raises:
        ModelNotFrozenError: a controller is trainable or its weights changed
            during the comparison.

    """
    weights = weights or CGenWeights.regression()
    search = search or LatentSearchConfig()
    probe = probe or NoiseProbeConfig()
    if len(images) != len(scenarios):
        msg = f"{len(images)} scenario images for {len(scenarios)} scenarios"
        raise DimensionError(msg)
    for tag, controller in controllers.items():
        require_frozen(controller, f"controller {tag}")
    before = {tag: c.weights_hash() for tag, c in controllers.items()}

    jobs = [
        (tag, controller, scenario, images[i], float(goal))
        for tag, controller in controllers.items()
        for i, scenario in enumerate(scenarios)
        for goal in goals_deg
    ]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        cells = list(
            pool.map(
                lambda job: _cell(
                    *job,
                    generator=generator,
                    classifier=classifier,
                    weights=weights,
                    search=search,
                ),
                jobs,
            ),
        )

    limits: dict[str, dict[int, float]] = {}
    for tag, controller in controllers.items():
        limits[tag] = {
            s.scenario_id: noise_probe(controller, images[i], probe, key=s.scenario_id)
            for i, s in enumerate(scenarios)
        }

    after = {tag: c.weights_hash() for tag, c in controllers.items()}
    changed = sorted(tag for tag in controllers if before[tag] != after[tag])
    if changed:
        msg = f"controllers changed during the comparison: {', '.join(changed)}"
        raise ModelNotFrozenError(msg)

    failures = [c for c in cells if not c.ok]
    warnings: list[str] = []
    if failures:
        message = f"{len(failures)} of {len(cells)} grid cells failed"
        warnings.append(message)
        logger.warning(message)
    return RobustnessReport(
        controllers=list(controllers),
        scenarios=scenarios,
        goals_deg=goals_deg,
        cells=cells,
        noise_limits=limits,
        warnings=warnings,
    )


def select_scenarios(
    dataset: LoadedDataset,
    count: int,
) -> tuple[list[ScenarioInfo], np.ndarray]:
    """The first ``count`` samples of a scenario set, in manifest order."""
    if count > len(dataset):
        msg = f"{count} scenarios requested, the set holds {len(dataset)}"
        raise ConfigurationError(msg)
    entries = dataset.manifest.entries[:count]
    infos = [
        ScenarioInfo(scenario_id=i, has_barrier=e.has_barrier, source=e.file)
        for i, e in enumerate(entries)
    ]
    return infos, dataset.images[:count]
