"""
Robustness report: grid cells, aggregates, verdicts and their files.

The report is a reduction over the (controller, scenario, goal) grid. Failed
cells stay in the grid with a reason; aggregates skip them. Means over goals
(per scenario) and over scenarios (per goal) are both kept, together with
the barrier-only comparison and the spread of the noise limits.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from cgenlab.config.constants import (
    ArtifactName,
    ReportColumn,
    RobustnessDefaults,
    Verdict,
)
from cgenlab.io.pgm import MAXVAL, write_pgm
from cgenlab.io.records import format_cell, write_csv, write_yaml

if TYPE_CHECKING:
    from collections.abc import Iterator, Mapping, Sequence

logger = logging.getLogger(__name__)

_LOSS_COLUMNS = (
    ReportColumn.L_G,
    ReportColumn.L_C,
    ReportColumn.L_P,
    ReportColumn.L_TOTAL,
)

# Gray level of a cell with no value in the heat image; real cells start one
# PGM step above it.
_GAP_LEVEL = 0.0
_VALUE_FLOOR = 1.0 / MAXVAL


@dataclass(frozen=True)
class ScenarioInfo:
    """Scenario metadata carried into the report."""

    scenario_id: int
    has_barrier: bool = False
    source: str | None = None


@dataclass(frozen=True)
class CellResult:
    """Losses of one (controller, scenario, goal) search, or why it failed."""

    controller: str
    scenario_id: int
    goal_deg: float
    losses: Mapping[str, float] | None = None
    failure: str | None = None
    iterations: int = 0
    converged: bool = False

    @property
    def ok(self) -> bool:
        """The search produced losses."""
        return self.losses is not None and self.failure is None

    def value(self, column: ReportColumn | str) -> float:
        """One loss, ``NaN`` for failed cells or absent terms."""
        if self.losses is None:
            return math.nan
        return float(self.losses.get(str(column), math.nan))


class RobustnessReport:
    """Counterfactual losses and noise limits over the comparison grid."""

    def __init__(  # noqa: PLR0913
        self,
        *,
        controllers: Sequence[str],
        scenarios: Sequence[ScenarioInfo],
        goals_deg: Sequence[float],
        cells: Sequence[CellResult],
        noise_limits: Mapping[str, Mapping[int, float]] | None = None,
        warnings: Sequence[str] = (),
        noise_factor: float = RobustnessDefaults.NOISE_FACTOR,
    ) -> None:
        """Index the cells; the grid is defined by the three axes given."""
        self.controllers = list(controllers)
        self.scenarios = list(scenarios)
        self.goals_deg = [float(g) for g in goals_deg]
        self.noise_limits = {
            tag: dict(limits) for tag, limits in (noise_limits or {}).items()
        }
        self.warnings = list(warnings)
        self.noise_factor = noise_factor
        self._cells = {
            (c.controller, c.scenario_id, float(c.goal_deg)): c for c in cells
        }

    # ─────────────────────────────────────────────
    # Grid access
    # ─────────────────────────────────────────────
    def grid(self) -> Iterator[tuple[str, ScenarioInfo, float]]:
        """Every grid position in controller, scenario, goal order."""
        for tag in self.controllers:
            for scenario in self.scenarios:
                for goal in self.goals_deg:
                    yield tag, scenario, goal

    def cell(self, controller: str, scenario_id: int, goal_deg: float) -> CellResult:
        """Recorded cell, or a failed placeholder when nothing was recorded."""
        found = self._cells.get((controller, scenario_id, float(goal_deg)))
        if found is not None:
            return found
        return CellResult(
            controller=controller,
            scenario_id=scenario_id,
            goal_deg=float(goal_deg),
            failure="no result recorded",
        )

    def cells(self) -> list[CellResult]:
        """All grid cells in grid order."""
        return [self.cell(t, s.scenario_id, g) for t, s, g in self.grid()]

    def failed_cells(self) -> list[CellResult]:
        """Cells without losses."""
        return [c for c in self.cells() if not c.ok]

    @property
    def complete(self) -> bool:
        """Every grid cell carries losses."""
        return not self.failed_cells()

    # ─────────────────────────────────────────────
    # Aggregates
    # ─────────────────────────────────────────────
    def _values(
        self,
        controller: str,
        column: ReportColumn | str,
        *,
        barrier: bool | None = None,
        scenario_id: int | None = None,
        goal_deg: float | None = None,
    ) -> np.ndarray:
        values = [
            self.cell(tag, s.scenario_id, g).value(column)
            for tag, s, g in self.grid()
            if tag == controller
            and (barrier is None or s.has_barrier == barrier)
            and (scenario_id is None or s.scenario_id == scenario_id)
            and (goal_deg is None or g == goal_deg)
        ]
        arr = np.array(values, dtype=np.float64)
        return arr[~np.isnan(arr)]

    def mean_loss(
        self,
        controller: str,
        column: ReportColumn | str = ReportColumn.L_TOTAL,
        *,
        barrier: bool | None = None,
    ) -> float:
        """Mean of one loss over the successful cells of ``controller``."""
        values = self._values(controller, column, barrier=barrier)
        return float(np.mean(values)) if values.size else math.nan

    def mean_over_goals(
        self,
        controller: str,
        column: ReportColumn | str = ReportColumn.L_TOTAL,
    ) -> dict[int, float]:
        """Per-scenario mean over the goals."""
        out: dict[int, float] = {}
        for scenario in self.scenarios:
            v = self._values(controller, column, scenario_id=scenario.scenario_id)
            out[scenario.scenario_id] = float(np.mean(v)) if v.size else math.nan
        return out

    def mean_over_scenarios(
        self,
        controller: str,
        column: ReportColumn | str = ReportColumn.L_TOTAL,
    ) -> dict[float, float]:
        """Per-goal mean over the scenarios."""
        out: dict[float, float] = {}
        for goal in self.goals_deg:
            v = self._values(controller, column, goal_deg=goal)
            out[goal] = float(np.mean(v)) if v.size else math.nan
        return out

    def eta_star(self, controller: str, scenario_id: int) -> float:
        """Noise limit of ``controller`` on one scenario, ``NaN`` if unprobed."""
        return self.noise_limits.get(controller, {}).get(scenario_id, math.nan)

    def median_eta(self, controller: str) -> float:
        """Median noise limit of ``controller`` over the scenarios."""
        values = [
            v for v in self.noise_limits.get(controller, {}).values()
            if not math.isnan(v)
        ]
        return float(np.median(values)) if values else math.nan

    # ─────────────────────────────────────────────
    # Verdicts
    # ─────────────────────────────────────────────
    def ordering_verdict(self) -> Verdict:
        """Mean ``l_total`` is non-decreasing in controller order."""
        means = [self.mean_loss(tag) for tag in self.controllers]
        if len(means) < 2 or any(math.isnan(m) for m in means):
            return Verdict.UNDETERMINED
        ordered = all(a <= b for a, b in zip(means, means[1:], strict=False))
        return Verdict.HOLDS if ordered else Verdict.VIOLATED

    def barrier_verdict(self) -> Verdict:
        """On barrier scenes the second controller loses more than the first."""
        if len(self.controllers) < 2:
            return Verdict.UNDETERMINED
        first, second = self.controllers[:2]
        a = self.mean_loss(first, barrier=True)
        b = self.mean_loss(second, barrier=True)
        if math.isnan(a) or math.isnan(b):
            return Verdict.UNDETERMINED
        return Verdict.HOLDS if b > a else Verdict.VIOLATED

    def noise_verdict(self) -> Verdict:
        """Median noise limits lie within ``noise_factor`` of each other."""
        medians = [self.median_eta(tag) for tag in self.controllers]
        if not medians or any(math.isnan(m) for m in medians):
            return Verdict.UNDETERMINED
        low, high = min(medians), max(medians)
        if low <= 0.0:
            return Verdict.VIOLATED
        return Verdict.HOLDS if high / low <= self.noise_factor else Verdict.VIOLATED

    # ─────────────────────────────────────────────
    # Serialization
    # ─────────────────────────────────────────────
    def rows(self) -> list[dict[str, object]]:
        """Long-format rows in grid order; failed cells carry ``NaN`` losses."""
        rows: list[dict[str, object]] = []
        for tag, scenario, goal in self.grid():
            cell = self.cell(tag, scenario.scenario_id, goal)
            row: dict[str, object] = {
                ReportColumn.CONTROLLER: tag,
                ReportColumn.SCENARIO_ID: scenario.scenario_id,
                ReportColumn.GOAL_DEG: goal,
            }
            for column in _LOSS_COLUMNS:
                row[column] = cell.value(column)
            row[ReportColumn.ETA_STAR] = self.eta_star(tag, scenario.scenario_id)
            rows.append(row)
        return rows

    def write_csv(self, path: str | Path) -> Path:
        """Write the long-format table."""
        target = Path(path)
        write_csv(target, [c.value for c in ReportColumn], self.rows())
        return target

    def summary(self) -> dict[str, Any]:
        """Means, marginals, verdicts and failures as plain data."""

        def clean(value: float) -> float | None:
            return None if math.isnan(value) else float(value)

        per_controller: dict[str, Any] = {}
        for tag in self.controllers:
            per_controller[tag] = {
                "mean": {str(c): clean(self.mean_loss(tag, c)) for c in _LOSS_COLUMNS},
                "mean_l_total_barrier": clean(self.mean_loss(tag, barrier=True)),
                "mean_l_total_no_barrier": clean(self.mean_loss(tag, barrier=False)),
                "mean_over_goals": {
                    int(k): clean(v) for k, v in self.mean_over_goals(tag).items()
                },
                "mean_over_scenarios": {
                    float(k): clean(v)
                    for k, v in self.mean_over_scenarios(tag).items()
                },
                "median_eta_star": clean(self.median_eta(tag)),
            }
        return {
            "ordering_verdict": self.ordering_verdict().value,
            "barrier_verdict": self.barrier_verdict().value,
            "noise_verdict": self.noise_verdict().value,
            "controllers": self.controllers,
            "scenarios": len(self.scenarios),
            "barrier_scenarios": sum(s.has_barrier for s in self.scenarios),
            "goals_deg": self.goals_deg,
            "noise_factor": self.noise_factor,
            "per_controller": per_controller,
            "failed_cells": [
                {
                    "controller": c.controller,
                    "scenario_id": c.scenario_id,
                    "goal_deg": c.goal_deg,
                    "reason": c.failure,
                }
                for c in self.failed_cells()
            ],
            "warnings": self.warnings,
        }

    def write_summary(self, path: str | Path) -> Path:
        """Write ``summary`` as YAML."""
        target = Path(path)
        write_yaml(target, self.summary())
        return target


# ----------------------------------------------------------------------------
# Heat maps
# ----------------------------------------------------------------------------


def heatmap_matrix(
    report: RobustnessReport,
    controller: str,
    column: ReportColumn | str = ReportColumn.L_TOTAL,
) -> np.ndarray:
    """Scenario × goal matrix of one loss, ``NaN`` where a cell failed."""
    goals = report.goals_deg
    return np.array(
        [
            [report.cell(controller, s.scenario_id, g).value(column) for g in goals]
            for s in report.scenarios
        ],
        dtype=np.float64,
    )


@dataclass(frozen=True)
class HeatmapScale:
    """Min-max normalization shared by every heat image of one figure."""

    low: float
    high: float

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """Values to [0, 1]; a constant figure maps to mid-gray."""
        span = self.high - self.low
        if span <= 0.0:
            return np.full_like(values, 0.5)
        return (values - self.low) / span


def heatmap_scale(matrices: Sequence[np.ndarray]) -> HeatmapScale:
    """Smallest and largest finite value across ``matrices``."""
    if not matrices:
        return HeatmapScale(0.0, 0.0)
    finite = np.concatenate([m[np.isfinite(m)] for m in matrices])
    if finite.size == 0:
        return HeatmapScale(0.0, 0.0)
    return HeatmapScale(float(finite.min()), float(finite.max()))


def heat_image(
    matrix: np.ndarray,
    scale: HeatmapScale,
    cell_px: int = RobustnessDefaults.HEATMAP_CELL_PX,
) -> np.ndarray:
    """
    Normalized matrix blown up to ``cell_px`` square pixels per cell.

    Real cells land in ``[1/255, 1]`` so that only missing cells are black.
    """
    shown = _VALUE_FLOOR + (1.0 - _VALUE_FLOOR) * scale.normalize(matrix)
    levels = np.where(np.isnan(matrix), _GAP_LEVEL, shown)
    block = np.ones((cell_px, cell_px))
    return np.kron(levels, block)


def heatmap_csv_name(controller: str) -> str:
    """File name of a controller's matrix."""
    return f"heatmap_{controller}.csv"


def heatmap_pgm_name(controller: str) -> str:
    """File name of a controller's heat image."""
    return f"heatmap_{controller}.pgm"


HEATMAP_SCALE_FILE = "heatmap_scale.yaml"


def emit_heatmap(
    report: RobustnessReport,
    out_dir: str | Path,
    *,
    column: ReportColumn | str = ReportColumn.L_TOTAL,
    cell_px: int = RobustnessDefaults.HEATMAP_CELL_PX,
) -> HeatmapScale:
    """
    Write one matrix CSV and one heat PGM per controller.

    Rows are scenarios and columns goals. Missing cells appear as ``NA`` in
    the CSV and black in the image. Every image of the figure shares one
    min-max scale, recorded in ``heatmap_scale.yaml``.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    matrices = {tag: heatmap_matrix(report, tag, column) for tag in report.controllers}
    scale = heatmap_scale(list(matrices.values()))
    goal_labels = [format_cell(g) for g in report.goals_deg]
    header = [str(ReportColumn.SCENARIO_ID), *goal_labels]
    gaps = 0
    for tag, matrix in matrices.items():
        gaps += int(np.isnan(matrix).sum())
        rows = [
            dict(
                zip(
                    header,
                    [s.scenario_id, *(float(v) for v in matrix[i])],
                    strict=True,
                ),
            )
            for i, s in enumerate(report.scenarios)
        ]
        write_csv(root / heatmap_csv_name(tag), header, rows)
        write_pgm(root / heatmap_pgm_name(tag), heat_image(matrix, scale, cell_px))
    if gaps:
        logger.warning("heat maps have %d missing cells", gaps)
    write_yaml(
        root / HEATMAP_SCALE_FILE,
        {
            "column": str(column),
            "min": scale.low,
            "max": scale.high,
            "cell_px": cell_px,
            "gap_level": _GAP_LEVEL,
            "value_floor": _VALUE_FLOOR,
            "missing_cells": gaps,
        },
    )
    return scale


def write_report(report: RobustnessReport, out_dir: str | Path) -> Path:
    """Long CSV, heat maps and summary under ``out_dir``."""
    root = Path(out_dir)
    report.write_csv(root / ArtifactName.REPORT)
    emit_heatmap(report, root)
    report.write_summary(root / ArtifactName.SUMMARY)
    logger.info(
        "robustness report in %s: ordering %s, barrier %s, noise %s",
        root,
        report.ordering_verdict(),
        report.barrier_verdict(),
        report.noise_verdict(),
    )
    return root
