"""Noise-gain probe and counterfactual robustness comparison of controllers."""

from cgenlab.robustness.compare import robustness_compare, select_scenarios
from cgenlab.robustness.controllers import (
    ControllerFamily,
    load_controllers,
    save_family,
    train_controller_family,
)
from cgenlab.robustness.noise_probe import noise_probe, output_shifts, probe_trials
from cgenlab.robustness.report import (
    CellResult,
    RobustnessReport,
    ScenarioInfo,
    emit_heatmap,
    write_report,
)

__all__ = [
    "CellResult",
    "ControllerFamily",
    "RobustnessReport",
    "ScenarioInfo",
    "emit_heatmap",
    "load_controllers",
    "noise_probe",
    "output_shifts",
    "probe_trials",
    "robustness_compare",
    "save_family",
    "select_scenarios",
    "train_controller_family",
    "write_report",
]
