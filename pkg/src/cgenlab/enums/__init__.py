"""Public enums used in run configs, manifests and reports."""

from cgenlab.config.constants import (
    CGenMode,
    DatasetSplit,
    EnvName,
    ExitCode,
    GoalKind,
    NavComplexity,
    OptimizerKind,
    PretrainRole,
    ReportColumn,
    Verdict,
)

__all__ = [
    "CGenMode",
    "DatasetSplit",
    "EnvName",
    "ExitCode",
    "GoalKind",
    "NavComplexity",
    "OptimizerKind",
    "PretrainRole",
    "ReportColumn",
    "Verdict",
]
