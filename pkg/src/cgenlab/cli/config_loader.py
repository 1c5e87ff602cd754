"""
Run-config loading for the command line.

A run config is a YAML mapping validated as ``RunConfig``. ``--set`` flags
edit the raw mapping before validation: ``section.key=value`` where the
value is parsed as a YAML scalar or flow collection (``training.epochs=4``,
``robustness.goals_deg=[-15, 0, 15]``). Keys may nest deeper
(``training.weights.alpha=0.5``).
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Any

import yaml

from cgenlab.config.constants import ArtifactName
from cgenlab.errors import ConfigurationError
from cgenlab.io.records import write_yaml
from cgenlab.schemas.payload import RunConfig

if TYPE_CHECKING:
    from collections.abc import Sequence


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Raw mapping of a YAML config file; an empty file is an empty mapping."""
    source = Path(path)
    if not source.is_file():
        msg = f"config file not found: {source}"
        raise ConfigurationError(msg)
    data = yaml.safe_load(source.read_text(encoding="utf-8"))
    if data is None:
        return {}
    if not isinstance(data, dict):
        msg = f"config file {source} must hold a mapping at the top level"
        raise ConfigurationError(msg)
    return data


def apply_override(data: dict[str, Any], override: str) -> None:
    """Set one dotted key of ``data`` in place."""
    key, sep, raw = override.partition("=")
    parts = key.strip().split(".")
    if not sep or not all(parts):
        msg = f"override '{override}' is not of the form section.key=value"
        raise ConfigurationError(msg)
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        msg = f"cannot parse the value of override '{override}': {exc}"
        raise ConfigurationError(msg) from exc
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            msg = f"override '{override}' descends into the scalar '{part}'"
            raise ConfigurationError(msg)
        node = child
    node[parts[-1]] = value


def load_run_config(
    path: str | Path | None = None,
    overrides: Sequence[str] = (),
) -> RunConfig:
    """Config file (optional) plus overrides, validated and seed-resolved."""
    data = read_config_file(path) if path is not None else {}
    for override in overrides:
        apply_override(data, override)
    return RunConfig.model_validate(data).resolved()


def write_resolved_config(config: RunConfig, out_dir: str | Path) -> Path:
    """Write the config that produced an output directory next to it."""
    target = Path(out_dir) / ArtifactName.RESOLVED_CONFIG
    write_yaml(target, config.model_dump(mode="json"))
    return target
