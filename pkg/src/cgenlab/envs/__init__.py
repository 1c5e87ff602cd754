"""Procedural environments: scenes, renderers, oracles and datasets."""

from cgenlab.envs.datasets import (
    GeneratedDataset,
    LoadedDataset,
    generate_dataset,
    load_dataset,
    load_manifest,
    regenerate,
    write_dataset,
)
from cgenlab.envs.nav import (
    gen_nav_dataset,
    goal_from_angle,
    render_nav,
    sample_nav_scene,
    scripted_mpc_demo,
)
from cgenlab.envs.shapes import gen_shapes_dataset, render_shapes
from cgenlab.envs.stones import (
    extract_stones_scene,
    gen_stones_dataset,
    reachable_frontier,
    render_stones,
    sample_stones_scene,
    stones_oracle,
)

__all__ = [
    "GeneratedDataset",
    "LoadedDataset",
    "extract_stones_scene",
    "gen_nav_dataset",
    "gen_shapes_dataset",
    "gen_stones_dataset",
    "generate_dataset",
    "goal_from_angle",
    "load_dataset",
    "load_manifest",
    "reachable_frontier",
    "regenerate",
    "render_nav",
    "render_shapes",
    "render_stones",
    "sample_nav_scene",
    "sample_stones_scene",
    "scripted_mpc_demo",
    "stones_oracle",
    "write_dataset",
]
