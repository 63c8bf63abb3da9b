"""Executable environments: blocks, household, and calibration probes."""

from .blocksworld import (
    BLOCK_COLORS,
    SPLITS,
    BwEnv,
    BwScene,
    GenerationError,
    SplitSpec,
    atoms_to_scene,
    bw_step,
    generate_bw_problem,
    render_bw_svg,
    scene_problem,
    scene_to_atoms,
)
from .core import EnvConfig, Observation, StepResult, describe_scene, goal_reached
from .household import (
    HhEnv,
    HouseholdSpec,
    build_problem,
    build_suite,
    hh_step,
    hh_visibility,
    load_household_suite,
    privileged_text,
    write_suite,
)
from .synthetic import ProbeEnv, make_probe_problem

__all__ = [
    "BLOCK_COLORS",
    "SPLITS",
    "BwEnv",
    "BwScene",
    "EnvConfig",
    "GenerationError",
    "HhEnv",
    "HouseholdSpec",
    "Observation",
    "ProbeEnv",
    "SplitSpec",
    "StepResult",
    "atoms_to_scene",
    "build_problem",
    "build_suite",
    "bw_step",
    "describe_scene",
    "generate_bw_problem",
    "goal_reached",
    "hh_step",
    "hh_visibility",
    "load_household_suite",
    "make_probe_problem",
    "privileged_text",
    "render_bw_svg",
    "scene_problem",
    "scene_to_atoms",
    "write_suite",
]
