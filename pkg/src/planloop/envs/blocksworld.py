"""Fully observable block-stacking environment.

Blocks are identified by color letters and live in labeled columns. A block
can be moved only when nothing is on top of it, and always lands on top of the
target column. Problems are procedurally generated per difficulty split and
calibrated so the optimal plan length falls inside the split's range.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from importlib import resources

from ..pddl import (
    And,
    Atom,
    Domain,
    GroundAction,
    GroundAtom,
    GroundTask,
    Problem,
    State,
    ValidationError,
    applicable,
    apply,
    ground,
    parse_domain,
    sorted_atoms,
)
from ..planner import DEFAULT_NODE_BUDGET, PlanStatus, plan
from .core import EnvConfig, Observation, StepResult, finish_observation

BLOCK_COLORS = ("r", "g", "b", "y", "p", "o")


def load_domain() -> Domain:
    text = resources.files("planloop.data").joinpath("bw_domain.pddl").read_text()
    return parse_domain(text)


def load_palette() -> dict[str, str]:
    text = resources.files("planloop.data").joinpath("palette.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class BwScene:
    """Bottom-to-top block stacks, one tuple per column, leftmost first."""

    columns: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        blocks = [b for column in self.columns for b in column]
        if len(set(blocks)) != len(blocks):
            raise ValidationError("a block appears twice in the scene")
        for block in blocks:
            if block not in BLOCK_COLORS:
                raise ValidationError(f"unknown block color {block!r}")

    @property
    def blocks(self) -> tuple[str, ...]:
        return tuple(sorted(b for column in self.columns for b in column))

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(f"c{i + 1}" for i in range(len(self.columns)))

    def to_json(self) -> str:
        return json.dumps({"columns": [list(c) for c in self.columns]}, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "BwScene":
        data = json.loads(text)
        return BwScene(tuple(tuple(c) for c in data["columns"]))


@dataclass(frozen=True)
class SplitSpec:
    name: str
    blocks: int
    columns: int
    min_len: int
    max_len: int
    problems: int = 25


SPLITS = {
    "simple": SplitSpec("simple", 3, 4, 3, 5),
    "medium": SplitSpec("medium", 5, 5, 5, 10),
    "hard": SplitSpec("hard", 6, 4, 8, 15),
}


def scene_to_atoms(scene: BwScene) -> frozenset[GroundAtom]:
    """Project a scene to its full symbolic state (strict column order included)."""
    atoms: set[GroundAtom] = set()
    names = scene.column_names
    for ci, stack in enumerate(scene.columns):
        for height, block in enumerate(stack):
            atoms.add(GroundAtom("incolumn", (block, names[ci])))
            if height > 0:
                atoms.add(GroundAtom("on", (block, stack[height - 1])))
        if stack:
            atoms.add(GroundAtom("clear", (stack[-1],)))
    for i in range(len(names)):
        for j in range(len(names)):
            if i < j:
                atoms.add(GroundAtom("leftof", (names[i], names[j])))
            elif i > j:
                atoms.add(GroundAtom("rightof", (names[i], names[j])))
    return frozenset(atoms)


def atoms_to_scene(state: State, n_columns: int) -> BwScene:
    """Reconstruct the scene from incolumn/on atoms; inverse of scene_to_atoms."""
    names = [f"c{i + 1}" for i in range(n_columns)]
    members: dict[str, set[str]] = {c: set() for c in names}
    below = {a.args[0]: a.args[1] for a in state if a.pred == "on"}
    above = {lower: upper for upper, lower in below.items()}
    for atom in state:
        if atom.pred == "incolumn":
            members[atom.args[1]].add(atom.args[0])
    columns = []
    for name in names:
        blocks = members[name]
        if not blocks:
            columns.append(())
            continue
        bottoms = [b for b in blocks if below.get(b) not in blocks]
        if len(bottoms) != 1:
            raise ValidationError(f"column {name} does not form a single stack")
        stack = [bottoms[0]]
        while stack[-1] in above and above[stack[-1]] in blocks:
            stack.append(above[stack[-1]])
        if len(stack) != len(blocks):
            raise ValidationError(f"column {name} does not form a single stack")
        columns.append(tuple(stack))
    return BwScene(tuple(columns))


def _goal_atoms(scene: BwScene) -> tuple[GroundAtom, ...]:
    """Goal encoding: incolumn for every block plus on/clear to pin stack order."""
    atoms = [a for a in scene_to_atoms(scene) if a.pred in ("incolumn", "on", "clear")]
    return sorted_atoms(atoms)


def scene_problem(
    name: str, init: BwScene, goal: BwScene, *, domain_name: str = "blocksworld"
) -> Problem:
    objects = tuple((b, "block") for b in init.blocks) + tuple(
        (c, "column") for c in init.column_names
    )
    goal_formula = And(tuple(Atom(a.pred, a.args) for a in _goal_atoms(goal)))
    return Problem(name, domain_name, objects, scene_to_atoms(init), goal_formula)


def random_scene(rng: random.Random, blocks: int, columns: int) -> BwScene:
    order = list(BLOCK_COLORS[:blocks])
    rng.shuffle(order)
    stacks: list[list[str]] = [[] for _ in range(columns)]
    for block in order:
        stacks[rng.randrange(columns)].append(block)
    return BwScene(tuple(tuple(s) for s in stacks))


class GenerationError(ValidationError):
    """Rejection sampling ran out of attempts."""


def generate_bw_problem(
    split: SplitSpec,
    seed: int,
    *,
    domain: Domain | None = None,
    name: str | None = None,
    max_rejects: int = 10_000,
    budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[Problem, BwScene]:
    """Sample a task whose optimal plan length lies in the split's range.

    Deterministic: the same (split, seed) always yields the same problem.
    """
    domain = domain or load_domain()
    # A string seed hashes stably across processes; tuples would not.
    rng = random.Random(f"bw-gen:{split.name}:{seed}")
    problem_name = name or f"{split.name}_problem_{seed}"
    for _ in range(max_rejects):
        init = random_scene(rng, split.blocks, split.columns)
        goal = random_scene(rng, split.blocks, split.columns)
        if init == goal:
            continue
        problem = scene_problem(problem_name, init, goal, domain_name=domain.name)
        outcome = plan(ground(domain, problem), budget)
        if outcome.status is not PlanStatus.SOLVED:
            continue
        if split.min_len <= len(outcome.plan) <= split.max_len:
            return problem, init
    raise GenerationError(
        f"no {split.name} task with plan length in "
        f"[{split.min_len}, {split.max_len}] after {max_rejects} attempts (seed {seed})"
    )


# --- Rendering ---------------------------------------------------------------

_CELL = 40
_GAP = 12
_MARGIN = 16
_BASE_H = 6
_LABEL_H = 22


def render_bw_svg(scene: BwScene, palette: dict[str, str] | None = None) -> str:
    """Byte-deterministic SVG: labeled columns, blocks as filled squares."""
    palette = palette or load_palette()
    n = len(scene.columns)
    max_stack = max((len(c) for c in scene.columns), default=0)
    rows = max(max_stack, 1)
    width = 2 * _MARGIN + n * _CELL + (n - 1) * _GAP
    base_y = _MARGIN + rows * _CELL
    height = base_y + _BASE_H + _LABEL_H
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" shape-rendering="crispEdges">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="{palette["background"]}"/>',
        f'<rect x="{_MARGIN // 2}" y="{base_y}" width="{width - _MARGIN}" height="{_BASE_H}" '
        f'fill="{palette["base"]}"/>',
    ]
    for ci, stack in enumerate(scene.columns):
        x = _MARGIN + ci * (_CELL + _GAP)
        for height_i, block in enumerate(stack):
            y = base_y - (height_i + 1) * _CELL
            parts.append(
                f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" '
                f'fill="{palette[block]}" stroke="#111111" stroke-width="1"/>'
            )
        label_x = x + _CELL // 2
        parts.append(
            f'<text x="{label_x}" y="{base_y + _BASE_H + 16}" font-family="monospace" '
            f'font-size="14" text-anchor="middle" fill="{palette["label"]}">C{ci + 1}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- Stepping ----------------------------------------------------------------


def _move(
    scene: BwScene, action: GroundAction, cfg: EnvConfig, rng: random.Random
) -> tuple[bool, BwScene]:
    if action.name != "moveblock":
        raise ValidationError(f"blocks environment cannot execute {action.name!r}")
    state = scene_to_atoms(scene)
    if not applicable(state, action):
        return False, scene
    if cfg.failure_prob > 0.0 and rng.random() < cfg.failure_prob:
        return False, scene  # failure mode: the block does not move
    return True, atoms_to_scene(apply(state, action), len(scene.columns))


def bw_step(
    scene: BwScene,
    action: GroundAction,
    cfg: EnvConfig,
    rng: random.Random,
    *,
    task: GroundTask,
) -> StepResult:
    """Execute one move; with probability failure_prob an applicable move no-ops."""
    _executed, new_scene = _move(scene, action, cfg, rng)
    observation = observe_scene(new_scene, task)
    return StepResult(_executed, observation, holds_goal(task, new_scene))


def holds_goal(task: GroundTask, scene: BwScene) -> bool:
    state = scene_to_atoms(scene)
    return task.goal_pos <= state and not (task.goal_neg & state)


def observe_scene(scene: BwScene, task: GroundTask, image_ref: str | None = None) -> Observation:
    state = scene_to_atoms(scene)
    return finish_observation(
        Observation(
            kind="bw",
            visible=task.fluent_set,
            true_visible=state,
            image_ref=image_ref,
        )
    )


class BwEnv:
    """Single-episode environment wrapper around a blocks task.

    With an artifact directory set, every reached scene is dumped as
    scene_<n>.json plus scene_<n>.svg, and observations reference the image.
    """

    kind = "bw"

    def __init__(
        self,
        problem: Problem,
        cfg: EnvConfig,
        *,
        domain: Domain | None = None,
        artifact_dir: str | None = None,
        palette: dict[str, str] | None = None,
    ):
        self.domain = domain or load_domain()
        self.problem = problem
        self.cfg = cfg
        self.task = ground(self.domain, problem)
        n_columns = len(problem.objects_of_type("column", self.domain.types))
        self.scene = atoms_to_scene(self.task.init, n_columns)
        self._rng = random.Random(f"bw-env:{problem.name}:{cfg.seed}")
        self.privileged_text = ""
        self._artifact_dir = artifact_dir
        self._palette = palette
        self._step_count = 0
        self._image_ref = self._dump_scene()

    def _dump_scene(self) -> str | None:
        if self._artifact_dir is None:
            return None
        from pathlib import Path

        directory = Path(self._artifact_dir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"scene_{self._step_count:03d}.json").write_text(self.scene.to_json())
        svg_path = directory / f"scene_{self._step_count:03d}.svg"
        svg_path.write_text(render_bw_svg(self.scene, self._palette))
        return str(svg_path)

    def observe(self) -> Observation:
        return observe_scene(self.scene, self.task, self._image_ref)

    def step(self, action: GroundAction) -> StepResult:
        executed, self.scene = _move(self.scene, action, self.cfg, self._rng)
        self._step_count += 1
        self._image_ref = self._dump_scene()
        observation = observe_scene(self.scene, self.task, self._image_ref)
        return StepResult(executed, observation, self.goal_satisfied())

    def ground_truth(self) -> State:
        return scene_to_atoms(self.scene)

    def goal_satisfied(self) -> bool:
        return holds_goal(self.task, self.scene)
