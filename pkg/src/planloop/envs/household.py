"""Partially observable household environment.

Objects sit on surfaces or inside containers; the agent navigates, grasps,
places, and opens or closes containers. Movables hidden inside a closed
container are invisible until it is opened; their whereabouts are supplied as
privileged text. Actions can fail stochastically with per-action failure
modes that leave symbolically detectable traces.

The shipped benchmark suite is authored here: three splits of 25 problems,
grouped into task families whose optimal plan lengths are pinned per family.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..naming import base_counts, render_object
from ..pddl import (
    And,
    Atom,
    Domain,
    Formula,
    GroundAction,
    GroundAtom,
    GroundTask,
    Not,
    Problem,
    State,
    ValidationError,
    applicable,
    apply,
    goal_satisfied,
    ground,
    parse_domain,
    parse_problem,
    problem_to_pddl,
)
from .core import EnvConfig, Observation, StepResult, finish_observation


def load_domain() -> Domain:
    text = resources.files("planloop.data").joinpath("hh_domain.pddl").read_text()
    return parse_domain(text)


def hh_visibility(state: State, *, task: GroundTask) -> frozenset[GroundAtom]:
    """Atoms whose truth is observable in ``state``.

    An atom is visible iff every argument is observable. Containers and plain
    furniture are always observable; a movable is hidden while it sits inside
    a closed container.
    """
    types = task.domain.types
    hidden: set[str] = set()
    for obj, typ in task.problem.objects:
        if not types.is_subtype(typ, "movable"):
            continue
        for container, ctyp in task.problem.objects:
            if not types.is_subtype(ctyp, "container"):
                continue
            if (
                GroundAtom("inside", (obj, container)) in state
                and GroundAtom("open", (container,)) not in state
            ):
                hidden.add(obj)
                break
    if not hidden:
        return task.fluent_set
    return frozenset(a for a in task.fluents if not any(arg in hidden for arg in a.args))


def privileged_text(state: State, task: GroundTask) -> str:
    """One line per hidden movable naming the container it can be found in."""
    counts = base_counts(name for name, _ in task.problem.objects)
    lines = []
    for atom in sorted(state, key=lambda a: a.args):
        if atom.pred != "inside":
            continue
        obj, container = atom.args
        if GroundAtom("open", (container,)) in state:
            continue
        obj_text = render_object(obj, counts, article=None)
        container_text = render_object(container, counts, article=None)
        lines.append(f"the {obj_text} can be found inside the {container_text}")
    return "\n".join(lines)


# Failure modes fired with probability failure_prob on an applicable action.
# Place actions leave the object in a recognizably wrong relation; the rest
# simply do nothing.
_FAILURE_NOOP = {"grasp", "place-next-to", "navigate-to", "open-container", "close-container"}


def _failed_transition(state: State, action: GroundAction) -> State:
    if action.name == "place-on":
        m, target = action.args
        return frozenset(
            (state - {GroundAtom("holding", (m,))}) | {GroundAtom("nextto", (m, target))}
        )
    if action.name == "place-inside":
        m, container = action.args
        return frozenset(
            (state - {GroundAtom("holding", (m,))}) | {GroundAtom("ontop", (m, container))}
        )
    if action.name in _FAILURE_NOOP:
        return state
    raise ValidationError(f"household environment cannot execute {action.name!r}")


def _transition(
    state: State, action: GroundAction, cfg: EnvConfig, rng: random.Random
) -> tuple[bool, State]:
    if action.name not in _FAILURE_NOOP and action.name not in ("place-on", "place-inside"):
        raise ValidationError(f"household environment cannot execute {action.name!r}")
    if not applicable(state, action):
        return False, state
    if cfg.failure_prob > 0.0 and rng.random() < cfg.failure_prob:
        return False, _failed_transition(state, action)
    return True, apply(state, action)


def hh_step(
    state: State,
    action: GroundAction,
    cfg: EnvConfig,
    rng: random.Random,
    *,
    task: GroundTask,
    privileged: str = "",
) -> StepResult:
    """Execute one household action with stochastic failure injection."""
    executed, new_state = _transition(state, action, cfg, rng)
    observation = observe_state(new_state, task, privileged)
    return StepResult(executed, observation, goal_satisfied(task, new_state))


def observe_state(state: State, task: GroundTask, privileged: str = "") -> Observation:
    mask = hh_visibility(state, task=task)
    return finish_observation(
        Observation(
            kind="household",
            visible=mask,
            true_visible=frozenset(a for a in state if a in mask),
            privileged=privileged,
        )
    )


class HhEnv:
    """Single-episode household environment."""

    kind = "household"

    def __init__(
        self,
        problem: Problem,
        cfg: EnvConfig,
        *,
        domain: Domain | None = None,
        artifact_dir: str | None = None,
    ):
        self.domain = domain or load_domain()
        self.problem = problem
        self.cfg = cfg
        self.task = ground(self.domain, problem)
        self.state: State = self.task.init
        self._rng = random.Random(f"hh-env:{problem.name}:{cfg.seed}")
        self.privileged_text = privileged_text(self.state, self.task)
        self._artifact_dir = artifact_dir
        self._step_count = 0
        self._dump_state()

    def _dump_state(self) -> None:
        if self._artifact_dir is None:
            return
        directory = Path(self._artifact_dir)
        directory.mkdir(parents=True, exist_ok=True)
        dump = {"atoms": sorted(str(a) for a in self.state)}
        path = directory / f"scene_{self._step_count:03d}.json"
        path.write_text(json.dumps(dump, indent=2) + "\n")

    def observe(self) -> Observation:
        return observe_state(self.state, self.task, self.privileged_text)

    def step(self, action: GroundAction) -> StepResult:
        executed, self.state = _transition(self.state, action, self.cfg, self._rng)
        self._step_count += 1
        self._dump_state()
        observation = observe_state(self.state, self.task, self.privileged_text)
        return StepResult(executed, observation, self.goal_satisfied())

    def ground_truth(self) -> State:
        return self.state

    def goal_satisfied(self) -> bool:
        return goal_satisfied(self.task, self.state)


# --- Curated benchmark suite --------------------------------------------------
#
# Each split ships 25 problems drawn from task families; instances within a
# family vary object names, containers and harmless distractors but keep the
# family's optimal plan length. cmd_validate / the test suite verify the
# lengths against the search oracle.


@dataclass(frozen=True)
class HouseholdSpec:
    name: str
    family: str
    split: str
    expected_len: int
    movables: tuple[str, ...]
    containers: tuple[tuple[str, bool], ...]  # (name, initially open)
    surfaces: tuple[str, ...]
    inside: tuple[tuple[str, str], ...]  # movable inside container at init
    reachable: tuple[str, ...] = ()  # objects within reach at init
    goal_ontop: tuple[tuple[str, str], ...] = ()
    goal_inside: tuple[tuple[str, str], ...] = ()
    goal_closed: tuple[str, ...] = ()


def build_problem(spec: HouseholdSpec, domain: Domain | None = None) -> Problem:
    domain = domain or load_domain()
    objects = (
        tuple((m, "movable") for m in spec.movables)
        + tuple((c, "container") for c, _ in spec.containers)
        + tuple((s, "object") for s in spec.surfaces)
    )
    init: set[GroundAtom] = set()
    for movable, container in spec.inside:
        init.add(GroundAtom("inside", (movable, container)))
    for container, is_open in spec.containers:
        if is_open:
            init.add(GroundAtom("open", (container,)))
    for obj in spec.reachable:
        init.add(GroundAtom("reachable", (obj,)))
    parts: list[Formula] = []
    parts.extend(Atom("ontop", pair) for pair in spec.goal_ontop)
    parts.extend(Atom("inside", pair) for pair in spec.goal_inside)
    parts.extend(Not(Atom("open", (c,))) for c in spec.goal_closed)
    return Problem(spec.name, domain.name, objects, frozenset(init), And(tuple(parts)))


def _simple_cleaning(i: int, movable: str, container: str, target: str) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"cleaning_out_drawers_{i}",
        family="cleaning out drawers",
        split="simple",
        expected_len=5,
        movables=(movable,),
        containers=((container, False),),
        surfaces=(target,),
        inside=((movable, container),),
        goal_ontop=((movable, target),),
    )


def _lock_all(i: int, family: str, split: str, doors: tuple[str, ...], extras: tuple[str, ...], length: int) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"{family.replace(' ', '_')}_{i}",
        family=family,
        split=split,
        expected_len=length,
        movables=extras,
        containers=tuple((d, True) for d in doors),
        surfaces=(),
        inside=(),
        goal_closed=doors,
    )


def _simple_packing(i: int, food: str, fridge: str, box: str) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"packing_food_for_work_{i}",
        family="packing food for work",
        split="simple",
        expected_len=5,
        movables=(food,),
        containers=((fridge, False), (box, True)),
        surfaces=(),
        inside=((food, fridge),),
        goal_inside=((food, box),),
    )


def _simple_books(i: int, book: str, target: str, extras: tuple[str, ...] = ()) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"sorting_books_{i}",
        family="sorting books",
        split="simple",
        expected_len=4,
        movables=(book,) + extras,
        containers=(),
        surfaces=(target,),
        inside=(),
        goal_ontop=((book, target),),
    )


def _medium_cleaning(i: int, pairs: tuple[tuple[str, str], ...], target: str) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"cleaning_out_drawers_{i}",
        family="cleaning out drawers",
        split="medium",
        expected_len=10,
        movables=tuple(m for m, _ in pairs),
        containers=tuple((c, False) for _, c in pairs),
        surfaces=(target,),
        inside=pairs,
        goal_ontop=tuple((m, target) for m, _ in pairs),
    )


def _medium_collect(i: int, moves: tuple[tuple[str, str], ...]) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"collect_misplaced_items_{i}",
        family="collect misplaced items",
        split="medium",
        expected_len=8,
        movables=tuple(m for m, _ in moves),
        containers=(),
        surfaces=tuple(dict.fromkeys(t for _, t in moves)),
        inside=(),
        goal_ontop=moves,
    )


def _medium_packing(i: int, pairs: tuple[tuple[str, str], ...], box: str) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"packing_food_for_work_{i}",
        family="packing food for work",
        split="medium",
        expected_len=10,
        movables=tuple(m for m, _ in pairs),
        containers=tuple((c, False) for _, c in pairs) + ((box, True),),
        surfaces=(),
        inside=pairs,
        goal_inside=tuple((m, box) for m, _ in pairs),
    )


def _toys(i: int, split: str, toys: tuple[str, ...], chest: str, length: int) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"putting_away_toys_{i}",
        family="putting away toys",
        split=split,
        expected_len=length,
        movables=toys,
        containers=((chest, True),),
        surfaces=(),
        inside=(),
        goal_inside=tuple((t, chest) for t in toys),
    )


def _medium_books(i: int, moves: tuple[tuple[str, str], ...]) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"sorting_books_{i}",
        family="sorting books",
        split="medium",
        expected_len=8,
        movables=tuple(m for m, _ in moves),
        containers=(),
        surfaces=tuple(dict.fromkeys(t for _, t in moves)),
        inside=(),
        goal_ontop=moves,
    )


def _medium_groceries(i: int, pairs: tuple[tuple[str, str], ...], counter: str) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"sorting_groceries_{i}",
        family="sorting groceries",
        split="medium",
        expected_len=10,
        movables=tuple(m for m, _ in pairs),
        containers=tuple((c, False) for _, c in pairs),
        surfaces=(counter,),
        inside=pairs,
        goal_ontop=tuple((m, counter) for m, _ in pairs),
    )


def _hard_cleaning(i: int, b1: str, b2: str, c1: str, c2: str, c3: str, sink: str) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"cleaning_out_drawers_{i}",
        family="cleaning out drawers",
        split="hard",
        expected_len=15,
        movables=(b1, b2),
        containers=((c1, False), (c2, False), (c3, False)),
        surfaces=(sink,),
        inside=((b1, c1), (b2, c2)),
        goal_ontop=((b1, sink),),
        goal_inside=((b2, c3),),
        goal_closed=(c1, c2, c3),
    )


def _hard_boxes(i: int, boxes: tuple[str, str, str], shelf: str, cabinet: str) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"organizing_boxes_in_garage_{i}",
        family="organizing boxes in garage",
        split="hard",
        expected_len=11,
        movables=boxes,
        containers=((cabinet, False),),
        surfaces=(shelf,),
        inside=((boxes[2], cabinet),),
        reachable=(boxes[0], shelf),
        goal_ontop=tuple((b, shelf) for b in boxes),
    )


def _hard_files(i: int, files: tuple[str, str, str], cabinet: str, extras: tuple[str, ...] = ()) -> HouseholdSpec:
    return HouseholdSpec(
        name=f"organizing_file_cabinet_{i}",
        family="organizing file cabinet",
        split="hard",
        expected_len=14,
        movables=files,
        containers=((cabinet, False),),
        surfaces=extras,
        inside=(),
        goal_inside=tuple((f, cabinet) for f in files),
    )


def _hard_groceries(i: int, hidden: tuple[str, str], loose: tuple[str, str], counter: str) -> HouseholdSpec:
    item, fridge = hidden
    return HouseholdSpec(
        name=f"sorting_groceries_{i}",
        family="sorting groceries",
        split="hard",
        expected_len=13,
        movables=(item,) + loose,
        containers=((fridge, False),),
        surfaces=(counter,),
        inside=((item, fridge),),
        goal_ontop=tuple((m, counter) for m in (item,) + loose),
    )


def build_suite() -> dict[str, tuple[HouseholdSpec, ...]]:
    """The full 3 x 25 problem catalog, deterministic and self-contained."""
    simple = (
        _simple_cleaning(0, "bowl_1", "cabinet_1", "sink_1"),
        _simple_cleaning(1, "plate_1", "drawer_1", "countertop_1"),
        _simple_cleaning(2, "cup_1", "cupboard_1", "table_1"),
        _simple_cleaning(3, "mug_1", "drawer_1", "shelf_1"),
        _simple_cleaning(4, "spoon_1", "cabinet_1", "counter_1"),
        _lock_all(0, "locking every door", "simple", ("door_1", "door_2"), (), 4),
        _lock_all(1, "locking every door", "simple", ("gate_1", "gate_2"), (), 4),
        _lock_all(2, "locking every door", "simple", ("door_1", "door_2"), ("key_1",), 4),
        _lock_all(3, "locking every door", "simple", ("door_1", "door_2"), ("umbrella_1",), 4),
        _lock_all(4, "locking every door", "simple", ("gate_1", "gate_2"), ("key_1",), 4),
        _lock_all(0, "locking every window", "simple", ("window_1", "window_2", "window_3"), (), 6),
        _lock_all(1, "locking every window", "simple", ("window_1", "window_2", "window_3"), ("plant_1",), 6),
        _lock_all(2, "locking every window", "simple", ("shutter_1", "shutter_2", "shutter_3"), (), 6),
        _lock_all(3, "locking every window", "simple", ("window_1", "window_2", "window_3"), ("vase_1",), 6),
        _lock_all(4, "locking every window", "simple", ("shutter_1", "shutter_2", "shutter_3"), ("plant_1",), 6),
        _simple_packing(0, "sandwich_1", "fridge_1", "lunchbox_1"),
        _simple_packing(1, "apple_1", "fridge_1", "basket_1"),
        _simple_packing(2, "banana_1", "pantry_1", "lunchbox_1"),
        _simple_packing(3, "yogurt_1", "fridge_1", "bag_1"),
        _simple_packing(4, "wrap_1", "cooler_1", "basket_1"),
        _simple_books(0, "book_1", "shelf_1"),
        _simple_books(1, "novel_1", "desk_1"),
        _simple_books(2, "book_1", "table_1", ("magazine_1",)),
        _simple_books(3, "atlas_1", "rack_1"),
        _simple_books(4, "book_1", "nightstand_1", ("novel_1",)),
    )
    medium = (
        _medium_cleaning(0, (("bowl_1", "cabinet_1"), ("plate_1", "drawer_1")), "sink_1"),
        _medium_cleaning(1, (("cup_1", "cupboard_1"), ("mug_1", "cabinet_1")), "countertop_1"),
        _medium_collect(0, (("remote_1", "table_1"), ("pillow_1", "sofa_1"))),
        _medium_collect(1, (("sock_1", "dresser_1"), ("scarf_1", "bench_1"))),
        _medium_collect(2, (("remote_1", "shelf_1"), ("magazine_1", "table_1"))),
        _medium_collect(3, (("hat_1", "rack_1"), ("glove_1", "rack_1"))),
        _medium_packing(0, (("sandwich_1", "fridge_1"), ("apple_1", "pantry_1")), "lunchbox_1"),
        _medium_packing(1, (("banana_1", "fridge_1"), ("yogurt_1", "cooler_1")), "basket_1"),
        _medium_packing(2, (("wrap_1", "pantry_1"), ("juice_1", "fridge_1")), "bag_1"),
        _medium_packing(3, (("apple_1", "cooler_1"), ("cheese_1", "fridge_1")), "lunchbox_1"),
        _toys(0, "medium", ("ball_1", "robot_1"), "toybox_1", 8),
        _toys(1, "medium", ("doll_1", "brick_1"), "chest_1", 8),
        _toys(2, "medium", ("ball_1", "puzzle_1"), "bin_1", 8),
        _toys(3, "medium", ("robot_1", "dinosaur_1"), "toybox_1", 8),
        _toys(4, "medium", ("kite_1", "drum_1"), "chest_1", 8),
        _medium_books(0, (("book_1", "shelf_1"), ("book_2", "shelf_2"))),
        _medium_books(1, (("novel_1", "shelf_1"), ("atlas_1", "desk_1"))),
        _medium_books(2, (("book_1", "rack_1"), ("book_2", "rack_1"))),
        _medium_books(3, (("comic_1", "table_1"), ("novel_1", "nightstand_1"))),
        _medium_groceries(0, (("milk_1", "bag_1"), ("bread_1", "fridge_1")), "counter_1"),
        _medium_groceries(1, (("cereal_1", "pantry_1"), ("juice_1", "fridge_1")), "counter_1"),
        _medium_groceries(2, (("cheese_1", "fridge_1"), ("rice_1", "bag_1")), "table_1"),
        _medium_groceries(3, (("milk_1", "cooler_1"), ("jam_1", "pantry_1")), "countertop_1"),
        _medium_groceries(4, (("pasta_1", "bag_1"), ("sauce_1", "pantry_1")), "counter_1"),
        _medium_groceries(5, (("bread_1", "bag_1"), ("butter_1", "fridge_1")), "shelf_1"),
    )
    hard = (
        _hard_cleaning(0, "bowl_1", "plate_1", "cabinet_1", "drawer_1", "cupboard_1", "sink_1"),
        _hard_cleaning(1, "cup_1", "mug_1", "drawer_1", "cabinet_1", "hutch_1", "counter_1"),
        _hard_cleaning(2, "bowl_1", "cup_1", "cupboard_1", "drawer_1", "cabinet_1", "sink_1"),
        _hard_cleaning(3, "plate_1", "spoon_1", "cabinet_1", "cupboard_1", "drawer_1", "countertop_1"),
        _hard_cleaning(4, "mug_1", "bowl_1", "hutch_1", "cabinet_1", "drawer_1", "table_1"),
        _hard_boxes(0, ("box_1", "box_2", "box_3"), "shelf_1", "cabinet_1"),
        _hard_boxes(1, ("crate_1", "crate_2", "crate_3"), "rack_1", "locker_1"),
        _hard_boxes(2, ("box_1", "box_2", "box_3"), "workbench_1", "locker_1"),
        _hard_boxes(3, ("bin_1", "bin_2", "bin_3"), "shelf_1", "cabinet_1"),
        _hard_boxes(4, ("carton_1", "carton_2", "carton_3"), "rack_1", "cabinet_1"),
        _hard_files(0, ("file_1", "file_2", "file_3"), "filecabinet_1"),
        _hard_files(1, ("folder_1", "folder_2", "folder_3"), "cabinet_1"),
        _hard_files(2, ("file_1", "file_2", "file_3"), "filecabinet_1", ("desk_1",)),
        _hard_files(3, ("binder_1", "binder_2", "binder_3"), "drawer_1"),
        _toys(0, "hard", ("ball_1", "robot_1", "doll_1"), "toybox_1", 12),
        _toys(1, "hard", ("brick_1", "puzzle_1", "kite_1"), "chest_1", 12),
        _toys(2, "hard", ("ball_1", "dinosaur_1", "drum_1"), "bin_1", 12),
        _toys(3, "hard", ("robot_1", "doll_1", "puzzle_1"), "toybox_1", 12),
        _hard_groceries(0, ("milk_1", "fridge_1"), ("bread_1", "rice_1"), "counter_1"),
        _hard_groceries(1, ("cheese_1", "fridge_1"), ("cereal_1", "juice_1"), "counter_1"),
        _hard_groceries(2, ("butter_1", "cooler_1"), ("pasta_1", "sauce_1"), "table_1"),
        _hard_groceries(3, ("jam_1", "pantry_1"), ("bread_1", "milk_1"), "countertop_1"),
        _hard_groceries(4, ("yogurt_1", "fridge_1"), ("rice_1", "beans_1"), "counter_1"),
        _hard_groceries(5, ("juice_1", "cooler_1"), ("cereal_1", "jam_1"), "shelf_1"),
        _hard_groceries(6, ("milk_1", "pantry_1"), ("sauce_1", "cheese_1"), "counter_1"),
    )
    return {"simple": simple, "medium": medium, "hard": hard}


def write_suite(root: Path, domain: Domain | None = None) -> None:
    """Write the fixture tree: one .pddl per problem plus a manifest."""
    domain = domain or load_domain()
    root = Path(root)
    manifest: dict[str, list[dict]] = {}
    golden = resources.files("planloop.data").joinpath(
        "hh_problem_cleaning_out_drawers_0.pddl"
    ).read_text()
    for split, specs in build_suite().items():
        split_dir = root / split
        split_dir.mkdir(parents=True, exist_ok=True)
        rows = []
        for spec in specs:
            path = split_dir / f"{spec.name}.pddl"
            if split == "simple" and spec.name == "cleaning_out_drawers_0":
                path.write_text(golden)
            else:
                path.write_text(problem_to_pddl(build_problem(spec, domain)))
            rows.append(
                {"file": f"{split}/{spec.name}.pddl", "family": spec.family, "actions": spec.expected_len}
            )
        manifest[split] = rows
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (root / "domain.pddl").write_text(
        resources.files("planloop.data").joinpath("hh_domain.pddl").read_text()
    )


def load_household_suite(
    split: str, root: Path | str = "fixtures/hh"
) -> list[tuple[Problem, EnvConfig, str]]:
    """Load a split's shipped problems with their configs and privileged text."""
    if split not in ("simple", "medium", "hard"):
        raise ValidationError(f"unknown split {split!r}")
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"household manifest not found at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    domain = load_domain()
    suite = []
    for row in manifest[split]:
        path = root / row["file"]
        if not path.exists():
            raise FileNotFoundError(f"missing household fixture {path}")
        problem = parse_problem(path.read_text(), domain)
        task = ground(domain, problem)
        cfg = EnvConfig(failure_prob=0.0, seed=0, kind="household")
        suite.append((problem, cfg, privileged_text(task.init, task)))
    return suite


def expected_lengths(root: Path | str = "fixtures/hh") -> dict[str, list[tuple[str, int]]]:
    manifest = json.loads((Path(root) / "manifest.json").read_text())
    return {
        split: [(row["file"], row["actions"]) for row in rows]
        for split, rows in manifest.items()
    }
