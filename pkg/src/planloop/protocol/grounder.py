"""Question-answer grounding loop.

The symbolic planner plans over a state estimate assembled by asking one
yes/no question per visible ground atom (predicate enumeration). Before each
action its visible precondition atoms are re-queried; after execution the
visible effect atoms are checked against a fresh observation. Any
contradiction marks the state inconsistent, triggering re-enumeration and a
replan. Success is always judged on the environment's ground truth.
"""

from __future__ import annotations

from ..pddl import GroundAction, GroundAtom, GroundTask, State
from ..planner import PlanStatus, plan_from
from .episode import (
    OUTCOME_BUDGET,
    OUTCOME_SUCCESS,
    EpisodeRecord,
    GrounderConfig,
    QuestionBudgetExceeded,
)
from .outputs import NO, UNPARSABLE, YES, parse_yes_no
from .questions import QuestionTemplates, atom_to_question


class _Asker:
    """Shared question plumbing: templating, parsing, budget, logging."""

    def __init__(self, env, answerer, cfg: GrounderConfig, templates: QuestionTemplates, record: EpisodeRecord):
        self.env = env
        self.answerer = answerer
        self.cfg = cfg
        self.templates = templates
        self.record = record

    def ask(self, atom: GroundAtom, observation, phase: str) -> bool:
        """Ask one yes/no question; unparsable answers degrade to 'no'."""
        if self.record.questions_asked >= self.cfg.max_questions:
            raise QuestionBudgetExceeded
        question = atom_to_question(atom, self.templates)
        raw = self.answerer.answer(question, atom, observation)
        verdict = parse_yes_no(raw, self.cfg.cot)
        if verdict == UNPARSABLE:
            self.record.log_parse_fault(raw, phase)
            raw = self.answerer.answer(question, atom, observation)
            verdict = parse_yes_no(raw, self.cfg.cot)
            if verdict == UNPARSABLE:
                self.record.log_parse_fault(raw, phase)
                verdict = NO
        truth = atom in self.env.ground_truth()
        self.record.log_question(atom, question, raw, verdict, truth, phase)
        return verdict == YES


def _query_order(atoms) -> list[GroundAtom]:
    return sorted(atoms, key=lambda a: (a.pred, a.args))


def _enumerate(env, asker: _Asker) -> State:
    observation = env.observe()
    truth = env.ground_truth()
    estimate: set[GroundAtom] = set()
    for atom in _query_order(observation.visible):
        if atom.is_reflexive:
            continue
        if asker.ask(atom, observation, "enumeration"):
            estimate.add(atom)
    for atom in truth:
        if atom not in observation.visible:
            estimate.add(atom)
    return frozenset(estimate)


def enumerate_predicates(
    env,
    answerer,
    templates: QuestionTemplates | None = None,
    budget: int = 3000,
    *,
    cot: bool = False,
    record: EpisodeRecord | None = None,
) -> State:
    """Build a state estimate by querying every visible, non-reflexive atom.

    Questions go out in deterministic order (predicate name, then arguments);
    invisible atoms are copied from the privileged ground truth; reflexive
    atoms are never queried and default to false.
    """
    templates = templates or QuestionTemplates.for_task(env.task, env.kind)
    record = record or EpisodeRecord(task_id="enumeration", setting="grounder", cot=cot, seed=0)
    cfg = GrounderConfig(cot=cot, max_questions=budget)
    return _enumerate(env, _Asker(env, answerer, cfg, templates, record))


def _precondition_expectations(action: GroundAction, estimate: State) -> dict[GroundAtom, bool]:
    """Atoms to verify before acting, with the truth value the plan expects."""
    expected: dict[GroundAtom, bool] = {}
    for atom in action.positive_preconditions:
        expected[atom] = True
    for atom in action.negative_preconditions:
        expected[atom] = False
    for clause_pos, clause_neg in action.clauses:
        for atom in clause_pos:
            expected.setdefault(atom, atom in estimate)
        for atom in clause_neg:
            expected.setdefault(atom, atom in estimate)
    return expected


def fired_effects(action: GroundAction, estimate: State) -> tuple[frozenset[GroundAtom], frozenset[GroundAtom]]:
    """Adds and deletes of the branches that fire under the pre-action estimate."""
    adds: set[GroundAtom] = set()
    dels: set[GroundAtom] = set()
    for effect in action.effects:
        if effect.fires(estimate):
            adds.update(effect.add)
            dels.update(effect.delete)
    return frozenset(adds), frozenset(dels - adds)


def run_grounder_episode(
    env,
    answerer,
    cfg: GrounderConfig,
    *,
    task_id: str = "",
    seed: int = 0,
    planner_fn=plan_from,
    sink=None,
) -> EpisodeRecord:
    """Run one grounding episode to success or budget exhaustion."""
    task: GroundTask = env.task
    templates = QuestionTemplates.for_task(task, env.kind)
    record = EpisodeRecord(
        task_id=task_id or task.problem.name, setting="grounder", cot=cfg.cot, seed=seed, sink=sink
    )
    asker = _Asker(env, answerer, cfg, templates, record)

    try:
        estimate = _enumerate(env, asker)
        while True:
            if task.goal_pos <= estimate and not (task.goal_neg & estimate):
                if env.goal_satisfied():
                    record.outcome = OUTCOME_SUCCESS
                    record.success = True
                    return record
                reason = "estimate-goal-mismatch"
            else:
                outcome = planner_fn(task, estimate, cfg.planner_budget)
                if outcome.status is not PlanStatus.SOLVED:
                    reason = f"planner-{outcome.status.value}"
                else:
                    reason = _execute_plan(env, asker, outcome.plan, estimate, record)
                    if reason is None:
                        record.outcome = OUTCOME_SUCCESS
                        record.success = True
                        return record
            record.log_replan(reason)
            if record.replans > cfg.max_replans:
                record.outcome = OUTCOME_BUDGET
                record.success = env.goal_satisfied()
                return record
            estimate = _enumerate(env, asker)
    except QuestionBudgetExceeded:
        record.outcome = OUTCOME_BUDGET
        record.success = env.goal_satisfied()
        return record


def _execute_plan(env, asker: _Asker, plan, estimate: State, record: EpisodeRecord):
    """Walk the plan; returns None on success or a replan reason string.

    Mutates nothing outside the env; the evolving estimate is local because a
    mismatch discards it anyway.
    """
    for action in plan:
        observation = env.observe()
        expectations = _precondition_expectations(action, estimate)
        for atom in _query_order(expectations):
            if atom not in observation.visible or atom.is_reflexive:
                continue  # invisible atoms are trusted from the estimate
            answer = asker.ask(atom, observation, "precondition")
            if answer != expectations[atom]:
                return "precondition-mismatch"

        result = env.step(action)
        record.log_action(action.name, action.args, result.executed)
        if env.goal_satisfied():
            return None

        adds, dels = fired_effects(action, estimate)
        post_observation = result.observation
        expected_effects: dict[GroundAtom, bool] = {}
        for atom in adds:
            expected_effects[atom] = True
        for atom in dels:
            expected_effects[atom] = False
        for atom in _query_order(expected_effects):
            if atom not in post_observation.visible or atom.is_reflexive:
                continue
            answer = asker.ask(atom, post_observation, "effect")
            if answer != expected_effects[atom]:
                return "effect-mismatch"
        estimate = frozenset((estimate - dels) | adds)
    # The plan ran out without reaching the true goal.
    return "plan-exhausted"


def oracle_required_predictions(make_env, cfg: GrounderConfig | None = None) -> int:
    """Questions a perfect answerer needs on a fresh, failure-free episode.

    This is the per-task quantity the compounding-error curve buckets on.
    """
    from ..agents import OracleAnswerer  # local import to avoid a cycle

    env = make_env()
    if getattr(env.cfg, "failure_prob", 0.0) != 0.0:
        raise ValueError("the oracle dry-run requires a failure-free environment")
    cfg = cfg or GrounderConfig()
    answerer = OracleAnswerer(env.ground_truth, cot=cfg.cot)
    record = run_grounder_episode(env, answerer, cfg, task_id="oracle-dry-run")
    if not record.success:
        raise ValueError(f"oracle dry-run failed on {env.task.problem.name}")
    return record.questions_asked
