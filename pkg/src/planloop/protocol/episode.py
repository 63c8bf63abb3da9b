"""Episode transcripts: configs, event log, counters, outcome."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from ..pddl import GroundAtom

OUTCOME_SUCCESS = "success"
OUTCOME_BUDGET = "budget-exhausted"
OUTCOME_PARSE_DEADLOCK = "parse-deadlock"


@dataclass(frozen=True)
class GrounderConfig:
    cot: bool = False
    max_replans: int = 10
    max_questions: int = 3000
    planner_budget: int = 5_000_000
    query_order: str = "sorted"  # predicate name, then arguments

    def __post_init__(self) -> None:
        if self.max_replans < 0 or self.max_questions <= 0:
            raise ValueError("grounder budgets must be positive")
        if self.query_order != "sorted":
            raise ValueError(f"unknown query ordering rule {self.query_order!r}")


@dataclass(frozen=True)
class PlannerLoopConfig:
    cot: bool = False
    max_steps: int = 20
    planner_budget: int = 5_000_000

    def __post_init__(self) -> None:
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")

    @staticmethod
    def for_split(upper_plan_length: int, *, cot: bool = False, multiplier: int = 4) -> "PlannerLoopConfig":
        if multiplier < 1:
            raise ValueError("the step budget cannot undercut the split's plan-length bound")
        return PlannerLoopConfig(cot=cot, max_steps=multiplier * upper_plan_length)


@dataclass
class EpisodeRecord:
    """Complete transcript of one task run.

    When a sink is attached every event is forwarded as it happens, so a
    crash mid-episode still leaves a stream of complete JSONL lines.
    """

    task_id: str
    setting: str  # "grounder" | "planner"
    cot: bool
    seed: int
    events: list[dict[str, Any]] = field(default_factory=list)
    questions_asked: int = 0
    replans: int = 0
    steps: int = 0
    outcome: str = ""
    success: bool = False
    required_predictions: int | None = None
    sink: Any = field(default=None, repr=False, compare=False)

    # -- event constructors ---------------------------------------------------

    def _emit(self, event: dict[str, Any]) -> None:
        self.events.append(event)
        if self.sink is not None:
            self.sink(event)

    def log_question(
        self,
        atom: GroundAtom,
        question: str,
        raw: str,
        verdict: str,
        truth: bool,
        phase: str,
    ) -> None:
        self.questions_asked += 1
        self._emit(
            {
                "kind": "question",
                "atom": [atom.pred, list(atom.args)],
                "question": question,
                "raw": raw,
                "verdict": verdict,
                "truth": truth,
                "phase": phase,
            }
        )

    def log_parse_fault(self, raw: str, where: str) -> None:
        self._emit({"kind": "parse_fault", "raw": raw, "where": where})

    def log_plan_request(self, raw: str, parsed: list | None) -> None:
        self._emit({"kind": "plan_request", "raw": raw, "parsed": parsed})

    def log_action(self, name: str, args: tuple[str, ...], executed: bool) -> None:
        self.steps += 1
        self._emit({"kind": "action", "action": [name, list(args)], "executed": executed})

    def log_replan(self, reason: str) -> None:
        self.replans += 1
        self._emit({"kind": "replan", "reason": reason})

    # -- queries ----------------------------------------------------------------

    def question_events(self) -> Iterator[dict[str, Any]]:
        return (e for e in self.events if e["kind"] == "question")

    def plan_requests(self) -> Iterator[dict[str, Any]]:
        return (e for e in self.events if e["kind"] == "plan_request")

    # -- serialization ------------------------------------------------------------

    def header(self) -> dict[str, Any]:
        return {
            "kind": "episode",
            "task_id": self.task_id,
            "setting": self.setting,
            "cot": self.cot,
            "seed": self.seed,
            "outcome": self.outcome,
            "success": self.success,
            "questions_asked": self.questions_asked,
            "replans": self.replans,
            "steps": self.steps,
            "required_predictions": self.required_predictions,
        }

    def to_jsonl(self) -> str:
        """Event lines in order, closed by the summary header as a trailer."""
        lines = [json.dumps(event, sort_keys=True) for event in self.events]
        lines.append(json.dumps(self.header(), sort_keys=True))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "EpisodeRecord":
        lines = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not lines or lines[-1].get("kind") != "episode":
            raise ValueError("not a complete episode transcript")
        head = lines[-1]
        record = EpisodeRecord(
            task_id=head["task_id"],
            setting=head["setting"],
            cot=head["cot"],
            seed=head["seed"],
            events=lines[:-1],
            outcome=head["outcome"],
            success=head["success"],
            required_predictions=head.get("required_predictions"),
        )
        record.questions_asked = head["questions_asked"]
        record.replans = head["replans"]
        record.steps = head["steps"]
        return record


class QuestionBudgetExceeded(Exception):
    """Raised inside an episode when the total question budget runs out."""
