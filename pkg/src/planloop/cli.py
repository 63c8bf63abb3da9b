"""Operator entry point: generate fixtures, run benchmark cells, report, validate.

Exit codes: 0 ok, 1 usage error, 2 infrastructure error, 3 validation failure.
All outputs are deterministic for local agents: rerunning an identical config
reproduces the summary byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import metrics
from .agents import (
    ChatAnswerer,
    ChatEndpointConfig,
    ChatPlanAgent,
    ConfigurationError,
    EndpointError,
    NoisyAnswerer,
    NoisyPlanAgent,
    NoisyProfile,
    OracleAnswerer,
    OraclePlanAgent,
    ReplayAnswerer,
    ReplayPlanAgent,
)
from .envs import (
    SPLITS,
    BwEnv,
    EnvConfig,
    HhEnv,
    generate_bw_problem,
    load_household_suite,
    render_bw_svg,
)
from .envs.blocksworld import load_domain as load_bw_domain
from .envs.household import load_domain as load_hh_domain
from .pddl import ParseError, ValidationError, apply, applicable, ground, parse_problem, problem_to_pddl
from .planner import PlanStatus, plan
from .protocol import (
    EpisodeRecord,
    GrounderConfig,
    PlannerLoopConfig,
    run_grounder_episode,
    run_planner_episode,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFRASTRUCTURE = 2
EXIT_VALIDATION = 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """One benchmark cell: (domain, splits, setting, CoT, agent)."""

    domain: str = "bw"  # bw | hh
    splits: list[str] = field(default_factory=lambda: ["simple", "medium", "hard"])
    setting: str = "grounder"  # grounder | planner
    cot: bool = False
    agent: dict = field(default_factory=lambda: {"kind": "oracle"})
    failure_prob: float = 0.0
    seed: int = 0
    out_dir: str = "runs/out"
    jobs: int = 0  # 0 = one worker per processor, capped for chat agents
    problems_per_split: int = 25
    fixtures: str = "fixtures/hh"
    max_replans: int = 10
    max_questions: int = 3000
    step_multiplier: int = 4
    planner_budget: int = 5_000_000
    compute_required_predictions: bool = True
    save_scenes: bool = True
    palette_file: str | None = None
    prompts_dir: str | None = None

    def validate(self) -> None:
        if self.domain not in ("bw", "hh"):
            raise UsageError(f"unknown domain {self.domain!r}")
        if self.setting not in ("grounder", "planner"):
            raise UsageError(f"unknown setting {self.setting!r}")
        for split in self.splits:
            if split not in SPLITS:
                raise UsageError(f"unknown split {split!r}")
        if self.agent.get("kind") not in ("oracle", "noisy", "replay", "chat"):
            raise UsageError(f"unknown agent kind {self.agent.get('kind')!r}")

    @staticmethod
    def from_file(path: str) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        config = RunConfig(**data)
        config.validate()
        return config

    def agent_label(self) -> str:
        kind = self.agent["kind"]
        if kind == "noisy":
            return f"noisy-{self.agent.get('accuracy', 0.97)}"
        if kind == "chat":
            model = self.agent.get("endpoint", {}).get("model", "model")
            return f"chat-{model}"
        return kind


@dataclass(frozen=True)
class TaskPayload:
    """Everything one worker needs to run a single episode; picklable."""

    task_id: str
    split: str
    domain: str
    problem_text: str
    env_seed: int
    agent_seed: int
    config: dict


def _make_env(payload: TaskPayload, artifact_dir: str | None = None):
    cfg = payload.config
    env_cfg = EnvConfig(
        failure_prob=cfg["failure_prob"], seed=payload.env_seed, kind=payload.domain
    )
    if payload.domain == "bw":
        domain = load_bw_domain()
        problem = parse_problem(payload.problem_text, domain)
        palette = None
        if cfg.get("palette_file"):
            palette = json.loads(Path(cfg["palette_file"]).read_text())
        return BwEnv(
            problem, env_cfg, domain=domain, artifact_dir=artifact_dir, palette=palette
        )
    domain = load_hh_domain()
    problem = parse_problem(payload.problem_text, domain)
    return HhEnv(problem, env_cfg, domain=domain, artifact_dir=artifact_dir)


def _replay_transcript(path: str, setting: str) -> list[str]:
    record = EpisodeRecord.from_jsonl(Path(path).read_text())
    if setting == "grounder":
        return [event["raw"] for event in record.question_events()]
    return [event["raw"] for event in record.plan_requests()]


def _make_answerer(env, payload: TaskPayload):
    cfg = payload.config
    spec = cfg["agent"]
    kind = spec["kind"]
    if kind == "oracle":
        return OracleAnswerer(env.ground_truth, cot=cfg["cot"])
    if kind == "noisy":
        profile = NoisyProfile(
            accuracy=spec.get("accuracy", 0.97),
            overrides=tuple((k, v) for k, v in spec.get("overrides", {}).items()),
            seed=payload.agent_seed,
        )
        return NoisyAnswerer(env.ground_truth, profile, cot=cfg["cot"])
    if kind == "replay":
        return ReplayAnswerer(_replay_transcript(spec["path"], "grounder"))
    if kind == "chat":
        endpoint = ChatEndpointConfig(**spec.get("endpoint", {}))
        log_path = Path(cfg["out_dir"]) / "chat_audit.jsonl"
        kind_name = "bw" if payload.domain == "bw" else "household"
        return ChatAnswerer(
            endpoint, kind_name, cot=cfg["cot"], log_path=log_path,
            prompts_dir=cfg.get("prompts_dir"),
        )
    raise UsageError(f"unknown agent kind {kind!r}")


def _make_plan_agent(env, payload: TaskPayload):
    cfg = payload.config
    spec = cfg["agent"]
    kind = spec["kind"]
    if kind == "oracle":
        return OraclePlanAgent(env.ground_truth, env.task, cfg["planner_budget"])
    if kind == "noisy":
        profile = NoisyProfile(
            accuracy=spec.get("accuracy", 0.97),
            overrides=tuple((k, v) for k, v in spec.get("overrides", {}).items()),
            seed=payload.agent_seed,
        )
        return NoisyPlanAgent(env.ground_truth, env.task, profile, cfg["planner_budget"])
    if kind == "replay":
        return ReplayPlanAgent(_replay_transcript(spec["path"], "planner"))
    if kind == "chat":
        endpoint = ChatEndpointConfig(**spec.get("endpoint", {}))
        log_path = Path(cfg["out_dir"]) / "chat_audit.jsonl"
        kind_name = "bw" if payload.domain == "bw" else "household"
        return ChatPlanAgent(
            endpoint, kind_name, cot=cfg["cot"], log_path=log_path,
            prompts_dir=cfg.get("prompts_dir"),
        )
    raise UsageError(f"unknown agent kind {kind!r}")


def _run_episode_worker(payload: TaskPayload) -> tuple[str, str]:
    """Run one episode, streaming its transcript; returns (task_id, JSONL)."""
    cfg = payload.config
    episode_dir = Path(cfg["out_dir"]) / "episodes" / payload.task_id
    episode_dir.mkdir(parents=True, exist_ok=True)
    artifact_dir = str(episode_dir) if cfg.get("save_scenes", True) else None
    transcript_path = episode_dir / "transcript.jsonl"
    with open(transcript_path, "w") as handle:

        def sink(event: dict) -> None:
            handle.write(json.dumps(event, sort_keys=True) + "\n")
            handle.flush()

        env = _make_env(payload, artifact_dir)
        if cfg["setting"] == "grounder":
            answerer = _make_answerer(env, payload)
            grounder_cfg = GrounderConfig(
                cot=cfg["cot"],
                max_replans=cfg["max_replans"],
                max_questions=cfg["max_questions"],
                planner_budget=cfg["planner_budget"],
            )
            record = run_grounder_episode(
                env, answerer, grounder_cfg,
                task_id=payload.task_id, seed=payload.env_seed, sink=sink,
            )
            if cfg["compute_required_predictions"]:
                record.required_predictions = _required_predictions(payload, record)
        else:
            agent = _make_plan_agent(env, payload)
            upper = SPLITS[payload.split].max_len if payload.domain == "bw" else cfg["split_upper"][payload.split]
            loop_cfg = PlannerLoopConfig(
                cot=cfg["cot"],
                max_steps=cfg["step_multiplier"] * upper,
                planner_budget=cfg["planner_budget"],
            )
            record = run_planner_episode(
                env, agent, loop_cfg,
                task_id=payload.task_id, seed=payload.env_seed, sink=sink,
            )
        handle.write(json.dumps(record.header(), sort_keys=True) + "\n")
    return payload.task_id, record.to_jsonl()


def _required_predictions(payload: TaskPayload, record: EpisodeRecord) -> int:
    cfg = payload.config
    if cfg["agent"]["kind"] == "oracle" and cfg["failure_prob"] == 0.0:
        return record.questions_asked  # the episode itself is the oracle dry-run
    from .protocol import oracle_required_predictions

    clean = TaskPayload(
        task_id=payload.task_id,
        split=payload.split,
        domain=payload.domain,
        problem_text=payload.problem_text,
        env_seed=payload.env_seed,
        agent_seed=payload.agent_seed,
        config={**cfg, "failure_prob": 0.0},
    )
    return oracle_required_predictions(lambda: _make_env(clean))


def _build_payloads(config: RunConfig) -> list[TaskPayload]:
    payloads = []
    cfg = asdict(config)
    if config.domain == "bw":
        domain = load_bw_domain()
        for split_name in config.splits:
            split = SPLITS[split_name]
            for i in range(config.problems_per_split):
                problem, _scene = generate_bw_problem(
                    split, config.seed + i, domain=domain, name=f"{split_name}_problem_{i}"
                )
                payloads.append(
                    TaskPayload(
                        task_id=f"bw-{split_name}-{i:03d}",
                        split=split_name,
                        domain="bw",
                        problem_text=problem_to_pddl(problem),
                        env_seed=config.seed * 1_000_003 + i,
                        agent_seed=config.seed * 7_000_003 + i,
                        config=cfg,
                    )
                )
    else:
        upper: dict[str, int] = {}
        for split_name in config.splits:
            suite = load_household_suite(split_name, config.fixtures)
            lengths = _manifest_lengths(config.fixtures, split_name)
            upper[split_name] = max(lengths) if lengths else 20
            for i, (problem, _env_cfg, _priv) in enumerate(suite):
                payloads.append(
                    TaskPayload(
                        task_id=f"hh-{split_name}-{i:03d}-{problem.name}",
                        split=split_name,
                        domain="hh",
                        problem_text=problem_to_pddl(problem),
                        env_seed=config.seed * 1_000_003 + i,
                        agent_seed=config.seed * 7_000_003 + i,
                        config=cfg,
                    )
                )
        for payload in payloads:
            payload.config["split_upper"] = upper
    return payloads


def _manifest_lengths(fixtures: str, split: str) -> list[int]:
    manifest = json.loads((Path(fixtures) / "manifest.json").read_text())
    return [row["actions"] for row in manifest.get(split, [])]


def _effective_jobs(config: RunConfig) -> int:
    jobs = config.jobs if config.jobs > 0 else (os.cpu_count() or 1)
    if config.agent.get("kind") == "chat":
        cap = config.agent.get("endpoint", {}).get("in_flight_cap", 4)
        jobs = min(jobs, cap)
    return jobs


def cmd_run(config: RunConfig) -> int:
    config.validate()
    out = Path(config.out_dir)
    (out / "episodes").mkdir(parents=True, exist_ok=True)
    payloads = _build_payloads(config)

    results: dict[str, str] = {}
    jobs = _effective_jobs(config)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for task_id, jsonl in pool.map(_run_episode_worker, payloads):
                results[task_id] = jsonl
    else:
        for payload in payloads:
            task_id, jsonl = _run_episode_worker(payload)
            results[task_id] = jsonl

    records: dict[str, list[EpisodeRecord]] = {split: [] for split in config.splits}
    for payload in payloads:
        records[payload.split].append(EpisodeRecord.from_jsonl(results[payload.task_id]))

    split_reports = {
        split: metrics.split_report(split, rows) for split, rows in records.items() if rows
    }
    combined = metrics.combined_average(list(split_reports.values()))
    summary = {
        "config": asdict(config),
        "agent": config.agent_label(),
        "setting": config.setting,
        "cot": config.cot,
        "domain": config.domain,
        "splits": {split: report.to_dict() for split, report in split_reports.items()},
        "combined": combined.to_dict(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for split, report in sorted(split_reports.items()):
        print(f"{config.domain}/{split}: {metrics.fmt2(report.rate)} ({metrics.fmt2(report.sem)}) over {report.n} tasks")
    print(f"combined: {metrics.fmt2(combined.mean)} ({metrics.fmt2(combined.sem)})")
    return EXIT_OK


def cmd_generate(split_name: str, count: int, seed: int, out_dir: str) -> int:
    if split_name not in SPLITS:
        raise UsageError(f"unknown split {split_name!r}")
    split = SPLITS[split_name]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    domain = load_bw_domain()
    rows = []
    for i in range(count):
        problem, scene = generate_bw_problem(
            split, seed + i, domain=domain, name=f"{split_name}_problem_{i}"
        )
        (out / f"problem_{i}.pddl").write_text(problem_to_pddl(problem))
        (out / f"scene_{i}.json").write_text(scene.to_json())
        (out / f"scene_{i}.svg").write_text(render_bw_svg(scene))
        rows.append({"file": f"problem_{i}.pddl", "seed": seed + i})
    manifest = {
        "domain": "bw",
        "split": split_name,
        "seed": seed,
        "count": count,
        "plan_length_range": [split.min_len, split.max_len],
        "problems": rows,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {count} {split_name} problems to {out}")
    return EXIT_OK


def _validate_bw_dir(path: Path, manifest: dict) -> list[str]:
    domain = load_bw_domain()
    lo, hi = manifest["plan_length_range"]
    failures = []
    for row in manifest["problems"]:
        problem_path = path / row["file"]
        try:
            problem = parse_problem(problem_path.read_text(), domain)
            task = ground(domain, problem)
            outcome = plan(task)
        except (ParseError, ValidationError, OSError) as exc:
            failures.append(f"{problem_path.name}: {exc}")
            continue
        if outcome.status is not PlanStatus.SOLVED:
            failures.append(f"{problem_path.name}: {outcome.status.value}")
            continue
        length = len(outcome.plan)
        replay = task.init
        ok = True
        for action in outcome.plan:
            if not applicable(replay, action):
                ok = False
                break
            replay = apply(replay, action)
        if not ok or not (task.goal_pos <= replay and not (task.goal_neg & replay)):
            failures.append(f"{problem_path.name}: plan does not execute to the goal")
        elif not lo <= length <= hi:
            failures.append(f"{problem_path.name}: plan length {length} outside [{lo}, {hi}]")
        else:
            print(f"ok {problem_path.name}: length {length} in [{lo}, {hi}]")
    return failures


def _validate_hh_dir(path: Path, manifest: dict) -> list[str]:
    domain = load_hh_domain()
    failures = []
    for split, rows in sorted(manifest.items()):
        for row in rows:
            problem_path = path / row["file"]
            expected = row["actions"]
            try:
                problem = parse_problem(problem_path.read_text(), domain)
                task = ground(domain, problem)
                outcome = plan(task)
            except (ParseError, ValidationError, OSError) as exc:
                failures.append(f"{row['file']}: {exc}")
                continue
            if outcome.status is not PlanStatus.SOLVED:
                failures.append(f"{row['file']}: {outcome.status.value}")
                continue
            length = len(outcome.plan)
            replay = task.init
            ok = True
            for action in outcome.plan:
                if not applicable(replay, action):
                    ok = False
                    break
                replay = apply(replay, action)
            if not ok or not (task.goal_pos <= replay and not (task.goal_neg & replay)):
                failures.append(f"{row['file']}: plan does not execute to the goal")
            elif length != expected:
                failures.append(f"{row['file']}: plan length {length}, expected {expected}")
            else:
                print(f"ok {row['file']}: length {length}")
    return failures


def cmd_validate(fixture_dir: str) -> int:
    path = Path(fixture_dir)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        if not path.exists() or not any(path.iterdir()):
            print(f"warning: nothing to validate in {path}")
            return EXIT_OK
        raise UsageError(f"no manifest.json in {path}")
    manifest = json.loads(manifest_path.read_text())
    if isinstance(manifest, dict) and manifest.get("domain") == "bw":
        failures = _validate_bw_dir(path, manifest)
    else:
        failures = _validate_hh_dir(path, manifest)
    for failure in failures:
        print(f"FAIL {failure}", file=sys.stderr)
    return EXIT_VALIDATION if failures else EXIT_OK


def cmd_report(run_dirs: list[str], out_dir: str) -> int:
    if not run_dirs:
        raise UsageError("report needs at least one run directory")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells: dict[tuple[str, str, bool], dict[str, list[metrics.SplitReport]]] = {}
    all_records: list[EpisodeRecord] = []
    for run_dir in run_dirs:
        run_path = Path(run_dir)
        summary = json.loads((run_path / "summary.json").read_text())
        key = (summary["agent"], summary["setting"], summary["cot"])
        domain = summary["domain"]
        per_domain = cells.setdefault(key, {})
        reports = per_domain.setdefault(domain, [])
        for label, data in sorted(summary["splits"].items()):
            reports.append(
                metrics.SplitReport(
                    label=label,
                    n=data["n"],
                    successes=data["successes"],
                    rate=data["rate"],
                    sem=data["sem"],
                )
            )
        episodes_dir = run_path / "episodes"
        if episodes_dir.exists():
            for episode_path in sorted(episodes_dir.glob("*/transcript.jsonl")):
                try:
                    all_records.append(EpisodeRecord.from_jsonl(episode_path.read_text()))
                except ValueError:
                    print(f"warning: skipping incomplete transcript {episode_path}", file=sys.stderr)

    rows = metrics.leaderboard(cells)
    (out / "leaderboard.txt").write_text(metrics.leaderboard_text(rows))
    (out / "leaderboard.csv").write_text(metrics.leaderboard_csv(rows))
    (out / "leaderboard.json").write_text(metrics.leaderboard_json(rows))
    buckets = metrics.compounding_curve(all_records)
    (out / "compounding.csv").write_text(metrics.compounding_plot_data(buckets))
    (out / "compounding.svg").write_text(metrics.compounding_svg(buckets))
    comparison = metrics.cot_comparison(cells)
    if comparison:
        (out / "cot_comparison.csv").write_text(metrics.cot_comparison_csv(comparison))
    print(metrics.leaderboard_text(rows), end="")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="planloop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate block-stacking problems for a split")
    gen.add_argument("--split", required=True, choices=sorted(SPLITS))
    gen.add_argument("--count", type=int, default=25)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="run one benchmark cell")
    run.add_argument("--config", help="JSON config file; flags below override it")
    run.add_argument("--domain", choices=["bw", "hh"])
    run.add_argument("--splits", nargs="+")
    run.add_argument("--setting", choices=["grounder", "planner"])
    run.add_argument("--agent", help="agent kind: oracle | noisy | replay | chat")
    run.add_argument("--accuracy", type=float, help="noisy agent accuracy")
    run.add_argument("--cot", action="store_true", default=None)
    run.add_argument("--no-cot", dest="cot", action="store_false")
    run.add_argument("--failure-prob", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--jobs", type=int)
    run.add_argument("--problems-per-split", type=int)
    run.add_argument("--fixtures")

    rep = sub.add_parser("report", help="aggregate run directories into a leaderboard")
    rep.add_argument("runs", nargs="+")
    rep.add_argument("--out", default="report")

    val = sub.add_parser("validate", help="check a fixture directory with the search oracle")
    val.add_argument("fixtures")

    return parser


def _run_config_from_args(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.domain:
        config.domain = args.domain
    if args.splits:
        config.splits = args.splits
    if args.setting:
        config.setting = args.setting
    if args.agent:
        config.agent = {"kind": args.agent}
    if args.accuracy is not None:
        config.agent.setdefault("kind", "noisy")
        config.agent["accuracy"] = args.accuracy
    if args.cot is not None:
        config.cot = args.cot
    if args.failure_prob is not None:
        config.failure_prob = args.failure_prob
    if args.seed is not None:
        config.seed = args.seed
    if args.out:
        config.out_dir = args.out
    if args.jobs is not None:
        config.jobs = args.jobs
    elif config.jobs <= 0:
        config.jobs = os.cpu_count() or 1
    if args.problems_per_split is not None:
        config.problems_per_split = args.problems_per_split
    if args.fixtures:
        config.fixtures = args.fixtures
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "generate":
            return cmd_generate(args.split, args.count, args.seed, args.out)
        if args.command == "run":
            return cmd_run(_run_config_from_args(args))
        if args.command == "report":
            return cmd_report(args.runs, args.out)
        if args.command == "validate":
            return cmd_validate(args.fixtures)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, EndpointError, FileNotFoundError) as exc:
        print(f"infrastructure error: {exc}", file=sys.stderr)
        return EXIT_INFRASTRUCTURE


if __name__ == "__main__":
    sys.exit(main())
