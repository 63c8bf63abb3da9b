from __future__ import annotations

import json
from pathlib import Path

import pytest

from planloop.cli import (
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION,
    RunConfig,
    cmd_generate,
    cmd_report,
    cmd_run,
    cmd_validate,
    main,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def read_tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestGenerate:
    def test_writes_all_artifact_kinds(self, tmp_path):
        out = tmp_path / "gen"
        assert cmd_generate("simple", 3, 0, str(out)) == EXIT_OK
        names = {p.name for p in out.iterdir()}
        assert names == {
            "manifest.json",
            "problem_0.pddl", "problem_1.pddl", "problem_2.pddl",
            "scene_0.json", "scene_1.json", "scene_2.json",
            "scene_0.svg", "scene_1.svg", "scene_2.svg",
        }

    def test_idempotent_per_seed(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cmd_generate("simple", 2, 5, str(a))
        cmd_generate("simple", 2, 5, str(b))
        assert read_tree(a) == read_tree(b)

    def test_count_zero_succeeds_with_no_problems(self, tmp_path):
        out = tmp_path / "none"
        assert cmd_generate("simple", 0, 0, str(out)) == EXIT_OK
        assert json.loads((out / "manifest.json").read_text())["problems"] == []


class TestValidate:
    def test_generated_problems_pass(self, tmp_path):
        out = tmp_path / "gen"
        cmd_generate("simple", 2, 1, str(out))
        assert cmd_validate(str(out)) == EXIT_OK

    def test_corrupted_problem_fails(self, tmp_path, capsys):
        out = tmp_path / "gen"
        cmd_generate("simple", 2, 1, str(out))
        (out / "problem_1.pddl").write_text("(define (problem broken)")
        assert cmd_validate(str(out)) == EXIT_VALIDATION
        assert "problem_1.pddl" in capsys.readouterr().err

    def test_out_of_range_problem_fails(self, tmp_path):
        out = tmp_path / "gen"
        cmd_generate("simple", 1, 1, str(out))
        manifest = json.loads((out / "manifest.json").read_text())
        manifest["plan_length_range"] = [5, 5]
        (out / "manifest.json").write_text(json.dumps(manifest))
        assert cmd_validate(str(out)) == EXIT_VALIDATION

    def test_empty_directory_warns_and_passes(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert cmd_validate(str(empty)) == EXIT_OK
        assert "nothing to validate" in capsys.readouterr().out

    def test_household_fixture_simple_split(self, tmp_path):
        # Validate a manifest restricted to the simple split to keep it quick.
        manifest = json.loads((FIXTURES / "hh" / "manifest.json").read_text())
        slim = {"simple": manifest["simple"]}
        root = tmp_path / "hh"
        (root / "simple").mkdir(parents=True)
        (root / "manifest.json").write_text(json.dumps(slim))
        for row in slim["simple"]:
            src = FIXTURES / "hh" / row["file"]
            (root / row["file"]).write_text(src.read_text())
        assert cmd_validate(str(root)) == EXIT_OK


def run_config(tmp_path, **overrides) -> RunConfig:
    base = dict(
        domain="bw",
        splits=["simple"],
        setting="grounder",
        agent={"kind": "oracle"},
        seed=0,
        out_dir=str(tmp_path / "run"),
        jobs=1,
        problems_per_split=3,
        fixtures=str(FIXTURES / "hh"),
    )
    base.update(overrides)
    return RunConfig(**base)


class TestRun:
    def test_oracle_grounder_summary(self, tmp_path):
        config = run_config(tmp_path)
        assert cmd_run(config) == EXIT_OK
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        assert summary["splits"]["simple"]["rate"] == 1.0
        assert summary["splits"]["simple"]["n"] == 3
        episodes = list((tmp_path / "run" / "episodes").glob("*/transcript.jsonl"))
        assert len(episodes) == 3
        # Scene artifacts accompany every step of every episode.
        scenes = list((tmp_path / "run" / "episodes").glob("*/scene_000.svg"))
        assert len(scenes) == 3

    def test_rerun_is_byte_identical(self, tmp_path):
        config_a = run_config(tmp_path, out_dir=str(tmp_path / "a"))
        config_b = run_config(tmp_path, out_dir=str(tmp_path / "b"))
        cmd_run(config_a)
        cmd_run(config_b)
        a = json.loads((tmp_path / "a" / "summary.json").read_text())
        b = json.loads((tmp_path / "b" / "summary.json").read_text())
        a["config"].pop("out_dir")
        b["config"].pop("out_dir")
        assert a == b
        assert read_tree(tmp_path / "a" / "episodes") == read_tree(tmp_path / "b" / "episodes")

    def test_parallel_matches_serial(self, tmp_path):
        serial = run_config(tmp_path, out_dir=str(tmp_path / "serial"), jobs=1)
        parallel = run_config(tmp_path, out_dir=str(tmp_path / "parallel"), jobs=2)
        cmd_run(serial)
        cmd_run(parallel)
        assert read_tree(tmp_path / "serial" / "episodes") == read_tree(tmp_path / "parallel" / "episodes")

    def test_noisy_planner_runs_to_completion(self, tmp_path):
        config = run_config(
            tmp_path,
            setting="planner",
            agent={"kind": "noisy", "accuracy": 0.5},
            problems_per_split=2,
        )
        assert cmd_run(config) == EXIT_OK  # task failures are data, not errors

    def test_household_oracle_run(self, tmp_path):
        config = run_config(tmp_path, domain="hh", splits=["simple"], problems_per_split=25)
        assert cmd_run(config) == EXIT_OK
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        assert summary["splits"]["simple"]["rate"] == 1.0
        assert summary["splits"]["simple"]["n"] == 25

    def test_unreachable_chat_endpoint_exits_infrastructure(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PLANLOOP_TEST_KEY", "k")
        config = run_config(
            tmp_path,
            agent={
                "kind": "chat",
                "model": "m",
                "endpoint": {
                    "base_url": "http://127.0.0.1:1",  # nothing listens here
                    "model": "m",
                    "api_key_env": "PLANLOOP_TEST_KEY",
                    "retries": 0,
                    "timeout": 0.2,
                },
            },
            problems_per_split=1,
        )
        code = main(
            ["run", "--config", _write_config(tmp_path, config)]
        )
        assert code == 2

    def test_required_predictions_annotated(self, tmp_path):
        config = run_config(tmp_path)
        cmd_run(config)
        episode = next((tmp_path / "run" / "episodes").glob("*/transcript.jsonl"))
        header = json.loads(episode.read_text().splitlines()[-1])
        assert header["kind"] == "episode"
        assert header["required_predictions"] > 0

    def test_interrupted_episode_leaves_complete_lines(self, tmp_path):
        config = run_config(tmp_path)
        cmd_run(config)
        episode = next((tmp_path / "run" / "episodes").glob("*/transcript.jsonl"))
        # Every streamed line is standalone JSON even without the trailer.
        lines = episode.read_text().splitlines()
        for line in lines:
            json.loads(line)
        from planloop.protocol import EpisodeRecord

        with pytest.raises(ValueError):
            EpisodeRecord.from_jsonl("\n".join(lines[:-1]))


def _write_config(tmp_path, config: RunConfig) -> str:
    import dataclasses

    path = tmp_path / "config.json"
    path.write_text(json.dumps(dataclasses.asdict(config)))
    return str(path)


class TestReport:
    def test_merges_two_runs(self, tmp_path):
        bw_run = run_config(tmp_path, out_dir=str(tmp_path / "bw-run"))
        cmd_run(bw_run)
        hh_run = run_config(
            tmp_path, domain="hh", splits=["simple"], problems_per_split=25, out_dir=str(tmp_path / "hh-run")
        )
        cmd_run(hh_run)
        out = tmp_path / "report"
        assert cmd_report([str(tmp_path / "bw-run"), str(tmp_path / "hh-run")], str(out)) == EXIT_OK
        text = (out / "leaderboard.txt").read_text()
        assert "oracle" in text
        rows = json.loads((out / "leaderboard.json").read_text())
        assert rows[0]["combined"]["mean"] == 1.0
        assert set(rows[0]["domains"]) == {"bw", "hh"}
        assert (out / "compounding.csv").read_text().count("\n") >= 2
        assert (out / "compounding.svg").exists()

    def test_single_run_single_row(self, tmp_path):
        cmd_run(run_config(tmp_path, out_dir=str(tmp_path / "solo")))
        out = tmp_path / "report"
        assert cmd_report([str(tmp_path / "solo")], str(out)) == EXIT_OK
        rows = json.loads((out / "leaderboard.json").read_text())
        assert len(rows) == 1

    def test_same_triplet_runs_merge_into_one_row(self, tmp_path):
        cmd_run(run_config(tmp_path, out_dir=str(tmp_path / "first"), seed=0))
        cmd_run(run_config(tmp_path, out_dir=str(tmp_path / "second"), seed=9))
        out = tmp_path / "report"
        cmd_report([str(tmp_path / "first"), str(tmp_path / "second")], str(out))
        rows = json.loads((out / "leaderboard.json").read_text())
        assert len(rows) == 1
        assert len(rows[0]["domains"]["bw"]["members"]) == 2

    def test_cot_comparison_emitted_for_paired_runs(self, tmp_path):
        cmd_run(run_config(tmp_path, out_dir=str(tmp_path / "plain"), cot=False))
        cmd_run(run_config(tmp_path, out_dir=str(tmp_path / "cot"), cot=True))
        out = tmp_path / "report"
        cmd_report([str(tmp_path / "plain"), str(tmp_path / "cot")], str(out))
        lines = (out / "cot_comparison.csv").read_text().splitlines()
        assert lines[0] == "agent,setting,domain,difference,error,ratio"
        assert lines[1].startswith("oracle,grounder,bw,0.000000")

    def test_empty_run_list_is_usage_error(self, tmp_path):
        assert main(["report", "--out", str(tmp_path / "r")]) == EXIT_USAGE


class TestMain:
    def test_usage_error_exit_code(self):
        assert main(["run", "--domain", "marsbase"]) == EXIT_USAGE

    def test_unknown_split_rejected(self):
        assert main(["generate", "--split", "extreme", "--out", "/tmp/x"]) == EXIT_USAGE

    def test_missing_fixture_dir_is_infrastructure(self, tmp_path):
        code = main(
            [
                "run",
                "--domain", "hh",
                "--splits", "simple",
                "--agent", "oracle",
                "--out", str(tmp_path / "out"),
                "--fixtures", str(tmp_path / "missing"),
            ]
        )
        assert code == 2
