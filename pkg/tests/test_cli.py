import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from makebelieve.cli import main
from makebelieve.resources import fixture_path

DATA = Path(__file__).resolve().parent.parent / "src/makebelieve/data"
HOUSEWORK = str(DATA / "worlds/housework.world")
MAGIC = str(DATA / "worlds/magic_bedroom.world")
EXEMPLAR = str(DATA / "sequences/housework_exemplar.seq")
TASKS = str(DATA / "sequences/housework_tasks.seq")
FIXTURES = str(fixture_path("magical_golden"))


@pytest.fixture()
def runner():
    return CliRunner()


# -- validate -----------------------------------------------------------------

def test_validate_bundled_world(runner):
    result = runner.invoke(main, ["validate", HOUSEWORK])
    assert result.exit_code == 0
    assert "ok" in result.stdout


def test_validate_missing_file(runner):
    result = runner.invoke(main, ["validate", "/no/such/file.world"])
    assert result.exit_code == 2


def test_validate_invalid_world(runner, tmp_path):
    bad = tmp_path / "bad.world"
    bad.write_text("world broken\nroom a \"A\"\nconnect a east nowhere\n")
    result = runner.invoke(main, ["validate", str(bad)])
    assert result.exit_code == 1
    assert "UNKNOWN_ROOM" in result.stderr or "MISSING_START" in result.stderr
    assert result.stderr.count("error") >= 1


def test_validate_warning_still_ok(runner, tmp_path):
    text = Path(HOUSEWORK).read_text() + "\nfutardirective something\n"
    world_file = tmp_path / "warn.world"
    world_file.write_text(text)
    result = runner.invoke(main, ["validate", str(world_file)])
    assert result.exit_code == 0
    assert "UNKNOWN_DIRECTIVE" in result.stderr


# -- run ----------------------------------------------------------------------

def test_run_exemplar_scores_four(runner):
    result = runner.invoke(main, ["run", HOUSEWORK, EXEMPLAR])
    assert result.exit_code == 1  # no win
    payload = json.loads(result.stdout)
    assert payload["cumulative_score"] == 4
    assert payload["win"] is False
    # machine-readable output keeps a stable key order
    assert list(payload) == [
        "world", "win", "cumulative_score", "last_reward", "turns",
        "failures", "plan_failure",
    ]


def test_run_tasks_wins(runner):
    result = runner.invoke(main, ["run", HOUSEWORK, TASKS])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["win"] is True and payload["last_reward"] == 5


def test_run_empty_sequence(runner, tmp_path):
    empty = tmp_path / "empty.seq"
    empty.write_text("# nothing here\n")
    result = runner.invoke(main, ["run", HOUSEWORK, str(empty)])
    assert result.exit_code == 1
    assert json.loads(result.stdout)["win"] is False


def test_run_explain_shows_plan(runner):
    result = runner.invoke(main, ["run", HOUSEWORK, EXEMPLAR, "--explain"])
    payload = json.loads(result.stdout)
    steps = payload["plan"]
    assert {"step": "take kettle", "provenance": "prerequisite"} in steps
    assert steps[-1] == {"step": "water plant", "provenance": "given"}


def test_run_writes_transcript(runner, tmp_path):
    out = tmp_path / "episode.jsonl"
    runner.invoke(main, ["run", HOUSEWORK, EXEMPLAR, "--transcript", str(out)])
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert rows and list(rows[0]) == ["turn", "input", "outcome", "reward", "score", "narration"]


# -- play ---------------------------------------------------------------------

def test_play_scoring_and_idempotence(runner, tmp_path):
    script = "take cloth\ngo south\ngo west\nclean cloth\nwash cloth\nquit\n"
    transcript = tmp_path / "t.jsonl"
    result = runner.invoke(
        main, ["play", HOUSEWORK, "--transcript", str(transcript)], input=script
    )
    assert result.exit_code == 0
    assert "[reward 2 | score 2]" in result.stdout
    assert "[reward 0 | score 2]" in result.stdout
    assert transcript.exists()


def test_play_blocked_movement(runner, tmp_path):
    result = runner.invoke(
        main,
        ["play", HOUSEWORK, "--transcript", str(tmp_path / "t.jsonl")],
        input="go north\nquit\n",
    )
    assert result.exit_code == 0
    assert "can't go north" in result.stdout


def test_play_win_exits_cleanly(runner, tmp_path):
    result = runner.invoke(
        main,
        ["play", MAGIC, "--transcript", str(tmp_path / "t.jsonl")],
        input="go east\nboil pot\n",
    )
    assert result.exit_code == 0
    assert "+5" in result.stdout


# -- pipeline -------------------------------------------------------------------

def test_pipeline_fixture_backed(runner, tmp_path):
    result = runner.invoke(main, [
        "pipeline", MAGIC, "--backend", "replay", "--fixtures", FIXTURES,
        "--out", str(tmp_path / "run"),
    ])
    assert result.exit_code == 0
    lines = [l for l in result.stdout.splitlines() if l.strip()]
    assert len([l for l in lines if l.lstrip().startswith(("1", "2"))]) == 2
    assert "yes" in lines[-1]
    assert (tmp_path / "run" / "mapping.json").exists()


def test_pipeline_replay_needs_fixtures_flag(runner):
    result = runner.invoke(main, ["pipeline", MAGIC, "--backend", "replay"])
    assert result.exit_code == 2


def test_pipeline_fixture_miss_is_backend_failure(runner, tmp_path):
    # Valid fixture file, wrong world: every digest misses.
    result = runner.invoke(main, [
        "pipeline", HOUSEWORK, "--backend", "replay", "--fixtures", FIXTURES,
        "--out", str(tmp_path / "run"),
    ])
    assert result.exit_code == 3
    assert "no fixture for digest" in result.stderr


def test_pipeline_max_iter_one_no_win(runner, tmp_path):
    result = runner.invoke(main, [
        "pipeline", MAGIC, "--backend", "replay", "--fixtures", FIXTURES,
        "--max-iter", "1", "--out", str(tmp_path / "run"),
    ])
    assert result.exit_code == 1
    assert "no" in result.stdout


def test_pipeline_live_requires_endpoint(runner, monkeypatch):
    monkeypatch.delenv("MAKEBELIEVE_ENDPOINT", raising=False)
    result = runner.invoke(main, ["pipeline", MAGIC, "--backend", "live"])
    assert result.exit_code == 2
    assert "endpoint" in result.stderr
