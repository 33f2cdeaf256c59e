"""Single entry point for the whole toolkit.

Subcommands: `validate` a world file, `play` it interactively, `run` a
command sequence through the planner, and `pipeline` for the full
story-driven loop. Exit codes everywhere: 0 success/win, 1 domain failure,
2 usage or I/O error, 3 backend failure. Data goes to stdout, diagnostics
to stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .dsl import parse_worldspec
from .engine import (
    CommandError,
    Movement,
    NoSuchAction,
    OUTCOME_SUCCEEDED,
    describe_room,
    new_game,
    parse_command,
    step,
    transcript_line,
    write_transcript,
)
from .llm import (
    ENV_API_KEY,
    ENV_ENDPOINT,
    ENV_MODEL,
    BackendFailure,
    FixtureMiss,
    LiveBackend,
    RecordBackend,
    ReplayBackend,
)
from .pipeline import PipelineBackendFailure, run_pipeline, write_run_artifacts
from .planner import run_episode
from .world import WorldSpec

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        click.echo(f"error: cannot read {path}: {err}", err=True)
        sys.exit(EXIT_USAGE)


def _load_world(path: str) -> WorldSpec:
    result = parse_worldspec(_read_text(path), filename=path)
    for diagnostic in result.diagnostics:
        click.echo(str(diagnostic), err=True)
    if result.world is None:
        sys.exit(EXIT_DOMAIN)
    return result.world


def _read_sequence(path: str) -> list[str]:
    lines = _read_text(path).splitlines()
    return [line.strip() for line in lines if line.strip() and not line.strip().startswith("#")]


@click.group()
def main() -> None:
    """Text-adventure worlds, plans, and the imaginary-play pipeline."""


@main.command()
@click.argument("world_file", type=click.Path())
def validate(world_file: str) -> None:
    """Check a .world file; print diagnostics with source positions."""
    result = parse_worldspec(_read_text(world_file), filename=world_file)
    for diagnostic in result.diagnostics:
        click.echo(str(diagnostic), err=True)
    if result.world is None:
        sys.exit(EXIT_DOMAIN)
    click.echo(f"{world_file}: ok ({result.world.name})")
    sys.exit(EXIT_OK)


@main.command()
@click.argument("world_file", type=click.Path())
@click.option("--transcript", "transcript_path", type=click.Path(),
              default="transcript.jsonl", show_default=True,
              help="Where to write the JSONL transcript on exit.")
def play(world_file: str, transcript_path: str) -> None:
    """Play a world interactively; `quit` leaves, `look` re-describes."""
    world = _load_world(world_file)
    state = new_game(world)
    click.echo(describe_room(state))
    while not state.ended:
        try:
            line = click.prompt("", prompt_suffix="> ", default="", show_default=False)
        except (click.Abort, EOFError):
            break
        line = line.strip()
        if not line:
            continue
        if line.lower() in ("quit", "exit"):
            break
        if line.lower() == "look":
            click.echo(describe_room(state))
            continue
        if line.lower() == "inventory":
            carried = [world.object(o).display_name for o in sorted(state.inventory)]
            click.echo("You carry: " + (", ".join(carried) if carried else "nothing") + ".")
            continue
        if line.lower() == "score":
            click.echo(f"Score: {state.cumulative_score}")
            continue
        try:
            command = parse_command(line, world)
            record = step(state, command)
        except (CommandError, NoSuchAction) as err:
            click.echo(f"Unknown command: {err}.")
            continue
        click.echo(record.narration)
        click.echo(f"[reward {record.reward} | score {state.cumulative_score}]")
        if isinstance(command, Movement) and record.outcome == OUTCOME_SUCCEEDED:
            click.echo(describe_room(state))
    try:
        with open(transcript_path, "w", encoding="utf-8") as fp:
            write_transcript(state.log, fp)
        click.echo(f"transcript written to {transcript_path}", err=True)
    except OSError as err:
        click.echo(f"error: cannot write transcript: {err}", err=True)
        sys.exit(EXIT_USAGE)
    sys.exit(EXIT_OK)


@main.command(name="run")
@click.argument("world_file", type=click.Path())
@click.argument("sequence_file", type=click.Path())
@click.option("--explain", is_flag=True, help="Include the augmented plan in the output.")
@click.option("--transcript", "transcript_path", type=click.Path(), default=None,
              help="Also write the episode transcript as JSONL.")
def run_cmd(world_file: str, sequence_file: str, explain: bool,
            transcript_path: str | None) -> None:
    """Execute a sequence file (one command per line) with auto-navigation."""
    world = _load_world(world_file)
    sequence = _read_sequence(sequence_file)
    result = run_episode(world, sequence)

    payload: dict = {
        "world": world.name,
        "win": result.win,
        "cumulative_score": result.cumulative_score,
        "last_reward": result.last_reward,
        "turns": result.turns,
        "failures": [json.loads(transcript_line(r)) for r in result.failures],
    }
    if result.plan_failure is not None:
        failure = result.plan_failure
        payload["plan_failure"] = {
            "failing_action": failure.failing_action,
            "reason": failure.reason,
            "condition": repr(failure.condition) if failure.condition else None,
            "detail": failure.detail,
        }
    else:
        payload["plan_failure"] = None
    if explain and result.plan is not None:
        payload["plan"] = [
            {"step": planned.text(), "provenance": planned.provenance}
            for planned in result.plan.steps
        ]
    click.echo(json.dumps(payload, indent=2, ensure_ascii=False))

    if transcript_path:
        try:
            with open(transcript_path, "w", encoding="utf-8") as fp:
                write_transcript(result.records, fp)
        except OSError as err:
            click.echo(f"error: cannot write transcript: {err}", err=True)
            sys.exit(EXIT_USAGE)
    sys.exit(EXIT_OK if result.win else EXIT_DOMAIN)


@main.command(name="pipeline")
@click.argument("world_file", type=click.Path())
@click.option("--setting", default="magical", show_default=True)
@click.option("--topic", default="saving a princess", show_default=True)
@click.option("--backend", "backend_name", default="deterministic", show_default=True,
              type=click.Choice(["deterministic", "replay", "record", "live"]))
@click.option("--fixtures", "fixtures_path", type=click.Path(), default=None,
              help="Fixture file (required for replay and record).")
@click.option("--max-iter", "max_iterations", type=int, default=3, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="pipeline_run", show_default=True,
              help="Directory for run artifacts.")
@click.option("--prompts", "prompts_dir", type=click.Path(), default=None,
              help="Directory of prompt template overrides.")
@click.option("--endpoint", envvar=ENV_ENDPOINT, default=None,
              help="Chat-completions endpoint (live/record).")
@click.option("--api-key", envvar=ENV_API_KEY, default=None)
@click.option("--model", envvar=ENV_MODEL, default="gpt-3.5-turbo", show_default=True)
def pipeline_cmd(world_file: str, setting: str, topic: str, backend_name: str,
                 fixtures_path: str | None, max_iterations: int, out_dir: str,
                 prompts_dir: str | None, endpoint: str | None, api_key: str | None,
                 model: str) -> None:
    """Run the story pipeline against a world and save the run artifacts."""
    world = _load_world(world_file)

    backend = None
    if backend_name == "replay":
        if not fixtures_path:
            click.echo("error: --backend replay needs --fixtures", err=True)
            sys.exit(EXIT_USAGE)
        try:
            backend = ReplayBackend(fixtures_path)
        except (OSError, ValueError) as err:
            click.echo(f"error: cannot load fixtures: {err}", err=True)
            sys.exit(EXIT_USAGE)
    elif backend_name in ("live", "record"):
        if not endpoint:
            click.echo("error: no endpoint configured (flag --endpoint or"
                       f" ${ENV_ENDPOINT})", err=True)
            sys.exit(EXIT_USAGE)
        live = LiveBackend(endpoint, api_key or "", model)
        if backend_name == "record":
            if not fixtures_path:
                click.echo("error: --backend record needs --fixtures", err=True)
                sys.exit(EXIT_USAGE)
            backend = RecordBackend(live, fixtures_path)
        else:
            backend = live

    try:
        runs = run_pipeline(
            world, setting, topic, backend, max_iterations, prompts_dir=prompts_dir
        )
    except (PipelineBackendFailure, BackendFailure, FixtureMiss) as err:
        click.echo(f"backend failure: {err}", err=True)
        sys.exit(EXIT_BACKEND)

    write_run_artifacts(out_dir, runs)
    click.echo(f"{'iter':>4}  {'sentences':>9}  {'phrases':>7}  {'score':>5}  win")
    for run in runs:
        click.echo(
            f"{run.iteration:>4}  {len(run.story.sentences):>9}  {len(run.phrases):>7}"
            f"  {run.result.cumulative_score:>5}  {'yes' if run.result.win else 'no'}"
        )
    click.echo(f"artifacts written to {out_dir}", err=True)
    sys.exit(EXIT_OK if any(run.result.win for run in runs) else EXIT_DOMAIN)


if __name__ == "__main__":
    main()
