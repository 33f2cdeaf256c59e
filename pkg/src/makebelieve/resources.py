"""Access to the data files shipped inside the package: worlds, prompt
templates, the verb lexicon, the imaginary-object tables, training stories
and replay fixtures."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib.resources import files
from pathlib import Path

from .dsl import WorldFormatError, parse_worldspec
from .world import WorldSpec

_DATA = files("makebelieve").joinpath("data")

BUNDLED_WORLDS = ("housework", "magic_bedroom")


def data_text(relative: str) -> str:
    return _DATA.joinpath(relative).read_text(encoding="utf-8")


def bundled_world_text(name: str) -> str:
    return data_text(f"worlds/{name}.world")


@lru_cache(maxsize=None)
def bundled_world(name: str) -> WorldSpec:
    result = parse_worldspec(bundled_world_text(name), filename=f"{name}.world")
    if result.world is None:  # pragma: no cover - bundled files are tested valid
        raise WorldFormatError(result.errors)
    return result.world


def bundled_sequence(name: str) -> list[str]:
    """Commands from a bundled .seq file (one per line, # comments)."""
    lines = data_text(f"sequences/{name}.seq").splitlines()
    return [line.strip() for line in lines if line.strip() and not line.strip().startswith("#")]


def prompt_template(name: str, override_dir: str | Path | None = None) -> str:
    """Bundled prompt text, or the caller's replacement from override_dir."""
    if override_dir is not None:
        candidate = Path(override_dir) / f"{name}.txt"
        if candidate.exists():
            return candidate.read_text(encoding="utf-8")
    return data_text(f"prompts/{name}.txt")


@lru_cache(maxsize=1)
def verb_lexicon() -> frozenset[str]:
    words: list[str] = []
    for line in data_text("verbs.txt").splitlines():
        words.extend(line.split("#", 1)[0].split())
    return frozenset(w.lower() for w in words)


@lru_cache(maxsize=1)
def setting_tables() -> dict:
    return json.loads(data_text("settings.json"))


@lru_cache(maxsize=1)
def training_samples() -> tuple[str, ...]:
    names = ("sample1", "sample2", "sample3")
    return tuple(data_text(f"samples/{name}.txt").strip() for name in names)


def fixture_path(name: str) -> Path:
    return Path(str(_DATA.joinpath(f"fixtures/{name}.json")))
