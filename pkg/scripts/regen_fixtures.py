#!/usr/bin/env python3
"""Rebuild the bundled replay fixtures for the magical bedroom pipeline.

Run after changing prompt templates, the magic_bedroom world, or anything
else that shifts request digests:

    python3 scripts/regen_fixtures.py

The script feeds the canned story texts through the real pipeline with a
scripted backend that records (digest -> response) pairs, then writes them
to src/makebelieve/data/fixtures/magical_golden.json.
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from makebelieve.llm import ChatRequest, FixtureStore, request_digest
from makebelieve.pipeline import run_pipeline
from makebelieve.resources import bundled_world

OUT = Path(__file__).resolve().parent.parent / "src/makebelieve/data/fixtures/magical_golden.json"

MAPPING_REPLY = """\
clothes -> Whisperweaver
nightstand -> Ancient Chest
broom -> Enchanted Staff
dresser -> Crescent Mirror
pot -> Cauldron
"""

STORY_FIRST = (
    "Whisperweaver discovers hidden passage. "
    "Uncover ancient chest in hidden passage. "
    "Open chest to reveal enchanted staff. "
    "Also find Crescent Mirror in chest. "
    "Wield enchanted staff for enhanced spellcasting. "
    "Use Crescent Mirror for scrying and divination. "
    "Harness the power of the enchanted staff and mirror to defeat evil forces"
    " and save princess."
)

SIMPLIFIED_FIRST = (
    "1. Discovers Whisperweaver 2. Uncover Ancient Chest 3. Reveal Enchanted Staff"
    " 4. Find Crescent Mirror 5. Wield Enchanted Staff 6. Use Crescent Mirror"
    " 7. Harness Enchanted Staff."
)

TRANSLATION_FIRST = (
    "1. Wear clothes 2. Open nightstand 3. Use broom. 4. Open dresser 5. Use broom."
    " 6. Open dresser 7. Use broom."
)

CONTINUATION = (
    "Discover recipe for elixir with Crescent Mirror. "
    "Brew elixir in the cauldron. "
    "Use enchanted staff to activate the elixir. "
    "Use transformed abilities from elixir to defeat the evil threat."
)

SIMPLIFIED_SECOND = (
    "1. Discovers Whisperweaver 2. Uncover Ancient Chest 3. Reveal Enchanted Staff"
    " 4. Find Crescent Mirror 5. Wield Enchanted Staff 6. Use Crescent Mirror"
    " 7. Discover Crescent Mirror 8. Brew Cauldron 9. Use Enchanted Staff."
)

TRANSLATION_SECOND = (
    "1. Wear clothes 2. Open nightstand 3. Use broom 4. Open dresser 5. Use broom"
    " 6. Open dresser 7. Open dresser 8. Boil pot 9. Use broom"
)

RESPONSES = [
    MAPPING_REPLY,
    STORY_FIRST,
    SIMPLIFIED_FIRST,
    TRANSLATION_FIRST,
    CONTINUATION,
    SIMPLIFIED_SECOND,
    TRANSLATION_SECOND,
]


class ScriptedBackend:
    """Answers from a fixed list, recording every exchange as a fixture."""

    def __init__(self, responses: list[str]):
        self.pending = list(responses)
        self.store = FixtureStore()

    def complete(self, request: ChatRequest) -> str:
        if not self.pending:
            raise RuntimeError("scripted backend ran out of responses")
        response = self.pending.pop(0)
        last_user = next((t for r, t in reversed(request.messages) if r == "user"), "")
        summary = " ".join(last_user.split())[:120]
        self.store.put(request_digest(request), summary, response)
        return response


def main() -> None:
    world = bundled_world("magic_bedroom")
    backend = ScriptedBackend(RESPONSES)
    runs = run_pipeline(world, "magical", "saving a princess", backend, max_iterations=3)

    assert not backend.pending, f"unused scripted responses: {len(backend.pending)}"
    assert len(runs) == 2, f"expected 2 iterations, got {len(runs)}"
    assert not runs[0].result.win and runs[1].result.win, "iteration 2 should win"

    expected_first = [
        "wear clothes", "open nightstand", "use broom", "open dresser",
        "use broom", "open dresser", "use broom",
    ]
    got_first = [tc.text() for tc in runs[0].sequence.commands]
    assert got_first == expected_first, f"iteration 1 translation drifted: {got_first}"

    backend.store.save(OUT)
    print(f"wrote {len(backend.store.entries)} fixtures to {OUT}")
    for run in runs:
        print(
            f"  iteration {run.iteration}: {len(run.story.sentences)} sentences,"
            f" {len(run.phrases)} phrases, score {run.result.cumulative_score},"
            f" win={run.result.win}"
        )


if __name__ == "__main__":
    main()
