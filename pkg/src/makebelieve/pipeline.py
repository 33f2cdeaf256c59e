"""The imaginary-play loop: map real objects to imaginary ones, generate a
story about them, distill it to verb+object phrases, translate those back
into admissible game commands, play them, and feed the outcome into the
next prompt.

Every operation runs in two modes: with a chat backend (live or replay
fixtures) or fully deterministic (rule-based, no model). The deterministic
rules also serve as the repair path whenever model output fails
validation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .engine import Command, CommandError, EpisodeResult, parse_command, write_transcript
from .llm import Backend, BackendFailure, ChatRequest, FixtureMiss, complete
from .planner import run_episode
from .resources import prompt_template, setting_tables, training_samples, verb_lexicon
from .world import Holds, InRoom, Near, StateIs, WorldSpec

SYSTEM_STORYTELLER = (
    "You are a playful storyteller helping a home robot play games of pretend."
)
SYSTEM_EXTRACTOR = (
    "You turn stories into short verb-object phrases for a game engine."
    " Answer only in the requested format, nothing else."
)


class ConstraintUnsatisfied(Exception):
    """The story (or its continuation) kept violating the one-new-object rule."""


class NoAdmissibleAction(Exception):
    """A phrase maps to a real object that has no declared actions."""


class PipelineBackendFailure(Exception):
    """A backend failure, annotated with the pipeline iteration it hit."""

    def __init__(self, iteration: int, cause: Exception):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"iteration {iteration}: {cause}")


# ---------------------------------------------------------------------------
# Data types

@dataclass(frozen=True)
class MappingEntry:
    real: str  # object id in the world
    imaginary: str
    rationale: str = ""


@dataclass(frozen=True)
class ObjectMapping:
    setting: str
    entries: tuple[MappingEntry, ...]

    def imaginary_for(self, real: str) -> str | None:
        for entry in self.entries:
            if entry.real == real:
                return entry.imaginary
        return None

    def real_for(self, imaginary: str) -> str | None:
        wanted = imaginary.casefold()
        for entry in self.entries:
            if entry.imaginary.casefold() == wanted:
                return entry.real
        return None


@dataclass(frozen=True)
class ImaginaryStory:
    topic: str
    sentences: tuple[str, ...]
    iteration: int = 1

    def text(self) -> str:
        return " ".join(self.sentences)


@dataclass(frozen=True)
class Phrase:
    verb: str
    imaginary_object: str
    source_sentence: int

    def text(self) -> str:
        return f"{self.verb} {self.imaginary_object}"


@dataclass(frozen=True)
class TranslatedCommand:
    command: Command
    phrase: Phrase
    rule: str  # exact | synonym | llm | fallback

    def text(self) -> str:
        return self.command.text()


@dataclass(frozen=True)
class TranslatedSequence:
    commands: tuple[TranslatedCommand, ...]

    def command_list(self) -> list[Command]:
        return [tc.command for tc in self.commands]

    def texts(self) -> list[str]:
        return [tc.text() for tc in self.commands]


@dataclass(frozen=True)
class PipelineRun:
    iteration: int
    mapping: ObjectMapping
    story: ImaginaryStory
    phrases: tuple[Phrase, ...]
    skipped_sentences: tuple[int, ...]
    sequence: TranslatedSequence
    result: EpisodeResult
    feedback: str
    # Prompts sent during this iteration, paired with the raw replies.
    exchanges: tuple[tuple[ChatRequest, str], ...] = ()


# ---------------------------------------------------------------------------
# Text utilities

_SENTENCE_RE = re.compile(r"[^.!?]+[.!?]+|[^.!?]+$")


def split_sentences(text: str) -> list[str]:
    """Cut prose into sentences, keeping the closing punctuation (a final
    unpunctuated fragment gets a period)."""
    out = []
    for piece in _SENTENCE_RE.findall(text):
        piece = " ".join(piece.split())
        if not piece:
            continue
        if piece[-1] not in ".!?":
            piece += "."
        out.append(piece)
    return out


def _tokens(text: str) -> list[str]:
    return re.findall(r"\w+", text.casefold())


def _alias_table(mapping: ObjectMapping) -> dict[tuple[str, ...], str]:
    """Token sequences that count as a mention of each imaginary object:
    the full name, plus its final word when that is unambiguous."""
    aliases: dict[tuple[str, ...], str] = {}
    for entry in mapping.entries:
        words = tuple(_tokens(entry.imaginary))
        if words:
            aliases.setdefault(words, entry.imaginary)
    heads: dict[tuple[str, ...], list[str]] = {}
    for entry in mapping.entries:
        words = tuple(_tokens(entry.imaginary))
        if len(words) > 1:
            heads.setdefault(words[-1:], []).append(entry.imaginary)
    for head, owners in heads.items():
        if len(owners) == 1 and head not in aliases:
            aliases[head] = owners[0]
    return aliases


def find_mentions(sentence: str, mapping: ObjectMapping) -> tuple[list[tuple[int, str]], list[bool]]:
    """Imaginary objects mentioned in a sentence, longest name first.

    Returns ((token_index, imaginary_name) pairs ordered by position, one per
    object, earliest mention kept) plus the mask of tokens claimed by names.
    """
    tokens = _tokens(sentence)
    claimed = [False] * len(tokens)
    hits: list[tuple[int, str]] = []
    ordered_aliases = sorted(_alias_table(mapping).items(), key=lambda kv: (-len(kv[0]), kv[0]))
    for alias_words, name in ordered_aliases:
        width = len(alias_words)
        for start in range(len(tokens) - width + 1):
            if any(claimed[start:start + width]):
                continue
            if tuple(tokens[start:start + width]) == alias_words:
                for i in range(start, start + width):
                    claimed[i] = True
                hits.append((start, name))
    hits.sort()
    seen: set[str] = set()
    mentions = []
    for index, name in hits:
        if name not in seen:
            seen.add(name)
            mentions.append((index, name))
    return mentions, claimed


def _stem_candidates(token: str) -> set[str]:
    cands = {token}
    if token.endswith("ies") and len(token) >= 5:
        cands.add(token[:-3] + "y")
    if token.endswith("s") and len(token) >= 3:
        cands.add(token[:-1])
    if token.endswith("es") and len(token) >= 4:
        cands.add(token[:-2])
    if token.endswith("ed") and len(token) >= 4:
        cands.add(token[:-2])
        cands.add(token[:-1])
    if token.endswith("ing") and len(token) >= 5:
        cands.add(token[:-3])
        cands.add(token[:-3] + "e")
    return cands


def _lexicon_for(world: WorldSpec | None) -> frozenset[str]:
    lex = set(verb_lexicon())
    if world is not None:
        for action in world.actions:
            lex.add(action.verb)
        for canonical, synonyms in world.verb_synonyms.items():
            lex.add(canonical)
            lex.update(synonyms)
    return frozenset(lex)


def _is_verb(token: str, lexicon: frozenset[str]) -> bool:
    return any(c in lexicon for c in _stem_candidates(token))


def _verb_near(tokens: list[str], claimed: list[bool], index: int,
               lexicon: frozenset[str]) -> str | None:
    """Nearest verb-lexicon token strictly before `index` (multi-word verbs
    like 'turn on' matched as a pair); tokens inside object names don't count."""
    for i in range(index - 1, -1, -1):
        if claimed[i]:
            continue
        if i > 0 and not claimed[i - 1] and f"{tokens[i - 1]} {tokens[i]}" in lexicon:
            return f"{tokens[i - 1]} {tokens[i]}"
        if _is_verb(tokens[i], lexicon):
            return tokens[i]
    return None


def _first_verb(tokens: list[str], claimed: list[bool], lexicon: frozenset[str]) -> str | None:
    for i in range(len(tokens)):
        if claimed[i]:
            continue
        if i + 1 < len(tokens) and not claimed[i + 1] and f"{tokens[i]} {tokens[i + 1]}" in lexicon:
            return f"{tokens[i]} {tokens[i + 1]}"
        if _is_verb(tokens[i], lexicon):
            return tokens[i]
    return None


def _parse_numbered(text: str) -> list[str]:
    """Items of a numbered list ('1. x 2. y' or one per line)."""
    items = [piece.strip() for piece in re.split(r"(?:^|\s)\d+\s*[.)]\s*", text)]
    items = [i for i in items if i]
    if len(items) <= 1 and "\n" in text:
        items = [line.strip() for line in text.splitlines() if line.strip()]
    return [item.rstrip(".").strip() for item in items if item.rstrip(".").strip()]


# ---------------------------------------------------------------------------
# Prompt construction

def _objects_block(mapping: ObjectMapping) -> str:
    return "\n".join(f"- {entry.imaginary}" for entry in mapping.entries)


def _real_objects_block(world: WorldSpec) -> str:
    lines = []
    for obj in world.objects:
        verbs = [a.verb for a in world.actions if a.obj == obj.id]
        suffix = f" (can: {', '.join(verbs)})" if verbs else ""
        lines.append(f"- {obj.display_name}{suffix}")
    return "\n".join(lines)


def _layout_block(world: WorldSpec, mapping: ObjectMapping) -> str:
    lines = []
    for room in world.rooms:
        contents = [
            mapping.imaginary_for(obj.id) or obj.display_name
            for obj in world.objects
            if obj.location == room.id
        ]
        exits = [f"{d} to the {world.room(b).display_name}" for d, b in world.exits(room.id)]
        parts = [f"The {room.display_name} holds: {', '.join(contents) if contents else 'nothing'}."]
        if exits:
            parts.append(f"Ways out: {'; '.join(exits)}.")
        lines.append(" ".join(parts))
    return "\n".join(lines)


def _samples_block(samples: tuple[str, ...] | list[str]) -> str:
    blocks = [f"Example {i}:\n{sample}" for i, sample in enumerate(samples, start=1)]
    return "\n\n".join(blocks)


def _feedback_block(feedback: str) -> str:
    if not feedback:
        return ""
    return f"Advice from the previous round:\n{feedback}\n"


def _user_request(template_name: str, fills: dict[str, str], system: str,
                  temperature: float, prompts_dir: str | Path | None) -> ChatRequest:
    text = prompt_template(template_name, prompts_dir).format(**fills)
    return ChatRequest(
        system_prompt=system,
        messages=(("user", text),),
        temperature=temperature,
    )


def _followup(request: ChatRequest, reply: str, correction: str) -> ChatRequest:
    return ChatRequest(
        system_prompt=request.system_prompt,
        messages=request.messages + (("assistant", reply), ("user", correction)),
        temperature=request.temperature,
        max_tokens=request.max_tokens,
    )


# ---------------------------------------------------------------------------
# Object mapping

def _unique_name(name: str, used: set[str]) -> str:
    """Injectivity repair: suffix duplicate imaginary names with -2, -3, ..."""
    if name.casefold() not in used:
        return name
    counter = 2
    while f"{name}-{counter}".casefold() in used:
        counter += 1
    return f"{name}-{counter}"


def _table_name(world: WorldSpec, obj_id: str, setting: str) -> tuple[str, str]:
    tables = setting_tables()
    table = tables.get(setting, {})
    lookup = table.get("objects", {})
    obj = world.object(obj_id)
    for key in (obj_id, obj.display_name.casefold()):
        if key in lookup:
            return lookup[key], "setting table"
    prefix = table.get("fallback", setting)
    return f"{prefix} {obj.display_name}", "default naming"


def _parse_mapping_reply(text: str, world: WorldSpec) -> dict[str, str]:
    """Lines like 'real -> imaginary' (or 'real: imaginary') to object ids."""
    by_name = {o.display_name.casefold(): o.id for o in world.objects}
    by_id = {o.id: o.id for o in world.objects}
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip().lstrip("-* ").strip()
        if not line:
            continue
        if "->" in line:
            left, _, right = line.partition("->")
        elif ":" in line:
            left, _, right = line.partition(":")
        else:
            continue
        left = re.sub(r"^\d+[.)]\s*", "", left.strip()).strip().casefold()
        right = right.strip().strip(".")
        real = by_id.get(left) or by_name.get(left)
        if real and right and real not in out:
            out[real] = right
    return out


def map_objects(world: WorldSpec, setting: str, backend: Backend | None = None,
                prompts_dir: str | Path | None = None) -> ObjectMapping:
    """One imaginary counterpart per world object, injective by construction.

    With a backend, the model proposes names (duplicates are re-asked once,
    then suffixed); without one, the bundled setting tables decide.
    """
    proposed: dict[str, str] = {}
    rationales: dict[str, str] = {}

    if backend is not None and world.objects:
        request = _user_request(
            "map_objects",
            {"setting": setting, "objects": _real_objects_block(world)},
            SYSTEM_STORYTELLER, 0.7, prompts_dir,
        )
        reply = complete(request, backend)
        proposed = _parse_mapping_reply(reply, world)
        names = [n.casefold() for n in proposed.values()]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            retry = _followup(
                request, reply,
                "These imaginary names were used more than once: "
                + ", ".join(duplicates)
                + ". Give the full list again with a unique name for every object.",
            )
            proposed = _parse_mapping_reply(complete(retry, backend), world)
        rationales = {real: "model choice" for real in proposed}

    entries: list[MappingEntry] = []
    used: set[str] = set()
    for obj in world.objects:
        if obj.id in proposed:
            name, why = proposed[obj.id], rationales.get(obj.id, "model choice")
        else:
            name, why = _table_name(world, obj.id, setting)
        unique = _unique_name(name, used)
        if unique != name:
            why = f"{why}; renamed to stay unique"
        used.add(unique.casefold())
        entries.append(MappingEntry(obj.id, unique, why))
    return ObjectMapping(setting=setting, entries=tuple(entries))


# ---------------------------------------------------------------------------
# Story generation and continuation

def validate_story_constraint(story: ImaginaryStory, mapping: ObjectMapping) -> list[int]:
    """Indices of sentences that introduce two or more brand-new imaginary
    objects; an empty list means the story obeys the one-new-item rule."""
    seen: set[str] = set()
    violations: list[int] = []
    for index, sentence in enumerate(story.sentences):
        mentions, _ = find_mentions(sentence, mapping)
        fresh = [name for _, name in mentions if name not in seen]
        if len(fresh) >= 2:
            violations.append(index)
        seen.update(name for _, name in mentions)
    return violations


def _deterministic_story(mapping: ObjectMapping, topic: str) -> tuple[str, ...]:
    sentences = [f"I find the {entry.imaginary}." for entry in mapping.entries]
    sentences.append(f"I use the {mapping.entries[-1].imaginary} to {topic}.")
    return tuple(sentences)


def generate_story(
    mapping: ObjectMapping,
    topic: str,
    training_samples: list[str] | tuple[str, ...],
    backend: Backend | None = None,
    *,
    world: WorldSpec | None = None,
    feedback: str = "",
    prompts_dir: str | Path | None = None,
) -> ImaginaryStory:
    """First-iteration story about the imaginary objects, aimed at the topic.

    Model output must obey the one-new-item rule; two corrective retries are
    allowed before ConstraintUnsatisfied. The deterministic mode emits a
    fixed find-then-use template that obeys the rule by construction.
    """
    if not mapping.entries:
        raise ValueError("object mapping is empty")
    if not training_samples:
        raise ValueError("at least one training sample story is required")

    if backend is None:
        return ImaginaryStory(topic, _deterministic_story(mapping, topic), iteration=1)

    request = _user_request(
        "generate_story",
        {
            "setting": mapping.setting,
            "topic": topic,
            "objects": _objects_block(mapping),
            "layout": _layout_block(world, mapping) if world is not None else "(not provided)",
            "samples": _samples_block(tuple(training_samples)),
            "feedback": _feedback_block(feedback),
        },
        SYSTEM_STORYTELLER, 0.7, prompts_dir,
    )
    last_violations: list[int] = []
    for _ in range(3):  # first try plus two regenerations
        reply = complete(request, backend)
        sentences = split_sentences(reply)
        story = ImaginaryStory(topic, tuple(sentences), iteration=1)
        if sentences:
            last_violations = validate_story_constraint(story, mapping)
            if not last_violations:
                return story
        request = _followup(
            request, reply,
            "Some sentences introduce more than one new imaginary object"
            f" (sentence numbers: {[i + 1 for i in last_violations]})."
            " Rewrite the story so each sentence introduces at most one new"
            " imaginary object.",
        )
    raise ConstraintUnsatisfied(
        f"story kept introducing multiple new objects per sentence: {last_violations}"
    )


def continue_story(
    story: ImaginaryStory,
    mapping: ObjectMapping,
    topic: str,
    backend: Backend | None = None,
    *,
    world: WorldSpec | None = None,
    feedback: str = "",
    prompts_dir: str | Path | None = None,
) -> ImaginaryStory:
    """Retry by extension: drop the final sentence and write onward from
    there, keeping the retained prefix verbatim."""
    if len(story.sentences) < 2:
        raise ValueError("cannot continue a story of fewer than two sentences")
    retained = story.sentences[:-1]

    if backend is None:
        seen: set[str] = set()
        for sentence in retained:
            mentions, _ = find_mentions(sentence, mapping)
            seen.update(name for _, name in mentions)
        unused = [e for e in mapping.entries if e.imaginary not in seen]
        additions = []
        if unused:
            additions.append(f"Then, I find the {unused[0].imaginary}.")
            closing = unused[0].imaginary
        else:
            closing = mapping.entries[-1].imaginary
        additions.append(f"I use the {closing} to {topic}.")
        return ImaginaryStory(topic, retained + tuple(additions), story.iteration + 1)

    request = _user_request(
        "continue_story",
        {
            "setting": mapping.setting,
            "topic": topic,
            "objects": _objects_block(mapping),
            "layout": _layout_block(world, mapping) if world is not None else "(not provided)",
            "feedback": _feedback_block(feedback),
            "story": "\n".join(retained),
        },
        SYSTEM_STORYTELLER, 0.7, prompts_dir,
    )
    last_violations: list[int] = []
    for _ in range(3):
        reply = complete(request, backend)
        continuation = split_sentences(reply)
        if not continuation:
            raise ConstraintUnsatisfied("backend returned an empty continuation")
        candidate = ImaginaryStory(topic, retained + tuple(continuation), story.iteration + 1)
        last_violations = validate_story_constraint(candidate, mapping)
        if not last_violations:
            return candidate
        request = _followup(
            request, reply,
            "The continuation introduces more than one new imaginary object in"
            " a single sentence. Continue again, at most one new imaginary"
            " object per sentence.",
        )
    raise ConstraintUnsatisfied(
        f"continuation kept violating the one-new-object rule: {last_violations}"
    )


# ---------------------------------------------------------------------------
# Distillation and translation

def simplify_story(
    story: ImaginaryStory,
    mapping: ObjectMapping,
    backend: Backend | None = None,
    *,
    world: WorldSpec | None = None,
    prompts_dir: str | Path | None = None,
) -> tuple[list[Phrase], list[int]]:
    """One verb+object phrase per sentence that mentions a mapped object.

    Target object: the sentence's newly introduced one, else the first
    mentioned. Verb: nearest lexicon verb before the target, else the
    sentence's first verb. Returns (phrases, indices of skipped sentences).
    Model output is validated against the mapping and repaired with the
    deterministic rules where it does not comply.
    """
    if validate_story_constraint(story, mapping):
        raise ValueError("story violates the one-new-object rule; simplify refuses to guess")

    lexicon = _lexicon_for(world)
    seen: set[str] = set()
    deterministic: list[Phrase] = []
    skipped: list[int] = []
    for index, sentence in enumerate(story.sentences):
        mentions, claimed = find_mentions(sentence, mapping)
        if not mentions:
            skipped.append(index)
            continue
        fresh = [(i, n) for i, n in mentions if n not in seen]
        target_index, target = fresh[0] if fresh else mentions[0]
        tokens = _tokens(sentence)
        verb = (
            _verb_near(tokens, claimed, target_index, lexicon)
            or _first_verb(tokens, claimed, lexicon)
            or "use"
        )
        deterministic.append(Phrase(verb, target, index))
        seen.update(name for _, name in mentions)

    if backend is None or not deterministic:
        return deterministic, skipped

    request = _user_request(
        "simplify_story",
        {"story": "\n".join(story.sentences), "objects": _objects_block(mapping)},
        SYSTEM_EXTRACTOR, 0.0, prompts_dir,
    )
    items = _parse_numbered(complete(request, backend))
    if len(items) != len(deterministic):
        return deterministic, skipped

    phrases: list[Phrase] = []
    for item, fallback in zip(items, deterministic):
        mentions, _ = find_mentions(item, mapping)
        if not mentions:
            phrases.append(fallback)
            continue
        target_index, target = mentions[0]
        verb_tokens = _tokens(item)[:target_index]
        verb = " ".join(verb_tokens) if verb_tokens else fallback.verb
        phrases.append(Phrase(verb, target, fallback.source_sentence))
    return phrases, skipped


def _actions_block(world: WorldSpec, mapping: ObjectMapping) -> str:
    lines = []
    for entry in mapping.entries:
        verbs = [a.verb for a in world.actions if a.obj == entry.real]
        display = world.object(entry.real).display_name
        lines.append(f"- {display}: {', '.join(verbs) if verbs else '(nothing)'}")
    return "\n".join(lines)


def _mapping_block(world: WorldSpec, mapping: ObjectMapping) -> str:
    return "\n".join(
        f"- {entry.imaginary} = the {world.object(entry.real).display_name}"
        for entry in mapping.entries
    )


def translate_phrases(
    phrases: list[Phrase],
    mapping: ObjectMapping,
    world: WorldSpec,
    backend: Backend | None = None,
    *,
    prompts_dir: str | Path | None = None,
) -> TranslatedSequence:
    """Map each imaginary phrase to an admissible command on the real object.

    Selection order per phrase: exact verb match, synonym match, model
    choice constrained to the object's declared verbs, then the object's
    first-declared action.
    """
    resolved: list[TranslatedCommand | None] = []
    firsts: list[TranslatedCommand] = []
    for phrase in phrases:
        real = mapping.real_for(phrase.imaginary_object)
        if real is None:
            raise ValueError(f"phrase object {phrase.imaginary_object!r} is not in the mapping")
        actions = [a for a in world.actions if a.obj == real]
        if not actions:
            raise NoAdmissibleAction(
                f"object {real!r} has no admissible actions to translate"
                f" {phrase.text()!r} into"
            )
        firsts.append(TranslatedCommand(Command(actions[0].verb, real), phrase, "fallback"))
        verb = phrase.verb.casefold()
        candidates = _stem_candidates(verb)
        exact = next((a for a in actions if a.verb in candidates), None)
        if exact is not None:
            resolved.append(TranslatedCommand(Command(exact.verb, real), phrase, "exact"))
            continue
        canonical = None
        for candidate in sorted(candidates):
            mapped = world.canonical_verb(candidate)
            if mapped is not None and mapped != candidate:
                canonical = mapped
                break
        synonym = next((a for a in actions if a.verb == canonical), None)
        if synonym is not None:
            resolved.append(TranslatedCommand(Command(synonym.verb, real), phrase, "synonym"))
            continue
        resolved.append(None)

    open_slots = [i for i, tc in enumerate(resolved) if tc is None]
    if open_slots and backend is not None:
        request = _user_request(
            "translate_phrases",
            {
                "mapping": _mapping_block(world, mapping),
                "actions": _actions_block(world, mapping),
                "phrases": "\n".join(
                    f"{i + 1}. {phrase.text()}" for i, phrase in enumerate(phrases)
                ),
            },
            SYSTEM_EXTRACTOR, 0.0, prompts_dir,
        )
        rows = _parse_numbered(complete(request, backend))
        if len(rows) == len(phrases):
            for index in open_slots:
                try:
                    command = parse_command(rows[index], world)
                except CommandError:
                    continue
                if not isinstance(command, Command):
                    continue
                phrase = phrases[index]
                if command.obj != mapping.real_for(phrase.imaginary_object):
                    continue
                if world.find_action(command.verb, command.obj) is None:
                    continue
                resolved[index] = TranslatedCommand(command, phrase, "llm")

    final = tuple(tc if tc is not None else firsts[i] for i, tc in enumerate(resolved))
    return TranslatedSequence(final)


# ---------------------------------------------------------------------------
# Feedback and the full loop

def _condition_text(condition) -> str:
    if isinstance(condition, InRoom):
        return f"the agent must first reach the room '{condition.room}'"
    if isinstance(condition, Holds):
        return f"the agent must be carrying the {condition.obj}"
    if isinstance(condition, StateIs):
        return f"the {condition.obj} needs {condition.var} = {condition.value} first"
    if isinstance(condition, Near):
        return f"the agent must stand near the {condition.obj}"
    return "a requirement was not met"


def feedback_augmentation(result: EpisodeResult) -> str:
    """Prompt advice distilled from a losing run: what failed first, and a
    standing instruction to describe directions. Pure in the result."""
    if result.win:
        raise ValueError("feedback is only produced for losing runs")
    lines = [
        f"The last run did not reach the win state; the final reward was {result.last_reward}."
    ]
    failure = result.plan_failure
    if failure is not None:
        label = failure.action_text or failure.failing_action
        if failure.reason == "unreachable_room":
            lines.append(
                f"The action '{label}' could not even be planned: there is no"
                f" route to the room '{failure.detail}'."
            )
        elif failure.reason == "depth_exceeded":
            lines.append(
                f"The action '{label}' needs a chain of preparations too deep to plan."
            )
        else:
            why = _condition_text(failure.condition) if failure.condition else failure.detail
            lines.append(f"The action '{label}' could not be made executable: {why}.")
    elif result.failures:
        first = result.failures[0]
        label = first.raw_text or (first.command.text() if first.command else "a step")
        if first.failed_conditions:
            why = "; ".join(_condition_text(c) for c in first.failed_conditions)
        else:
            why = "the way was blocked"
        lines.append(f"The first action that failed was '{label}': {why}.")
    else:
        lines.append("Every action executed, but the story never reached the win state.")
    lines.append(
        "In the next part of the story, include more directional information:"
        " say which room each object is in and how to walk from room to room."
    )
    return "\n".join(lines)


class _LoggingBackend:
    """Pass-through backend that keeps every (request, reply) pair."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.exchanges: list[tuple[ChatRequest, str]] = []

    def complete(self, request: ChatRequest) -> str:
        reply = self.inner.complete(request)
        self.exchanges.append((request, reply))
        return reply


def run_pipeline(
    world: WorldSpec,
    setting: str,
    topic: str,
    backend: Backend | None = None,
    max_iterations: int = 3,
    *,
    samples: list[str] | tuple[str, ...] | None = None,
    prompts_dir: str | Path | None = None,
) -> list[PipelineRun]:
    """Generate, distill, translate, play; repeat with feedback until the
    win state or the iteration cap. Objects are mapped once per pipeline;
    the mapping prompt is logged with the first iteration's exchanges."""
    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    samples = tuple(samples) if samples is not None else training_samples()

    logger = _LoggingBackend(backend) if backend is not None else None
    runs: list[PipelineRun] = []
    feedback = ""
    story: ImaginaryStory | None = None
    try:
        mapping = map_objects(world, setting, logger, prompts_dir)
    except (BackendFailure, FixtureMiss) as err:
        raise PipelineBackendFailure(1, err) from err

    mark = 0
    for iteration in range(1, max_iterations + 1):
        try:
            if story is None:
                story = generate_story(
                    mapping, topic, samples, logger,
                    world=world, feedback=feedback, prompts_dir=prompts_dir,
                )
            else:
                story = continue_story(
                    story, mapping, topic, logger,
                    world=world, feedback=feedback, prompts_dir=prompts_dir,
                )
            phrases, skipped = simplify_story(
                story, mapping, logger, world=world, prompts_dir=prompts_dir
            )
            sequence = translate_phrases(
                phrases, mapping, world, logger, prompts_dir=prompts_dir
            )
        except (BackendFailure, FixtureMiss) as err:
            raise PipelineBackendFailure(iteration, err) from err
        result = run_episode(world, sequence.command_list())
        feedback = "" if result.win else feedback_augmentation(result)
        exchanges = tuple(logger.exchanges[mark:]) if logger else ()
        mark = len(logger.exchanges) if logger else 0
        runs.append(
            PipelineRun(
                iteration=iteration,
                mapping=mapping,
                story=story,
                phrases=tuple(phrases),
                skipped_sentences=tuple(skipped),
                sequence=sequence,
                result=result,
                feedback=feedback,
                exchanges=exchanges,
            )
        )
        if result.win:
            break
    return runs


# ---------------------------------------------------------------------------
# Run artifacts

def write_run_artifacts(out_dir: str | Path, runs: list[PipelineRun]) -> list[Path]:
    """Write the documented run-directory files; returns the paths written.

    Everything is deterministic in the inputs: identical runs produce
    byte-identical directories.
    """
    if not runs:
        raise ValueError("no pipeline runs to write")
    mapping = runs[0].mapping
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, text: str) -> None:
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    emit(
        "mapping.json",
        json.dumps(
            {
                "setting": mapping.setting,
                "entries": [
                    {"real": e.real, "imaginary": e.imaginary, "rationale": e.rationale}
                    for e in mapping.entries
                ],
            },
            indent=2, ensure_ascii=False,
        ) + "\n",
    )
    for run in runs:
        n = run.iteration
        emit(f"story.iter{n}.txt", "\n".join(run.story.sentences) + "\n")
        emit(
            f"phrases.iter{n}.json",
            json.dumps(
                [
                    {"verb": p.verb, "object": p.imaginary_object, "sentence": p.source_sentence}
                    for p in run.phrases
                ],
                indent=2, ensure_ascii=False,
            ) + "\n",
        )
        emit(
            f"sequence.iter{n}.json",
            json.dumps(
                [
                    {
                        "command": tc.text(),
                        "verb": tc.command.verb,
                        "object": tc.command.obj,
                        "rule": tc.rule,
                        "source_sentence": tc.phrase.source_sentence,
                    }
                    for tc in run.sequence.commands
                ],
                indent=2, ensure_ascii=False,
            ) + "\n",
        )
        episode_path = out / f"episode.iter{n}.jsonl"
        with episode_path.open("w", encoding="utf-8") as fp:
            write_transcript(run.result.records, fp)
        written.append(episode_path)
        emit(f"feedback.iter{n}.txt", run.feedback + "\n")
    return written
