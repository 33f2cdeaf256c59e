"""Episode execution: command parsing, precondition checks, effects, scoring.

A GameState is owned by one caller and mutated in place by `step`. Distinct
episodes never share state; the WorldSpec they reference is immutable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, TYPE_CHECKING, Iterable

from .world import (
    DIRECTIONS,
    INVENTORY,
    Condition,
    Drop,
    EndGame,
    GameObject,
    Holds,
    InRoom,
    Near,
    SetState,
    StateIs,
    Take,
    Tier,
    WorldSpec,
)

if TYPE_CHECKING:
    from .planner import Plan, PlanFailure

ARTICLES = ("the", "a", "an")

OUTCOME_SUCCEEDED = "succeeded"
OUTCOME_BLOCKED = "blocked"
OUTCOME_UNKNOWN = "unknown_command"


class CommandError(Exception):
    """A command string that does not resolve against the world."""


class UnknownVerb(CommandError):
    pass


class UnknownObject(CommandError):
    pass


class AmbiguousObject(CommandError):
    pass


class UnknownDirection(CommandError):
    pass


class NoSuchAction(Exception):
    """Verb/object pair parsed fine but no action is declared for it."""


class GameOver(Exception):
    """step() was called after the episode ended."""


@dataclass(frozen=True)
class Command:
    """A verb applied to an object, after synonym resolution."""

    verb: str
    obj: str
    raw_text: str = field(default="", compare=False)

    def text(self) -> str:
        return f"{self.verb} {self.obj}"


@dataclass(frozen=True)
class Movement:
    direction: str
    raw_text: str = field(default="", compare=False)

    def text(self) -> str:
        return f"go {self.direction}"


@dataclass(frozen=True)
class TurnRecord:
    turn: int
    command: Command | Movement | None  # None when the input did not parse
    raw_text: str
    outcome: str
    reward: int
    score_after: int
    narration: str
    failed_conditions: tuple[Condition, ...] = ()


@dataclass
class GameState:
    world: WorldSpec
    agent_room: str
    inventory: set[str]
    object_states: dict[tuple[str, str], str]
    object_rooms: dict[str, str]
    cumulative_score: int = 0
    awarded: set[str] = field(default_factory=set)
    ended: bool = False
    log: list[TurnRecord] = field(default_factory=list)

    def clone(self) -> GameState:
        """Independent copy for simulation; shares only the immutable world."""
        return GameState(
            world=self.world,
            agent_room=self.agent_room,
            inventory=set(self.inventory),
            object_states=dict(self.object_states),
            object_rooms=dict(self.object_rooms),
            cumulative_score=self.cumulative_score,
            awarded=set(self.awarded),
            ended=self.ended,
            log=list(self.log),
        )

    def object_room(self, obj_id: str) -> str:
        return self.object_rooms[obj_id]

    def colocated(self, obj_id: str) -> bool:
        room = self.object_rooms[obj_id]
        return room == self.agent_room or room == INVENTORY


@dataclass(frozen=True)
class EpisodeResult:
    cumulative_score: int
    last_reward: int
    win: bool
    failures: tuple[TurnRecord, ...]
    turns: int
    records: tuple[TurnRecord, ...] = ()
    plan_failure: "PlanFailure | None" = None
    plan: "Plan | None" = None


def new_game(world: WorldSpec) -> GameState:
    """Fresh episode: agent in the start room, every state at its initial value."""
    return GameState(
        world=world,
        agent_room=world.start_room,
        inventory=set(),
        object_states={
            (obj.id, var): sv.initial for obj in world.objects for var, sv in obj.state_vars.items()
        },
        object_rooms={obj.id: obj.location for obj in world.objects},
    )


# ---------------------------------------------------------------------------
# Command parsing

def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


def _strip_articles(words: list[str]) -> list[str]:
    return [w for w in words if w not in ARTICLES]


def parse_command(text: str, world: WorldSpec) -> Command | Movement:
    """Resolve raw input to a canonical Command or Movement.

    Multi-word verbs win by longest match; synonym verbs collapse to their
    canonical form; objects match by display name or id, ignoring case and
    the articles the/a/an.
    """
    raw = text
    words = _normalize(text).split()
    if not words:
        raise UnknownVerb("empty command")

    if words[0] == "go":
        if len(words) < 2:
            raise UnknownDirection("go where? (north, south, east or west)")
        direction = words[1]
        if direction not in DIRECTIONS or len(words) > 2:
            raise UnknownDirection(f"{' '.join(words[1:])!r} is not a direction")
        return Movement(direction, raw_text=raw)

    candidates = {"take", "drop"} | set(world._canonical_verbs) | set(
        world._synonym_to_canonical
    )
    verb = None
    for length in range(len(words), 0, -1):
        phrase = " ".join(words[:length])
        if phrase in candidates:
            verb = phrase
            break
    if verb is None:
        raise UnknownVerb(f"you don't know how to {words[0]!r}")

    object_words = _strip_articles(words[len(verb.split()):])
    if not object_words:
        raise UnknownObject(f"{verb} what?")
    object_text = " ".join(object_words)

    matches = [
        obj.id
        for obj in world.objects
        if _normalize(obj.display_name) == object_text or obj.id == object_text
    ]
    if not matches:
        raise UnknownObject(f"there is no {object_text!r} in this world")
    if len(matches) > 1:
        raise AmbiguousObject(f"{object_text!r} could mean any of: {', '.join(matches)}")

    canonical = verb if verb in ("take", "drop") else world.canonical_verb(verb)
    return Command(canonical, matches[0], raw_text=raw)


# ---------------------------------------------------------------------------
# Condition evaluation and narration

def condition_holds(cond: Condition, state: GameState) -> bool:
    if isinstance(cond, InRoom):
        return state.agent_room == cond.room
    if isinstance(cond, Holds):
        return cond.obj in state.inventory
    if isinstance(cond, StateIs):
        return state.object_states.get((cond.obj, cond.var)) == cond.value
    if isinstance(cond, Near):
        return state.colocated(cond.obj)
    raise TypeError(f"unknown condition {cond!r}")


def describe_condition(cond: Condition, world: WorldSpec) -> str:
    if isinstance(cond, InRoom):
        return f"you must be in the {world.room(cond.room).display_name}"
    if isinstance(cond, Holds):
        return f"you need the {world.object(cond.obj).display_name} in hand"
    if isinstance(cond, StateIs):
        return (
            f"the {world.object(cond.obj).display_name} must have"
            f" {cond.var} = {cond.value}"
        )
    if isinstance(cond, Near):
        return f"you must be near the {world.object(cond.obj).display_name}"
    raise TypeError(f"unknown condition {cond!r}")


def _display(world: WorldSpec, obj_id: str) -> str:
    return world.object(obj_id).display_name


def describe_room(state: GameState) -> str:
    """Scene text for the agent's current room: description, objects, exits."""
    world = state.world
    room = world.room(state.agent_room)
    parts = [f"[{room.display_name}]"]
    if room.description:
        parts.append(room.description)
    here = [
        _display(world, obj.id)
        for obj in world.objects
        if state.object_rooms[obj.id] == room.id
    ]
    if here:
        parts.append("You see: " + ", ".join(here) + ".")
    exits = [
        f"{direction} to the {world.room(target).display_name}"
        for direction, target in world.exits(room.id)
    ]
    if exits:
        parts.append("Exits: " + "; ".join(exits) + ".")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# Stepping

def _record(
    state: GameState,
    command: Command | Movement | None,
    raw: str,
    outcome: str,
    reward: int,
    narration: str,
    failed: tuple[Condition, ...] = (),
) -> TurnRecord:
    record = TurnRecord(
        turn=len(state.log) + 1,
        command=command,
        raw_text=raw,
        outcome=outcome,
        reward=reward,
        score_after=state.cumulative_score,
        narration=narration,
        failed_conditions=failed,
    )
    state.log.append(record)
    return record


def step(state: GameState, cmd: Command | Movement) -> TurnRecord:
    """Execute one command, mutating the state and appending to its log.

    A blocked command changes nothing but the log. Raises GameOver after the
    episode has ended and NoSuchAction for undeclared verb/object pairs.
    """
    if state.ended:
        raise GameOver("the game has ended")
    world = state.world

    if isinstance(cmd, Movement):
        target = next(
            (b for a, d, b in world.connections if a == state.agent_room and d == cmd.direction),
            None,
        )
        if target is None:
            return _record(
                state, cmd, cmd.raw_text or cmd.text(), OUTCOME_BLOCKED, 0,
                f"You can't go {cmd.direction} from the"
                f" {world.room(state.agent_room).display_name}.",
            )
        state.agent_room = target
        return _record(
            state, cmd, cmd.raw_text or cmd.text(), OUTCOME_SUCCEEDED, 0,
            f"You go {cmd.direction} to the {world.room(target).display_name}.",
        )

    raw = cmd.raw_text or cmd.text()
    if cmd.verb == "take":
        return _step_take(state, cmd, raw)
    if cmd.verb == "drop":
        return _step_drop(state, cmd, raw)

    action = world.find_action(cmd.verb, cmd.obj)
    if action is None:
        raise NoSuchAction(f"you can't {cmd.verb} the {_display(world, cmd.obj)}")

    failed = tuple(c for c in action.preconditions if not condition_holds(c, state))
    if failed:
        reasons = "; ".join(describe_condition(c, world) for c in failed)
        return _record(
            state, cmd, raw, OUTCOME_BLOCKED, 0,
            f"You can't {cmd.verb} the {_display(world, cmd.obj)} yet: {reasons}.",
            failed,
        )

    for effect in action.effects:
        if isinstance(effect, SetState):
            state.object_states[(effect.obj, effect.var)] = effect.value
        elif isinstance(effect, Take):
            state.inventory.add(effect.obj)
            state.object_rooms[effect.obj] = INVENTORY
        elif isinstance(effect, Drop):
            state.inventory.discard(effect.obj)
            state.object_rooms[effect.obj] = state.agent_room
        elif isinstance(effect, EndGame):
            state.ended = True

    if action.id in state.awarded:
        reward = 0
        narration = f"You {cmd.verb} the {_display(world, cmd.obj)} again. Nothing more happens."
    else:
        reward = action.score
        state.awarded.add(action.id)
        state.cumulative_score += reward
        narration = f"You {cmd.verb} the {_display(world, cmd.obj)}. [+{reward} points]"
    if action.tier is Tier.WIN:
        state.ended = True
    if state.ended:
        narration += " The game is over."
    return _record(state, cmd, raw, OUTCOME_SUCCEEDED, reward, narration)


def _step_take(state: GameState, cmd: Command, raw: str) -> TurnRecord:
    world = state.world
    obj: GameObject = world.object(cmd.obj)
    name = obj.display_name
    if cmd.obj in state.inventory:
        return _record(state, cmd, raw, OUTCOME_BLOCKED, 0, f"You are already carrying the {name}.")
    if not obj.portable:
        return _record(state, cmd, raw, OUTCOME_BLOCKED, 0, f"The {name} can't be picked up.")
    if state.object_rooms[cmd.obj] != state.agent_room:
        return _record(
            state, cmd, raw, OUTCOME_BLOCKED, 0,
            f"There is no {name} here.", (Near(cmd.obj),),
        )
    state.inventory.add(cmd.obj)
    state.object_rooms[cmd.obj] = INVENTORY
    return _record(state, cmd, raw, OUTCOME_SUCCEEDED, 0, f"You take the {name}.")


def _step_drop(state: GameState, cmd: Command, raw: str) -> TurnRecord:
    name = _display(state.world, cmd.obj)
    if cmd.obj not in state.inventory:
        return _record(
            state, cmd, raw, OUTCOME_BLOCKED, 0,
            f"You aren't carrying the {name}.", (Holds(cmd.obj),),
        )
    state.inventory.discard(cmd.obj)
    state.object_rooms[cmd.obj] = state.agent_room
    return _record(state, cmd, raw, OUTCOME_SUCCEEDED, 0, f"You drop the {name}.")


# ---------------------------------------------------------------------------
# Whole sequences

def run_commands(
    state: GameState, commands: Iterable[str | Command | Movement]
) -> tuple[GameState, EpisodeResult]:
    """Feed commands through step() until the list ends or the game does.

    Raw strings are parsed first; anything unparseable (or naming no declared
    action) is logged as an unknown_command turn. Blocked turns are recorded
    and the episode continues. The run counts as a win when the last
    successful world action has the win tier and no world action was blocked.
    """
    records: list[TurnRecord] = []
    last_success_tier: Tier | None = None
    blocked_action = False

    for item in commands:
        if state.ended:
            break
        if isinstance(item, str):
            try:
                cmd = parse_command(item, state.world)
            except CommandError as err:
                records.append(
                    _record(state, None, item, OUTCOME_UNKNOWN, 0, f"Unknown command: {err}.")
                )
                continue
        else:
            cmd = item
        try:
            record = step(state, cmd)
        except NoSuchAction as err:
            records.append(
                _record(
                    state, cmd, getattr(cmd, "raw_text", "") or cmd.text(),
                    OUTCOME_UNKNOWN, 0, f"Unknown command: {err}.",
                )
            )
            continue
        records.append(record)
        is_world_action = isinstance(cmd, Command) and cmd.verb not in ("take", "drop")
        if is_world_action and record.outcome == OUTCOME_BLOCKED:
            blocked_action = True
        if is_world_action and record.outcome == OUTCOME_SUCCEEDED:
            action = state.world.find_action(cmd.verb, cmd.obj)
            last_success_tier = action.tier if action else None

    result = EpisodeResult(
        cumulative_score=state.cumulative_score,
        last_reward=records[-1].reward if records else 0,
        win=(last_success_tier is Tier.WIN) and not blocked_action,
        failures=tuple(r for r in records if r.outcome == OUTCOME_BLOCKED),
        turns=len(records),
        records=tuple(records),
    )
    return state, result


# ---------------------------------------------------------------------------
# Transcript export

def transcript_line(record: TurnRecord) -> str:
    """One TurnRecord as a stable-keyed JSON object (the JSONL row format)."""
    return json.dumps(
        {
            "turn": record.turn,
            "input": record.raw_text,
            "outcome": record.outcome,
            "reward": record.reward,
            "score": record.score_after,
            "narration": record.narration,
        },
        ensure_ascii=False,
    )


def write_transcript(records: Iterable[TurnRecord], fp: IO[str]) -> None:
    for record in records:
        fp.write(transcript_line(record) + "\n")
