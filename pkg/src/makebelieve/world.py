"""Domain model for game worlds: rooms, objects, actions, scores.

Everything here is immutable once constructed. `validate_world` checks a
WorldSpec for internal consistency and returns violations as data; nothing
in this module raises on bad worlds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

DIRECTIONS = ("north", "south", "east", "west")
REVERSE_DIRECTION = {"north": "south", "south": "north", "east": "west", "west": "east"}

# Verbs handled by the engine itself; worlds may not redeclare them.
RESERVED_VERBS = frozenset({"take", "drop", "go"})

# Sentinel location for carried objects; no room may use this id.
INVENTORY = "inventory"

_IDENT_RE = re.compile(r"^[a-z][a-z0-9_]*$")
_VERB_RE = re.compile(r"^[a-z]+( [a-z]+)*$")


class Tier(str, Enum):
    STAND_ALONE = "stand_alone"
    INTERACTIVE = "interactive"
    WIN = "win"

    @property
    def score(self) -> int:
        return TIER_SCORES[self]


TIER_SCORES = {Tier.STAND_ALONE: 2, Tier.INTERACTIVE: 3, Tier.WIN: 5}
SCORE_TIERS = {score: tier for tier, score in TIER_SCORES.items()}


# ---------------------------------------------------------------------------
# Conditions and effects

@dataclass(frozen=True)
class InRoom:
    """Agent must stand in the given room."""
    room: str


@dataclass(frozen=True)
class Holds:
    """Agent must carry the given object."""
    obj: str


@dataclass(frozen=True)
class StateIs:
    """An object's state variable must hold a specific value."""
    obj: str
    var: str
    value: str


@dataclass(frozen=True)
class Near:
    """Agent must be in the same room as the object (or carry it)."""
    obj: str


Condition = InRoom | Holds | StateIs | Near


@dataclass(frozen=True)
class SetState:
    obj: str
    var: str
    value: str


@dataclass(frozen=True)
class Take:
    obj: str


@dataclass(frozen=True)
class Drop:
    obj: str


@dataclass(frozen=True)
class EndGame:
    pass


Effect = SetState | Take | Drop | EndGame


# ---------------------------------------------------------------------------
# World structure

@dataclass(frozen=True)
class Room:
    id: str
    display_name: str
    description: str = ""


@dataclass(frozen=True)
class StateVar:
    """A named object state: initial value plus the full set of legal values."""
    initial: str
    values: tuple[str, ...]


@dataclass(frozen=True)
class GameObject:
    id: str
    display_name: str
    location: str
    portable: bool = False
    state_vars: dict[str, StateVar] = field(default_factory=dict)


@dataclass(frozen=True)
class ActionDef:
    id: str
    verb: str
    obj: str
    tier: Tier
    score: int
    preconditions: tuple[Condition, ...] = ()
    effects: tuple[Effect, ...] = ()


Connection = tuple[str, str, str]  # (room, direction, room)


@dataclass(frozen=True)
class WorldSpec:
    """Immutable description of one game world.

    Declaration order of rooms/objects/actions/connections is significant:
    serialization and all tie-breaking rules follow it.
    """

    name: str
    rooms: tuple[Room, ...]
    connections: tuple[Connection, ...]
    objects: tuple[GameObject, ...]
    actions: tuple[ActionDef, ...]
    verb_synonyms: dict[str, tuple[str, ...]]
    start_room: str
    win_action: str

    def room(self, room_id: str) -> Room:
        return self._rooms_by_id[room_id]

    def object(self, obj_id: str) -> GameObject:
        return self._objects_by_id[obj_id]

    def action(self, action_id: str) -> ActionDef:
        return self._actions_by_id[action_id]

    def find_action(self, verb: str, obj: str) -> ActionDef | None:
        for action in self.actions:
            if action.verb == verb and action.obj == obj:
                return action
        return None

    def exits(self, room_id: str) -> list[tuple[str, str]]:
        """Outgoing (direction, room) pairs in declaration order."""
        return [(d, b) for a, d, b in self.connections if a == room_id]

    def canonical_verb(self, verb: str) -> str | None:
        """Resolve a verb through the synonym table; None if undeclared."""
        if verb in self._canonical_verbs:
            return verb
        return self._synonym_to_canonical.get(verb)

    # Lookup tables are derived lazily and cached on the instance; the
    # dataclass is frozen so object.__setattr__ is the supported backdoor.
    @property
    def _rooms_by_id(self) -> dict[str, Room]:
        return self._cache("rooms_by_id", lambda: {r.id: r for r in self.rooms})

    @property
    def _objects_by_id(self) -> dict[str, GameObject]:
        return self._cache("objects_by_id", lambda: {o.id: o for o in self.objects})

    @property
    def _actions_by_id(self) -> dict[str, ActionDef]:
        return self._cache("actions_by_id", lambda: {a.id: a for a in self.actions})

    @property
    def _canonical_verbs(self) -> frozenset[str]:
        return self._cache(
            "canonical_verbs",
            lambda: frozenset(a.verb for a in self.actions) | frozenset(self.verb_synonyms),
        )

    @property
    def _synonym_to_canonical(self) -> dict[str, str]:
        def build() -> dict[str, str]:
            table: dict[str, str] = {}
            for canonical, synonyms in self.verb_synonyms.items():
                for synonym in synonyms:
                    table.setdefault(synonym, canonical)
            return table

        return self._cache("synonym_to_canonical", build)

    def _cache(self, key, build):
        store = self.__dict__.setdefault("_derived", {})
        if key not in store:
            store[key] = build()
        return store[key]

# ---------------------------------------------------------------------------
# Validation

@dataclass(frozen=True)
class Violation:
    """One broken invariant: machine code, human message, offending subject."""

    code: str
    message: str
    subject: tuple[str, str] | None = None

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def validate_world(spec: WorldSpec) -> list[Violation]:
    """Check every world invariant; an empty list means the world is valid.

    Pure: the same spec always yields the identical report, in a stable
    order (rooms, connections, objects, actions, win bookkeeping, synonyms,
    start room).
    """
    out: list[Violation] = []

    def bad(code: str, message: str, subject: tuple[str, str] | None = None) -> None:
        out.append(Violation(code, message, subject))

    if not _IDENT_RE.match(spec.name or ""):
        bad("BAD_IDENTIFIER", f"world name {spec.name!r} is not a valid identifier")

    room_ids: set[str] = set()
    for room in spec.rooms:
        subj = ("room", room.id)
        if not _IDENT_RE.match(room.id or ""):
            bad("BAD_IDENTIFIER", f"room id {room.id!r} is not lowercase_with_underscores", subj)
        if room.id == INVENTORY:
            bad("RESERVED_ID", f"room id {INVENTORY!r} is reserved", subj)
        if room.id in room_ids:
            bad("DUPLICATE_ROOM_ID", f"room id {room.id!r} declared twice", subj)
        room_ids.add(room.id)

    seen_exits: set[tuple[str, str]] = set()
    connection_set = set(spec.connections)
    for a, direction, b in spec.connections:
        subj = ("connection", f"{a} {direction} {b}")
        if direction not in DIRECTIONS:
            bad("BAD_DIRECTION", f"unknown direction {direction!r}", subj)
            continue
        missing = [r for r in (a, b) if r not in room_ids]
        if missing:
            bad("UNKNOWN_ROOM", f"connection references unknown room {missing[0]!r}", subj)
            continue
        if (a, direction) in seen_exits:
            bad("DUPLICATE_DIRECTION", f"room {a!r} has two exits leading {direction}", subj)
        seen_exits.add((a, direction))
        if (b, REVERSE_DIRECTION[direction], a) not in connection_set:
            bad(
                "ASYMMETRIC_CONNECTION",
                f"connection {a} --{direction}--> {b} has no matching"
                f" {b} --{REVERSE_DIRECTION[direction]}--> {a}",
                subj,
            )

    object_ids: set[str] = set()
    for obj in spec.objects:
        subj = ("object", obj.id)
        if not _IDENT_RE.match(obj.id or ""):
            bad("BAD_IDENTIFIER", f"object id {obj.id!r} is not lowercase_with_underscores", subj)
        if obj.id in object_ids:
            bad("DUPLICATE_OBJECT_ID", f"object id {obj.id!r} declared twice", subj)
        object_ids.add(obj.id)
        if obj.location not in room_ids:
            bad("UNKNOWN_ROOM", f"object {obj.id!r} placed in unknown room {obj.location!r}", subj)
        for var, sv in obj.state_vars.items():
            if not sv.values:
                bad("BAD_STATE_VAR", f"state {obj.id}.{var} has no legal values", subj)
            elif sv.initial not in sv.values:
                bad(
                    "ILLEGAL_STATE_VALUE",
                    f"state {obj.id}.{var} starts at {sv.initial!r},"
                    f" not one of {list(sv.values)}",
                    subj,
                )

    def check_state_ref(obj_id: str, var: str, value: str, subj: tuple[str, str]) -> None:
        if obj_id not in object_ids:
            bad("UNKNOWN_OBJECT", f"reference to unknown object {obj_id!r}", subj)
            return
        obj = next(o for o in spec.objects if o.id == obj_id)
        if var not in obj.state_vars:
            bad("UNKNOWN_STATE_VAR", f"object {obj_id!r} has no state {var!r}", subj)
        elif value not in obj.state_vars[var].values:
            bad(
                "ILLEGAL_STATE_VALUE",
                f"{value!r} is not a legal value for {obj_id}.{var}",
                subj,
            )

    action_ids: set[str] = set()
    verb_obj_pairs: set[tuple[str, str]] = set()
    win_actions: list[str] = []
    for action in spec.actions:
        subj = ("action", action.id)
        if not _IDENT_RE.match(action.id or ""):
            bad("BAD_IDENTIFIER", f"action id {action.id!r} is not lowercase_with_underscores", subj)
        if action.id in action_ids:
            bad("DUPLICATE_ACTION_ID", f"action id {action.id!r} declared twice", subj)
        action_ids.add(action.id)
        if not _VERB_RE.match(action.verb or ""):
            bad("BAD_VERB", f"verb {action.verb!r} is not lowercase words", subj)
        if action.verb in RESERVED_VERBS or action.verb.startswith("go "):
            bad("RESERVED_VERB", f"verb {action.verb!r} is built into the engine", subj)
        if action.obj not in object_ids:
            bad("UNKNOWN_OBJECT", f"action {action.id!r} targets unknown object {action.obj!r}", subj)
        if (action.verb, action.obj) in verb_obj_pairs:
            bad(
                "DUPLICATE_ACTION_BINDING",
                f"two actions share the command {action.verb!r} + {action.obj!r}",
                subj,
            )
        verb_obj_pairs.add((action.verb, action.obj))
        if action.score not in SCORE_TIERS:
            bad("BAD_SCORE", f"score {action.score} is not one of 2, 3, 5", subj)
        elif SCORE_TIERS[action.score] is not action.tier:
            bad(
                "SCORE_TIER_MISMATCH",
                f"action {action.id!r} has tier {action.tier.value} but score {action.score}"
                f" (expected {action.tier.score})",
                subj,
            )
        if action.tier is Tier.WIN:
            win_actions.append(action.id)
        for cond in action.preconditions:
            if isinstance(cond, InRoom):
                if cond.room not in room_ids:
                    bad("UNKNOWN_ROOM", f"precondition names unknown room {cond.room!r}", subj)
            elif isinstance(cond, (Holds, Near)):
                if cond.obj not in object_ids:
                    bad("UNKNOWN_OBJECT", f"precondition names unknown object {cond.obj!r}", subj)
            elif isinstance(cond, StateIs):
                check_state_ref(cond.obj, cond.var, cond.value, subj)
        for effect in action.effects:
            if isinstance(effect, SetState):
                check_state_ref(effect.obj, effect.var, effect.value, subj)
            elif isinstance(effect, (Take, Drop)):
                if effect.obj not in object_ids:
                    bad("UNKNOWN_OBJECT", f"effect names unknown object {effect.obj!r}", subj)
                elif isinstance(effect, Take) and not next(
                    o for o in spec.objects if o.id == effect.obj
                ).portable:
                    bad(
                        "NONPORTABLE_TAKE",
                        f"effect takes {effect.obj!r}, which is not portable",
                        subj,
                    )

    if not win_actions:
        bad("NO_WIN_ACTION", "world declares no win-tier action")
    elif len(win_actions) > 1:
        bad("MULTIPLE_WIN_ACTIONS", f"win-tier actions: {', '.join(win_actions)}")
    if spec.win_action not in action_ids:
        bad("UNKNOWN_ACTION", f"win action {spec.win_action!r} is not declared")
    elif spec.win_action not in win_actions:
        bad(
            "WIN_ACTION_MISMATCH",
            f"win action {spec.win_action!r} does not have the win tier",
            ("action", spec.win_action),
        )

    claimed: dict[str, str] = {}
    action_verbs = {a.verb for a in spec.actions}
    for canonical, synonyms in spec.verb_synonyms.items():
        subj = ("synonyms", canonical)
        if not _VERB_RE.match(canonical or ""):
            bad("BAD_VERB", f"synonym group head {canonical!r} is not lowercase words", subj)
        if canonical in RESERVED_VERBS or canonical.startswith("go "):
            bad("RESERVED_VERB", f"verb {canonical!r} is built into the engine", subj)
        for synonym in synonyms:
            if not _VERB_RE.match(synonym or ""):
                bad("BAD_VERB", f"synonym {synonym!r} is not lowercase words", subj)
                continue
            if synonym in RESERVED_VERBS or synonym.startswith("go "):
                bad("RESERVED_VERB", f"synonym {synonym!r} is built into the engine", subj)
            if synonym == canonical or synonym in spec.verb_synonyms or synonym in action_verbs:
                bad(
                    "SYNONYM_CONFLICT",
                    f"{synonym!r} is itself a canonical verb",
                    subj,
                )
            elif synonym in claimed and claimed[synonym] != canonical:
                bad(
                    "SYNONYM_CONFLICT",
                    f"{synonym!r} maps to both {claimed[synonym]!r} and {canonical!r}",
                    subj,
                )
            claimed.setdefault(synonym, canonical)

    if spec.start_room not in room_ids:
        bad("UNKNOWN_ROOM", f"start room {spec.start_room!r} is not declared")

    return out
