"""Shared test helpers: a seeded random-world generator (grid-based so
connections stay symmetric and direction-unique), an independent
brute-force path oracle, and state snapshots for purity checks."""

from __future__ import annotations

import random

from makebelieve.engine import GameState
from makebelieve.world import (
    ActionDef,
    GameObject,
    Holds,
    InRoom,
    Near,
    Room,
    SetState,
    StateIs,
    StateVar,
    Tier,
    WorldSpec,
    validate_world,
)

VERB_POOL = [
    "poke", "rub", "lift", "press", "spin", "shake", "tap", "twist",
    "ring", "pat", "flip", "nudge", "squeeze", "strum", "dust", "stack",
]
SYNONYM_POOL = [
    "jab", "stroke", "hoist", "shove", "whirl", "jiggle", "knock",
    "strike", "bump", "prod", "tug at",
]
FANCY_NAMES = [
    "plain thing",
    'with "quotes"',
    "back\\slash",
    "café au lait",
    "tab\tseparated",
    "line\nbreak",
    "  padded  ",
    "UPPER Case",
]

# (dx, dy) on the grid; y grows southward.
_GRID_DIRS = {(1, 0): "east", (-1, 0): "west", (0, 1): "south", (0, -1): "north"}


def random_world(rng: random.Random, max_rooms: int = 8, fancy: bool = False,
                 name: str = "generated") -> WorldSpec:
    """A random valid world: rooms laid out on a 3x3 grid (so reverse edges
    and direction uniqueness hold by construction), a handful of objects
    with states, and scored actions with exactly one win."""
    side = 3
    n_rooms = rng.randint(2, max(2, min(max_rooms, side * side)))
    cells = {(1, 1)}
    while len(cells) < n_rooms:
        x, y = rng.choice(sorted(cells))
        dx, dy = rng.choice(list(_GRID_DIRS))
        nxt = (x + dx, y + dy)
        if 0 <= nxt[0] < side and 0 <= nxt[1] < side:
            cells.add(nxt)
    ordered = sorted(cells)
    room_of = {cell: f"room_{i}" for i, cell in enumerate(ordered)}

    def display(base: str, i: int) -> str:
        if fancy:
            return f"{rng.choice(FANCY_NAMES)} {i}"
        return f"{base} {i}"

    rooms = tuple(
        Room(room_of[cell], display("Room", i), display("desc", i) if rng.random() < 0.5 else "")
        for i, cell in enumerate(ordered)
    )

    # Spanning edges came from the random walk; keep every grid adjacency
    # with probability 1 so connectivity is guaranteed, then thin extras.
    pairs = []
    for (x, y) in ordered:
        for (dx, dy), direction in _GRID_DIRS.items():
            other = (x + dx, y + dy)
            if other in cells and ((x, y), other) not in pairs and (other, (x, y)) not in pairs:
                pairs.append(((x, y), other))
    # A spanning subset: BFS over all adjacencies, then extras at random.
    keep: list[tuple[tuple[int, int], tuple[int, int]]] = []
    seen = {ordered[0]}
    frontier = [ordered[0]]
    adjacency = {cell: [] for cell in ordered}
    for a, b in pairs:
        adjacency[a].append(b)
        adjacency[b].append(a)
    while frontier:
        cell = frontier.pop(0)
        for other in sorted(adjacency[cell]):
            if other not in seen:
                seen.add(other)
                keep.append((cell, other))
                frontier.append(other)
    for pair in pairs:
        if pair not in keep and (pair[1], pair[0]) not in keep and rng.random() < 0.4:
            keep.append(pair)

    connections: list[tuple[str, str, str]] = []
    for a, b in keep:
        delta = (b[0] - a[0], b[1] - a[1])
        direction = _GRID_DIRS[delta]
        reverse = _GRID_DIRS[(-delta[0], -delta[1])]
        connections.append((room_of[a], direction, room_of[b]))
        connections.append((room_of[b], reverse, room_of[a]))

    n_objects = rng.randint(1, 5)
    objects = []
    for j in range(n_objects):
        state_vars = {}
        for k in range(rng.randint(0, 2)):
            values = tuple(f"v{k}_{m}" for m in range(rng.randint(2, 3)))
            state_vars[f"var{k}"] = StateVar(values[0], values)
        objects.append(
            GameObject(
                id=f"obj_{j}",
                display_name=display("thing", j),
                location=rng.choice(rooms).id,
                portable=rng.random() < 0.7,
                state_vars=state_vars,
            )
        )

    verbs = rng.sample(VERB_POOL, k=min(len(VERB_POOL), n_objects + 4))
    actions = []
    used_pairs = set()
    win_obj = rng.choice(objects)
    actions.append(
        ActionDef(
            id="act_win", verb=verbs[0], obj=win_obj.id, tier=Tier.WIN, score=5,
            preconditions=(Near(win_obj.id),), effects=(),
        )
    )
    used_pairs.add((verbs[0], win_obj.id))
    for j in range(rng.randint(1, 4)):
        obj = rng.choice(objects)
        verb = rng.choice(verbs[1:])
        if (verb, obj.id) in used_pairs:
            continue
        used_pairs.add((verb, obj.id))
        tier = rng.choice((Tier.STAND_ALONE, Tier.INTERACTIVE))
        preconditions = []
        if rng.random() < 0.5:
            preconditions.append(Near(obj.id))
        if rng.random() < 0.3:
            preconditions.append(InRoom(obj.location))
        if obj.portable and rng.random() < 0.3:
            preconditions.append(Holds(obj.id))
        other = rng.choice(objects)
        if other.state_vars and rng.random() < 0.3:
            var, sv = sorted(other.state_vars.items())[0]
            preconditions.append(StateIs(other.id, var, rng.choice(sv.values)))
        effects = []
        if obj.state_vars and rng.random() < 0.7:
            var, sv = sorted(obj.state_vars.items())[0]
            effects.append(SetState(obj.id, var, rng.choice(sv.values)))
        actions.append(
            ActionDef(
                id=f"act_{j}", verb=verb, obj=obj.id, tier=tier, score=tier.score,
                preconditions=tuple(preconditions), effects=tuple(effects),
            )
        )

    synonyms: dict[str, tuple[str, ...]] = {}
    available = list(SYNONYM_POOL)
    rng.shuffle(available)
    for action in actions[: rng.randint(0, 2)]:
        if action.verb in synonyms or len(available) < 2:
            continue
        count = rng.randint(1, 2)
        synonyms[action.verb] = tuple(available.pop() for _ in range(count))

    world = WorldSpec(
        name=name,
        rooms=rooms,
        connections=tuple(connections),
        objects=tuple(objects),
        actions=tuple(actions),
        verb_synonyms=synonyms,
        start_room=rng.choice(rooms).id,
        win_action="act_win",
    )
    violations = validate_world(world)
    assert not violations, f"generator produced an invalid world: {violations}"
    return world


def brute_force_best_path(world: WorldSpec, origin: str, goal: str) -> list[str] | None:
    """Oracle: enumerate every simple path and keep the one minimal by
    (length, direction sequence). None when the goal is unreachable."""
    if origin == goal:
        return []
    best: list[str] | None = None

    def dfs(room: str, visited: set[str], dirs: list[str]) -> None:
        nonlocal best
        if best is not None and len(dirs) >= len(best):
            return
        for direction, nxt in sorted(world.exits(room)):
            if nxt in visited:
                continue
            dirs.append(direction)
            if nxt == goal:
                candidate = list(dirs)
                if best is None or (len(candidate), candidate) < (len(best), best):
                    best = candidate
            else:
                visited.add(nxt)
                dfs(nxt, visited, dirs)
                visited.remove(nxt)
            dirs.pop()

    dfs(origin, {origin}, [])
    return best


def state_snapshot(state: GameState) -> tuple:
    """Everything except the log, hashable, for purity comparisons."""
    return (
        state.agent_room,
        frozenset(state.inventory),
        tuple(sorted(state.object_states.items())),
        tuple(sorted(state.object_rooms.items())),
        state.cumulative_score,
        frozenset(state.awarded),
        state.ended,
    )


def random_command_text(rng: random.Random, world: WorldSpec) -> str:
    """A plausible-to-garbage command for stress streams."""
    roll = rng.random()
    if roll < 0.35:
        action = rng.choice(world.actions)
        verb = action.verb
        if world.verb_synonyms.get(verb) and rng.random() < 0.5:
            verb = rng.choice(world.verb_synonyms[verb])
        return f"{verb} {world.object(action.obj).display_name}"
    if roll < 0.55:
        return f"go {rng.choice(['north', 'south', 'east', 'west'])}"
    if roll < 0.75:
        obj = rng.choice(world.objects)
        return f"{rng.choice(['take', 'drop'])} {obj.display_name}"
    if roll < 0.9:
        return f"{rng.choice(['frobnicate', 'yodel', 'launder'])} {rng.choice(world.objects).display_name}"
    return rng.choice(["", "go nowhere", "take", "xyzzy", "use the thing badly"])
