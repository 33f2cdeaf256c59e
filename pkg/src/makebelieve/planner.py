"""Turns bare action sequences into executable plans.

Before each requested action the planner walks the agent to the action's
object and satisfies unmet preconditions by backward chaining: carry
conditions become take commands, state conditions recurse into whichever
declared action produces the wanted state. Every plan is simulated before
it is returned, so a returned plan replays with zero blocked turns.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

from .engine import (
    Command,
    CommandError,
    EpisodeResult,
    GameState,
    Movement,
    NoSuchAction,
    OUTCOME_SUCCEEDED,
    condition_holds,
    new_game,
    parse_command,
    run_commands,
    step,
)
from .world import (
    INVENTORY,
    ActionDef,
    Condition,
    Holds,
    InRoom,
    Near,
    SetState,
    StateIs,
    Tier,
    WorldSpec,
)

PROVENANCE_GIVEN = "given"
PROVENANCE_NAVIGATION = "navigation"
PROVENANCE_PREREQUISITE = "prerequisite"

REASON_UNREACHABLE = "unreachable_room"
REASON_UNSATISFIABLE = "unsatisfiable_condition"
REASON_DEPTH = "depth_exceeded"


class Unreachable(Exception):
    """No path exists between the two rooms."""


@dataclass(frozen=True)
class PlanStep:
    command: Command | Movement
    provenance: str

    def text(self) -> str:
        return self.command.text()


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...]

    def commands(self) -> list[Command | Movement]:
        return [s.command for s in self.steps]

    def texts(self) -> list[str]:
        return [s.text() for s in self.steps]


@dataclass(frozen=True)
class PlanFailure:
    """Why planning stopped: the action that could not be made executable
    and the concrete blocker."""

    failing_action: str
    reason: str  # unreachable_room | unsatisfiable_condition | depth_exceeded
    condition: Condition | None = None
    detail: str = ""
    action_text: str = ""


class PlanningError(Exception):
    def __init__(self, failure: PlanFailure):
        self.failure = failure
        super().__init__(f"{failure.reason}: {failure.failing_action} {failure.detail}".strip())


def shortest_path(world: WorldSpec, origin: str, goal: str) -> list[str]:
    """Fewest-moves direction list from origin to goal.

    Breadth-first with neighbors expanded in alphabetical direction order,
    which makes the result the lexicographically smallest of all shortest
    paths. Raises Unreachable when no route exists.
    """
    if origin not in world._rooms_by_id or goal not in world._rooms_by_id:
        raise KeyError(f"unknown room in path query: {origin!r} -> {goal!r}")
    if origin == goal:
        return []
    adjacency: dict[str, list[tuple[str, str]]] = {}
    for a, direction, b in world.connections:
        adjacency.setdefault(a, []).append((direction, b))
    for exits in adjacency.values():
        exits.sort()
    paths: dict[str, list[str]] = {origin: []}
    frontier = deque([origin])
    while frontier:
        room = frontier.popleft()
        for direction, nxt in adjacency.get(room, ()):
            if nxt in paths:
                continue
            paths[nxt] = paths[room] + [direction]
            if nxt == goal:
                return paths[nxt]
            frontier.append(nxt)
    raise Unreachable(f"no path from {origin!r} to {goal!r}")


def _unmet(action: ActionDef, state: GameState) -> list[Condition]:
    return [c for c in action.preconditions if not condition_holds(c, state)]


def _builtin_action(command: Command) -> ActionDef:
    """Stand-in ActionDef so built-in take/drop can reuse the failure paths."""
    return ActionDef(
        id=command.text().replace(" ", "_"), verb=command.verb, obj=command.obj,
        tier=Tier.STAND_ALONE, score=0,
    )


def _choose_producer(world: WorldSpec, state: GameState, want: StateIs) -> ActionDef | None:
    """Pick the declared action that sets the wanted state: fewest unmet
    preconditions first, declaration order as the tie-break."""
    best: ActionDef | None = None
    best_key: tuple[int, int] | None = None
    for index, action in enumerate(world.actions):
        produces = any(
            isinstance(e, SetState) and (e.obj, e.var, e.value) == (want.obj, want.var, want.value)
            for e in action.effects
        )
        if not produces:
            continue
        key = (len(_unmet(action, state)), index)
        if best_key is None or key < best_key:
            best, best_key = action, key
    return best


class _Planner:
    def __init__(self, world: WorldSpec, sim: GameState):
        self.world = world
        self.sim = sim
        self.steps: list[PlanStep] = []

    def _label(self, action: ActionDef) -> str:
        return f"{action.verb} {self.world.object(action.obj).display_name}"

    def fail(self, action: ActionDef, reason: str, condition: Condition | None = None,
             detail: str = "") -> PlanningError:
        return PlanningError(
            PlanFailure(
                failing_action=action.id,
                reason=reason,
                condition=condition,
                detail=detail,
                action_text=self._label(action),
            )
        )

    def walk_to(self, room: str, action: ActionDef) -> None:
        if self.sim.agent_room == room:
            return
        try:
            directions = shortest_path(self.world, self.sim.agent_room, room)
        except Unreachable:
            raise self.fail(action, REASON_UNREACHABLE, detail=room)
        for direction in directions:
            move = Movement(direction)
            record = step(self.sim, move)
            if record.outcome != OUTCOME_SUCCEEDED:  # pragma: no cover - path came from the map
                raise self.fail(action, REASON_UNREACHABLE, detail=room)
            self.steps.append(PlanStep(move, PROVENANCE_NAVIGATION))

    def execute(self, command: Command, provenance: str, action: ActionDef) -> None:
        record = step(self.sim, command)
        if record.outcome != OUTCOME_SUCCEEDED:
            raise self.fail(
                action, REASON_UNSATISFIABLE,
                condition=record.failed_conditions[0] if record.failed_conditions else None,
                detail=f"{command.text()} stayed blocked",
            )
        self.steps.append(PlanStep(command, provenance))

    def satisfy(self, action: ActionDef, budget: int) -> None:
        """Emit prerequisite/navigation steps until every precondition of
        `action` holds in the simulation."""
        if budget < 0:
            raise self.fail(action, REASON_DEPTH)
        # Carry and state requirements first: fetching things moves the agent,
        # so room requirements are restored afterwards.
        for cond in action.preconditions:
            if isinstance(cond, Holds) and not condition_holds(cond, self.sim):
                obj = self.world.object(cond.obj)
                if not obj.portable:
                    raise self.fail(action, REASON_UNSATISFIABLE, condition=cond,
                                    detail=f"{cond.obj} is not portable")
                self.walk_to(self.sim.object_rooms[cond.obj], action)
                self.execute(Command("take", cond.obj), PROVENANCE_PREREQUISITE, action)
            elif isinstance(cond, StateIs) and not condition_holds(cond, self.sim):
                producer = _choose_producer(self.world, self.sim, cond)
                if producer is None:
                    raise self.fail(action, REASON_UNSATISFIABLE, condition=cond,
                                    detail="no action produces this state")
                self.satisfy(producer, budget - 1)
                self.go_to_object(producer.obj, producer)
                self.execute(
                    Command(producer.verb, producer.obj), PROVENANCE_PREREQUISITE, producer
                )
                if not condition_holds(cond, self.sim):  # pragma: no cover - producer filter
                    raise self.fail(action, REASON_UNSATISFIABLE, condition=cond)
        for cond in action.preconditions:
            if isinstance(cond, InRoom) and not condition_holds(cond, self.sim):
                self.walk_to(cond.room, action)
            elif isinstance(cond, Near) and not condition_holds(cond, self.sim):
                self.walk_to(self.sim.object_rooms[cond.obj], action)
        remaining = _unmet(action, self.sim)
        if remaining:
            raise self.fail(action, REASON_UNSATISFIABLE, condition=remaining[0],
                            detail="preconditions conflict")

    def go_to_object(self, obj_id: str, action: ActionDef) -> None:
        """Walk to wherever the object currently is (held = already here)."""
        room = self.sim.object_rooms[obj_id]
        if room != INVENTORY:
            self.walk_to(room, action)


def resolve_prerequisites(
    world: WorldSpec, state: GameState, action: ActionDef, depth_budget: int = 5
) -> Plan:
    """Plan prefix that makes `action` executable from `state`.

    The given state is not modified; planning runs on a copy. Raises
    PlanningError carrying a PlanFailure when chaining bottoms out.
    """
    planner = _Planner(world, state.clone())
    planner.satisfy(action, depth_budget)
    return Plan(tuple(planner.steps))


def augment_with_navigation(
    world: WorldSpec,
    sequence: list[str | Command | Movement],
    depth_budget: int = 5,
) -> Plan:
    """Weave navigation and prerequisite steps around the given commands.

    Each given command must name a declared action (or be a movement or a
    take/drop). Planning stops early if a given action ends the game; the
    unreachable remainder is dropped. The returned plan has been simulated
    end to end and replays without blocked turns.
    """
    planner = _Planner(world, new_game(world))
    for item in sequence:
        if planner.sim.ended:
            break
        command = parse_command(item, world) if isinstance(item, str) else item
        if isinstance(command, Movement):
            record = step(planner.sim, command)
            if record.outcome != OUTCOME_SUCCEEDED:
                raise PlanningError(
                    PlanFailure(
                        failing_action=command.text(), reason=REASON_UNREACHABLE,
                        detail="explicit movement is blocked", action_text=command.text(),
                    )
                )
            planner.steps.append(PlanStep(command, PROVENANCE_GIVEN))
            continue
        if command.verb == "take":
            if command.obj in planner.sim.inventory:
                continue  # already carrying; a literal take would block
            pseudo = _builtin_action(command)
            planner.go_to_object(command.obj, pseudo)
            planner.execute(command, PROVENANCE_GIVEN, pseudo)
            continue
        if command.verb == "drop":
            if command.obj not in planner.sim.inventory:
                continue
            planner.execute(command, PROVENANCE_GIVEN, _builtin_action(command))
            continue
        action = world.find_action(command.verb, command.obj)
        if action is None:
            raise NoSuchAction(f"no action {command.text()!r} in world {world.name!r}")
        planner.satisfy(action, depth_budget)
        planner.go_to_object(action.obj, action)
        planner.execute(command, PROVENANCE_GIVEN, action)

    plan = Plan(tuple(planner.steps))
    _check_clean(world, plan)
    return plan


def _check_clean(world: WorldSpec, plan: Plan) -> None:
    replay = new_game(world)
    for planned in plan.steps:
        record = step(replay, planned.command)
        if record.outcome != OUTCOME_SUCCEEDED:  # pragma: no cover - defensive
            raise PlanningError(
                PlanFailure(
                    failing_action=planned.text(), reason=REASON_UNSATISFIABLE,
                    detail="plan replay hit a blocked turn", action_text=planned.text(),
                )
            )


def run_episode(world: WorldSpec, sequence: list[str | Command | Movement]) -> EpisodeResult:
    """Augment the sequence, play it, and report the outcome.

    Never raises: planning failures and unknown commands come back inside
    the EpisodeResult so the caller can feed them into the next prompt.
    """
    try:
        plan = augment_with_navigation(world, sequence)
    except PlanningError as err:
        return EpisodeResult(
            cumulative_score=0, last_reward=0, win=False, failures=(), turns=0,
            plan_failure=err.failure,
        )
    except (CommandError, NoSuchAction) as err:
        return EpisodeResult(
            cumulative_score=0, last_reward=0, win=False, failures=(), turns=0,
            plan_failure=PlanFailure(
                failing_action=str(err), reason=REASON_UNSATISFIABLE,
                detail="command does not name a declared action", action_text=str(err),
            ),
        )
    state = new_game(world)
    _, result = run_commands(state, plan.commands())
    return replace(result, plan=plan)
