"""makebelieve: a text-adventure engine with a declarative world language
and a story-driven imaginary-play pipeline on top of it."""

from .world import (
    ActionDef,
    Condition,
    Drop,
    Effect,
    EndGame,
    GameObject,
    Holds,
    InRoom,
    Near,
    Room,
    SetState,
    StateIs,
    StateVar,
    Take,
    Tier,
    Violation,
    WorldSpec,
    validate_world,
)
from .dsl import (
    ParseDiagnostic,
    ParseResult,
    SourceSpan,
    WorldFormatError,
    load_world,
    parse_worldspec,
    serialize_worldspec,
)
from .engine import (
    Command,
    EpisodeResult,
    GameState,
    Movement,
    TurnRecord,
    new_game,
    parse_command,
    run_commands,
    step,
)
from .planner import (
    Plan,
    PlanFailure,
    PlanningError,
    PlanStep,
    Unreachable,
    augment_with_navigation,
    resolve_prerequisites,
    run_episode,
    shortest_path,
)
from .pipeline import (
    ImaginaryStory,
    MappingEntry,
    ObjectMapping,
    Phrase,
    PipelineRun,
    TranslatedSequence,
    continue_story,
    feedback_augmentation,
    generate_story,
    map_objects,
    run_pipeline,
    simplify_story,
    translate_phrases,
    validate_story_constraint,
    write_run_artifacts,
)
from .llm import (
    BackendFailure,
    ChatRequest,
    FixtureMiss,
    FixtureStore,
    LiveBackend,
    RecordBackend,
    ReplayBackend,
    complete,
    request_digest,
)

__version__ = "0.1.0"
