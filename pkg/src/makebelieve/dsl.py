"""Reader and writer for the `.world` text format.

A world file is line-oriented. Each line is one directive; `#` starts a
comment; indentation is cosmetic. Display text is double-quoted (escapes:
\\" \\\\ \\n \\t). `state` lines attach to the most recent `object`,
`require`/`effect` lines to the most recent `action`.

Grammar (EBNF, one directive per line):

    document  = { line } ;
    line      = [ directive ] [ comment ] ;
    directive = world | room | connect | object | state | action
              | require | effect | synonyms | start | win ;
    world     = "world" ident ;
    room      = "room" ident string [ string ] ;
    connect   = "connect" ident direction ident ;          (* one directed edge *)
    object    = "object" ident string "in" ident [ "portable" ] ;
    state     = "state" ident "=" value { "|" value } ;     (* first value = initial *)
    action    = "action" ident "=" verb ident "score" int ;
    require   = "require" ( "in" ident | "holds" ident | "near" ident
                          | "state" ident ident "=" value ) ;
    effect    = "effect" ( "set" ident ident "=" value
                         | "take" ident | "drop" ident | "end" ) ;
    synonyms  = "synonyms" verb "=" verb { "," verb } ;
    start     = "start" ident ;
    win       = "win" ident ;
    verb      = word | string ;                             (* quoted when multi-word *)
    value     = word | string ;
    direction = "north" | "south" | "east" | "west" ;

An action's tier is derived from its score (2 stand-alone, 3 interactive,
5 win). Connections are directed; symmetric reverse edges must be written
out and are checked during validation. Unknown directives produce warnings
so newer files still load on older readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .world import (
    SCORE_TIERS,
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
    WorldSpec,
    validate_world,
)

_DIRECTIVES = {
    "world", "room", "connect", "object", "state", "action",
    "require", "effect", "synonyms", "start", "win",
}

_IDENT_SAFE = set("abcdefghijklmnopqrstuvwxyz0123456789_")


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    severity: str  # "error" or "warning"
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.severity} {self.code}: {self.message}"


@dataclass
class ParseResult:
    """Outcome of parsing: a valid world, or error diagnostics, never both."""

    world: WorldSpec | None
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.world is not None

    @property
    def errors(self) -> list[ParseDiagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    @property
    def warnings(self) -> list[ParseDiagnostic]:
        return [d for d in self.diagnostics if d.severity == "warning"]


class WorldFormatError(Exception):
    """Raised by load_world when a file does not parse to a valid world."""

    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics[:3]))


# ---------------------------------------------------------------------------
# Tokenizer

@dataclass(frozen=True)
class _Token:
    text: str
    column: int
    quoted: bool = False


_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}
_PUNCT = {"=", "|", ","}


def _scan_line(line: str) -> tuple[list[_Token], tuple[int, str, str] | None]:
    """Split one line into tokens. Returns (tokens, error) where error is
    (column, code, message) for unterminated strings / bad escapes."""
    tokens: list[_Token] = []
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "#":
            break
        col = i + 1
        if ch == '"':
            parts: list[str] = []
            i += 1
            while i < n:
                ch = line[i]
                if ch == '"':
                    break
                if ch == "\\":
                    if i + 1 >= n or line[i + 1] not in _ESCAPES:
                        return tokens, (i + 1, "BAD_ESCAPE", f"unknown escape at column {i + 1}")
                    parts.append(_ESCAPES[line[i + 1]])
                    i += 2
                    continue
                parts.append(ch)
                i += 1
            if i >= n:
                return tokens, (col, "UNTERMINATED_STRING", "string is missing its closing quote")
            tokens.append(_Token("".join(parts), col, quoted=True))
            i += 1
            continue
        if ch in _PUNCT:
            tokens.append(_Token(ch, col))
            i += 1
            continue
        j = i
        while j < n and not line[j].isspace() and line[j] not in _PUNCT and line[j] not in ('"', "#"):
            j += 1
        tokens.append(_Token(line[i:j], col))
        i = j
    return tokens, None


# ---------------------------------------------------------------------------
# Parser

@dataclass
class _PendingObject:
    decl: GameObject
    state_vars: dict[str, StateVar] = field(default_factory=dict)


@dataclass
class _PendingAction:
    id: str
    verb: str
    obj: str
    score: int
    preconditions: list[Condition] = field(default_factory=list)
    effects: list[Effect] = field(default_factory=list)


class _LineError(Exception):
    def __init__(self, column: int, code: str, message: str):
        self.column = column
        self.code = code
        self.message = message


class _Parser:
    def __init__(self, filename: str):
        self.filename = filename
        self.diagnostics: list[ParseDiagnostic] = []
        self.world_name: str | None = None
        self.rooms: list[Room] = []
        self.connections: list[tuple[str, str, str]] = []
        self.objects: list[_PendingObject] = []
        self.actions: list[_PendingAction] = []
        self.synonyms: dict[str, tuple[str, ...]] = {}
        self.start_room: str | None = None
        self.win_action: str | None = None
        self.spans: dict[tuple[str, str], SourceSpan] = {}
        self.header_span = SourceSpan(filename, 1, 1)

    def span(self, line: int, column: int) -> SourceSpan:
        return SourceSpan(self.filename, line, column)

    def error(self, span: SourceSpan, code: str, message: str) -> None:
        self.diagnostics.append(ParseDiagnostic(span, "error", code, message))

    def warn(self, span: SourceSpan, code: str, message: str) -> None:
        self.diagnostics.append(ParseDiagnostic(span, "warning", code, message))

    # -- token helpers, all raising _LineError on mismatch

    def _take(self, tokens: list[_Token], idx: int, what: str, lineno: int) -> _Token:
        if idx >= len(tokens):
            last = tokens[-1].column + len(tokens[-1].text) if tokens else 1
            raise _LineError(last, "UNEXPECTED_END", f"expected {what} before end of line")
        return tokens[idx]

    def _word(self, tokens: list[_Token], idx: int, what: str, lineno: int) -> str:
        tok = self._take(tokens, idx, what, lineno)
        if tok.quoted or tok.text in _PUNCT:
            raise _LineError(tok.column, "UNEXPECTED_TOKEN", f"expected {what}, found {tok.text!r}")
        return tok.text

    def _keyword(self, tokens: list[_Token], idx: int, keyword: str, lineno: int) -> None:
        tok = self._take(tokens, idx, f"{keyword!r}", lineno)
        if tok.quoted or tok.text != keyword:
            raise _LineError(tok.column, "UNEXPECTED_TOKEN", f"expected {keyword!r}, found {tok.text!r}")

    def _string(self, tokens: list[_Token], idx: int, what: str, lineno: int) -> str:
        tok = self._take(tokens, idx, what, lineno)
        if not tok.quoted:
            raise _LineError(tok.column, "UNEXPECTED_TOKEN", f"expected quoted {what}, found {tok.text!r}")
        return tok.text

    def _value(self, tokens: list[_Token], idx: int, what: str, lineno: int) -> str:
        tok = self._take(tokens, idx, what, lineno)
        if not tok.quoted and tok.text in _PUNCT:
            raise _LineError(tok.column, "UNEXPECTED_TOKEN", f"expected {what}, found {tok.text!r}")
        return tok.text

    def _end(self, tokens: list[_Token], idx: int) -> None:
        if idx < len(tokens):
            tok = tokens[idx]
            raise _LineError(tok.column, "UNEXPECTED_TOKEN", f"unexpected {tok.text!r} at end of line")

    # -- directives

    def parse_line(self, lineno: int, line: str) -> None:
        tokens, scan_error = _scan_line(line)
        if scan_error is not None:
            column, code, message = scan_error
            self.error(self.span(lineno, column), code, message)
            return
        if not tokens:
            return
        head = tokens[0]
        if head.quoted or head.text not in _DIRECTIVES:
            self.warn(
                self.span(lineno, head.column),
                "UNKNOWN_DIRECTIVE",
                f"unknown directive {head.text!r}; line skipped",
            )
            return
        try:
            getattr(self, f"_parse_{head.text}")(tokens, lineno)
        except _LineError as err:
            self.error(self.span(lineno, err.column), err.code, err.message)

    def _parse_world(self, tokens: list[_Token], lineno: int) -> None:
        name = self._word(tokens, 1, "world name", lineno)
        self._end(tokens, 2)
        if self.world_name is not None:
            raise _LineError(tokens[0].column, "DUPLICATE_WORLD_HEADER", "world already declared")
        self.world_name = name
        self.header_span = self.span(lineno, tokens[0].column)
        self.spans[("world", name)] = self.header_span

    def _parse_room(self, tokens: list[_Token], lineno: int) -> None:
        rid = self._word(tokens, 1, "room id", lineno)
        display = self._string(tokens, 2, "display name", lineno)
        description = ""
        idx = 3
        if idx < len(tokens) and tokens[idx].quoted:
            description = tokens[idx].text
            idx += 1
        self._end(tokens, idx)
        self.rooms.append(Room(rid, display, description))
        self.spans.setdefault(("room", rid), self.span(lineno, tokens[0].column))

    def _parse_connect(self, tokens: list[_Token], lineno: int) -> None:
        a = self._word(tokens, 1, "room id", lineno)
        direction = self._word(tokens, 2, "direction", lineno)
        b = self._word(tokens, 3, "room id", lineno)
        self._end(tokens, 4)
        self.connections.append((a, direction, b))
        self.spans.setdefault(
            ("connection", f"{a} {direction} {b}"), self.span(lineno, tokens[0].column)
        )

    def _parse_object(self, tokens: list[_Token], lineno: int) -> None:
        oid = self._word(tokens, 1, "object id", lineno)
        display = self._string(tokens, 2, "display name", lineno)
        self._keyword(tokens, 3, "in", lineno)
        location = self._word(tokens, 4, "room id", lineno)
        portable = False
        idx = 5
        if idx < len(tokens) and not tokens[idx].quoted and tokens[idx].text == "portable":
            portable = True
            idx += 1
        self._end(tokens, idx)
        self.objects.append(_PendingObject(GameObject(oid, display, location, portable)))
        self.spans.setdefault(("object", oid), self.span(lineno, tokens[0].column))

    def _parse_state(self, tokens: list[_Token], lineno: int) -> None:
        if not self.objects:
            raise _LineError(tokens[0].column, "STATE_OUTSIDE_OBJECT", "state line before any object")
        var = self._word(tokens, 1, "state name", lineno)
        self._keyword(tokens, 2, "=", lineno)
        values = [self._value(tokens, 3, "state value", lineno)]
        idx = 4
        while idx < len(tokens):
            self._keyword(tokens, idx, "|", lineno)
            values.append(self._value(tokens, idx + 1, "state value", lineno))
            idx += 2
        owner = self.objects[-1]
        if var in owner.state_vars:
            raise _LineError(
                tokens[1].column, "DUPLICATE_STATE_VAR",
                f"state {var!r} already declared for object {owner.decl.id!r}",
            )
        owner.state_vars[var] = StateVar(values[0], tuple(values))

    def _parse_action(self, tokens: list[_Token], lineno: int) -> None:
        aid = self._word(tokens, 1, "action id", lineno)
        self._keyword(tokens, 2, "=", lineno)
        verb = self._value(tokens, 3, "verb", lineno)
        obj = self._word(tokens, 4, "object id", lineno)
        self._keyword(tokens, 5, "score", lineno)
        score_tok = self._take(tokens, 6, "score value", lineno)
        self._end(tokens, 7)
        try:
            score = int(score_tok.text)
        except ValueError:
            raise _LineError(score_tok.column, "BAD_NUMBER", f"score {score_tok.text!r} is not an integer")
        self.actions.append(_PendingAction(aid, verb, obj, score))
        self.spans.setdefault(("action", aid), self.span(lineno, tokens[0].column))

    def _parse_require(self, tokens: list[_Token], lineno: int) -> None:
        if not self.actions:
            raise _LineError(tokens[0].column, "REQUIRE_OUTSIDE_ACTION", "require line before any action")
        kind = self._word(tokens, 1, "condition kind", lineno)
        cond: Condition
        if kind == "in":
            cond = InRoom(self._word(tokens, 2, "room id", lineno))
            self._end(tokens, 3)
        elif kind == "holds":
            cond = Holds(self._word(tokens, 2, "object id", lineno))
            self._end(tokens, 3)
        elif kind == "near":
            cond = Near(self._word(tokens, 2, "object id", lineno))
            self._end(tokens, 3)
        elif kind == "state":
            obj = self._word(tokens, 2, "object id", lineno)
            var = self._word(tokens, 3, "state name", lineno)
            self._keyword(tokens, 4, "=", lineno)
            value = self._value(tokens, 5, "state value", lineno)
            self._end(tokens, 6)
            cond = StateIs(obj, var, value)
        else:
            raise _LineError(
                tokens[1].column, "UNKNOWN_CONDITION",
                f"unknown condition kind {kind!r} (expected in/holds/near/state)",
            )
        self.actions[-1].preconditions.append(cond)

    def _parse_effect(self, tokens: list[_Token], lineno: int) -> None:
        if not self.actions:
            raise _LineError(tokens[0].column, "EFFECT_OUTSIDE_ACTION", "effect line before any action")
        kind = self._word(tokens, 1, "effect kind", lineno)
        effect: Effect
        if kind == "set":
            obj = self._word(tokens, 2, "object id", lineno)
            var = self._word(tokens, 3, "state name", lineno)
            self._keyword(tokens, 4, "=", lineno)
            value = self._value(tokens, 5, "state value", lineno)
            self._end(tokens, 6)
            effect = SetState(obj, var, value)
        elif kind == "take":
            effect = Take(self._word(tokens, 2, "object id", lineno))
            self._end(tokens, 3)
        elif kind == "drop":
            effect = Drop(self._word(tokens, 2, "object id", lineno))
            self._end(tokens, 3)
        elif kind == "end":
            self._end(tokens, 2)
            effect = EndGame()
        else:
            raise _LineError(
                tokens[1].column, "UNKNOWN_EFFECT",
                f"unknown effect kind {kind!r} (expected set/take/drop/end)",
            )
        self.actions[-1].effects.append(effect)

    def _parse_synonyms(self, tokens: list[_Token], lineno: int) -> None:
        head = self._value(tokens, 1, "canonical verb", lineno)
        self._keyword(tokens, 2, "=", lineno)
        words = [self._value(tokens, 3, "synonym", lineno)]
        idx = 4
        while idx < len(tokens):
            self._keyword(tokens, idx, ",", lineno)
            words.append(self._value(tokens, idx + 1, "synonym", lineno))
            idx += 2
        if head in self.synonyms:
            raise _LineError(
                tokens[1].column, "DUPLICATE_SYNONYMS",
                f"synonyms for {head!r} already declared",
            )
        self.synonyms[head] = tuple(words)
        self.spans.setdefault(("synonyms", head), self.span(lineno, tokens[0].column))

    def _parse_start(self, tokens: list[_Token], lineno: int) -> None:
        room = self._word(tokens, 1, "room id", lineno)
        self._end(tokens, 2)
        if self.start_room is not None:
            raise _LineError(tokens[0].column, "DUPLICATE_DIRECTIVE", "start already declared")
        self.start_room = room

    def _parse_win(self, tokens: list[_Token], lineno: int) -> None:
        action = self._word(tokens, 1, "action id", lineno)
        self._end(tokens, 2)
        if self.win_action is not None:
            raise _LineError(tokens[0].column, "DUPLICATE_DIRECTIVE", "win already declared")
        self.win_action = action

    # -- assembly

    def finish(self) -> ParseResult:
        if self.world_name is None:
            self.error(self.span(1, 1), "MISSING_WORLD_HEADER", "file declares no world")
        if self.start_room is None and self.world_name is not None:
            self.error(self.header_span, "MISSING_START", "world declares no start room")
        if self.win_action is None and self.world_name is not None:
            self.error(self.header_span, "MISSING_WIN", "world declares no win action")
        if any(d.severity == "error" for d in self.diagnostics):
            return ParseResult(None, self.diagnostics)

        spec = WorldSpec(
            name=self.world_name or "",
            rooms=tuple(self.rooms),
            connections=tuple(self.connections),
            objects=tuple(
                GameObject(
                    p.decl.id, p.decl.display_name, p.decl.location, p.decl.portable,
                    dict(p.state_vars),
                )
                for p in self.objects
            ),
            actions=tuple(
                ActionDef(
                    p.id, p.verb, p.obj,
                    SCORE_TIERS.get(p.score, Tier.STAND_ALONE), p.score,
                    tuple(p.preconditions), tuple(p.effects),
                )
                for p in self.actions
            ),
            verb_synonyms=dict(self.synonyms),
            start_room=self.start_room or "",
            win_action=self.win_action or "",
        )
        for violation in validate_world(spec):
            span = self.spans.get(violation.subject or ("", ""), self.header_span)
            self.error(span, violation.code, violation.message)
        if any(d.severity == "error" for d in self.diagnostics):
            return ParseResult(None, self.diagnostics)
        return ParseResult(spec, self.diagnostics)


def parse_worldspec(source: str, filename: str = "<input>") -> ParseResult:
    """Parse world-description text. Total: any UTF-8 input yields a
    ParseResult; failures come back as diagnostics, never exceptions."""
    parser = _Parser(filename)
    for lineno, line in enumerate(source.split("\n"), start=1):
        parser.parse_line(lineno, line)
    return parser.finish()


def load_world(path: str | Path) -> WorldSpec:
    """Read and parse a `.world` file, raising WorldFormatError on any error."""
    text = Path(path).read_text(encoding="utf-8")
    result = parse_worldspec(text, filename=str(path))
    if result.world is None:
        raise WorldFormatError(result.errors)
    return result.world


# ---------------------------------------------------------------------------
# Serializer

def _quote(text: str) -> str:
    escaped = (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\t", "\\t")
    )
    return f'"{escaped}"'


def _word_or_quote(text: str) -> str:
    if text and all(c in _IDENT_SAFE for c in text):
        return text
    return _quote(text)


def _verb_out(verb: str) -> str:
    return verb if " " not in verb else _quote(verb)


def serialize_worldspec(spec: WorldSpec) -> str:
    """Render a validated spec back to `.world` text.

    Deterministic and order-preserving: reparsing the output yields a spec
    structurally equal to the input.
    """
    lines: list[str] = [f"world {spec.name}", ""]
    for room in spec.rooms:
        parts = [f"room {room.id} {_quote(room.display_name)}"]
        if room.description:
            parts.append(_quote(room.description))
        lines.append(" ".join(parts))
    if spec.rooms:
        lines.append("")
    for a, direction, b in spec.connections:
        lines.append(f"connect {a} {direction} {b}")
    if spec.connections:
        lines.append("")
    for obj in spec.objects:
        flags = " portable" if obj.portable else ""
        lines.append(f"object {obj.id} {_quote(obj.display_name)} in {obj.location}{flags}")
        for var, sv in obj.state_vars.items():
            values = " | ".join(_word_or_quote(v) for v in sv.values)
            lines.append(f"  state {var} = {values}")
    if spec.objects:
        lines.append("")
    for action in spec.actions:
        lines.append(
            f"action {action.id} = {_verb_out(action.verb)} {action.obj} score {action.score}"
        )
        for cond in action.preconditions:
            if isinstance(cond, InRoom):
                lines.append(f"  require in {cond.room}")
            elif isinstance(cond, Holds):
                lines.append(f"  require holds {cond.obj}")
            elif isinstance(cond, Near):
                lines.append(f"  require near {cond.obj}")
            elif isinstance(cond, StateIs):
                lines.append(f"  require state {cond.obj} {cond.var} = {_word_or_quote(cond.value)}")
        for effect in action.effects:
            if isinstance(effect, SetState):
                lines.append(f"  effect set {effect.obj} {effect.var} = {_word_or_quote(effect.value)}")
            elif isinstance(effect, Take):
                lines.append(f"  effect take {effect.obj}")
            elif isinstance(effect, Drop):
                lines.append(f"  effect drop {effect.obj}")
            elif isinstance(effect, EndGame):
                lines.append("  effect end")
    if spec.actions:
        lines.append("")
    for canonical, synonyms in spec.verb_synonyms.items():
        listed = ", ".join(_verb_out(s) for s in synonyms)
        lines.append(f"synonyms {_verb_out(canonical)} = {listed}")
    if spec.verb_synonyms:
        lines.append("")
    lines.append(f"start {spec.start_room}")
    lines.append(f"win {spec.win_action}")
    return "\n".join(lines) + "\n"
