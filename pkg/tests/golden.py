"""Golden texts for the magical bedroom run (mirrors the bundled replay
fixtures; tests assert the pipeline reproduces these rows)."""

STORY_FIRST_SENTENCES = [
    "Whisperweaver discovers hidden passage.",
    "Uncover ancient chest in hidden passage.",
    "Open chest to reveal enchanted staff.",
    "Also find Crescent Mirror in chest.",
    "Wield enchanted staff for enhanced spellcasting.",
    "Use Crescent Mirror for scrying and divination.",
    "Harness the power of the enchanted staff and mirror to defeat evil"
    " forces and save princess.",
]

SIMPLIFIED_FIRST_ROWS = [
    "discovers whisperweaver",
    "uncover ancient chest",
    "reveal enchanted staff",
    "find crescent mirror",
    "wield enchanted staff",
    "use crescent mirror",
    "harness enchanted staff",
]

TRANSLATION_FIRST_ROWS = [
    "wear clothes",
    "open nightstand",
    "use broom",
    "open dresser",
    "use broom",
    "open dresser",
    "use broom",
]

STORY_SECOND_NEW_SENTENCES = [
    "Discover recipe for elixir with Crescent Mirror.",
    "Brew elixir in the cauldron.",
    "Use enchanted staff to activate the elixir.",
    "Use transformed abilities from elixir to defeat the evil threat.",
]

TOPIC = "saving a princess"
SETTING = "magical"
