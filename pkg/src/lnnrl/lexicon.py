"""Offline word-category lookup.

Maps vocabulary words to semantic categories (direction, money, ...) from a
bundled tab-separated file, standing in for a remote word-knowledge service.
Any provider with the same ``lookup`` contract can be swapped in later.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

from .worldsim import DIRECTIONS

CATEGORY_DIRECTION = "direction"
CATEGORY_MONEY = "money"

# the game vocabulary every usable lexicon must cover
REQUIRED_ENTRIES: dict[str, str] = {d: CATEGORY_DIRECTION for d in DIRECTIONS}
REQUIRED_ENTRIES["coin"] = CATEGORY_MONEY


class LexiconError(Exception):
    pass


class LexiconFormatError(LexiconError):
    """A line in the lexicon file does not parse."""


class LexiconValidationError(LexiconError):
    """The lexicon is missing required vocabulary."""


class CategoryProvider(Protocol):
    def lookup(self, word: str) -> frozenset[str]: ...


@dataclass
class LexiconTable:
    """In-memory word -> categories table. Lookup is pure and total."""

    entries: dict[str, frozenset[str]] = field(default_factory=dict)

    def lookup(self, word: str) -> frozenset[str]:
        return self.entries.get(word, frozenset())

    def validate(self) -> None:
        for word, category in REQUIRED_ENTRIES.items():
            if category not in self.lookup(word):
                raise LexiconValidationError(
                    f"lexicon is missing required entry {word!r} -> {category!r}"
                )


def parse_lexicon(text: str, source: str = "<string>") -> LexiconTable:
    entries: dict[str, set[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise LexiconFormatError(
                f"{source}:{lineno}: expected 'word<TAB>category', got {raw!r}"
            )
        word, category = parts[0].strip(), parts[1].strip()
        entries.setdefault(word, set()).add(category)
    return LexiconTable({w: frozenset(cats) for w, cats in entries.items()})


def load_lexicon(path: str | Path) -> LexiconTable:
    """Load and validate a lexicon file (UTF-8, word<TAB>category per line)."""
    path = Path(path)
    table = parse_lexicon(path.read_text(encoding="utf-8"), source=str(path))
    table.validate()
    return table


def default_lexicon() -> LexiconTable:
    """The lexicon bundled with the package."""
    text = resources.files(__package__).joinpath("data/lexicon.tsv").read_text("utf-8")
    table = parse_lexicon(text, source="data/lexicon.tsv")
    table.validate()
    return table
