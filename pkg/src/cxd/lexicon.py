"""Line-oriented scene lexicon: nouns, adjectives, spatial phrases, conflict classes.

File layout::

    [nouns]
    cat
    [adjectives]
    red
    [spatial]
    to the left of: left-of
    [conflicts]
    season: summer | winter, snowy
    [background]
    sky: 50

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import LexiconFormatError, LexiconMissing

SPATIAL_KINDS = ("left-of", "right-of", "above", "below", "on", "under", "inside", "beside")

_SECTIONS = ("nouns", "adjectives", "spatial", "conflicts", "background")
_REQUIRED = ("nouns", "adjectives", "spatial", "conflicts")

_IRREGULAR_PLURALS = {
    "mice": "mouse",
    "geese": "goose",
    "people": "person",
    "men": "man",
    "women": "woman",
    "children": "child",
    "teeth": "tooth",
    "feet": "foot",
    "wolves": "wolf",
    "leaves": "leaf",
    "knives": "knife",
    "shelves": "shelf",
    "loaves": "loaf",
    "cacti": "cactus",
}


@dataclass(frozen=True)
class ConflictClass:
    name: str
    side_a: frozenset[str]
    side_b: frozenset[str]

    def describe(self, a: str, b: str) -> str:
        return f"{self.name}: {a} | {b}"


@dataclass(frozen=True)
class Lexicon:
    nouns: frozenset[str]
    adjectives: frozenset[str]
    # phrase (tuple of lowercase tokens) -> relation kind
    spatial: dict[tuple[str, ...], str]
    conflicts: tuple[ConflictClass, ...]
    background: dict[str, int] = field(default_factory=dict)
    source: str = "<memory>"

    def lemma(self, word: str) -> str | None:
        """Return the lexicon noun that ``word`` inflects, or None."""
        w = word.lower()
        if w in self.nouns:
            return w
        if w in _IRREGULAR_PLURALS and _IRREGULAR_PLURALS[w] in self.nouns:
            return _IRREGULAR_PLURALS[w]
        if w.endswith("ies") and w[:-3] + "y" in self.nouns:
            return w[:-3] + "y"
        if w.endswith("es") and w[:-2] in self.nouns:
            return w[:-2]
        if w.endswith("s") and w[:-1] in self.nouns:
            return w[:-1]
        return None

    def is_adjective(self, word: str) -> bool:
        return word.lower() in self.adjectives

    @functools.cached_property
    def max_spatial_len(self) -> int:
        return max((len(p) for p in self.spatial), default=0)

    def background_priority(self, head: str) -> int | None:
        return self.background.get(head)


def parse_lexicon(text: str, source: str = "<memory>") -> Lexicon:
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in _SECTIONS:
                raise LexiconFormatError(f"{source}:{lineno}: unknown section [{current}]")
            sections.setdefault(current, [])
            continue
        if current is None:
            raise LexiconFormatError(f"{source}:{lineno}: entry outside of any section")
        sections[current].append((lineno, line))

    missing = [s for s in _REQUIRED if s not in sections]
    if missing:
        raise LexiconMissing(f"{source}: missing section(s) {', '.join(missing)}")

    nouns = frozenset(w.lower() for _, w in sections["nouns"])
    adjectives = frozenset(w.lower() for _, w in sections["adjectives"])

    spatial: dict[tuple[str, ...], str] = {}
    for lineno, line in sections["spatial"]:
        phrase, sep, kind = line.rpartition(":")
        kind = kind.strip().lower()
        if not sep or kind not in SPATIAL_KINDS:
            raise LexiconFormatError(f"{source}:{lineno}: bad spatial entry {line!r}")
        spatial[tuple(phrase.lower().split())] = kind

    conflicts = []
    for lineno, line in sections["conflicts"]:
        name, sep, rest = line.partition(":")
        a, bar, b = rest.partition("|")
        if not sep or not bar:
            raise LexiconFormatError(f"{source}:{lineno}: bad conflict entry {line!r}")
        side_a = frozenset(m.strip().lower() for m in a.split(",") if m.strip())
        side_b = frozenset(m.strip().lower() for m in b.split(",") if m.strip())
        if not side_a or not side_b:
            raise LexiconFormatError(f"{source}:{lineno}: empty conflict side in {line!r}")
        conflicts.append(ConflictClass(name.strip(), side_a, side_b))

    background: dict[str, int] = {}
    for lineno, line in sections.get("background", []):
        noun, sep, prio = line.partition(":")
        try:
            background[noun.strip().lower()] = int(prio) if sep else 0
        except ValueError:
            raise LexiconFormatError(f"{source}:{lineno}: bad priority in {line!r}") from None

    return Lexicon(nouns, adjectives, spatial, tuple(conflicts), background, source)


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load a lexicon file; ``None`` loads the shipped default."""
    if path is None:
        return default_lexicon()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise LexiconMissing(f"lexicon file not found: {p}") from None
    return parse_lexicon(text, str(p))


@functools.lru_cache(maxsize=None)
def default_lexicon() -> Lexicon:
    text = resources.files("cxd").joinpath("data/default.lex").read_text(encoding="utf-8")
    return parse_lexicon(text, "default.lex")
