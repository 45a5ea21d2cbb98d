"""Rule-based prompt analysis: entities, attributes, spatial relations, conflicts.

The parser is a small lexicon-driven noun-phrase grammar::

    NP   := DET? MOD* HEAD
    MOD  := adjective | noun            (a noun-capable word is a modifier
                                         whenever a later noun follows it)

Spatial phrases come from a closed list and are matched first (longest
match wins); their tokens never take part in noun phrases.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyPrompt, EntityMismatch, InconsistentInputs
from .lexicon import Lexicon, default_lexicon

MAX_SIMPLE_CONCEPTS = 4

SIMPLE = "simple"
COMPLEX = "complex"

DETERMINERS = frozenset(
    "a an the this that these those some its his her their my our your".split()
)
NUMBER_WORDS = frozenset(
    "two three four five six seven eight nine ten twelve several many".split()
)

_TOKEN_RE = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*|[^\w\s]")


@dataclass(frozen=True)
class ScenePrompt:
    text: str

    def __post_init__(self):
        if not isinstance(self.text, str):
            raise TypeError("prompt text must be a string")
        trimmed = self.text.strip()
        if not trimmed:
            raise EmptyPrompt("prompt is empty")
        object.__setattr__(self, "text", trimmed)

    def __str__(self) -> str:
        return self.text


def as_prompt(prompt: ScenePrompt | str) -> ScenePrompt:
    return prompt if isinstance(prompt, ScenePrompt) else ScenePrompt(prompt)


@dataclass(frozen=True)
class Entity:
    id: int
    surface: str
    head: str
    span: tuple[int, int]

    def to_dict(self) -> dict:
        return {"id": self.id, "surface": self.surface, "head": self.head,
                "span": list(self.span)}

    @classmethod
    def from_dict(cls, d: dict) -> "Entity":
        return cls(int(d["id"]), d["surface"], d["head"], tuple(d["span"]))


@dataclass(frozen=True)
class AttributeSet:
    entity_id: int
    attributes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SpatialRelation:
    subject: int
    object: int
    kind: str

    def __post_init__(self):
        if self.subject == self.object:
            raise InconsistentInputs("spatial relation links an entity to itself")

    def to_dict(self) -> dict:
        return {"subject": self.subject, "object": self.object, "kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "SpatialRelation":
        return cls(int(d["subject"]), int(d["object"]), d["kind"])


@dataclass(frozen=True)
class ConflictPair:
    a: int
    b: int
    reason: str

    def __post_init__(self):
        if self.a == self.b:
            raise InconsistentInputs("conflict pair links an entity to itself")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "reason": self.reason}

    @classmethod
    def from_dict(cls, d: dict) -> "ConflictPair":
        return cls(int(d["a"]), int(d["b"]), d["reason"])


@dataclass(frozen=True)
class ComplexityReport:
    entity_count: int
    concept_count: int
    spatial: tuple[SpatialRelation, ...]
    conflicts: tuple[ConflictPair, ...]
    verdict: str
    reasons: tuple[str, ...]

    @property
    def is_complex(self) -> bool:
        return self.verdict == COMPLEX

    def to_dict(self) -> dict:
        return {
            "entity_count": self.entity_count,
            "concept_count": self.concept_count,
            "spatial": [r.to_dict() for r in self.spatial],
            "conflicts": [c.to_dict() for c in self.conflicts],
            "verdict": self.verdict,
            "reasons": list(self.reasons),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComplexityReport":
        return cls(
            int(d["entity_count"]),
            int(d["concept_count"]),
            tuple(SpatialRelation.from_dict(r) for r in d["spatial"]),
            tuple(ConflictPair.from_dict(c) for c in d["conflicts"]),
            d["verdict"],
            tuple(d["reasons"]),
        )


@dataclass(frozen=True)
class Analysis:
    """Everything prompt analysis learned about one prompt."""

    prompt: ScenePrompt
    entities: tuple[Entity, ...]
    attributes: tuple[AttributeSet, ...]
    report: ComplexityReport

    def attributes_of(self, entity_id: int) -> tuple[str, ...]:
        return self.attributes[entity_id].attributes


# tokenizing


@dataclass(frozen=True)
class _Token:
    text: str
    start: int
    end: int

    @property
    def lower(self) -> str:
        return self.text.lower()

    @property
    def is_word(self) -> bool:
        return self.text[0].isalnum()


def _tokenize(text: str) -> list[_Token]:
    return [_Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _spatial_matches(tokens: Sequence[_Token], lexicon: Lexicon) -> list[tuple[int, int, str]]:
    """Left-to-right, longest-first matches of spatial phrases as (i, j, kind)."""
    out = []
    i = 0
    longest = lexicon.max_spatial_len
    while i < len(tokens):
        for n in range(min(longest, len(tokens) - i), 0, -1):
            key = tuple(t.lower for t in tokens[i:i + n])
            kind = lexicon.spatial.get(key)
            if kind is not None:
                out.append((i, i + n, kind))
                i += n
                break
        else:
            i += 1
    return out


def _noun_phrases(tokens: Sequence[_Token], lexicon: Lexicon) -> list[tuple[int, int, int]]:
    """Find noun phrases as (first token, head token, determiner-or-first token)."""
    blocked = set()
    for i, j, _ in _spatial_matches(tokens, lexicon):
        blocked.update(range(i, j))

    def nominal(k: int) -> bool:
        return k not in blocked and lexicon.lemma(tokens[k].text) is not None

    def modifier(k: int) -> bool:
        return k not in blocked and (
            lexicon.is_adjective(tokens[k].text) or lexicon.lemma(tokens[k].text) is not None
        )

    phrases = []
    k = 0
    n = len(tokens)
    while k < n:
        if not modifier(k):
            k += 1
            continue
        # extend the run; a comma may sit between two modifiers ("a big, red apple")
        run = [k]
        m = k + 1
        while m < n:
            if modifier(m):
                run.append(m)
                m += 1
            elif (tokens[m].text == "," and m + 1 < n and modifier(m + 1)
                  and not nominal(run[-1])):
                m += 1
            else:
                break
        heads = [r for r in run if nominal(r)]
        if heads:
            head = heads[-1]
            first = run[0]
            start = first
            if first > 0 and tokens[first - 1].lower in DETERMINERS and first - 1 not in blocked:
                start = first - 1
            phrases.append((start, head, first))
        k = m
    return phrases


# operations


def extract_entities(prompt: ScenePrompt | str, lexicon: Lexicon) -> list[Entity]:
    prompt = as_prompt(prompt)
    text = prompt.text
    tokens = _tokenize(text)
    entities = []
    for start, head, _ in _noun_phrases(tokens, lexicon):
        span = (tokens[start].start, tokens[head].end)
        entities.append(Entity(
            id=len(entities),
            surface=text[span[0]:span[1]],
            head=lexicon.lemma(tokens[head].text),
            span=span,
        ))
    return entities


def _check_span(text: str, entity: Entity, lexicon: Lexicon) -> list[_Token]:
    s, e = entity.span
    if not (0 <= s < e <= len(text)) or text[s:e] != entity.surface:
        raise EntityMismatch(f"entity {entity.id} span {entity.span} does not match the prompt")
    toks = _tokenize(entity.surface)
    if not toks or lexicon.lemma(toks[-1].text) != entity.head:
        raise EntityMismatch(f"entity {entity.id} head {entity.head!r} not found in its span")
    return toks


def extract_attributes(prompt: ScenePrompt | str, entities: Sequence[Entity],
                       lexicon: Lexicon) -> list[AttributeSet]:
    text = as_prompt(prompt).text
    out = []
    for ent in entities:
        toks = _check_span(text, ent, lexicon)
        mods = tuple(
            t.lower for t in toks[:-1]
            if t.is_word and t.lower not in DETERMINERS
        )
        out.append(AttributeSet(ent.id, mods))
    return out


def detect_spatial_relations(prompt: ScenePrompt | str, entities: Sequence[Entity],
                             lexicon: Lexicon) -> list[SpatialRelation]:
    text = as_prompt(prompt).text
    tokens = _tokenize(text)
    ordered = sorted(entities, key=lambda e: e.span[0])
    relations = []
    for i, j, kind in _spatial_matches(tokens, lexicon):
        p_start, p_end = tokens[i].start, tokens[j - 1].end
        before = [e for e in ordered if e.span[1] <= p_start]
        after = [e for e in ordered if e.span[0] >= p_end]
        if not before or not after:
            continue
        subj, obj = before[-1], after[0]
        if subj.id != obj.id:
            relations.append(SpatialRelation(subj.id, obj.id, kind))
    return relations


def detect_conflicts(entities: Sequence[Entity], attributes: Sequence[AttributeSet],
                     lexicon: Lexicon) -> list[ConflictPair]:
    attrs = {a.entity_id: a.attributes for a in attributes}
    terms = {e.id: {e.head, *attrs.get(e.id, ())} for e in entities}
    ids = sorted(terms)
    pairs = []
    for x, a in enumerate(ids):
        for b in ids[x + 1:]:
            for cls in lexicon.conflicts:
                a_in_a, a_in_b = terms[a] & cls.side_a, terms[a] & cls.side_b
                b_in_a, b_in_b = terms[b] & cls.side_a, terms[b] & cls.side_b
                if a_in_a and b_in_b:
                    reason = cls.describe(min(a_in_a), min(b_in_b))
                elif a_in_b and b_in_a:
                    reason = cls.describe(min(b_in_a), min(a_in_b))
                else:
                    continue
                pairs.append(ConflictPair(a, b, reason))
                break
    return pairs


def classify_complexity(entities: Sequence[Entity], attributes: Sequence[AttributeSet],
                        spatial: Iterable[SpatialRelation], conflicts: Iterable[ConflictPair],
                        max_concepts: int = MAX_SIMPLE_CONCEPTS) -> ComplexityReport:
    ids = {e.id for e in entities}
    if len(ids) != len(entities):
        raise InconsistentInputs("duplicate entity ids")
    seen = set()
    for a in attributes:
        if a.entity_id not in ids:
            raise InconsistentInputs(f"attributes reference unknown entity {a.entity_id}")
        if a.entity_id in seen:
            raise InconsistentInputs(f"entity {a.entity_id} has two attribute sets")
        seen.add(a.entity_id)
    spatial = tuple(spatial)
    conflicts = tuple(conflicts)
    for r in spatial:
        if r.subject not in ids or r.object not in ids:
            raise InconsistentInputs(f"spatial relation {r} references an unknown entity")
    for c in conflicts:
        if c.a not in ids or c.b not in ids:
            raise InconsistentInputs(f"conflict {c} references an unknown entity")

    concept_count = len(entities) + sum(len(a.attributes) for a in attributes)
    reasons = []
    if conflicts:
        reasons.append(
            "conflicting entities: " + "; ".join(f"{c.a}-{c.b} ({c.reason})" for c in conflicts)
        )
    if spatial:
        reasons.append(
            "spatial relationships: "
            + "; ".join(f"{r.kind}({r.subject}, {r.object})" for r in spatial)
        )
    if concept_count > max_concepts:
        reasons.append(f"number of concepts: {concept_count} > {max_concepts}")
    return ComplexityReport(
        entity_count=len(entities),
        concept_count=concept_count,
        spatial=spatial,
        conflicts=conflicts,
        verdict=COMPLEX if reasons else SIMPLE,
        reasons=tuple(reasons),
    )


def analyze(prompt: ScenePrompt | str, lexicon: Lexicon | None = None,
            max_concepts: int = MAX_SIMPLE_CONCEPTS) -> Analysis:
    """Run the four extraction steps and classify the prompt."""
    prompt = as_prompt(prompt)
    lexicon = lexicon or default_lexicon()
    entities = extract_entities(prompt, lexicon)
    attributes = extract_attributes(prompt, entities, lexicon)
    spatial = detect_spatial_relations(prompt, entities, lexicon) if entities else []
    conflicts = detect_conflicts(entities, attributes, lexicon)
    report = classify_complexity(entities, attributes, spatial, conflicts, max_concepts)
    return Analysis(prompt, tuple(entities), tuple(attributes), report)
