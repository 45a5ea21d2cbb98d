"""Composition plan data types and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .analysis import Analysis, AttributeSet, ComplexityReport, Entity, ScenePrompt
from .errors import PlanFormatError

FOREGROUND = "foreground"
BACKGROUND = "background"

PLAIN_BACKGROUND = "a plain background"
DEFAULT_BOX_XYWH = (0.25, 0.25, 0.5, 0.5)
BOX_DECIMALS = 4

_TOL = 1e-9


@dataclass(frozen=True)
class SubPrompt:
    text: str
    entity_ids: tuple[int, ...]

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("sub-prompt text is empty")
        if not self.entity_ids:
            raise ValueError("sub-prompt has no entities")
        object.__setattr__(self, "entity_ids", tuple(int(i) for i in self.entity_ids))

    def to_dict(self) -> dict:
        return {"text": self.text, "entity_ids": list(self.entity_ids)}


@dataclass(frozen=True)
class SimplePrompt:
    text: str
    entity_ids: tuple[int, ...]
    role: str = FOREGROUND
    concept_count: int = 0

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("simple prompt text is empty")
        object.__setattr__(self, "entity_ids", tuple(int(i) for i in self.entity_ids))

    def with_role(self, role: str) -> "SimplePrompt":
        return SimplePrompt(self.text, self.entity_ids, role, self.concept_count)

    def to_dict(self) -> dict:
        return {"text": self.text, "entity_ids": list(self.entity_ids),
                "concept_count": self.concept_count}


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in normalized image coordinates, origin top-left."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        x, y, w, h = self.x, self.y, self.w, self.h
        if not (w > 0 and h > 0):
            raise ValueError(f"box has non-positive size: {self}")
        if x < -_TOL or y < -_TOL or x + w > 1 + _TOL or y + h > 1 + _TOL:
            raise ValueError(f"box leaves the unit square: {self}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2

    @property
    def cy(self) -> float:
        return self.y + self.h / 2

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def rounded(cls, x: float, y: float, w: float, h: float,
                decimals: int = BOX_DECIMALS) -> "BoundingBox":
        """Round to ``decimals`` places, keeping the box inside the unit square."""
        step = 10.0 ** -decimals
        x, y, w, h = float(x), float(y), float(w), float(h)
        x = min(max(round(x, decimals), 0.0), 1 - step)
        y = min(max(round(y, decimals), 0.0), 1 - step)
        w = max(round(w, decimals), step)
        h = max(round(h, decimals), step)
        if x + w > 1:
            w = round(1 - x, decimals)
        if y + h > 1:
            h = round(1 - y, decimals)
        return cls(x, y, w, h)


DEFAULT_BOX = BoundingBox(*DEFAULT_BOX_XYWH)


@dataclass(frozen=True)
class CompositionPlan:
    analysis: Analysis
    foreground: tuple[tuple[SimplePrompt, BoundingBox], ...]
    background: SimplePrompt
    warnings: tuple[str, ...] = field(default=())

    @property
    def complex_prompt(self) -> ScenePrompt:
        return self.analysis.prompt

    @property
    def report(self) -> ComplexityReport:
        return self.analysis.report

    @property
    def prompts(self) -> list[SimplePrompt]:
        return [p for p, _ in self.foreground]

    @property
    def boxes(self) -> list[BoundingBox]:
        return [b for _, b in self.foreground]

    def to_dict(self) -> dict:
        return {
            "complex_prompt": self.analysis.prompt.text,
            "report": self.analysis.report.to_dict(),
            "entities": [
                {**e.to_dict(), "attributes": list(a.attributes)}
                for e, a in zip(self.analysis.entities, self.analysis.attributes)
            ],
            "background": self.background.to_dict(),
            "foreground": [
                {**p.to_dict(), "box": [round(v, BOX_DECIMALS) for v in b.as_list()]}
                for p, b in self.foreground
            ],
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CompositionPlan":
        try:
            entities = tuple(Entity.from_dict(e) for e in d["entities"])
            attributes = tuple(
                AttributeSet(int(e["id"]), tuple(e.get("attributes", ()))) for e in d["entities"]
            )
            analysis = Analysis(
                ScenePrompt(d["complex_prompt"]), entities, attributes,
                ComplexityReport.from_dict(d["report"]),
            )
            bg = d["background"]
            background = SimplePrompt(bg["text"], tuple(bg.get("entity_ids", ())), BACKGROUND,
                                      int(bg.get("concept_count", 0)))
            foreground = tuple(
                (SimplePrompt(f["text"], tuple(f.get("entity_ids", ())), FOREGROUND,
                              int(f.get("concept_count", 0))),
                 BoundingBox(*(float(v) for v in f["box"])))
                for f in d["foreground"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PlanFormatError(f"invalid plan document: {exc}") from exc
        return cls(analysis, foreground, background, tuple(d.get("warnings", ())))

    @classmethod
    def from_json(cls, text: str) -> "CompositionPlan":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PlanFormatError(f"plan is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def entity_prompt_index(prompts: Sequence[SimplePrompt]) -> dict[int, int]:
    """Map every entity id to the index of the prompt that carries it."""
    out = {}
    for i, p in enumerate(prompts):
        for e in p.entity_ids:
            out[e] = i
    return out
