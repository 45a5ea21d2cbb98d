"""Retouch stage: detail prompt assembly and the ``/retouch`` client."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

from ..errors import BackendFailure, MissingImage
from ..plan import CompositionPlan
from ..planner import entity_phrase
from .http import HttpClient

DEFAULT_STRENGTH = 0.5


@dataclass(frozen=True)
class RetouchRequest:
    image_ref: str
    detail_prompt: str
    strength: float = DEFAULT_STRENGTH

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must lie in [0, 1], got {self.strength}")

    def to_dict(self) -> dict:
        return asdict(self)


def detail_prompt(plan: CompositionPlan) -> str:
    """Comma-joined entity phrases with all attributes, in plan order."""
    analysis = plan.analysis
    order = [i for p in plan.prompts for i in p.entity_ids]
    order += [i for i in plan.background.entity_ids if i not in order]
    order += [e.id for e in analysis.entities if e.id not in order]
    phrases = []
    for i in order:
        e = analysis.entities[i]
        phrases.append(entity_phrase(e.head, e.surface, analysis.attributes_of(i)))
    return ", ".join(phrases) if phrases else plan.background.text


def _is_url(ref: str) -> bool:
    return "://" in ref


def build_retouch_request(plan: CompositionPlan, image_ref: str | Path | None,
                          strength: float = DEFAULT_STRENGTH) -> RetouchRequest:
    if not image_ref:
        raise MissingImage("no image to retouch")
    ref = str(image_ref)
    if not _is_url(ref) and not Path(ref).exists():
        raise MissingImage(f"image not found: {ref}")
    return RetouchRequest(ref, detail_prompt(plan), strength)


class RetouchClient:
    """``POST /retouch {image_ref, detail_prompt, strength} -> {image_ref}``."""

    def __init__(self, url: str | None = None, *, client: HttpClient | None = None, **kwargs):
        if client is None:
            if not url:
                raise ValueError("RetouchClient needs a url or a client")
            client = HttpClient(url, **kwargs)
        self.client = client

    def retouch(self, request: RetouchRequest) -> str:
        reply = self.client.post("/retouch", request.to_dict())
        if not isinstance(reply, dict) or not isinstance(reply.get("image_ref"), str):
            raise BackendFailure("retouch reply lacks image_ref", kind="invalid_reply",
                                 body=str(reply)[:2000])
        return reply["image_ref"]
