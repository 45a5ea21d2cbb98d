"""Planner backends: local template rules, canned fixtures, and a remote service.

Every backend speaks the same task protocol, ``request(task, payload) -> reply``
with JSON-compatible dicts, so one parser validates all of them:

=============  ==============================================  ==================================
task           payload                                         reply
=============  ==============================================  ==================================
recaption      prompt, entities                                subprompts: [{text, entity_ids}]
merge_divide   prompt, entities, spatial, conflicts,           simple_prompts: [{text, entity_ids,
               subprompts, max_concepts, truncate              concept_count}], warnings
layout         foreground: [{text, entity_ids,                 boxes: [[x, y, w, h], ...]
               concept_count}], relations: [{subject,
               object, kind}] (prompt indices)
=============  ==============================================  ==================================

A reply of the form ``{"error": {"kind": ..., "message": ...}}`` re-raises the
planning error on this side (``layout_infeasible``, ``unsatisfiable_budget``).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Sequence

from ..analysis import (
    MAX_SIMPLE_CONCEPTS,
    Analysis,
    AttributeSet,
    ComplexityReport,
    ConflictPair,
    Entity,
    ScenePrompt,
    SpatialRelation,
)
from ..errors import BackendFailure, LayoutInfeasible, MalformedReply, UnsatisfiableBudget
from ..layout import solve_layout
from ..lexicon import Lexicon, default_lexicon
from ..plan import FOREGROUND, BoundingBox, SimplePrompt, SubPrompt
from .http import HttpClient

TASKS = ("recaption", "merge_divide", "layout")

_REMOTE_ERRORS = {
    "layout_infeasible": LayoutInfeasible,
    "unsatisfiable_budget": UnsatisfiableBudget,
}


def request_key(task: str, payload: Any) -> str:
    """Stable 16-hex-digit key of a request (canonical JSON, SHA-256)."""
    blob = json.dumps({"task": task, "payload": payload}, sort_keys=True,
                      separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _entities_payload(analysis: Analysis) -> list[dict]:
    return [
        {"id": e.id, "head": e.head, "surface": e.surface, "span": list(e.span),
         "attributes": list(a.attributes)}
        for e, a in zip(analysis.entities, analysis.attributes)
    ]


def _analysis_from_payload(payload: dict) -> Analysis:
    ents = payload["entities"]
    entities = tuple(Entity(int(e["id"]), e["surface"], e["head"], tuple(e["span"])) for e in ents)
    attributes = tuple(AttributeSet(int(e["id"]), tuple(e["attributes"])) for e in ents)
    spatial = tuple(SpatialRelation.from_dict(r) for r in payload.get("spatial", ()))
    conflicts = tuple(ConflictPair.from_dict(c) for c in payload.get("conflicts", ()))
    concepts = len(entities) + sum(len(a.attributes) for a in attributes)
    report = ComplexityReport(len(entities), concepts, spatial, conflicts, "complex", ())
    return Analysis(ScenePrompt(payload["prompt"]), entities, attributes, report)


class JsonPlanner:
    """Base class: builds task payloads and validates replies."""

    name = "json"

    def request(self, task: str, payload: dict) -> Any:
        raise NotImplementedError

    def _call(self, task: str, payload: dict, field: str) -> tuple[dict, list]:
        reply = self.request(task, payload)
        if isinstance(reply, dict) and isinstance(reply.get("error"), dict):
            err = reply["error"]
            exc = _REMOTE_ERRORS.get(err.get("kind"))
            if exc is not None:
                raise exc(err.get("message", err["kind"]))
        if not isinstance(reply, dict) or not isinstance(reply.get(field), list):
            raise BackendFailure(f"{task} reply lacks a {field!r} list", kind="invalid_reply",
                                 body=json.dumps(reply, default=str))
        return reply, reply[field]

    def _invalid(self, task: str, reply: Any, exc: Exception) -> BackendFailure:
        return BackendFailure(f"{task} reply does not parse: {exc}", kind="invalid_reply",
                              body=json.dumps(reply, default=str))

    def recaption(self, analysis: Analysis) -> list[SubPrompt]:
        payload = {"prompt": analysis.prompt.text, "entities": _entities_payload(analysis)}
        reply, items = self._call("recaption", payload, "subprompts")
        try:
            return [SubPrompt(str(d["text"]), tuple(d["entity_ids"])) for d in items]
        except (KeyError, TypeError, ValueError) as exc:
            raise self._invalid("recaption", reply, exc) from None

    def merge_divide(self, subprompts: Sequence[SubPrompt],
                     analysis: Analysis) -> tuple[list[SimplePrompt], list[str]]:
        payload = {
            "prompt": analysis.prompt.text,
            "entities": _entities_payload(analysis),
            "spatial": [r.to_dict() for r in analysis.report.spatial],
            "conflicts": [c.to_dict() for c in analysis.report.conflicts],
            "subprompts": [sp.to_dict() for sp in subprompts],
            "max_concepts": getattr(self, "max_concepts", MAX_SIMPLE_CONCEPTS),
            "truncate": getattr(self, "truncate", True),
        }
        reply, items = self._call("merge_divide", payload, "simple_prompts")
        attrs = {a.entity_id: a.attributes for a in analysis.attributes}
        try:
            prompts = []
            for d in items:
                ids = tuple(int(i) for i in d["entity_ids"])
                if not ids:
                    raise ValueError("simple prompt without entities")
                count = d.get("concept_count")
                if count is None:
                    count = sum(1 + len(attrs[i]) for i in ids)
                prompts.append(SimplePrompt(str(d["text"]), ids, FOREGROUND, int(count)))
            warnings = [str(w) for w in reply.get("warnings", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise self._invalid("merge_divide", reply, exc) from None
        return prompts, warnings

    def layout(self, foreground: Sequence[SimplePrompt],
               relations: Sequence[tuple[int, int, str]]) -> list[BoundingBox]:
        payload = {
            "foreground": [p.to_dict() for p in foreground],
            "relations": [{"subject": a, "object": b, "kind": k} for a, b, k in relations],
        }
        reply, items = self._call("layout", payload, "boxes")
        try:
            return [BoundingBox(*(float(v) for v in box)) for box in items]
        except (TypeError, ValueError) as exc:
            raise self._invalid("layout", reply, exc) from None


class TemplatePlanner(JsonPlanner):
    """Deterministic local planner: phrase templates, rule engine, constraint solver."""

    name = "template"

    def __init__(self, lexicon: Lexicon | None = None, *,
                 max_concepts: int = MAX_SIMPLE_CONCEPTS, truncate: bool = True):
        self.lexicon = lexicon or default_lexicon()
        self.max_concepts = max_concepts
        self.truncate = truncate

    def request(self, task: str, payload: dict) -> dict:
        from .. import planner as P

        if task == "recaption":
            analysis = _analysis_from_payload(payload)
            return {"subprompts": [sp.to_dict() for sp in P.template_recaption(analysis)]}
        if task == "merge_divide":
            analysis = _analysis_from_payload(payload)
            subs = [SubPrompt(d["text"], tuple(d["entity_ids"])) for d in payload["subprompts"]]
            warnings: list[str] = []
            prompts = P.merge_or_divide(
                subs, analysis, self.lexicon, truncate=payload.get("truncate", self.truncate),
                max_concepts=payload.get("max_concepts", self.max_concepts), warnings=warnings,
            )
            return {"simple_prompts": [p.to_dict() for p in prompts], "warnings": warnings}
        if task == "layout":
            fg = payload["foreground"]
            rels = [(r["subject"], r["object"], r["kind"]) for r in payload["relations"]]
            weights = [max(1, int(p.get("concept_count", 1))) for p in fg]
            boxes = solve_layout(len(fg), rels, weights)
            return {"boxes": [b.as_list() for b in boxes]}
        raise BackendFailure(f"unknown planner task {task!r}", kind="invalid_reply")


class ScriptedPlanner(JsonPlanner):
    """Replays canned replies stored as ``<task>-<request_key>.json`` in a directory.

    With ``fallback`` set, missing replies are computed by that planner and,
    when ``record`` is true, written to the directory.
    """

    name = "scripted"

    def __init__(self, fixture_dir: str | Path, *, fallback: JsonPlanner | None = None,
                 record: bool = False):
        self.fixture_dir = Path(fixture_dir)
        self.fallback = fallback
        self.record = record

    def path_for(self, task: str, payload: dict) -> Path:
        return self.fixture_dir / f"{task}-{request_key(task, payload)}.json"

    def request(self, task: str, payload: dict) -> Any:
        path = self.path_for(task, payload)
        if path.exists():
            body = path.read_text(encoding="utf-8")
            try:
                return json.loads(body)
            except json.JSONDecodeError as exc:
                raise MalformedReply(f"fixture {path.name} is not JSON: {exc}", body=body) from None
        if self.fallback is None:
            raise BackendFailure(f"no scripted reply for {task} ({path.name})",
                                 kind="missing_fixture")
        reply = self.fallback.request(task, payload)
        if self.record:
            self.fixture_dir.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(reply, indent=2, ensure_ascii=False) + "\n",
                            encoding="utf-8")
        return reply


class RemotePlanner(JsonPlanner):
    """POST ``{task, payload}`` to ``<url>/plan``."""

    name = "remote"

    def __init__(self, url: str | None = None, *, client: HttpClient | None = None, **kwargs):
        if client is None:
            if not url:
                raise ValueError("RemotePlanner needs a url or a client")
            client = HttpClient(url, **kwargs)
        self.client = client

    def request(self, task: str, payload: dict) -> Any:
        return self.client.post("/plan", {"task": task, "payload": payload})
