"""Composition stage: turn an analysed prompt into an area-ordered plan."""

from __future__ import annotations

import logging
from typing import Iterable, Mapping, Sequence

from .analysis import (
    MAX_SIMPLE_CONCEPTS,
    NUMBER_WORDS,
    Analysis,
    ScenePrompt,
    SpatialRelation,
    analyze,
    as_prompt,
    extract_entities,
)
from .errors import BackendFailure, UnsatisfiableBudget
from .layout import relation_holds
from .lexicon import Lexicon, default_lexicon
from .plan import (
    BACKGROUND,
    DEFAULT_BOX,
    FOREGROUND,
    PLAIN_BACKGROUND,
    BoundingBox,
    CompositionPlan,
    SimplePrompt,
    SubPrompt,
    entity_prompt_index,
)

log = logging.getLogger(__name__)


def head_word(surface: str) -> str:
    """Last word of a noun phrase, lowercased (keeps plural inflection)."""
    return surface.replace(",", " ").split()[-1].lower()


def entity_phrase(head: str, surface: str, attributes: Sequence[str]) -> str:
    """``article + attributes + head``, e.g. ``"a red apple"`` or ``"two cats"``."""
    word = head_word(surface)
    words = [*attributes, word]
    if (attributes and attributes[0] in NUMBER_WORDS) or word != head:
        return " ".join(words)
    article = "an" if words[0][0] in "aeiou" else "a"
    return " ".join([article, *words])


def template_recaption(analysis: Analysis) -> list[SubPrompt]:
    return [
        SubPrompt(entity_phrase(e.head, e.surface, a.attributes), (e.id,))
        for e, a in zip(analysis.entities, analysis.attributes)
    ]


def recaption(analysis: Analysis, planner) -> list[SubPrompt]:
    """One sub-prompt per entity, produced by ``planner``."""
    if not analysis.entities:
        raise ValueError("recaption needs at least one entity")
    subprompts = planner.recaption(analysis)
    got = [sp.entity_ids for sp in subprompts]
    want = [(e.id,) for e in analysis.entities]
    if got != want:
        raise BackendFailure(
            f"recaption reply must hold one sub-prompt per entity in order, got {got}",
            kind="invalid_reply",
        )
    return subprompts


# merge / divide


def _bad_pairs(analysis: Analysis) -> set[frozenset[int]]:
    pairs = {frozenset((c.a, c.b)) for c in analysis.report.conflicts}
    pairs |= {frozenset((r.subject, r.object)) for r in analysis.report.spatial}
    return pairs


def background_entities(analysis: Analysis, lexicon: Lexicon) -> set[int]:
    """Entities that may end up as background: scenery heads outside any conflict."""
    conflicted = {i for c in analysis.report.conflicts for i in (c.a, c.b)}
    return {
        e.id for e in analysis.entities
        if e.head in lexicon.background and e.id not in conflicted
    }


def merge_or_divide(subprompts: Sequence[SubPrompt], analysis: Analysis,
                    lexicon: Lexicon | None = None, *, truncate: bool = True,
                    max_concepts: int = MAX_SIMPLE_CONCEPTS,
                    warnings: list[str] | None = None) -> list[SimplePrompt]:
    """Apply the decomposition rules to recaptioned sub-prompts.

    Over-budget or internally conflicting sub-prompts are first split per
    entity; an entity with more than ``max_concepts - 1`` attributes keeps
    only its first ones (or raises when ``truncate`` is off).  Neighbouring
    units are then merged greedily in prompt order while the merged prompt
    stays within budget and no conflict or spatial relation spans it.
    Scenery entities are never merged with non-scenery ones.
    """
    warnings = warnings if warnings is not None else []
    entities = {e.id: e for e in analysis.entities}
    attrs = {a.entity_id: a.attributes for a in analysis.attributes}
    bad = _bad_pairs(analysis)
    scenery = background_entities(analysis, lexicon) if lexicon is not None else set()
    budget = max_concepts - 1

    def linked(ids_a: Iterable[int], ids_b: Iterable[int]) -> bool:
        return any(frozenset((a, b)) in bad for a in ids_a for b in ids_b)

    def single(eid: int) -> tuple[str, tuple[int, ...], int]:
        kept = attrs[eid]
        if len(kept) > budget:
            if not truncate:
                raise UnsatisfiableBudget(
                    f"entity {eid} ({entities[eid].head}) has {len(kept)} attributes; "
                    f"at most {budget} fit in one prompt"
                )
            warnings.append(
                f"entity {eid} ({entities[eid].head}): dropped attributes "
                f"{list(kept[budget:])} to stay within {max_concepts} concepts"
            )
            kept = kept[:budget]
        e = entities[eid]
        return entity_phrase(e.head, e.surface, kept), (eid,), 1 + len(kept)

    units: list[tuple[str, tuple[int, ...], int]] = []
    for sp in subprompts:
        ids = sp.entity_ids
        count = sum(1 + len(attrs[i]) for i in ids)
        internal = len(ids) > 1 and linked(ids, ids)
        if len(ids) == 1 and count <= max_concepts:
            units.append((sp.text, ids, count))
        elif len(ids) > 1 and count <= max_concepts and not internal:
            units.append((sp.text, ids, count))
        else:
            units.extend(single(i) for i in ids)

    merged: list[tuple[list[str], list[int], int]] = []
    for text, ids, count in units:
        if merged:
            texts, cur, total = merged[-1]
            same_kind = (ids[0] in scenery) == (cur[0] in scenery)
            if total + count <= max_concepts and same_kind and not linked(cur, ids):
                texts.append(text)
                cur.extend(ids)
                merged[-1] = (texts, cur, total + count)
                continue
        merged.append(([text], list(ids), count))

    out = [SimplePrompt(" and ".join(t), tuple(ids), FOREGROUND, c) for t, ids, c in merged]
    if len(out) > len(analysis.entities):
        warnings.append(f"division produced {len(out)} simple prompts for "
                        f"{len(analysis.entities)} entities")
    return out


def cdc_violations(prompts: Sequence[SimplePrompt], analysis: Analysis,
                   max_concepts: int = MAX_SIMPLE_CONCEPTS) -> list[str]:
    """Every way ``prompts`` break the decomposition rules for ``analysis``."""
    problems = []
    bad = _bad_pairs(analysis)
    seen: dict[int, int] = {}
    for i, p in enumerate(prompts):
        if p.concept_count > max_concepts:
            problems.append(f"prompt {i} has {p.concept_count} concepts")
        for a in p.entity_ids:
            for b in p.entity_ids:
                if a < b and frozenset((a, b)) in bad:
                    problems.append(f"prompt {i} joins related or conflicting entities {a}, {b}")
            if a in seen:
                problems.append(f"entity {a} appears in prompts {seen[a]} and {i}")
            seen[a] = i
    missing = {e.id for e in analysis.entities} - set(seen)
    if missing:
        problems.append(f"entities {sorted(missing)} were dropped")
    unknown = set(seen) - {e.id for e in analysis.entities}
    if unknown:
        problems.append(f"unknown entities {sorted(unknown)}")
    return problems


# background


def filter_background(simple_prompts: Sequence[SimplePrompt], lexicon: Lexicon, *,
                      exclude_ids: Iterable[int] = ()) -> tuple[list[SimplePrompt], SimplePrompt]:
    """Split off the scenery prompt with the highest lexicon priority.

    A prompt qualifies when every noun it mentions is in the background
    lexicon and none of its entities is listed in ``exclude_ids``.  Without
    a candidate, a plain background is synthesized.
    """
    if not simple_prompts:
        raise ValueError("need at least one simple prompt")
    exclude = set(exclude_ids)
    best, best_prio = None, None
    for i, p in enumerate(simple_prompts):
        if exclude.intersection(p.entity_ids):
            continue
        heads = [e.head for e in extract_entities(p.text, lexicon)]
        if not heads or any(h not in lexicon.background for h in heads):
            continue
        prio = max(lexicon.background[h] for h in heads)
        if best_prio is None or prio > best_prio:
            best, best_prio = i, prio
    if best is None:
        return ([p.with_role(FOREGROUND) for p in simple_prompts],
                SimplePrompt(PLAIN_BACKGROUND, (), BACKGROUND, 0))
    fg = [p.with_role(FOREGROUND) for i, p in enumerate(simple_prompts) if i != best]
    return fg, simple_prompts[best].with_role(BACKGROUND)


# layout


def prompt_relations(foreground: Sequence[SimplePrompt],
                     relations: Iterable[SpatialRelation]) -> list[tuple[int, int, str]]:
    """Lift entity relations to prompt indices; relations touching the background drop out."""
    where = entity_prompt_index(foreground)
    out = []
    for r in relations:
        if r.subject not in where or r.object not in where:
            continue
        a, b = where[r.subject], where[r.object]
        if a == b:
            raise ValueError(f"{r.kind}({r.subject}, {r.object}) links entities of one prompt")
        out.append((a, b, r.kind))
    return out


def assign_layout(foreground: Sequence[SimplePrompt], spatial_relations: Iterable[SpatialRelation],
                  planner) -> list[BoundingBox]:
    if not foreground:
        raise ValueError("need at least one foreground prompt")
    rels = prompt_relations(foreground, spatial_relations)
    boxes = planner.layout(list(foreground), rels)
    if len(boxes) != len(foreground):
        raise BackendFailure(
            f"layout returned {len(boxes)} boxes for {len(foreground)} prompts",
            kind="invalid_reply",
        )
    for a, b, kind in rels:
        if not relation_holds(kind, boxes[a], boxes[b]):
            raise BackendFailure(f"layout violates {kind}({a}, {b})", kind="invalid_reply")
    return boxes


def sort_by_area(pairs: Sequence[tuple[SimplePrompt, BoundingBox]]
                 ) -> list[tuple[SimplePrompt, BoundingBox]]:
    """Largest box first so later, smaller regions are painted on top; stable on ties."""
    return sorted(pairs, key=lambda pb: -pb[1].area)


# end to end


def degenerate_plan(analysis: Analysis) -> CompositionPlan:
    fg = SimplePrompt(analysis.prompt.text, tuple(e.id for e in analysis.entities),
                      FOREGROUND, analysis.report.concept_count)
    return CompositionPlan(analysis, ((fg, DEFAULT_BOX),),
                           SimplePrompt(PLAIN_BACKGROUND, (), BACKGROUND, 0))


def build_plan(prompt: ScenePrompt | str, planner=None, lexicon: Lexicon | None = None, *,
               max_concepts: int = MAX_SIMPLE_CONCEPTS, truncate: bool = True) -> CompositionPlan:
    """analysis, recaption, merge/divide, background split, layout, area order."""
    lexicon = lexicon or default_lexicon()
    if planner is None:
        from .backends.planners import TemplatePlanner
        planner = TemplatePlanner(lexicon, max_concepts=max_concepts, truncate=truncate)

    analysis = analyze(as_prompt(prompt), lexicon, max_concepts)
    if not analysis.report.is_complex:
        return degenerate_plan(analysis)

    subprompts = recaption(analysis, planner)
    simple, warnings = planner.merge_divide(subprompts, analysis)
    problems = cdc_violations(simple, analysis, max_concepts)
    if problems:
        raise BackendFailure("merge/divide reply breaks the decomposition rules: "
                             + "; ".join(problems), kind="invalid_reply")

    conflicted = {i for c in analysis.report.conflicts for i in (c.a, c.b)}
    foreground, background = filter_background(simple, lexicon, exclude_ids=conflicted)
    if not foreground:
        # everything was scenery: keep the background, paint it as one full region too
        foreground = [background.with_role(FOREGROUND)]
        background = SimplePrompt(PLAIN_BACKGROUND, (), BACKGROUND, 0)
        warnings = [*warnings, "only scenery prompts; background painted as a region"]
    boxes = assign_layout(foreground, analysis.report.spatial, planner)
    ordered = sort_by_area(list(zip(foreground, boxes)))
    log.debug("planned %d foreground prompts for %r", len(ordered), analysis.prompt.text)
    return CompositionPlan(analysis, tuple(ordered), background, tuple(warnings))


def check_plan(plan: CompositionPlan, max_concepts: int = MAX_SIMPLE_CONCEPTS) -> list[str]:
    """Invariant violations of a finished plan (empty when it is sound)."""
    problems = []
    prompts = plan.prompts + [plan.background]
    if plan.report.is_complex:
        problems += cdc_violations(prompts, plan.analysis, max_concepts)
    areas = [b.area for b in plan.boxes]
    if any(a < b for a, b in zip(areas, areas[1:])):
        problems.append("foreground is not ordered by non-increasing area")
    for a, b, kind in prompt_relations(plan.prompts, plan.report.spatial):
        if not relation_holds(kind, plan.boxes[a], plan.boxes[b]):
            problems.append(f"{kind}({a}, {b}) does not hold for the assigned boxes")
    return problems
