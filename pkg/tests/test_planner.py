import json

import pytest

from conftest import GOLDEN, SCRIPTED, golden_plan, load_scenes
from cxd.analysis import analyze
from cxd.backends.planners import ScriptedPlanner, TemplatePlanner
from cxd.errors import BackendFailure, LayoutInfeasible, PlanFormatError, UnsatisfiableBudget
from cxd.lexicon import default_lexicon
from cxd.plan import DEFAULT_BOX, PLAIN_BACKGROUND, BoundingBox, CompositionPlan, SimplePrompt, SubPrompt
from cxd.planner import (
    build_plan,
    cdc_violations,
    check_plan,
    entity_phrase,
    filter_background,
    merge_or_divide,
    sort_by_area,
    template_recaption,
)

LEX = default_lexicon()


def sp(text, ids, count, role="foreground"):
    return SimplePrompt(text, tuple(ids), role, count)


@pytest.mark.parametrize("head,surface,attrs,expected", [
    ("apple", "a red apple", ["red"], "a red apple"),
    ("apple", "an apple", [], "an apple"),
    ("owl", "a big owl", ["big"], "a big owl"),
    ("cat", "two cats", ["two"], "two cats"),
    ("balloon", "red balloons", ["red"], "red balloons"),
])
def test_entity_phrase(head, surface, attrs, expected):
    assert entity_phrase(head, surface, attrs) == expected


def test_recaption_one_per_entity():
    a = analyze("a green turtle and a red apple on a table")
    subs = template_recaption(a)
    assert [s.text for s in subs] == ["a green turtle", "a red apple", "a table"]
    assert [s.entity_ids for s in subs] == [(0,), (1,), (2,)]


def test_merge_respects_budget_and_links():
    a = analyze("a green turtle and a red apple on a table")
    out = merge_or_divide(template_recaption(a), a, LEX)
    assert [(p.text, p.entity_ids, p.concept_count) for p in out] == [
        ("a green turtle and a red apple", (0, 1), 4),
        ("a table", (2,), 1),
    ]
    assert cdc_violations(out, a) == []


def test_overfull_subprompt_is_divided():
    a = analyze("a fluffy white cat and a black dog")
    joined = [SubPrompt("a fluffy white cat and a black dog", (0, 1))]
    out = merge_or_divide(joined, a, LEX)
    assert [p.entity_ids for p in out] == [(0,), (1,)]
    assert all(p.concept_count <= 4 for p in out)


def test_conflicting_subprompt_is_divided():
    a = analyze("half desert half rainforest")
    out = merge_or_divide([SubPrompt("desert and rainforest", (0, 1))], a, LEX)
    assert [p.entity_ids for p in out] == [(0,), (1,)]


def test_truncation_keeps_first_attributes():
    a = analyze("a big old red wooden barn and a cat on a mat")
    warnings = []
    out = merge_or_divide(template_recaption(a), a, LEX, warnings=warnings)
    assert out[0].text == "a big old red barn" and out[0].concept_count == 4
    assert any("wooden" in w for w in warnings)
    with pytest.raises(UnsatisfiableBudget):
        merge_or_divide(template_recaption(a), a, LEX, truncate=False)


def test_scenery_stays_apart_from_objects():
    a = analyze("a snowman in a summer garden")
    out = merge_or_divide(template_recaption(a), a, LEX)
    assert [p.entity_ids for p in out] == [(0,), (1,)]


def test_background_priority_and_plain_fallback():
    prompts = [sp("a cat", [0], 1), sp("a meadow", [1], 1), sp("a sky", [2], 1)]
    fg, bg = filter_background(prompts, LEX)
    assert bg.text == "a sky" and bg.role == "background"
    assert [p.text for p in fg] == ["a cat", "a meadow"]

    fg, bg = filter_background(prompts, LEX, exclude_ids=[2])
    assert bg.text == "a meadow"

    fg, bg = filter_background([sp("a cat", [0], 1)], LEX)
    assert bg.text == PLAIN_BACKGROUND and bg.concept_count == 0 and bg.entity_ids == ()


def test_mixed_prompt_is_not_background():
    fg, bg = filter_background([sp("a cat and a meadow", [0, 1], 2)], LEX)
    assert bg.text == PLAIN_BACKGROUND


def test_sort_by_area_is_stable():
    small, big = BoundingBox(0, 0, .2, .2), BoundingBox(0, 0, .5, .5)
    pairs = [(sp("a", [0], 1), small), (sp("b", [1], 1), big), (sp("c", [2], 1), small)]
    assert [p.text for p, _ in sort_by_area(pairs)] == ["b", "a", "c"]


def test_simple_prompt_gets_degenerate_plan():
    plan = build_plan("a red apple")
    assert plan.boxes == [DEFAULT_BOX]
    assert plan.prompts[0].text == "a red apple"
    assert plan.background.text == PLAIN_BACKGROUND


def test_conflicted_scenery_is_never_background():
    plan = build_plan("half desert half rainforest")
    assert plan.background.text == PLAIN_BACKGROUND
    assert len(plan.foreground) == 2
    left, right = plan.boxes
    assert left.right <= right.x or right.right <= left.x


def test_infeasible_prompt():
    with pytest.raises(LayoutInfeasible):
        build_plan("a cat left of and right of a dog")


def test_build_plan_is_deterministic():
    text = load_scenes()[0]["prompt"]
    assert build_plan(text).to_json() == build_plan(text).to_json()


@pytest.mark.parametrize("scene", load_scenes(), ids=lambda s: s["name"])
def test_goldens_are_sound(scene):
    plan = golden_plan(scene["name"])
    assert check_plan(plan) == []
    assert plan.complex_prompt.text == scene["prompt"]


@pytest.mark.parametrize("scene", load_scenes(), ids=lambda s: s["name"])
def test_scripted_replay_matches_golden(scene):
    plan = build_plan(scene["prompt"], ScriptedPlanner(SCRIPTED))
    assert plan.to_json() == (GOLDEN / f"{scene['name']}_plan.json").read_text(encoding="utf-8")


def test_template_matches_golden_where_unedited():
    for scene in load_scenes():
        if "recaption_text" not in scene:
            assert build_plan(scene["prompt"], TemplatePlanner()).to_json() == golden_plan(
                scene["name"]).to_json()


def test_scripted_text_is_used_verbatim():
    scene = load_scenes()[2]
    plan = build_plan(scene["prompt"], ScriptedPlanner(SCRIPTED))
    assert [p.text for p in plan.prompts] == scene["recaption_text"]


def test_greenhouse_plan_contents():
    plan = golden_plan("greenhouse")
    assert plan.background.text == "a greenhouse"
    assert [p.text for p in plan.prompts] == [
        "a wooden table", "a small orange cat", "a tall green cactus", "a pink flower", "a bench",
    ]


def test_plan_round_trip():
    plan = golden_plan("greenhouse")
    again = CompositionPlan.from_json(plan.to_json())
    assert again == plan


@pytest.mark.parametrize("doc", ["not json", "{}", '{"complex_prompt": "x"}'])
def test_bad_plan_documents(doc):
    with pytest.raises(PlanFormatError):
        CompositionPlan.from_json(doc)


def test_bad_box_in_plan_document():
    data = json.loads(golden_plan("turtle").to_json())
    data["foreground"][0]["box"] = [0.9, 0.9, 0.5, 0.5]
    with pytest.raises(PlanFormatError):
        CompositionPlan.from_dict(data)


class _Stub(TemplatePlanner):
    def __init__(self, **replies):
        super().__init__()
        self.replies = replies

    def request(self, task, payload):
        if task in self.replies:
            return self.replies[task]
        return super().request(task, payload)


def test_recaption_must_cover_entities():
    bad = _Stub(recaption={"subprompts": [{"text": "a cup", "entity_ids": [0]}]})
    with pytest.raises(BackendFailure) as info:
        build_plan("a cup on a table", bad)
    assert info.value.kind == "invalid_reply"


def test_merge_reply_breaking_rules_is_rejected():
    bad = _Stub(merge_divide={"simple_prompts": [{"text": "a cup on a table", "entity_ids": [0, 1]}]})
    with pytest.raises(BackendFailure, match="decomposition rules"):
        build_plan("a cup on a table", bad)


def test_layout_reply_breaking_relation_is_rejected():
    bad = _Stub(layout={"boxes": [[0.1, 0.1, 0.2, 0.2], [0.6, 0.6, 0.3, 0.3]]})
    with pytest.raises(BackendFailure, match="violates on"):
        build_plan("a cup on a table", bad)


def test_layout_reply_with_wrong_count_is_rejected():
    bad = _Stub(layout={"boxes": [[0.1, 0.1, 0.2, 0.2]]})
    with pytest.raises(BackendFailure, match="1 boxes for 2"):
        build_plan("a cup on a table", bad)
