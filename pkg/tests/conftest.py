import json
from pathlib import Path

import numpy as np
import pytest

from cxd.analysis import analyze
from cxd.plan import BoundingBox, CompositionPlan, SimplePrompt

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"
SCRIPTED = FIXTURES / "scripted"


def load_corpus() -> list[dict]:
    return json.loads((FIXTURES / "corpus.json").read_text(encoding="utf-8"))


def load_scenes() -> list[dict]:
    return json.loads((FIXTURES / "scenes.json").read_text(encoding="utf-8"))


def golden_plan(name: str) -> CompositionPlan:
    return CompositionPlan.from_json((GOLDEN / f"{name}_plan.json").read_text(encoding="utf-8"))


def golden_checksums() -> dict:
    return json.loads((GOLDEN / "checksums.json").read_text(encoding="utf-8"))


def random_box(rng: np.random.Generator) -> BoundingBox:
    w, h = rng.uniform(0.05, 1.0, size=2)
    x = rng.uniform(0.0, 1.0 - w)
    y = rng.uniform(0.0, 1.0 - h)
    return BoundingBox(float(x), float(y), float(w), float(h))


def boxes_plan(boxes, prompt: str = "a cat and a dog") -> CompositionPlan:
    """A plan with arbitrary boxes; the analysis is only a carrier."""
    analysis = analyze(prompt)
    fg = tuple(
        (SimplePrompt(f"region {i}", (0,), "foreground", 1), box) for i, box in enumerate(boxes)
    )
    bg = SimplePrompt("a plain background", (), "background", 0)
    return CompositionPlan(analysis, fg, bg, ())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance report: one PASS/FAIL line per criterion at the end of the run

_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, [title, True])
    if rep.failed:
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number}. {title}")
