"""SVG rendering of a plan's layout, for eyeballing compositions."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .plan import BOX_DECIMALS, CompositionPlan

_COLOURS = ("#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6",
            "#bfef45", "#469990", "#9a6324")


def _num(v: float) -> str:
    return repr(round(float(v), BOX_DECIMALS))


def plan_to_svg(plan: CompositionPlan, size: int = 512) -> str:
    """One labelled rectangle per foreground prompt; the viewBox is the unit square,
    so rectangle attributes are the plan's box coordinates verbatim."""
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        'viewBox="0 0 1 1">',
        '<rect class="background" x="0" y="0" width="1" height="1" fill="#f4f1ea"/>',
        f'<text class="background-label" x="0.01" y="0.985" font-size="0.025" '
        f'fill="#777">{escape(plan.background.text)}</text>',
    ]
    for i, (prompt, box) in enumerate(plan.foreground):
        colour = _COLOURS[i % len(_COLOURS)]
        out.append(
            f'<rect class="region" data-index="{i}" x="{_num(box.x)}" y="{_num(box.y)}" '
            f'width="{_num(box.w)}" height="{_num(box.h)}" fill="{colour}" fill-opacity="0.25" '
            f'stroke="{colour}" stroke-width="0.004"/>'
        )
        out.append(
            f'<text x="{_num(box.x + 0.01)}" y="{_num(box.y + 0.035)}" font-size="0.03" '
            f'fill="{colour}">{i}: {escape(prompt.text)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
