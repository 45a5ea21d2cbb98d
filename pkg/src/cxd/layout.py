"""Deterministic box placement under pairwise spatial constraints.

Relations are turned into linear constraints on the box variables
``(x, y, w, h)`` and solved as an L1 fit to a preferred grid layout.
Strict-order cycles are rejected before the LP runs; anything else the
LP cannot satisfy is infeasible as well.  The rounded result is checked
against the geometric predicates before it is returned.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import LayoutInfeasible
from .plan import DEFAULT_BOX, BoundingBox

PHI = (1 + 5 ** 0.5) / 2

ADJACENCY_EPS = 0.05
MIN_SIZE = 0.05
CELL_INSET = 0.08

# solver-side margins, tighter than the predicates so rounding to 4 decimals
# can never flip a satisfied relation
_ORDER_GAP = 0.02
_OVERLAP_GAP = 0.02
_INSIDE_GAP = 0.01
_ADJ_SLACK = 0.04

_HORIZONTAL_ORDER = {"left-of": False, "right-of": True}
_VERTICAL_ORDER = {"above": False, "below": True}


def _x_overlap(a: BoundingBox, b: BoundingBox) -> bool:
    return a.x < b.right and b.x < a.right


def _y_overlap(a: BoundingBox, b: BoundingBox) -> bool:
    return a.y < b.bottom and b.y < a.bottom


def relation_holds(kind: str, a: BoundingBox, b: BoundingBox, eps: float = ADJACENCY_EPS) -> bool:
    """Whether ``kind(a, b)`` holds geometrically (a is the subject)."""
    if kind == "left-of":
        return a.cx < b.cx
    if kind == "right-of":
        return a.cx > b.cx
    if kind == "above":
        return a.cy < b.cy
    if kind == "below":
        return a.cy > b.cy
    if kind == "on":
        return abs(a.bottom - b.y) <= eps and _x_overlap(a, b)
    if kind == "under":
        return abs(a.y - b.bottom) <= eps and _x_overlap(a, b)
    if kind == "inside":
        return a.x >= b.x and a.y >= b.y and a.right <= b.right and a.bottom <= b.bottom
    if kind == "beside":
        return _y_overlap(a, b) and (a.right <= b.x or b.right <= a.x)
    raise ValueError(f"unknown relation kind {kind!r}")


def golden_grid(weights: Sequence[float]) -> list[BoundingBox]:
    """Row-major grid with roughly golden-ratio column count.

    Cell widths within a row are proportional to each item's weight.
    """
    n = len(weights)
    if n == 0:
        return []
    if n == 1:
        return [DEFAULT_BOX]
    cols = max(1, min(n, round(math.sqrt(n * PHI))))
    rows = math.ceil(n / cols)
    boxes = []
    for r in range(rows):
        row = list(range(r * cols, min(n, (r + 1) * cols)))
        total = sum(max(weights[i], 1) for i in row)
        x0 = 0.0
        for i in row:
            cw = max(weights[i], 1) / total
            boxes.append(_inset(x0, r / rows, cw, 1 / rows))
            x0 += cw
    return boxes


def _inset(x: float, y: float, w: float, h: float, frac: float = CELL_INSET) -> BoundingBox:
    return BoundingBox(x + w * frac, y + h * frac, w * (1 - 2 * frac), h * (1 - 2 * frac))


def _layers(n: int, edges: Sequence[tuple[int, int]]) -> list[int] | None:
    """Longest-path layer per node, or None if the edges contain a cycle."""
    succ = [[] for _ in range(n)]
    indeg = [0] * n
    for a, b in edges:
        succ[a].append(b)
        indeg[b] += 1
    layer = [0] * n
    ready = [i for i in range(n) if indeg[i] == 0]
    done = 0
    while ready:
        i = ready.pop(0)
        done += 1
        for j in succ[i]:
            layer[j] = max(layer[j], layer[i] + 1)
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    return layer if done == n else None


def _acyclic_subset(n: int, strict: list[tuple[int, int]], soft: list[tuple[int, int]]):
    edges = list(strict)
    for e in soft:
        if _layers(n, edges + [e]) is not None:
            edges.append(e)
    return edges


def preferred_layout(n: int, relations: Sequence[tuple[int, int, str]],
                     weights: Sequence[float]) -> list[BoundingBox]:
    """Starting boxes: relation-layered grid, or the golden grid when unconstrained."""
    if not relations:
        return golden_grid(weights)

    h_strict, h_soft, v_strict, v_soft = [], [], [], []
    for a, b, kind in relations:
        if kind in _HORIZONTAL_ORDER:
            h_strict.append((b, a) if _HORIZONTAL_ORDER[kind] else (a, b))
        elif kind in _VERTICAL_ORDER:
            v_strict.append((b, a) if _VERTICAL_ORDER[kind] else (a, b))
        elif kind == "beside":
            h_soft.append((a, b))
        elif kind == "on":
            v_soft.append((a, b))
        elif kind == "under":
            v_soft.append((b, a))

    for name, strict in (("horizontal", h_strict), ("vertical", v_strict)):
        if _layers(n, strict) is None:
            raise LayoutInfeasible(f"contradictory {name} ordering constraints (cycle)")

    cols = _layers(n, _acyclic_subset(n, h_strict, h_soft))
    rows = _layers(n, _acyclic_subset(n, v_strict, v_soft))

    # stacked and nested pairs want the same column as their anchor
    parent = {}
    for a, b, kind in relations:
        if kind in ("on", "under"):
            cols[a] = cols[b]
        elif kind == "inside":
            parent.setdefault(a, b)

    touched = {i for a, b, _ in relations for i in (a, b)}
    ncols = max(cols[i] for i in touched) + 1 if touched else 1
    for i in range(n):
        if i not in touched:
            cols[i] = ncols
            rows[i] = 0
            ncols += 1
    nrows = max(rows[i] for i in touched) + 1

    cells: dict[tuple[int, int], list[int]] = {}
    for i in range(n):
        if i not in parent:
            key = (rows[i] if i in touched else -1, cols[i])
            cells.setdefault(key, []).append(i)

    boxes: list[BoundingBox | None] = [None] * n
    for (r, c), members in cells.items():
        y0, ch = (0.0, 1.0) if r < 0 else (r / nrows, 1 / nrows)
        cw = 1 / ncols / len(members)
        for k, i in enumerate(members):
            boxes[i] = _inset(c / ncols + k * cw, y0, cw, ch)

    pending = [i for i in range(n) if boxes[i] is None]
    while pending:
        progressed = False
        for i in pending:
            p = boxes[parent[i]]
            if p is not None:
                boxes[i] = BoundingBox(p.x + p.w / 4, p.y + p.h / 4, p.w / 2, p.h / 2)
                progressed = True
        pending = [i for i in range(n) if boxes[i] is None]
        if pending and not progressed:
            raise LayoutInfeasible("cyclic containment constraints")
    return boxes


def _solve_lp(n: int, relations, preferred: Sequence[BoundingBox]) -> np.ndarray:
    # variable layout: [x0, y0, w0, h0, x1, ...] then 4n deviation terms
    nv = 4 * n
    X, Y, W, H = 0, 1, 2, 3
    rows: list[np.ndarray] = []
    rhs: list[float] = []

    def v(i, k):
        return 4 * i + k

    def leq(coefs: dict[int, float], bound: float):
        row = np.zeros(2 * nv)
        for idx, c in coefs.items():
            row[idx] += c
        rows.append(row)
        rhs.append(bound)

    for i in range(n):
        leq({v(i, X): 1, v(i, W): 1}, 1.0)
        leq({v(i, Y): 1, v(i, H): 1}, 1.0)

    for a, b, kind in relations:
        if kind in ("left-of", "right-of", "above", "below"):
            s, o = (b, a) if kind in ("right-of", "below") else (a, b)
            p, q = (X, W) if kind in ("left-of", "right-of") else (Y, H)
            # centre(s) + gap <= centre(o)
            leq({v(s, p): 1, v(s, q): 0.5, v(o, p): -1, v(o, q): -0.5}, -_ORDER_GAP)
        elif kind in ("on", "under"):
            # on: |bottom(a) - top(b)| <= slack ; under: |top(a) - bottom(b)| <= slack
            if kind == "on":
                edge = {v(a, Y): 1, v(a, H): 1, v(b, Y): -1}
            else:
                edge = {v(a, Y): 1, v(b, Y): -1, v(b, H): -1}
            leq(edge, _ADJ_SLACK)
            leq({k: -c for k, c in edge.items()}, _ADJ_SLACK)
            leq({v(a, X): 1, v(b, X): -1, v(b, W): -1}, -_OVERLAP_GAP)
            leq({v(b, X): 1, v(a, X): -1, v(a, W): -1}, -_OVERLAP_GAP)
        elif kind == "inside":
            for p, q in ((X, W), (Y, H)):
                leq({v(b, p): 1, v(a, p): -1}, -_INSIDE_GAP)
                leq({v(a, p): 1, v(a, q): 1, v(b, p): -1, v(b, q): -1}, -_INSIDE_GAP)
        elif kind == "beside":
            leq({v(a, Y): 1, v(b, Y): -1, v(b, H): -1}, -_OVERLAP_GAP)
            leq({v(b, Y): 1, v(a, Y): -1, v(a, H): -1}, -_OVERLAP_GAP)
            left, right = (a, b) if preferred[a].cx <= preferred[b].cx else (b, a)
            leq({v(left, X): 1, v(left, W): 1, v(right, X): -1}, -_OVERLAP_GAP)
        else:
            raise ValueError(f"unknown relation kind {kind!r}")

    target = np.array([c for b in preferred for c in (b.x, b.y, b.w, b.h)])
    for k in range(nv):
        # |var - target| <= dev
        leq({k: 1, nv + k: -1}, target[k])
        leq({k: -1, nv + k: -1}, -target[k])

    cost = np.concatenate([np.zeros(nv), np.ones(nv)])
    bounds = []
    for _ in range(n):
        bounds += [(0, 1), (0, 1), (MIN_SIZE, 1), (MIN_SIZE, 1)]
    bounds += [(0, None)] * nv
    res = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds,
                  method="highs")
    if res.status != 0:
        raise LayoutInfeasible(f"spatial constraints cannot be satisfied ({res.message})")
    return res.x[:nv]


def solve_layout(n: int, relations: Sequence[tuple[int, int, str]],
                 weights: Sequence[float] | None = None) -> list[BoundingBox]:
    """Place ``n`` boxes so that every ``(subject, object, kind)`` relation holds.

    Subjects and objects are indices into the box list.
    """
    if n < 1:
        raise ValueError("need at least one box")
    weights = list(weights) if weights is not None else [1.0] * n
    relations = [(int(a), int(b), k) for a, b, k in relations]
    for a, b, _ in relations:
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"bad relation endpoints ({a}, {b}) for {n} boxes")

    preferred = preferred_layout(n, relations, weights)
    if not relations:
        return [BoundingBox.rounded(*b.as_list()) for b in preferred]

    sol = _solve_lp(n, relations, preferred)
    boxes = [BoundingBox.rounded(*sol[4 * i:4 * i + 4]) for i in range(n)]
    for a, b, kind in relations:
        if not relation_holds(kind, boxes[a], boxes[b]):
            raise LayoutInfeasible(f"{kind}({a}, {b}) could not be satisfied")
    return boxes
