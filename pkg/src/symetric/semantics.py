"""Concrete evaluation of CSG programs onto packed raster scenes.

Pixel semantics:

* ``circle x y r`` fills pixels with ``sqrt((x-u)^2 + (y-v)^2) < r``
  (equivalently ``(x-u)^2 + (y-v)^2 < r^2`` on the integer grid).
* ``rect x1 y1 x2 y2`` fills ``x1 <= u <= x2`` and ``y1 <= v <= y2``
  (both corners inclusive).
* ``union`` / ``diff`` are pixelwise OR / AND-NOT.
* ``repeat body dx dy c`` is the union of ``c`` copies of the body, copy ``i``
  translated by ``+i*(dx, dy)``; pixels translated off the canvas are dropped.

Everything also exists at the scene level (:func:`apply_operator`), where the
operator is applied to already-evaluated argument scenes. The two agree because
every operator's output depends only on its arguments' scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dsl import Circle, Diff, Expr, Rect, Repeat, Union, serialize
from .scene import Canvas, Scene, translate_mask

COUNT_MAX = 8


@dataclass(frozen=True, slots=True)
class ParamSpace:
    """Integer parameter domains for a canvas.

    Coordinates range over the pixel grid, radii over [1, min_dim/2], repeat
    counts over [2, count_max], and repeat vectors over [-dim/2, dim/2].
    """

    canvas: Canvas
    count_max: int = COUNT_MAX

    @property
    def radius_max(self) -> int:
        return min(self.canvas.width, self.canvas.height) // 2

    @property
    def dx_max(self) -> int:
        return self.canvas.width // 2

    @property
    def dy_max(self) -> int:
        return self.canvas.height // 2

    def contains(self, e: Expr) -> bool:
        w, h = self.canvas.width, self.canvas.height
        if isinstance(e, Circle):
            return 0 <= e.x < w and 0 <= e.y < h and 1 <= e.r <= self.radius_max
        if isinstance(e, Rect):
            return all(0 <= c < w for c in (e.x1, e.x2)) and all(0 <= c < h for c in (e.y1, e.y2))
        if isinstance(e, (Union, Diff)):
            return self.contains(e.left) and self.contains(e.right)
        if isinstance(e, Repeat):
            return (
                -self.dx_max <= e.dx <= self.dx_max
                and -self.dy_max <= e.dy <= self.dy_max
                and 2 <= e.count <= self.count_max
                and self.contains(e.body)
            )
        raise TypeError(f"not an Expr: {e!r}")


def render_circle_mask(canvas: Canvas, x: int, y: int, r: int) -> int:
    """Packed pixels with (x-u)^2 + (y-v)^2 < r^2, computed row by row.

    For row v the filled columns are |x-u| <= isqrt(r^2 - (y-v)^2 - 1), a
    contiguous run, so each row is a single shifted bit run.
    """
    w, h = canvas.width, canvas.height
    bits = 0
    rr = r * r
    for v in range(max(0, y - r + 1), min(h, y + r)):
        rem = rr - (y - v) * (y - v) - 1
        if rem < 0:
            continue
        half = math.isqrt(rem)
        lo = max(0, x - half)
        hi = min(w - 1, x + half)
        if lo <= hi:
            bits |= (((1 << (hi - lo + 1)) - 1) << lo) << (v * w)
    return bits


def render_rect_mask(canvas: Canvas, x1: int, y1: int, x2: int, y2: int) -> int:
    w, h = canvas.width, canvas.height
    lo = max(0, x1)
    hi = min(w - 1, x2)
    if lo > hi:
        return 0
    row = ((1 << (hi - lo + 1)) - 1) << lo
    bits = 0
    for v in range(max(0, y1), min(h - 1, y2) + 1):
        bits |= row << (v * w)
    return bits


def repeat_mask(bits: int, canvas: Canvas, dx: int, dy: int, count: int) -> int:
    """Union of `count` translated copies: acc_c = body | translate(acc_{c-1})."""
    w, h = canvas.width, canvas.height
    acc = bits
    for _ in range(count - 1):
        acc = bits | translate_mask(acc, w, h, dx, dy)
    return acc


def apply_operator(op: tuple, arg_bits: tuple[int, ...], canvas: Canvas) -> int:
    """Apply an operator symbol to packed argument scenes.

    Symbols are tuples: ``('circle', x, y, r)``, ``('rect', x1, y1, x2, y2)``,
    ``('union',)``, ``('diff',)``, ``('repeat', dx, dy, count)``.
    """
    head = op[0]
    if head == "union":
        return arg_bits[0] | arg_bits[1]
    if head == "diff":
        return arg_bits[0] & ~arg_bits[1]
    if head == "repeat":
        return repeat_mask(arg_bits[0], canvas, op[1], op[2], op[3])
    if head == "circle":
        return render_circle_mask(canvas, op[1], op[2], op[3])
    if head == "rect":
        return render_rect_mask(canvas, op[1], op[2], op[3], op[4])
    raise ValueError(f"unknown operator symbol {op!r}")


def operator_of(e: Expr) -> tuple:
    """The alphabet symbol of e's root node (scalar parameters included)."""
    if isinstance(e, Circle):
        return ("circle", e.x, e.y, e.r)
    if isinstance(e, Rect):
        return ("rect", e.x1, e.y1, e.x2, e.y2)
    if isinstance(e, Union):
        return ("union",)
    if isinstance(e, Diff):
        return ("diff",)
    if isinstance(e, Repeat):
        return ("repeat", e.dx, e.dy, e.count)
    raise TypeError(f"not an Expr: {e!r}")


def term_of(op: tuple, args: tuple[Expr, ...]) -> Expr:
    """Rebuild an expression from an alphabet symbol and argument subterms."""
    head = op[0]
    if head == "circle":
        return Circle(op[1], op[2], op[3])
    if head == "rect":
        return Rect(op[1], op[2], op[3], op[4])
    if head == "union":
        return Union(args[0], args[1])
    if head == "diff":
        return Diff(args[0], args[1])
    if head == "repeat":
        return Repeat(args[0], op[1], op[2], op[3])
    raise ValueError(f"unknown operator symbol {op!r}")


class Evaluator:
    """Evaluate expressions on one canvas, memoizing by structural identity.

    The cache belongs to a single synthesis run; share one instance per run
    and do not share instances across threads without external locking.
    """

    def __init__(self, canvas: Canvas, memoize: bool = True):
        self.canvas = canvas
        self.memoize = memoize
        self._cache: dict[Expr, int] = {}

    def eval_bits(self, e: Expr) -> int:
        cache = self._cache if self.memoize else None
        if cache is not None:
            hit = cache.get(e)
            if hit is not None:
                return hit
        if isinstance(e, Circle):
            bits = render_circle_mask(self.canvas, e.x, e.y, e.r)
        elif isinstance(e, Rect):
            bits = render_rect_mask(self.canvas, e.x1, e.y1, e.x2, e.y2)
        elif isinstance(e, Union):
            bits = self.eval_bits(e.left) | self.eval_bits(e.right)
        elif isinstance(e, Diff):
            bits = self.eval_bits(e.left) & ~self.eval_bits(e.right)
        elif isinstance(e, Repeat):
            bits = repeat_mask(self.eval_bits(e.body), self.canvas, e.dx, e.dy, e.count)
        else:
            raise TypeError(f"not an Expr: {e!r}")
        if cache is not None:
            cache[e] = bits
        return bits

    def eval(self, e: Expr) -> Scene:
        return Scene(self.canvas.width, self.canvas.height, self.eval_bits(e))

    def cache_size(self) -> int:
        return len(self._cache)


def evaluate(e: Expr, canvas: Canvas) -> Scene:
    """One-shot evaluation (no shared memo cache)."""
    return Evaluator(canvas, memoize=False).eval(e)


def well_formed(e: Expr, canvas: Canvas) -> bool:
    """Structural well-formedness check.

    Circles must be non-empty and fit strictly inside the canvas; rectangles
    need properly ordered corners; repeats must move their body and iterate
    at least twice.
    """
    if isinstance(e, Circle):
        return (
            e.r > 0
            and 0 <= e.x - e.r
            and e.x + e.r < canvas.width
            and 0 <= e.y - e.r
            and e.y + e.r < canvas.height
        )
    if isinstance(e, Rect):
        return e.x1 < e.x2 and e.y1 < e.y2
    if isinstance(e, (Union, Diff)):
        return well_formed(e.left, canvas) and well_formed(e.right, canvas)
    if isinstance(e, Repeat):
        return (e.dx != 0 or e.dy != 0) and e.count > 1 and well_formed(e.body, canvas)
    raise TypeError(f"not an Expr: {e!r}")


def canonical(e: Expr) -> bool:
    """Symmetry-breaking normal form.

    Union arguments must be ordered by serialized text (left <= right) and
    every repeat must move its body with count > 1. Primitive non-emptiness
    is left to :func:`well_formed`.
    """
    if isinstance(e, (Circle, Rect)):
        return True
    if isinstance(e, Union):
        return (
            serialize(e.left) <= serialize(e.right)
            and canonical(e.left)
            and canonical(e.right)
        )
    if isinstance(e, Diff):
        return canonical(e.left) and canonical(e.right)
    if isinstance(e, Repeat):
        return (e.dx != 0 or e.dy != 0) and e.count > 1 and canonical(e.body)
    raise TypeError(f"not an Expr: {e!r}")


def canonicalize(e: Expr) -> Expr:
    """Reorder union arguments so the result passes :func:`canonical`."""
    if isinstance(e, (Circle, Rect)):
        return e
    if isinstance(e, Union):
        left, right = canonicalize(e.left), canonicalize(e.right)
        if serialize(left) > serialize(right):
            left, right = right, left
        return Union(left, right)
    if isinstance(e, Diff):
        return Diff(canonicalize(e.left), canonicalize(e.right))
    if isinstance(e, Repeat):
        return Repeat(canonicalize(e.body), e.dx, e.dy, e.count)
    raise TypeError(f"not an Expr: {e!r}")
