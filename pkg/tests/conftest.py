"""Shared test helpers: an independent per-pixel reference evaluator and a
random well-formed program generator.

The reference evaluator deliberately avoids the packed-bitmap code paths: it
answers one pixel at a time from the primitive predicates, so it can serve as
an oracle for the production evaluator.
"""

from __future__ import annotations

import math
import random

from symetric.dsl import Circle, Diff, Expr, Rect, Repeat, Union
from symetric.scene import Canvas, Scene


def ref_pixel(e: Expr, u: int, v: int, canvas: Canvas) -> bool:
    """Reference pixel lookup; reads outside the canvas are False."""
    if not (0 <= u < canvas.width and 0 <= v < canvas.height):
        return False
    if isinstance(e, Circle):
        return math.sqrt((e.x - u) ** 2 + (e.y - v) ** 2) < e.r
    if isinstance(e, Rect):
        return e.x1 <= u <= e.x2 and e.y1 <= v <= e.y2
    if isinstance(e, Union):
        return ref_pixel(e.left, u, v, canvas) or ref_pixel(e.right, u, v, canvas)
    if isinstance(e, Diff):
        return ref_pixel(e.left, u, v, canvas) and not ref_pixel(e.right, u, v, canvas)
    if isinstance(e, Repeat):
        return any(
            ref_pixel(e.body, u - i * e.dx, v - i * e.dy, canvas) for i in range(e.count)
        )
    raise TypeError(f"not an Expr: {e!r}")


def ref_eval(e: Expr, canvas: Canvas) -> Scene:
    pixels = [
        (u, v)
        for v in range(canvas.height)
        for u in range(canvas.width)
        if ref_pixel(e, u, v, canvas)
    ]
    return Scene.from_pixels(canvas, pixels)


def random_circle(rng: random.Random, canvas: Canvas) -> Circle:
    rmax = min(canvas.width, canvas.height) // 2
    r = rng.randint(1, max(1, rmax))
    while r + r >= min(canvas.width, canvas.height):
        r = rng.randint(1, max(1, rmax))
    x = rng.randint(r, canvas.width - 1 - r)
    y = rng.randint(r, canvas.height - 1 - r)
    return Circle(x, y, r)


def random_rect(rng: random.Random, canvas: Canvas) -> Rect:
    x1, x2 = sorted(rng.sample(range(canvas.width), 2))
    y1, y2 = sorted(rng.sample(range(canvas.height), 2))
    return Rect(x1, y1, x2, y2)


def random_primitive(rng: random.Random, canvas: Canvas) -> Expr:
    if rng.random() < 0.5 and min(canvas.width, canvas.height) >= 3:
        return random_circle(rng, canvas)
    return random_rect(rng, canvas)


def random_wf_expr(rng: random.Random, canvas: Canvas, size: int, count_max: int = 8) -> Expr:
    """Random well-formed expression with exactly `size` AST nodes."""
    if size <= 1:
        return random_primitive(rng, canvas)
    choices = ["repeat"]
    if size >= 3:
        choices += ["union", "diff"]
    op = rng.choice(choices)
    if op == "repeat":
        dx = rng.randint(-(canvas.width // 2), canvas.width // 2)
        dy = rng.randint(-(canvas.height // 2), canvas.height // 2)
        while dx == 0 and dy == 0:
            dx = rng.randint(-(canvas.width // 2), canvas.width // 2)
            dy = rng.randint(-(canvas.height // 2), canvas.height // 2)
        return Repeat(random_wf_expr(rng, canvas, size - 1, count_max), dx, dy, rng.randint(2, count_max))
    left_size = rng.randint(1, size - 2)
    left = random_wf_expr(rng, canvas, left_size, count_max)
    right = random_wf_expr(rng, canvas, size - 1 - left_size, count_max)
    return Union(left, right) if op == "union" else Diff(left, right)


def random_scene(rng: random.Random, canvas: Canvas, fill: float = 0.5) -> Scene:
    bits = 0
    for i in range(canvas.npixels):
        if rng.random() < fill:
            bits |= 1 << i
    return Scene(canvas.width, canvas.height, bits)


def brute_force_distinct_scenes(canvas: Canvas, c_max: int, count_max: int = 8) -> set[int]:
    """Independent oracle: distinct scenes of all well-formed canonical
    programs with at most c_max nodes, computed over pixel frozensets.

    Enumerates over scene equivalence classes per size, which is sound
    because every operator's output depends only on its arguments' scenes.
    """
    w, h = canvas.width, canvas.height

    def circle_pixels(x, y, r):
        return frozenset(
            (u, v)
            for u in range(w)
            for v in range(h)
            if (x - u) ** 2 + (y - v) ** 2 < r * r
        )

    def rect_pixels(x1, y1, x2, y2):
        return frozenset(
            (u, v) for u in range(w) for v in range(h) if x1 <= u <= x2 and y1 <= v <= y2
        )

    prims = set()
    for r in range(1, min(w, h) // 2 + 1):
        for x in range(r, w - r):
            for y in range(r, h - r):
                prims.add(circle_pixels(x, y, r))
    for x1 in range(w):
        for x2 in range(x1 + 1, w):
            for y1 in range(h):
                for y2 in range(y1 + 1, h):
                    prims.add(rect_pixels(x1, y1, x2, y2))

    vectors = [
        (dx, dy)
        for dx in range(-(w // 2), w // 2 + 1)
        for dy in range(-(h // 2), h // 2 + 1)
        if (dx, dy) != (0, 0)
    ]

    def translate(pixels, dx, dy):
        return frozenset(
            (u + dx, v + dy) for u, v in pixels if 0 <= u + dx < w and 0 <= v + dy < h
        )

    def repeat(pixels, dx, dy, count):
        acc = set()
        for i in range(count):
            acc |= translate(pixels, i * dx, i * dy)
        return frozenset(acc)

    by_size = {1: set(prims)}
    for size in range(2, c_max + 1):
        new = set()
        for body in by_size.get(size - 1, ()):
            for dx, dy in vectors:
                for count in range(2, count_max + 1):
                    new.add(repeat(body, dx, dy, count))
        for a in range(1, size - 1):
            b = size - 1 - a
            for sa in by_size.get(a, ()):
                for sb in by_size.get(b, ()):
                    new.add(sa | sb)
                    new.add(sa - sb)
        by_size[size] = new
    out = set()
    for scenes in by_size.values():
        out |= scenes
    return {Scene.from_pixels(canvas, pixels).bits for pixels in out}
