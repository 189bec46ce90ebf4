import math
import random

from symetric.dsl import Circle, Diff, Rect, Repeat, Union, parse, serialize
from symetric.scene import Canvas, Scene
from symetric.semantics import (
    Evaluator,
    ParamSpace,
    canonical,
    canonicalize,
    evaluate,
    well_formed,
)

from conftest import random_primitive, random_wf_expr, ref_eval


def all_wf_primitives(canvas):
    prims = []
    for r in range(1, min(canvas.width, canvas.height) // 2 + 1):
        for x in range(r, canvas.width - r):
            for y in range(r, canvas.height - r):
                prims.append(Circle(x, y, r))
    for x1 in range(canvas.width):
        for x2 in range(x1 + 1, canvas.width):
            for y1 in range(canvas.height):
                for y2 in range(y1 + 1, canvas.height):
                    prims.append(Rect(x1, y1, x2, y2))
    return prims


def test_circle_pixels_on_4x4():
    canvas = Canvas(4, 4)
    got = evaluate(Circle(2, 2, 1), canvas)
    expected = [
        (u, v)
        for v in range(4)
        for u in range(4)
        if math.sqrt((2 - u) ** 2 + (2 - v) ** 2) < 1
    ]
    assert sorted(got.pixels()) == sorted(expected)
    assert sorted(got.pixels()) == [(2, 2)]


def test_rect_fills_inclusive_box():
    canvas = Canvas(8, 8)
    got = evaluate(Rect(1, 2, 3, 5), canvas)
    assert got.popcount() == (3 - 1 + 1) * (5 - 2 + 1)
    assert got.get(1, 2) and got.get(3, 5)
    assert not got.get(4, 5) and not got.get(3, 6)


def test_diff_self_is_empty():
    canvas = Canvas(8, 8)
    rng = random.Random(2)
    for _ in range(20):
        e = random_wf_expr(rng, canvas, rng.randint(1, 6))
        assert evaluate(Diff(e, e), canvas).popcount() == 0


def test_union_commutes_semantically():
    canvas = Canvas(8, 8)
    rng = random.Random(3)
    for _ in range(50):
        a = random_wf_expr(rng, canvas, rng.randint(1, 4))
        b = random_wf_expr(rng, canvas, rng.randint(1, 4))
        assert evaluate(Union(a, b), canvas) == evaluate(Union(b, a), canvas)


def test_repeat_matches_union_identity():
    # Repeat(circle, v, 2) = circle union circle-translated, when both fit.
    canvas = Canvas(16, 16)
    rng = random.Random(4)
    checked = 0
    while checked < 50:
        r = rng.randint(1, 4)
        x, y = rng.randint(r, 15 - r), rng.randint(r, 15 - r)
        dx, dy = rng.randint(-4, 4), rng.randint(-4, 4)
        if dx == 0 and dy == 0:
            continue
        x2, y2 = x + dx, y + dy
        if not (r <= x2 <= 15 - r and r <= y2 <= 15 - r):
            continue
        rep = evaluate(Repeat(Circle(x, y, r), dx, dy, 2), canvas)
        unrolled = evaluate(Union(Circle(x, y, r), Circle(x2, y2, r)), canvas)
        assert rep == unrolled
        checked += 1


def test_repeat_unrolls_to_translated_union():
    canvas = Canvas(8, 8)
    rng = random.Random(5)
    for _ in range(100):
        body = random_wf_expr(rng, canvas, rng.randint(1, 4))
        dx, dy = rng.randint(-3, 3), rng.randint(-3, 3)
        if dx == 0 and dy == 0:
            dx = 1
        count = rng.randint(2, 5)
        base = evaluate(body, canvas)
        folded = Scene.empty(canvas)
        for i in range(count):
            folded = folded.union(base.translate(i * dx, i * dy))
        assert evaluate(Repeat(body, dx, dy, count), canvas) == folded


def test_memoization_transparency():
    canvas = Canvas(16, 16)
    rng = random.Random(6)
    memo = Evaluator(canvas, memoize=True)
    plain = Evaluator(canvas, memoize=False)
    for _ in range(100):
        e = random_wf_expr(rng, canvas, rng.randint(1, 8))
        assert memo.eval(e) == plain.eval(e)
    assert memo.cache_size() > 0
    assert plain.cache_size() == 0


def test_eval_against_reference_8x8():
    canvas = Canvas(8, 8)
    rng = random.Random(7)
    for _ in range(1000):
        e = random_wf_expr(rng, canvas, rng.randint(1, 8))
        assert evaluate(e, canvas) == ref_eval(e, canvas)


def test_well_formed_examples():
    canvas = Canvas(16, 16)
    assert well_formed(Circle(4, 8, 4), canvas)
    assert not well_formed(Circle(4, 8, 5), canvas)  # x - r < 0
    assert not well_formed(Rect(3, 3, 3, 5), canvas)
    assert well_formed(Rect(3, 3, 4, 5), canvas)
    assert not well_formed(Repeat(Rect(0, 0, 1, 1), 0, 0, 3), canvas)
    assert not well_formed(Repeat(Rect(0, 0, 1, 1), 1, 0, 1), canvas)
    assert well_formed(Repeat(Rect(0, 0, 1, 1), 1, 0, 2), canvas)
    assert not well_formed(Union(Circle(4, 8, 4), Rect(3, 3, 3, 5)), canvas)


def test_canonical_union_ordering():
    a = Circle(2, 2, 1)
    b = Rect(0, 0, 2, 2)
    first, second = sorted([a, b], key=serialize)
    assert canonical(Union(first, second))
    assert not canonical(Union(second, first))
    assert canonical(Union(a, a))


def test_canonical_exactly_one_order_for_all_primitive_pairs():
    prims = all_wf_primitives(Canvas(4, 4))
    for a in prims:
        for b in prims:
            if a == b:
                continue
            assert canonical(Union(a, b)) != canonical(Union(b, a))


def test_canonical_repeat_rules():
    body = Rect(0, 0, 1, 1)
    assert canonical(Repeat(body, 1, 0, 2))
    assert not canonical(Repeat(body, 0, 0, 2))
    assert not canonical(Repeat(body, 1, 0, 1))


def test_canonicalize_orders_unions():
    rng = random.Random(8)
    canvas = Canvas(8, 8)
    for _ in range(100):
        e = random_wf_expr(rng, canvas, rng.randint(1, 9))
        c = canonicalize(e)
        assert canonical(c)
        assert evaluate(c, canvas) == evaluate(e, canvas)


def test_param_space():
    space = ParamSpace(Canvas(16, 16))
    assert space.contains(Circle(4, 8, 4))
    assert not space.contains(Circle(4, 8, 9))
    assert not space.contains(Circle(16, 8, 1))
    assert space.contains(Repeat(Rect(0, 0, 1, 1), -8, 8, 8))
    assert not space.contains(Repeat(Rect(0, 0, 1, 1), 9, 0, 2))
    assert not space.contains(Repeat(Rect(0, 0, 1, 1), 1, 0, 9))


def test_out_of_canvas_rect_clipped():
    # Rendering is total even off the quantized domain: clip to the canvas.
    canvas = Canvas(4, 4)
    s = evaluate(Rect(2, 2, 9, 9), canvas)
    assert sorted(s.pixels()) == sorted((u, v) for v in range(2, 4) for u in range(2, 4))


def test_key_program_renders_on_16x16():
    key = parse(
        "(union (union (diff (circle 4 8 4) (circle 4 8 3)) (rect 7 7 15 9))"
        " (repeat (rect 10 9 11 10) 2 0 3))"
    )
    canvas = Canvas(16, 16)
    assert well_formed(key, canvas)
    scene = evaluate(key, canvas)
    assert scene == ref_eval(key, canvas)
    # Hollow ring around (4, 8), shaft to the right edge, teeth at the bottom.
    assert scene.get(1, 8) and not scene.get(4, 8)
    assert scene.get(15, 8)
    assert scene.get(10, 10) and scene.get(15, 10) and not scene.get(9, 10)
