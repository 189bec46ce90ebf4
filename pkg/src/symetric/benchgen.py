"""Benchmark corpus tooling: random natural program generation and corpus
directory I/O.

Generated cases are rejection-sampled until they are well-formed, canonical,
sized and nested within the requested ranges, and *natural*: no subprogram
renders the empty scene, and no operator node renders exactly one of its
children. Corpus directories hold one ``<name>.scene`` per case, an optional
``<name>.csg`` ground-truth program, and a ``manifest.json``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .dsl import (
    Circle,
    Diff,
    Expr,
    Rect,
    Repeat,
    Union,
    depth,
    node_count,
    parse,
    serialize,
)
from .scene import Canvas, Scene, parse_scene
from .semantics import Evaluator, ParamSpace, canonical, canonicalize, well_formed

# AST depth convention used throughout: a primitive has depth 1.
DEPTH_CONVENTION = "primitive depth = 1; operators add 1"


@dataclass
class BenchmarkCase:
    name: str
    goal: Scene
    ground_truth: Expr | None
    kind: str  # "generated" | "handwritten"
    canvas: Canvas


class GenerationError(RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


def _random_primitive(rng: random.Random, space: ParamSpace) -> Expr:
    canvas = space.canvas
    if rng.random() < 0.45 and space.radius_max >= 1:
        r = rng.randint(1, space.radius_max)
        if r <= canvas.width - 1 - r and r <= canvas.height - 1 - r:
            return Circle(rng.randint(r, canvas.width - 1 - r), rng.randint(r, canvas.height - 1 - r), r)
    x1, x2 = sorted(rng.sample(range(canvas.width), 2))
    y1, y2 = sorted(rng.sample(range(canvas.height), 2))
    return Rect(x1, y1, x2, y2)


def _random_program(rng: random.Random, space: ParamSpace, size: int) -> Expr:
    if size <= 1:
        return _random_primitive(rng, space)
    ops = ["repeat"] if size < 3 else ["union", "union", "diff", "repeat"]
    op = rng.choice(ops)
    if op == "repeat":
        dx = rng.randint(-space.dx_max, space.dx_max)
        dy = rng.randint(-space.dy_max, space.dy_max)
        while dx == 0 and dy == 0:
            dx = rng.randint(-space.dx_max, space.dx_max)
            dy = rng.randint(-space.dy_max, space.dy_max)
        return Repeat(_random_program(rng, space, size - 1), dx, dy, rng.randint(2, space.count_max))
    split = rng.randint(1, size - 2)
    left = _random_program(rng, space, split)
    right = _random_program(rng, space, size - 1 - split)
    return Union(left, right) if op == "union" else Diff(left, right)


def is_natural(e: Expr, canvas: Canvas, evaluator: Evaluator | None = None) -> bool:
    """Naturalness: every subterm renders nonempty and no operator node
    renders exactly one of its children."""
    ev = evaluator or Evaluator(canvas)

    def check(node: Expr) -> bool:
        bits = ev.eval_bits(node)
        if bits == 0:
            return False
        for child in node.children():
            if not check(child):
                return False
            if ev.eval_bits(child) == bits:
                return False
        return True

    return check(e)


def generate_benchmark(
    rng: random.Random,
    canvas: Canvas,
    size_range: tuple[int, int],
    depth_range: tuple[int, int],
    name: str = "generated",
    count_max: int = 8,
    attempt_budget: int = 20000,
) -> BenchmarkCase:
    """Rejection-sample one natural benchmark program."""
    space = ParamSpace(canvas, count_max)
    lo, hi = size_range
    dlo, dhi = depth_range
    if lo > hi or dlo > dhi or lo < 1:
        raise ValueError("empty size or depth range")
    evaluator = Evaluator(canvas)
    for _ in range(attempt_budget):
        e = canonicalize(_random_program(rng, space, rng.randint(lo, hi)))
        if not (dlo <= depth(e) <= dhi):
            continue
        if not (lo <= node_count(e) <= hi):
            continue
        if not well_formed(e, canvas) or not canonical(e):
            continue
        if not space.contains(e):
            continue
        if not is_natural(e, canvas, evaluator):
            continue
        return BenchmarkCase(
            name=name,
            goal=evaluator.eval(e),
            ground_truth=e,
            kind="generated",
            canvas=canvas,
        )
    raise GenerationError(
        f"no natural program with size in {size_range} and depth in {depth_range} "
        f"after {attempt_budget} attempts"
    )


def generate_corpus(
    seed: int,
    count: int,
    canvas: Canvas,
    size_range: tuple[int, int] = (8, 16),
    depth_range: tuple[int, int] = (2, 8),
    name_prefix: str = "gen",
) -> list[BenchmarkCase]:
    """A reproducible corpus: case i is generated from (seed, i) alone."""
    from .config import derive_rng

    cases = []
    for i in range(count):
        rng = derive_rng(seed, "benchgen", i)
        cases.append(
            generate_benchmark(rng, canvas, size_range, depth_range, name=f"{name_prefix}-{i:03d}")
        )
    return cases


def save_corpus(cases: list[BenchmarkCase], directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"depth_convention": DEPTH_CONVENTION, "cases": []}
    for case in cases:
        scene_file = f"{case.name}.scene"
        (directory / scene_file).write_text(case.goal.to_text(), encoding="utf-8")
        entry = {
            "name": case.name,
            "kind": case.kind,
            "canvas": [case.canvas.width, case.canvas.height],
            "scene": scene_file,
        }
        if case.ground_truth is not None:
            program_file = f"{case.name}.csg"
            (directory / program_file).write_text(serialize(case.ground_truth) + "\n", encoding="utf-8")
            entry["program"] = program_file
        manifest["cases"].append(entry)
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_corpus(directory, errors: list[str] | None = None) -> list[BenchmarkCase]:
    """Load a corpus directory; per-case problems are reported into `errors`
    (or stderr) and loading continues with the remaining cases."""
    directory = Path(directory)
    problems = errors if errors is not None else []
    cases: list[BenchmarkCase] = []
    manifest_path = directory / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        entries = manifest.get("cases", [])
    else:
        entries = [
            {"name": p.stem, "kind": "handwritten", "scene": p.name}
            for p in sorted(directory.glob("*.scene"))
        ]
        for entry in entries:
            if (directory / f"{entry['name']}.csg").exists():
                entry["program"] = f"{entry['name']}.csg"
    for entry in entries:
        name = entry.get("name", "?")
        try:
            goal = parse_scene((directory / entry["scene"]).read_text(encoding="utf-8"))
            canvas = goal.canvas
            if "canvas" in entry and tuple(entry["canvas"]) != (canvas.width, canvas.height):
                raise ValueError(
                    f"manifest canvas {entry['canvas']} does not match scene {canvas}"
                )
            ground_truth = None
            if entry.get("program"):
                ground_truth = parse((directory / entry["program"]).read_text(encoding="utf-8"))
                rendered = Evaluator(canvas).eval(ground_truth)
                if rendered != goal:
                    raise ValueError(f"program render does not match scene for {name!r}")
            cases.append(
                BenchmarkCase(
                    name=name,
                    goal=goal,
                    ground_truth=ground_truth,
                    kind=entry.get("kind", "handwritten"),
                    canvas=canvas,
                )
            )
        except (OSError, ValueError, KeyError) as exc:
            problems.append(f"{name}: {exc}")
    if errors is None and problems:
        import sys

        for p in problems:
            print(f"corpus warning: {p}", file=sys.stderr)
    return cases
