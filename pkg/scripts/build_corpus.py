#!/usr/bin/env python3
"""Rebuild the desk-scale benchmark corpus checked into corpus/.

The handwritten set is authored here; the generated set comes from the
seeded sampler. Both are deterministic, so re-running this script must
reproduce the checked-in files byte for byte.
"""

from pathlib import Path

from symetric.benchgen import BenchmarkCase, generate_corpus, save_corpus
from symetric.dsl import node_count, parse, serialize, subterms, Repeat
from symetric.scene import Canvas
from symetric.semantics import Evaluator, canonical, canonicalize, well_formed

CANVAS = Canvas(16, 16)
GENERATED_SEED = 20240817
GENERATED_COUNT = 10

HANDWRITTEN = {
    "key": "(union (union (diff (circle 4 8 4) (circle 4 8 3)) (rect 7 7 15 9))"
    " (repeat (rect 10 9 11 10) 2 0 3))",
    "fence": "(union (rect 0 6 15 7) (repeat (rect 1 3 2 10) 3 0 5))",
    "ladder": "(union (union (rect 2 0 3 15) (rect 12 0 13 15)) (repeat (rect 4 2 11 3) 0 4 4))",
    "bricks": "(repeat (repeat (rect 1 1 3 2) 4 0 3) 0 3 4)",
    "dotted-diagonal": "(repeat (circle 2 2 2) 3 3 4)",
    "ring-ticks": "(union (diff (circle 8 8 6) (circle 8 8 4)) (repeat (rect 7 0 8 1) 0 14 2))",
    "stairs": "(repeat (rect 0 0 3 1) 2 2 6)",
    "window": "(diff (rect 1 1 14 14) (repeat (repeat (rect 3 3 6 6) 6 0 2) 0 6 2))",
    "caterpillar": "(union (circle 12 5 2) (repeat (circle 3 8 2) 3 0 4))",
    "crosswalk": "(repeat (rect 2 1 13 2) 0 3 5)",
    "diamond-chain": "(repeat (diff (rect 4 4 7 7) (rect 5 5 6 6)) 4 4 3)",
    "comb": "(union (rect 1 2 14 4) (repeat (rect 2 4 3 12) 4 0 4))",
}


def handwritten_cases() -> list[BenchmarkCase]:
    evaluator = Evaluator(CANVAS)
    cases = []
    for name, text in HANDWRITTEN.items():
        program = canonicalize(parse(text))
        assert well_formed(program, CANVAS), name
        assert canonical(program), name
        assert node_count(program) <= 20, name
        assert any(isinstance(s, Repeat) for s in subterms(program)), name
        goal = evaluator.eval(program)
        assert goal.popcount() > 0, name
        cases.append(BenchmarkCase(name, goal, program, "handwritten", CANVAS))
    return cases


def main() -> None:
    root = Path(__file__).resolve().parent.parent / "corpus"
    hand = handwritten_cases()
    save_corpus(hand, root / "handwritten")
    print(f"handwritten: {len(hand)} cases")
    for case in hand:
        print(f"  {case.name}: {node_count(case.ground_truth)} nodes, {case.goal.popcount()} px")
    generated = generate_corpus(
        seed=GENERATED_SEED,
        count=GENERATED_COUNT,
        canvas=CANVAS,
        size_range=(8, 16),
        depth_range=(3, 8),
    )
    save_corpus(generated, root / "generated")
    print(f"generated: {len(generated)} cases (seed {GENERATED_SEED})")
    for case in generated:
        print(f"  {case.name}: {node_count(case.ground_truth)} nodes, {case.goal.popcount()} px")


if __name__ == "__main__":
    main()
