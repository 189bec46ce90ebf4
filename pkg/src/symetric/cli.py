"""Command-line interface.

Subcommands: synth, eval, render, gen-bench, bench, cluster-study, ablate.
Exit codes: 0 on success, 1 when synthesis fails, 2 on usage errors.
The SYMETRIC_SEED environment variable overrides the default seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .baseline import block_study_alphabet, count_search_space, study_alphabet
from .benchgen import generate_corpus, load_corpus, save_corpus
from .config import AblationMode, SynthConfig
from .dsl import ParseError, parse, serialize
from .harness import (
    phase_table,
    report_json,
    run_benchmark_suite,
    summary_table,
    validate_report,
    write_report,
)
from .scene import Canvas, SceneFormatError, load_scene, parse_scene, save_scene
from .search import metric_synth
from .semantics import evaluate

USAGE_EXIT = 2


class UsageError(Exception):
    pass


def _parse_canvas(text: str) -> Canvas:
    try:
        w, _, h = text.lower().partition("x")
        return Canvas(int(w), int(h))
    except ValueError as exc:
        raise UsageError(f"bad canvas {text!r}; expected WIDTHxHEIGHT like 16x16") from exc


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, _, hi = text.partition("-")
        lo_i, hi_i = int(lo), int(hi if hi else lo)
        if lo_i > hi_i:
            raise ValueError
        return lo_i, hi_i
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}; expected LO-HI like 8-16") from exc


def _program_argument(text: str):
    """A program given inline as s-expression text or as a file path."""
    if text.lstrip().startswith("("):
        return parse(text)
    path = Path(text)
    if not path.exists():
        raise UsageError(f"program file not found: {text}")
    return parse(path.read_text(encoding="utf-8"))


def _default_seed() -> int:
    env = os.environ.get("SYMETRIC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"SYMETRIC_SEED must be an integer, got {env!r}") from exc
    return 0


def _synth_config(args, canvas: Canvas) -> SynthConfig:
    seed = args.seed if args.seed is not None else _default_seed()
    return SynthConfig(
        canvas=canvas,
        epsilon=args.epsilon,
        beam_width=args.beam_width,
        c_max=args.max_cost,
        repair_steps=args.repair_steps,
        seed=seed,
        time_budget=args.timeout,
        memory_budget=int(args.memory_limit * 1024**2),
    )


def _add_synth_flags(p: argparse.ArgumentParser, timeout: float) -> None:
    p.add_argument("--epsilon", type=float, default=0.2, help="clustering radius")
    p.add_argument("--beam-width", type=int, default=200, help="states kept per cost class")
    p.add_argument("--max-cost", type=int, default=8, help="largest program size enumerated")
    p.add_argument("--repair-steps", type=int, default=500, help="rewrite steps per repair attempt")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: SYMETRIC_SEED or 0)")
    p.add_argument("--timeout", type=float, default=timeout, help="time budget in seconds")
    p.add_argument("--memory-limit", type=float, default=2048, help="memory budget in MiB")


def cmd_synth(args) -> int:
    goal = load_scene(args.scene)
    cfg = _synth_config(args, goal.canvas)
    result = metric_synth(goal, cfg)
    if not result.solved:
        print(f"synthesis failed: {result.outcome}", file=sys.stderr)
        return 1
    text = serialize(result.program)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    t = result.stats.phase_seconds
    print(
        f"solved in {t.get('total', 0.0):.2f}s "
        f"(construct {t.get('construct', 0.0):.2f}s, extract {t.get('extract', 0.0):.2f}s, "
        f"repair {t.get('repair', 0.0):.2f}s; {result.stats.states} states)",
        file=sys.stderr,
    )
    return 0


def cmd_eval(args) -> int:
    program = _program_argument(args.program)
    canvas = _parse_canvas(args.canvas)
    scene = evaluate(program, canvas)
    if args.out:
        save_scene(scene, args.out)
    else:
        sys.stdout.write(scene.to_text())
    return 0


def cmd_render(args) -> int:
    program = _program_argument(args.program)
    canvas = _parse_canvas(args.canvas)
    print(evaluate(program, canvas).to_ascii())
    return 0


def cmd_gen_bench(args) -> int:
    canvas = _parse_canvas(args.canvas)
    seed = args.seed if args.seed is not None else _default_seed()
    cases = generate_corpus(
        seed=seed,
        count=args.count,
        canvas=canvas,
        size_range=_parse_range(args.size),
        depth_range=_parse_range(args.depth),
    )
    save_corpus(cases, args.out_dir)
    print(f"wrote {len(cases)} cases to {args.out_dir}")
    return 0


def _resolve_corpus(spec: str):
    path = Path(spec)
    if not path.is_dir():
        raise UsageError(f"corpus directory not found: {spec}")
    errors: list[str] = []
    cases = load_corpus(path, errors)
    for err in errors:
        print(f"corpus warning: {err}", file=sys.stderr)
    if not cases:
        raise UsageError(f"no loadable cases in {spec}")
    return cases


def _bench_like(args, algorithm: str) -> int:
    cases = _resolve_corpus(args.corpus)
    cfg = _synth_config(args, cases[0].canvas)

    def progress(record):
        print(
            f"[{algorithm}] {record.case} run {record.repeat_index}: {record.outcome} "
            f"({record.phase_seconds.get('total', 0.0):.1f}s)",
            file=sys.stderr,
        )

    doc = run_benchmark_suite(cases, algorithm, cfg, repeats=args.repeats, progress=progress)
    validate_report(doc)
    if args.report:
        write_report(doc, args.report)
        print(f"report written to {args.report}", file=sys.stderr)
    else:
        sys.stdout.write(report_json(doc))
    print(summary_table(doc), file=sys.stderr)
    print(phase_table(doc), file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    return _bench_like(args, args.algo)


def cmd_ablate(args) -> int:
    AblationMode.from_name(args.mode)
    return _bench_like(args, f"ablation:{args.mode}")


def cmd_cluster_study(args) -> int:
    canvas = _parse_canvas(args.canvas)
    try:
        epsilons = tuple(float(e) for e in args.epsilons.split(","))
    except ValueError as exc:
        raise UsageError(f"bad epsilon list {args.epsilons!r}") from exc
    if args.grid == "block":
        alphabet = block_study_alphabet(canvas, block=args.block)
        grid_note = f"grid=block block={args.block}"
    else:
        radii = None
        if args.radii:
            try:
                radii = tuple(int(r) for r in args.radii.split(","))
            except ValueError as exc:
                raise UsageError(f"bad radii list {args.radii!r}") from exc
        alphabet = study_alphabet(
            canvas,
            coord_stride=args.coord_stride,
            radii=radii,
            vector_stride=args.vector_stride,
            count_max=args.count_max,
        )
        grid_note = (
            f"grid=stride coord_stride={args.coord_stride} radii={radii or 'all'} "
            f"vector_stride={args.vector_stride} count_max={args.count_max}"
        )
    study = count_search_space(
        canvas, args.n_max, epsilons, alphabet=alphabet, time_budget=args.timeout
    )
    header = (
        f"# canvas={canvas} {grid_note} "
        f"primitives={study.primitive_count} repeat_symbols={study.repeat_symbol_count}\n"
        "# sizes count AST nodes (primitive = 1); counts are cumulative over sizes <= n\n"
    )
    text = header + study.csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"study written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symetric",
        description="Synthesize CSG programs that render a target raster scene.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a program for a scene file")
    p.add_argument("scene", help="path to a scene file")
    _add_synth_flags(p, timeout=600.0)
    p.add_argument("--out", help="write the program here instead of stdout")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("eval", help="evaluate a program to a scene")
    p.add_argument("program", help="program text '(...)' or file path")
    p.add_argument("--canvas", default="32x32", help="canvas WIDTHxHEIGHT")
    p.add_argument("--out", help="write the scene here instead of stdout")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("render", help="print a program's render as ASCII art")
    p.add_argument("program", help="program text '(...)' or file path")
    p.add_argument("--canvas", default="32x32", help="canvas WIDTHxHEIGHT")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("gen-bench", help="generate a random benchmark corpus")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--size", default="8-16", help="node-count range LO-HI")
    p.add_argument("--depth", default="2-8", help="AST depth range LO-HI")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--canvas", default="16x16")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_gen_bench)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--algo", default="symetric", help="symetric | fta-basic | ablation:<Mode>")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--report", help="write the JSON report here")
    _add_synth_flags(p, timeout=600.0)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("ablate", help="run the suite with one component ablated")
    p.add_argument("--mode", required=True, help="NoCluster | NoRank | ExtractRandom | RepairRandom")
    p.add_argument("--corpus", required=True)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--report", help="write the JSON report here")
    _add_synth_flags(p, timeout=600.0)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("cluster-study", help="measure program-space growth and clustering")
    p.add_argument("--n-max", type=int, default=9)
    p.add_argument("--epsilons", default="0.1,0.2")
    p.add_argument("--canvas", default="16x16")
    p.add_argument("--grid", choices=["block", "stride"], default="block",
                   help="study sub-DSL: block-aligned (enumerable to n ~ 10) or strided")
    p.add_argument("--block", type=int, default=4, help="block size for --grid block")
    p.add_argument("--coord-stride", type=int, default=3)
    p.add_argument("--radii", default=None, help="comma-separated circle radii (default: all)")
    p.add_argument("--vector-stride", type=int, default=4)
    p.add_argument("--count-max", type=int, default=3)
    p.add_argument("--timeout", type=float, default=1800.0)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(fn=cmd_cluster_study)

    return parser


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (ParseError, SceneFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
