"""Experiment harness: benchmark suite runs, ablations, and reports.

Suite reports are emitted as canonical JSON (stable key order) so reruns with
the same seed are byte-identical apart from timing: every volatile field
lives under a key ending in ``_seconds`` or inside a ``phase_seconds``
mapping, which is what :func:`strip_timing` removes.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .baseline import fta_basic
from .benchgen import BenchmarkCase
from .config import AblationMode, SynthConfig, derive_seed
from .dsl import serialize
from .search import SynthResult, metric_synth
from .semantics import evaluate

DETERMINISTIC_ALGORITHMS = {"fta-basic"}


def apply_ablation(mode: AblationMode, cfg: SynthConfig) -> SynthConfig:
    """Config with one guidance component disabled (no-op for NONE)."""
    if mode is AblationMode.NONE:
        return cfg
    return cfg.with_(ablation=mode)


def algorithm_config(algorithm: str, cfg: SynthConfig) -> SynthConfig:
    if algorithm.startswith("ablation:"):
        return apply_ablation(AblationMode.from_name(algorithm.split(":", 1)[1]), cfg)
    if algorithm in ("symetric", "fta-basic"):
        return cfg
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_one(case: BenchmarkCase, algorithm: str, cfg: SynthConfig) -> SynthResult:
    cfg = algorithm_config(algorithm, cfg).with_(canvas=case.canvas)
    if algorithm == "fta-basic":
        return fta_basic(case.goal, cfg)
    return metric_synth(case.goal, cfg)


@dataclass
class RunRecord:
    case: str
    kind: str
    algorithm: str
    repeat_index: int
    seed: int
    outcome: str  # success | timeout | memory | exhausted
    program: str | None
    states: int
    transitions: int
    extraction_count: int
    repair_calls: int
    repair_steps: int
    peak_memory_bytes: int
    phase_seconds: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "case": self.case,
            "kind": self.kind,
            "algorithm": self.algorithm,
            "repeat_index": self.repeat_index,
            "seed": self.seed,
            "outcome": self.outcome,
            "program": self.program,
            "states": self.states,
            "transitions": self.transitions,
            "extraction_count": self.extraction_count,
            "repair_calls": self.repair_calls,
            "repair_steps": self.repair_steps,
            "peak_memory_bytes": self.peak_memory_bytes,
            "phase_seconds": dict(sorted(self.phase_seconds.items())),
        }


def record_from_result(case: BenchmarkCase, algorithm: str, repeat_index: int, seed: int, result: SynthResult) -> RunRecord:
    program_text = None
    if result.solved:
        # Soundness gate: a reported solution must re-render the goal exactly.
        rendered = evaluate(result.program, case.canvas)
        if rendered != case.goal:
            raise AssertionError(f"unsound solution for case {case.name!r}")
        program_text = serialize(result.program)
    return RunRecord(
        case=case.name,
        kind=case.kind,
        algorithm=algorithm,
        repeat_index=repeat_index,
        seed=seed,
        outcome="success" if result.solved else result.outcome,
        program=program_text,
        states=result.stats.states,
        transitions=result.stats.transitions,
        extraction_count=result.stats.extraction_count,
        repair_calls=result.stats.repair_calls,
        repair_steps=result.stats.repair_steps,
        peak_memory_bytes=result.stats.peak_memory_bytes,
        phase_seconds=dict(result.stats.phase_seconds),
    )


def expected_runtime_seconds(runs: list[RunRecord]) -> float | None:
    """E[runs until success] x E[time per run]; None when nothing succeeded."""
    successes = sum(1 for r in runs if r.outcome == "success")
    if not successes:
        return None
    mean_time = statistics.fmean(r.phase_seconds.get("total", 0.0) for r in runs)
    return (len(runs) / successes) * mean_time


def run_benchmark_suite(
    corpus: list[BenchmarkCase],
    algorithm: str,
    cfg: SynthConfig,
    repeats: int = 1,
    progress=None,
) -> dict:
    """Run every case `repeats` times with derived seeds and build the report
    document. Per-case failures are recorded and the suite continues."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    effective_repeats = 1 if algorithm in DETERMINISTIC_ALGORITHMS else repeats
    case_docs = []
    all_records: list[RunRecord] = []
    for case in sorted(corpus, key=lambda c: c.name):
        runs = []
        for r in range(effective_repeats):
            seed = derive_seed(cfg.seed, "suite", case.name, r)
            result = run_one(case, algorithm, cfg.with_(seed=seed))
            record = record_from_result(case, algorithm, r, seed, result)
            runs.append(record)
            all_records.append(record)
            if progress is not None:
                progress(record)
        successes = sum(1 for rec in runs if rec.outcome == "success")
        success_times = sorted(
            rec.phase_seconds.get("total", 0.0) for rec in runs if rec.outcome == "success"
        )
        case_docs.append(
            {
                "name": case.name,
                "kind": case.kind,
                "runs": [rec.to_doc() for rec in runs],
                "successes": successes,
                "success_rate": successes / len(runs),
                "solved": successes > 0,
                "median_success_seconds": statistics.median(success_times) if success_times else None,
                "expected_runtime_seconds": expected_runtime_seconds(runs),
            }
        )
    doc = {
        "schema": "symetric-bench-report/1",
        "algorithm": algorithm,
        "repeats": effective_repeats,
        "config": config_doc(cfg),
        "cases": case_docs,
        "summary": summarize(case_docs, all_records),
    }
    return doc


def config_doc(cfg: SynthConfig) -> dict:
    return {
        "canvas": [cfg.canvas.width, cfg.canvas.height],
        "epsilon": cfg.epsilon,
        "beam_width": cfg.beam_width,
        "c_max": cfg.c_max,
        "repair_steps": cfg.repair_steps,
        "finals": cfg.finals,
        "tabu_capacity": cfg.tabu_capacity,
        "extract_samples": cfg.extract_samples,
        "repair_attempts": cfg.repair_attempts,
        "transition_sample_rate": cfg.transition_sample_rate,
        "rewrite_sample_rate": cfg.rewrite_sample_rate,
        "seed": cfg.seed,
        "count_max": cfg.count_max,
        "time_budget_seconds": cfg.time_budget,
        "memory_budget_bytes": cfg.memory_budget,
        "ablation": cfg.ablation.value,
    }


_PHASES = ("construct", "expansion", "clustering", "ranking", "extract", "repair")


def _phase_stats(records: list[RunRecord]) -> dict:
    out = {}
    for phase in _PHASES:
        values = [r.phase_seconds.get(phase, 0.0) for r in records]
        out[phase] = {
            "median_seconds": statistics.median(values) if values else 0.0,
            "max_seconds": max(values) if values else 0.0,
        }
    return out


def summarize(case_docs: list[dict], records: list[RunRecord]) -> dict:
    outcomes = [r.outcome for r in records]
    success_times = sorted(
        r.phase_seconds.get("total", 0.0) for r in records if r.outcome == "success"
    )
    solved_cases = sum(1 for c in case_docs if c["solved"])
    by_kind = {}
    for kind in sorted({r.kind for r in records}):
        kind_records = [r for r in records if r.kind == kind]
        kind_cases = [c for c in case_docs if c["kind"] == kind]
        times = sorted(
            r.phase_seconds.get("total", 0.0) for r in kind_records if r.outcome == "success"
        )
        by_kind[kind] = {
            "cases": len(kind_cases),
            "solved_cases": sum(1 for c in kind_cases if c["solved"]),
            "success_runs": sum(1 for r in kind_records if r.outcome == "success"),
            "memory_runs": sum(1 for r in kind_records if r.outcome == "memory"),
            "timeout_runs": sum(1 for r in kind_records if r.outcome == "timeout"),
            "exhausted_runs": sum(1 for r in kind_records if r.outcome == "exhausted"),
            "median_success_seconds": statistics.median(times) if times else None,
            "phases": _phase_stats(kind_records),
        }
    return {
        "cases": len(case_docs),
        "solved_cases": solved_cases,
        "success_pct": 100.0 * solved_cases / len(case_docs) if case_docs else 0.0,
        "runs": len(records),
        "success_runs": outcomes.count("success"),
        "memory_runs": outcomes.count("memory"),
        "timeout_runs": outcomes.count("timeout"),
        "exhausted_runs": outcomes.count("exhausted"),
        "median_success_seconds": statistics.median(success_times) if success_times else None,
        "by_kind": by_kind,
        "phases": _phase_stats(records),
    }


def report_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def strip_timing(doc):
    """Copy of a report with all timing fields removed (for determinism
    comparisons)."""
    if isinstance(doc, dict):
        return {
            k: strip_timing(v)
            for k, v in doc.items()
            if not (k.endswith("_seconds") or k == "phase_seconds" or k == "phases")
        }
    if isinstance(doc, list):
        return [strip_timing(v) for v in doc]
    return doc


def validate_report(doc: dict) -> None:
    """Check a report document against the shipped JSON schema."""
    import jsonschema

    schema = json.loads(resources.files("symetric").joinpath("report.schema.json").read_text())
    jsonschema.validate(doc, schema)


def summary_table(doc: dict) -> str:
    """Aligned text table: per benchmark kind, median runtime and outcome
    percentages."""
    rows = [("Benchmark", "Median (s)", "Success", "Memory", "Timeout")]
    summary = doc["summary"]

    def fmt_kind(label: str, stats: dict, cases: int, runs: int) -> tuple:
        med = stats.get("median_success_seconds")
        return (
            label,
            f"{med:.1f}" if med is not None else "--",
            f"{100.0 * stats['solved_cases'] / cases:.0f}%" if cases else "--",
            f"{100.0 * stats['memory_runs'] / runs:.0f}%" if runs else "--",
            f"{100.0 * stats['timeout_runs'] / runs:.0f}%" if runs else "--",
        )

    for kind, stats in summary["by_kind"].items():
        kind_runs = stats["success_runs"] + stats["memory_runs"] + stats["timeout_runs"] + stats["exhausted_runs"]
        rows.append(fmt_kind(kind.capitalize(), stats, stats["cases"], kind_runs))
    rows.append(
        fmt_kind(
            "All",
            {
                "median_success_seconds": summary["median_success_seconds"],
                "solved_cases": summary["solved_cases"],
                "memory_runs": summary["memory_runs"],
                "timeout_runs": summary["timeout_runs"],
            },
            summary["cases"],
            summary["runs"],
        )
    )
    return _align(rows, title=f"Algorithm: {doc['algorithm']}")


def phase_table(doc: dict) -> str:
    """Aligned text table of per-phase median/max seconds by benchmark kind."""
    header = ["Benchmark"]
    for phase in _PHASES:
        header += [f"{phase} med", f"{phase} max"]
    rows = [tuple(header)]
    summary = doc["summary"]

    def phase_row(label, phases):
        row = [label]
        for phase in _PHASES:
            row.append(f"{phases[phase]['median_seconds']:.2f}")
            row.append(f"{phases[phase]['max_seconds']:.2f}")
        return tuple(row)

    for kind, stats in summary["by_kind"].items():
        rows.append(phase_row(kind.capitalize(), stats["phases"]))
    rows.append(phase_row("All", summary["phases"]))
    return _align(rows, title="Phase runtimes (seconds)")


def _align(rows: list[tuple], title: str | None = None) -> str:
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))]
    lines = []
    if title:
        lines.append(title)
    for i, row in enumerate(rows):
        lines.append("  ".join(str(cell).ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[j] for j in range(len(widths))))
    return "\n".join(lines) + "\n"


def write_report(doc: dict, path) -> None:
    Path(path).write_text(report_json(doc), encoding="utf-8")


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
