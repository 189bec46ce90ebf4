"""Inverse constructive solid geometry by metric-guided program synthesis.

Given a black-and-white raster scene, synthesize a CSG program (circles,
rectangles, union, difference, repeat) that renders exactly that scene.
"""

from .baseline import block_study_alphabet, count_search_space, fta_basic, study_alphabet
from .benchgen import BenchmarkCase, generate_benchmark, generate_corpus, load_corpus, save_corpus
from .config import AblationMode, ResourceBudgetError, SynthConfig, derive_rng, derive_seed
from .dsl import (
    Circle,
    Diff,
    Expr,
    ParseError,
    Rect,
    Repeat,
    Union,
    depth,
    node_count,
    parse,
    serialize,
)
from .harness import apply_ablation, run_benchmark_suite
from .metric import DiffSet, MaskMetric, diff_apply, diff_set, goal_distance, goal_rank, jaccard
from .mindex import LinearScanIndex, MTreeIndex, PopcountBandIndex
from .scene import Canvas, Scene, load_scene, parse_scene, save_scene
from .search import (
    RewriteRule,
    SynthResult,
    default_rules,
    extract_term,
    metric_synth,
    repair,
    rewrite_neighbors,
)
from .semantics import Evaluator, ParamSpace, canonical, canonicalize, evaluate, well_formed
from .xfta import Alphabet, Transition, Xfta, audit_invariants, cluster_frontier, construct_xfta, top_k

__version__ = "0.1.0"

__all__ = [
    "AblationMode",
    "Alphabet",
    "BenchmarkCase",
    "Canvas",
    "Circle",
    "Diff",
    "DiffSet",
    "Evaluator",
    "Expr",
    "LinearScanIndex",
    "MTreeIndex",
    "MaskMetric",
    "ParamSpace",
    "ParseError",
    "PopcountBandIndex",
    "Rect",
    "Repeat",
    "ResourceBudgetError",
    "RewriteRule",
    "Scene",
    "SynthConfig",
    "SynthResult",
    "Transition",
    "Union",
    "Xfta",
    "apply_ablation",
    "audit_invariants",
    "canonical",
    "canonicalize",
    "cluster_frontier",
    "construct_xfta",
    "count_search_space",
    "default_rules",
    "depth",
    "derive_rng",
    "derive_seed",
    "diff_apply",
    "diff_set",
    "evaluate",
    "extract_term",
    "fta_basic",
    "generate_benchmark",
    "generate_corpus",
    "goal_distance",
    "goal_rank",
    "jaccard",
    "load_corpus",
    "load_scene",
    "metric_synth",
    "node_count",
    "parse",
    "parse_scene",
    "repair",
    "rewrite_neighbors",
    "run_benchmark_suite",
    "save_corpus",
    "save_scene",
    "serialize",
    "study_alphabet",
    "top_k",
    "well_formed",
]
