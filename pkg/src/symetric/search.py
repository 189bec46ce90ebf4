"""The synthesis loop: greedy extraction from the automaton, distance-guided
tabu repair, and the top-level driver.

The driver builds the automaton, then repeatedly extracts a candidate program
(per final state, best-ranked first, with randomized transition sampling) and
tries to repair it into an exact match by local rewriting. Only bitwise-exact
solutions are returned, so any solved outcome is sound by construction.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .config import AblationMode, ResourceBudgetError, SynthConfig, derive_rng
from .dsl import Circle, Diff, Expr, Rect, Repeat, Union, serialize
from .metric import jaccard_masks
from .scene import Scene
from .semantics import Evaluator, ParamSpace, apply_operator, term_of, well_formed
from .xfta import Alphabet, Xfta, construct_xfta


@dataclass(frozen=True)
class RewriteRule:
    """A single-node rewrite: `producer` maps a matched node to replacement
    nodes, each already inside the quantized parameter space."""

    name: str
    matcher: Callable[[Expr], bool]
    producer: Callable[[Expr], list[Expr]]


def _int_nudges(space: ParamSpace, delta: int) -> Callable[[Expr], list[Expr]]:
    w, h = space.canvas.width, space.canvas.height

    def bounds(node: Expr) -> list[tuple[str, int, int]]:
        if isinstance(node, Circle):
            return [("x", 0, w - 1), ("y", 0, h - 1), ("r", 1, space.radius_max)]
        if isinstance(node, Rect):
            return [("x1", 0, w - 1), ("y1", 0, h - 1), ("x2", 0, w - 1), ("y2", 0, h - 1)]
        if isinstance(node, Repeat):
            return [
                ("dx", -space.dx_max, space.dx_max),
                ("dy", -space.dy_max, space.dy_max),
                ("count", 2, space.count_max),
            ]
        return []

    def produce(node: Expr) -> list[Expr]:
        out = []
        for name, lo, hi in bounds(node):
            value = getattr(node, name) + delta
            if lo <= value <= hi:
                if isinstance(node, Repeat):
                    out.append(Repeat(node.body, **{**{"dx": node.dx, "dy": node.dy, "count": node.count}, name: value}))
                elif isinstance(node, Circle):
                    out.append(Circle(**{**{"x": node.x, "y": node.y, "r": node.r}, name: value}))
                else:
                    out.append(
                        Rect(**{**{"x1": node.x1, "y1": node.y1, "x2": node.x2, "y2": node.y2}, name: value})
                    )
        return out

    return produce


def default_rules(space: ParamSpace) -> list[RewriteRule]:
    """The four rewrite families: integer increment and decrement (guarded by
    each parameter's own domain bounds), circle-to-square, and square-to-circle
    (side must be even and equal in both axes)."""
    w, h = space.canvas.width, space.canvas.height

    def circle_to_rect(node: Circle) -> list[Expr]:
        x1, y1, x2, y2 = node.x - node.r, node.y - node.r, node.x + node.r, node.y + node.r
        if 0 <= x1 and x2 <= w - 1 and 0 <= y1 and y2 <= h - 1:
            return [Rect(x1, y1, x2, y2)]
        return []

    def rect_to_circle(node: Rect) -> list[Expr]:
        side = node.x2 - node.x1
        if side != node.y2 - node.y1 or side % 2 or side < 2:
            return []
        r = side // 2
        if r > space.radius_max:
            return []
        return [Circle(node.x1 + r, node.y1 + r, r)]

    has_ints = lambda n: isinstance(n, (Circle, Rect, Repeat))  # noqa: E731
    return [
        RewriteRule("int-inc", has_ints, _int_nudges(space, +1)),
        RewriteRule("int-dec", has_ints, _int_nudges(space, -1)),
        RewriteRule("circle-to-rect", lambda n: isinstance(n, Circle), circle_to_rect),
        RewriteRule("rect-to-circle", lambda n: isinstance(n, Rect), rect_to_circle),
    ]


def rewrite_neighbors(e: Expr, rules: list[RewriteRule]) -> list[Expr]:
    """All programs reachable by one rule application at one node."""
    out: list[Expr] = []

    def visit(node: Expr, rebuild: Callable[[Expr], Expr]) -> None:
        for rule in rules:
            if rule.matcher(node):
                for replacement in rule.producer(node):
                    if replacement != node:
                        out.append(rebuild(replacement))
        if isinstance(node, (Union, Diff)):
            ctor = type(node)
            visit(node.left, lambda n, node=node, ctor=ctor: rebuild(ctor(n, node.right)))
            visit(node.right, lambda n, node=node, ctor=ctor: rebuild(ctor(node.left, n)))
        elif isinstance(node, Repeat):
            visit(node.body, lambda n, node=node: rebuild(Repeat(n, node.dx, node.dy, node.count)))

    visit(e, lambda n: n)
    return out


@dataclass
class RepairOutcome:
    program: Optional[Expr]
    steps: int
    neighbors_evaluated: int = 0

    @property
    def success(self) -> bool:
        return self.program is not None


def repair(
    candidate: Expr,
    goal: Scene,
    rules: list[RewriteRule],
    cfg: SynthConfig,
    rng,
    evaluator: Evaluator | None = None,
    deadline: float | None = None,
    trace: list | None = None,
) -> RepairOutcome:
    """Tabu-guided local search from `candidate` toward an exact render of
    `goal`.

    Each step samples the candidate's single-rewrite neighborhood (well-formed
    programs only), drops recently visited programs, and moves to the neighbor
    closest to the goal; moves may go uphill. Returns failure after
    ``cfg.repair_steps`` steps or when a step has no usable neighbor.
    """
    canvas = cfg.canvas
    ev = evaluator or Evaluator(canvas)
    goal_bits = goal.bits
    if ev.eval_bits(candidate) == goal_bits:
        return RepairOutcome(candidate, 0)
    random_pick = cfg.ablation is AblationMode.REPAIR_RANDOM
    tabu: deque[str] = deque()
    tabu_set: set[str] = set()

    def remember(text: str) -> None:
        tabu.append(text)
        tabu_set.add(text)
        if len(tabu) > cfg.tabu_capacity:
            tabu_set.discard(tabu.popleft())

    remember(serialize(candidate))
    current = candidate
    evaluated = 0
    for step in range(1, cfg.repair_steps + 1):
        if deadline is not None and time.perf_counter() > deadline:
            raise ResourceBudgetError("timeout", "repair")
        neighbors = [n for n in rewrite_neighbors(current, rules) if well_formed(n, canvas)]
        if cfg.rewrite_sample_rate < 1.0 and len(neighbors) > 1:
            k = max(1, round(cfg.rewrite_sample_rate * len(neighbors)))
            neighbors = rng.sample(neighbors, k)
        fresh = [(serialize(n), n) for n in neighbors]
        fresh = [(text, n) for text, n in fresh if text not in tabu_set]
        if not fresh:
            return RepairOutcome(None, step, evaluated)
        if random_pick:
            text, chosen = rng.choice(fresh)
            chosen_bits = ev.eval_bits(chosen)
            evaluated += 1
        else:
            best = None
            for text, n in fresh:
                bits = ev.eval_bits(n)
                evaluated += 1
                key = (jaccard_masks(goal_bits, bits), text)
                if best is None or key < best[0]:
                    best = (key, n, bits)
            (_, text), chosen, chosen_bits = best[0], best[1], best[2]
        if trace is not None:
            trace.append((sorted(t for t, _ in fresh), text))
        if chosen_bits == goal_bits:
            return RepairOutcome(chosen, step, evaluated)
        current = chosen
        remember(text)
    return RepairOutcome(None, cfg.repair_steps, evaluated)


def extract_term(
    a: Xfta,
    root: int,
    rng,
    cfg: SynthConfig,
    incoming: list[list[int]] | None = None,
    evaluator: Evaluator | None = None,
) -> Expr:
    """Greedy top-down extraction of one accepted term for `root`.

    At each state, a random subset of its incoming transitions is scored by
    re-evaluating the transition in the context built so far (already
    extracted sibling arguments contribute their actual scenes, pending ones
    their state scenes); the best transition is taken and its arguments are
    extracted recursively. Only transitions whose arguments are all strictly
    cheaper than their target are considered, which makes the descent
    acyclic; every state has at least one such transition by construction.
    """
    if incoming is None:
        incoming = a.incoming_index()
    ev = evaluator or Evaluator(a.canvas)
    canvas = a.canvas
    goal_bits = a.goal.bits
    rate = cfg.transition_sample_rate
    random_pick = cfg.ablation is AblationMode.EXTRACT_RANDOM
    transitions = a.transitions
    costs = a.costs
    scenes = a.scenes

    def eligible(state: int) -> list:
        state_cost = costs[state]
        out = []
        for ti in incoming[state]:
            t = transitions[ti]
            if all(costs[q] < state_cost for q in t.args):
                out.append(t)
        return out

    def extract(state: int, ctx: Callable[[int], float]) -> Expr:
        cands = eligible(state)
        if rate < 1.0 and len(cands) > 1:
            k = max(1, round(rate * len(cands)))
            cands = rng.sample(cands, k)
        scored = []
        for t in cands:
            out_bits = apply_operator(t.op, tuple(scenes[q] for q in t.args), canvas)
            scored.append((ctx(out_bits), (t.op, t.args), t))
        if random_pick:
            _, _, chosen = scored[rng.randrange(len(scored))]
        else:
            _, _, chosen = min(scored, key=lambda s: (s[0], s[1]))
        context_scenes = [scenes[q] for q in chosen.args]
        arg_exprs: list[Expr] = []
        for i, q in enumerate(chosen.args):
            def ctx_i(bits: int, i: int = i) -> float:
                vals = context_scenes.copy()
                vals[i] = bits
                return ctx(apply_operator(chosen.op, tuple(vals), canvas))

            sub = extract(q, ctx_i)
            arg_exprs.append(sub)
            context_scenes[i] = ev.eval_bits(sub)
        return term_of(chosen.op, tuple(arg_exprs))

    return extract(root, lambda bits: jaccard_masks(bits, goal_bits))


@dataclass
class SynthStats:
    seed: int = 0
    phase_seconds: dict = field(default_factory=dict)
    extraction_count: int = 0
    repair_calls: int = 0
    repair_steps: int = 0
    neighbors_evaluated: int = 0
    states: int = 0
    transitions: int = 0
    peak_memory_bytes: int = 0

    def phase(self, name: str) -> float:
        return self.phase_seconds.get(name, 0.0)


@dataclass
class SynthResult:
    outcome: str  # solved | timeout | memory | exhausted
    program: Optional[Expr]
    stats: SynthStats

    @property
    def solved(self) -> bool:
        return self.outcome == "solved"


def metric_synth(goal: Scene, cfg: SynthConfig, alphabet: Alphabet | None = None) -> SynthResult:
    """End-to-end synthesis: returns a program rendering exactly `goal`, or a
    failure outcome (timeout, memory, exhausted) with partial statistics."""
    start = time.perf_counter()
    deadline = start + cfg.time_budget
    stats = SynthStats(seed=cfg.seed)
    times = stats.phase_seconds
    if alphabet is None:
        alphabet = Alphabet.default(cfg.canvas, cfg.count_max)

    def finish(outcome: str, program: Expr | None = None) -> SynthResult:
        times["total"] = time.perf_counter() - start
        return SynthResult(outcome, program, stats)

    try:
        a = construct_xfta(alphabet, goal, cfg, deadline=deadline)
    except ResourceBudgetError as err:
        times["construct"] = time.perf_counter() - start
        return finish(err.kind)
    times["construct"] = time.perf_counter() - start
    times["expansion"] = a.stats.expansion_seconds
    times["clustering"] = a.stats.clustering_seconds
    times["ranking"] = a.stats.ranking_seconds
    times.setdefault("extract", 0.0)
    times.setdefault("repair", 0.0)
    stats.states = a.state_count()
    stats.transitions = len(a.transitions)
    stats.peak_memory_bytes = a.estimated_bytes()

    evaluator = Evaluator(cfg.canvas)
    incoming = a.incoming_index()
    rules = default_rules(ParamSpace(cfg.canvas, cfg.count_max))
    goal_bits = goal.bits

    try:
        # Each round extracts one candidate per final state, then repairs the
        # round's candidates best-first (closest render to the goal first).
        for sample_round in range(cfg.extract_samples):
            pool: dict[str, tuple[float, Expr]] = {}
            for qf in a.finals:
                if time.perf_counter() > deadline:
                    return finish("timeout")
                rng = derive_rng(cfg.seed, "extract", sample_round, qf)
                t0 = time.perf_counter()
                candidate = extract_term(a, qf, rng, cfg, incoming, evaluator)
                times["extract"] += time.perf_counter() - t0
                stats.extraction_count += 1
                bits = evaluator.eval_bits(candidate)
                if bits == goal_bits:
                    return finish("solved", candidate)
                text = serialize(candidate)
                if text not in pool:
                    pool[text] = (jaccard_masks(goal_bits, bits), candidate)
            ranked = sorted(pool.items(), key=lambda item: (item[1][0], item[0]))
            for attempt in range(cfg.repair_attempts):
                for text, (_, candidate) in ranked:
                    if time.perf_counter() > deadline:
                        return finish("timeout")
                    rng_r = derive_rng(cfg.seed, "repair", sample_round, text, attempt)
                    t0 = time.perf_counter()
                    outcome = repair(candidate, goal, rules, cfg, rng_r, evaluator, deadline)
                    times["repair"] += time.perf_counter() - t0
                    stats.repair_calls += 1
                    stats.repair_steps += outcome.steps
                    stats.neighbors_evaluated += outcome.neighbors_evaluated
                    if outcome.success:
                        assert evaluator.eval_bits(outcome.program) == goal_bits
                        return finish("solved", outcome.program)
    except ResourceBudgetError as err:
        return finish(err.kind)
    return finish("exhausted")
