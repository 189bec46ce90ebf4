"""Exact bottom-up enumeration baseline and the program-space study.

``fta_basic`` enumerates well-formed canonical programs in increasing node
count, deduplicating by exact scene equality (observational equivalence), and
returns the first program that renders the goal exactly. It is complete up to
``c_max`` given unlimited budgets, but its store grows quickly; running out of
memory or time on nontrivial scenes is the expected failure mode.

``count_search_space`` measures how fast the program space grows and how much
equivalence reduction and distance clustering shrink it: for each size n it
reports the number of canonical well-formed programs (counted exactly by
dynamic programming), the number of distinct scenes, and greedy cluster counts
at the requested radii. All three are cumulative over sizes <= n.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .config import ResourceBudgetError, SynthConfig
from .dsl import Expr
from .scene import Canvas, Scene
from .search import SynthResult, SynthStats
from .semantics import apply_operator, term_of
from .xfta import Alphabet, _bulk_close_sets, _RawBandIndex

# Store accounting: packed scene + dict slot + the retained expression tree.
_ENTRY_BASE_BYTES = 160
_EXPR_NODE_BYTES = 72


class EquivClassStore:
    """Scene (bitwise) -> cheapest program producing it, first found wins."""

    def __init__(self, canvas: Canvas):
        self.canvas = canvas
        self._by_scene: dict[int, Expr] = {}
        self._cost: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._by_scene)

    def __contains__(self, bits: int) -> bool:
        return bits in self._by_scene

    def get(self, bits: int) -> Expr | None:
        return self._by_scene.get(bits)

    def add(self, bits: int, expr: Expr, cost: int) -> bool:
        """Insert unless an equal scene exists; returns True if inserted."""
        if bits in self._by_scene:
            return False
        self._by_scene[bits] = expr
        self._cost[bits] = cost
        return True

    def estimated_bytes(self) -> int:
        scene_bytes = self.canvas.npixels // 8 + 1
        return sum(
            _ENTRY_BASE_BYTES + scene_bytes + _EXPR_NODE_BYTES * c for c in self._cost.values()
        )


def _repeat_plans(alphabet: Alphabet, canvas: Canvas):
    from .scene import _column_band

    w, h = canvas.width, canvas.height
    full = canvas.full_mask()
    plans = []
    for dx, dy, counts in alphabet.repeat_vectors():
        if dx > 0:
            keep = _column_band(w, h, 0, w - dx)
        elif dx < 0:
            keep = _column_band(w, h, -dx, w)
        else:
            keep = full
        plans.append((dx, dy, counts, keep, dy * w + dx))
    return plans, full


def fta_basic(goal: Scene, cfg: SynthConfig, alphabet: Alphabet | None = None) -> SynthResult:
    """Bottom-up enumeration with observational-equivalence reduction."""
    canvas = cfg.canvas
    if (goal.width, goal.height) != (canvas.width, canvas.height):
        raise ValueError(f"goal is {goal.width}x{goal.height}, config canvas is {canvas}")
    start = time.perf_counter()
    deadline = start + cfg.time_budget
    if alphabet is None:
        alphabet = Alphabet.default(canvas, cfg.count_max)
    stats = SynthStats(seed=cfg.seed)
    store = EquivClassStore(canvas)
    goal_bits = goal.bits

    def finish(outcome: str, program: Expr | None = None) -> SynthResult:
        stats.states = len(store)
        stats.peak_memory_bytes = store.estimated_bytes()
        stats.phase_seconds["construct"] = time.perf_counter() - start
        stats.phase_seconds["expansion"] = stats.phase_seconds["construct"]
        stats.phase_seconds["total"] = time.perf_counter() - start
        return SynthResult(outcome, program, stats)

    def over_budget() -> str | None:
        if time.perf_counter() > deadline:
            return "timeout"
        if store.estimated_bytes() > cfg.memory_budget:
            return "memory"
        return None

    plans, full = _repeat_plans(alphabet, canvas)
    by_cost: dict[int, list[int]] = {}
    for cost in range(1, cfg.c_max + 1):
        new_bits: list[int] = []
        if cost == 1:
            for op in alphabet.primitives:
                bits = apply_operator(op, (), canvas)
                if store.add(bits, term_of(op, ()), 1):
                    new_bits.append(bits)
                    if bits == goal_bits:
                        return finish("solved", store.get(bits))
        else:
            check_every = 8192
            since_check = 0

            def emit(bits: int, op: tuple, arg_bits: tuple[int, ...]) -> Expr | None:
                args = tuple(store.get(b) for b in arg_bits)
                expr = term_of(op, args)
                if store.add(bits, expr, cost):
                    new_bits.append(bits)
                    if bits == goal_bits:
                        return expr
                return None

            # Binary compositions first: their frontier is far smaller than
            # the repeat family's, so cheap exact solutions surface early.
            if alphabet.use_union or alphabet.use_diff:
                for asize in range(1, cost - 1):
                    bsize = cost - 1 - asize
                    qa_list = by_cost.get(asize, ())
                    qb_list = by_cost.get(bsize, ())
                    for abits in qa_list:
                        for bbits in qb_list:
                            if alphabet.use_union and asize <= bsize:
                                if asize < bsize or abits <= bbits:
                                    lo, hi = (abits, bbits) if abits <= bbits else (bbits, abits)
                                    hit = emit(lo | hi, ("union",), (lo, hi))
                                    if hit is not None:
                                        return finish("solved", hit)
                            if alphabet.use_diff:
                                hit = emit(abits & ~bbits, ("diff",), (abits, bbits))
                                if hit is not None:
                                    return finish("solved", hit)
                        since_check += len(qb_list)
                        if since_check >= check_every:
                            since_check = 0
                            failure = over_budget()
                            if failure:
                                return finish(failure)
            for body in by_cost.get(cost - 1, ()):
                for dx, dy, counts, keep, shift in plans:
                    acc = body
                    prev = 1
                    for count in counts:
                        for _ in range(count - prev):
                            if shift >= 0:
                                acc = body | (((acc & keep) << shift) & full)
                            else:
                                acc = body | ((acc & keep) >> -shift)
                        prev = count
                        hit = emit(acc, ("repeat", dx, dy, count), (body,))
                        if hit is not None:
                            return finish("solved", hit)
                since_check += len(plans)
                if since_check >= check_every:
                    since_check = 0
                    failure = over_budget()
                    if failure:
                        return finish(failure)
        by_cost[cost] = new_bits
        failure = over_budget()
        if failure:
            return finish(failure)
    return finish("exhausted")


def study_alphabet(
    canvas: Canvas,
    coord_stride: int = 1,
    radii: tuple[int, ...] | None = None,
    vector_stride: int = 1,
    count_max: int = 8,
) -> Alphabet:
    """A sub-grid alphabet for the program-space study.

    Full parameter grids are not enumerable to interesting sizes, so the
    study measures a self-consistent coarser grid; the strides are recorded
    in the study output.
    """
    w, h = canvas.width, canvas.height
    if radii is None:
        radii = tuple(range(1, min(w, h) // 2 + 1))
    prims = []
    for r in radii:
        for x in range(r, w - r):
            if x % coord_stride:
                continue
            for y in range(r, h - r):
                if y % coord_stride:
                    continue
                prims.append(("circle", x, y, r))
    xs = [x for x in range(w) if x % coord_stride == 0]
    ys = [y for y in range(h) if y % coord_stride == 0]
    for i, x1 in enumerate(xs):
        for x2 in xs[i + 1 :]:
            for j, y1 in enumerate(ys):
                for y2 in ys[j + 1 :]:
                    prims.append(("rect", x1, y1, x2, y2))
    reps = []
    for dx in range(-(w // 2), w // 2 + 1):
        if dx % vector_stride:
            continue
        for dy in range(-(h // 2), h // 2 + 1):
            if dy % vector_stride or (dx == 0 and dy == 0):
                continue
            for count in range(2, count_max + 1):
                reps.append(("repeat", dx, dy, count))
    return Alphabet(primitives=prims, repeats=reps)


class _GreedyClusterCounter:
    """Greedy cluster counting in processing order, batched for speed.

    Equivalent to querying every scene against all centers so far: a batch is
    first resolved in bulk against the (frozen) centers from earlier batches,
    then sequentially against centers created within the batch itself.
    """

    def __init__(self, epsilon: float):
        self.epsilon = epsilon
        self.center_keys: list[int] = []

    @property
    def count(self) -> int:
        return len(self.center_keys)

    def add_batch(self, keys: list[int]) -> None:
        close = _bulk_close_sets(self.center_keys, keys, 0, self.epsilon)
        local = _RawBandIndex()
        created: list[int] = []
        for i, key in enumerate(keys):
            if i in close:
                continue
            if local.query(key, self.epsilon):
                continue
            local.insert(key, None)
            created.append(key)
        self.center_keys.extend(created)


def block_study_alphabet(
    canvas: Canvas, block: int = 4, counts: tuple[int, ...] = (2, 3, 4), jitter: bool = True
) -> Alphabet:
    """A bar-based sub-DSL for the program-space study, enumerable to n ~ 9-11.

    Primitives are full-width row bars and full-height column bars on a
    `block`-strided grid, each optionally paired with a one-pixel-shaved
    variant. The coarse bar skeleton keeps per-size class counts small enough
    for exhaustive enumeration, while the shaved variants densely populate
    each skeleton scene's neighborhood, which is what distance clustering is
    meant to collapse.
    """
    if canvas.width % block or canvas.height % block:
        raise ValueError(f"canvas {canvas} not divisible by block {block}")
    prims: list[tuple] = []
    for j in range(canvas.height // block):
        y1, y2 = j * block, (j + 1) * block - 1
        prims.append(("rect", 0, y1, canvas.width - 1, y2))
        if jitter:
            prims.append(("rect", 1, y1, canvas.width - 1, y2))
    for i in range(canvas.width // block):
        x1, x2 = i * block, (i + 1) * block - 1
        prims.append(("rect", x1, 0, x2, canvas.height - 1))
        if jitter:
            prims.append(("rect", x1, 1, x2, canvas.height - 1))
    reps = [("repeat", block, 0, c) for c in counts] + [("repeat", 0, block, c) for c in counts]
    return Alphabet(primitives=prims, repeats=reps)


@dataclass
class SpaceStudyRow:
    n: int
    total: int
    distinct: int
    clusters: dict[float, int]


@dataclass
class SpaceStudy:
    canvas: Canvas
    epsilons: tuple[float, ...]
    primitive_count: int
    repeat_symbol_count: int
    rows: list[SpaceStudyRow] = field(default_factory=list)

    def csv(self) -> str:
        header = "n,total,distinct," + ",".join(f"clusters_eps{e:g}" for e in self.epsilons)
        lines = [header]
        for row in self.rows:
            cl = ",".join(str(row.clusters[e]) for e in self.epsilons)
            lines.append(f"{row.n},{row.total},{row.distinct},{cl}")
        return "\n".join(lines) + "\n"


def count_program_space(alphabet: Alphabet, n_max: int) -> list[int]:
    """Exact counts of canonical well-formed programs of each size 1..n_max."""
    n_primitives = len(alphabet.primitives)
    n_repeats = len(alphabet.repeats)
    counts = [0] * (n_max + 1)
    if n_max >= 1:
        counts[1] = n_primitives
    for size in range(2, n_max + 1):
        total = counts[size - 1] * n_repeats
        for asize in range(1, size - 1):
            bsize = size - 1 - asize
            na, nb = counts[asize], counts[bsize]
            if alphabet.use_union:
                if asize < bsize:
                    total += na * nb
                elif asize == bsize:
                    # Unordered pairs plus the diagonal: one canonical order each.
                    total += na * (na + 1) // 2
            if alphabet.use_diff:
                total += na * nb
        counts[size] = total
    return counts


def count_search_space(
    canvas: Canvas,
    n_max: int,
    epsilons: tuple[float, ...] = (0.1, 0.2),
    alphabet: Alphabet | None = None,
    time_budget: float | None = None,
) -> SpaceStudy:
    """Cumulative program/scene/cluster counts for sizes up to n_max.

    Distinct scenes come from exhaustive enumeration with equivalence
    reduction; clusters from greedy clustering of the distinct scenes (plain
    Jaccard, processed in (size, bit pattern) order, so results for n extend
    results for n - 1).
    """
    if alphabet is None:
        alphabet = Alphabet.default(canvas)
    deadline = time.perf_counter() + time_budget if time_budget else None
    totals = count_program_space(alphabet, n_max)
    study = SpaceStudy(
        canvas=canvas,
        epsilons=tuple(epsilons),
        primitive_count=len(alphabet.primitives),
        repeat_symbol_count=len(alphabet.repeats),
    )
    plans, full = _repeat_plans(alphabet, canvas)
    seen: set[int] = set()
    by_cost: dict[int, list[int]] = {}
    counters = {eps: _GreedyClusterCounter(eps) for eps in epsilons}
    total_cum = 0
    for size in range(1, n_max + 1):
        if deadline is not None and time.perf_counter() > deadline:
            raise ResourceBudgetError("timeout", f"space study at n={size}")
        new_bits: set[int] = set()
        if size == 1:
            for op in alphabet.primitives:
                bits = apply_operator(op, (), canvas)
                if bits not in seen:
                    seen.add(bits)
                    new_bits.add(bits)
        else:
            for body in by_cost.get(size - 1, ()):
                for dx, dy, counts, keep, shift in plans:
                    acc = body
                    prev = 1
                    for count in counts:
                        for _ in range(count - prev):
                            if shift >= 0:
                                acc = body | (((acc & keep) << shift) & full)
                            else:
                                acc = body | ((acc & keep) >> -shift)
                        prev = count
                        if acc not in seen:
                            seen.add(acc)
                            new_bits.add(acc)
            for asize in range(1, size - 1):
                bsize = size - 1 - asize
                if deadline is not None and time.perf_counter() > deadline:
                    raise ResourceBudgetError("timeout", f"space study at n={size}")
                for abits in by_cost.get(asize, ()):
                    for bbits in by_cost.get(bsize, ()):
                        if alphabet.use_union and asize <= bsize and (asize < bsize or abits <= bbits):
                            bits = abits | bbits
                            if bits not in seen:
                                seen.add(bits)
                                new_bits.add(bits)
                        if alphabet.use_diff:
                            bits = abits & ~bbits
                            if bits not in seen:
                                seen.add(bits)
                                new_bits.add(bits)
        ordered = sorted(new_bits)
        by_cost[size] = ordered
        for eps in epsilons:
            counter = counters[eps]
            for chunk_start in range(0, len(ordered), 8192):
                if deadline is not None and time.perf_counter() > deadline:
                    raise ResourceBudgetError("timeout", f"space study at n={size}")
                counter.add_batch(ordered[chunk_start : chunk_start + 8192])
        total_cum += totals[size]
        study.rows.append(
            SpaceStudyRow(
                n=size,
                total=total_cum,
                distinct=len(seen),
                clusters={eps: counters[eps].count for eps in epsilons},
            )
        )
    return study
