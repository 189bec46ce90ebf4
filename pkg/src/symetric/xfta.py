"""Approximate tree automaton construction.

The automaton's states are scenes; transitions apply an operator symbol to
argument states. Construction is bottom-up and cost-stratified: iteration c
builds every transition whose term has exactly c AST nodes (argument states
contribute their cheapest known cost). Each iteration has three phases:

* expansion — generate and evaluate the frontier of candidate transitions;
* clustering — greedy grouping of candidate scenes, processed best-rank
  first: a candidate either joins every center within ``epsilon`` (under the
  goal-aware metric) or becomes a new center, up to the beam width;
* ranking — candidates are sorted by plain Jaccard distance to the goal
  before clustering, so the centers kept are the best-ranked ones, and the
  final states are the best-ranked states overall.

Transitions whose output scene lands within ``epsilon`` of an already
existing state are recorded as pointing at that state, which enriches the
accepted language at no extra state cost. A transition stored this way may
reference argument states at least as costly as its target; extraction
(see the search module) only descends transitions whose arguments are all
strictly cheaper than their target, which keeps it acyclic.
"""

from __future__ import annotations

import json
import math
import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .config import AblationMode, ResourceBudgetError, SynthConfig, derive_rng
from .metric import MaskMetric, jaccard_masks
from .scene import Canvas, Scene
from .semantics import apply_operator, render_circle_mask, render_rect_mask

# Rough per-object accounting used to enforce the memory budget.
_STATE_OVERHEAD = 120
_TRANSITION_OVERHEAD = 120


@dataclass(frozen=True, slots=True)
class Transition:
    op: tuple
    args: tuple[int, ...]
    out: int


@dataclass
class Alphabet:
    """The operator alphabet: parameterized primitives are leaf symbols,
    union/diff take two state arguments, repeat symbols take one."""

    primitives: list[tuple]
    repeats: list[tuple]
    use_union: bool = True
    use_diff: bool = True

    @classmethod
    def default(cls, canvas: Canvas, count_max: int = 8) -> "Alphabet":
        """Every well-formed symbol in the quantized parameter space."""
        prims: list[tuple] = []
        rmax = min(canvas.width, canvas.height) // 2
        for r in range(1, rmax + 1):
            for x in range(r, canvas.width - r):
                for y in range(r, canvas.height - r):
                    prims.append(("circle", x, y, r))
        for x1 in range(canvas.width):
            for x2 in range(x1 + 1, canvas.width):
                for y1 in range(canvas.height):
                    for y2 in range(y1 + 1, canvas.height):
                        prims.append(("rect", x1, y1, x2, y2))
        reps: list[tuple] = []
        for dx in range(-(canvas.width // 2), canvas.width // 2 + 1):
            for dy in range(-(canvas.height // 2), canvas.height // 2 + 1):
                if dx == 0 and dy == 0:
                    continue
                for count in range(2, count_max + 1):
                    reps.append(("repeat", dx, dy, count))
        return cls(primitives=prims, repeats=reps)

    @classmethod
    def primitives_only(cls, canvas: Canvas) -> "Alphabet":
        full = cls.default(canvas)
        return cls(primitives=full.primitives, repeats=[], use_union=False, use_diff=False)

    def repeat_vectors(self) -> list[tuple[int, int, list[int]]]:
        """Repeat symbols grouped by vector: [(dx, dy, sorted counts)]."""
        grouped: dict[tuple[int, int], list[int]] = {}
        for _, dx, dy, count in self.repeats:
            grouped.setdefault((dx, dy), []).append(count)
        return [(dx, dy, sorted(cs)) for (dx, dy), cs in sorted(grouped.items())]


@dataclass
class ConstructStats:
    expansion_seconds: float = 0.0
    clustering_seconds: float = 0.0
    ranking_seconds: float = 0.0
    frontier_transitions: int = 0
    frontier_scenes: int = 0

    @property
    def total_seconds(self) -> float:
        return self.expansion_seconds + self.clustering_seconds + self.ranking_seconds


@dataclass
class Xfta:
    """States (scenes with costs and goal ranks), transitions, finals."""

    canvas: Canvas
    goal: Scene
    epsilon: float
    scenes: list[int] = field(default_factory=list)
    costs: list[int] = field(default_factory=list)
    ranks: list[float] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    finals: list[int] = field(default_factory=list)
    stats: ConstructStats = field(default_factory=ConstructStats)

    def state_count(self) -> int:
        return len(self.scenes)

    def scene_of(self, state: int) -> Scene:
        return Scene(self.canvas.width, self.canvas.height, self.scenes[state])

    def distinct_scene_bits(self) -> set[int]:
        return set(self.scenes)

    def incoming_index(self) -> list[list[int]]:
        """Transition indices grouped by output state."""
        index: list[list[int]] = [[] for _ in self.scenes]
        for i, t in enumerate(self.transitions):
            index[t.out].append(i)
        return index

    def estimated_bytes(self) -> int:
        scene_bytes = self.canvas.npixels // 8 + 1
        return len(self.scenes) * (scene_bytes + _STATE_OVERHEAD) + len(self.transitions) * _TRANSITION_OVERHEAD

    def to_json(self) -> str:
        doc = {
            "canvas": [self.canvas.width, self.canvas.height],
            "epsilon": self.epsilon,
            "goal": self.goal.to_rle(),
            "states": [
                {"id": i, "cost": self.costs[i], "rank": self.ranks[i], "scene": self.scene_of(i).to_rle()}
                for i in range(len(self.scenes))
            ],
            "transitions": [
                {"op": list(t.op), "args": list(t.args), "out": t.out} for t in self.transitions
            ],
            "finals": list(self.finals),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def top_k(a: Xfta, states, k: int | None) -> list[int]:
    """The k states ranked best, ties broken by cost then scene bit pattern."""
    ordered = sorted(states, key=lambda s: (a.ranks[s], a.costs[s], a.scenes[s]))
    return ordered if k is None else ordered[:k]


@dataclass
class ClusterResult:
    """Outcome of greedily clustering an ordered candidate sequence.

    ``assignments[i]`` lists the targets of candidate i: ``('new', j)`` points
    at the j-th new center (also a candidate position, see ``new_centers``),
    ``('existing', key)`` at a pre-existing center. An empty list means the
    candidate was dropped (beam exhausted and nothing close).
    """

    new_centers: list[int]
    assignments: list[list[tuple[str, int]]]


def cluster_frontier(
    candidates,
    metric,
    epsilon: float,
    existing=(),
    max_new_centers: int | None = None,
) -> ClusterResult:
    """Greedy clustering of candidate scenes, processed in the given order.

    Each candidate either joins every center within ``epsilon`` (existing
    centers included) or becomes a new center. New centers stop being created
    once ``max_new_centers`` exist; later candidates with no close center are
    dropped. For the default scene metrics this runs on packed bitmaps; any
    other callable metric is supported through a linear scan.
    """
    candidates = list(candidates)
    existing = list(existing)
    if isinstance(metric, MaskMetric):
        keys = [metric.key(s) for s in candidates]
        existing_keys = [(key, metric.key(s)) for key, s in existing]
        return _cluster_keys(keys, existing_keys, epsilon, max_new_centers)
    # Generic metric: plain greedy scan.
    centers: list[tuple[str, int, object]] = [("existing", key, s) for key, s in existing]
    new_centers: list[int] = []
    assignments: list[list[tuple[str, int]]] = []
    for i, scene in enumerate(candidates):
        close = [(kind, key) for kind, key, c in centers if metric(c, scene) <= epsilon]
        if close:
            assignments.append(close)
        elif max_new_centers is None or len(new_centers) < max_new_centers:
            centers.append(("new", len(new_centers), scene))
            new_centers.append(i)
            assignments.append([("new", len(new_centers) - 1)])
        else:
            assignments.append([])
    return ClusterResult(new_centers, assignments)


class _RawBandIndex:
    """Popcount-banded exact range queries over raw int keys."""

    __slots__ = ("_pcs", "_keys", "_payloads")

    def __init__(self):
        self._pcs: list[int] = []
        self._keys: list[int] = []
        self._payloads: list = []

    def __len__(self):
        return len(self._keys)

    def insert(self, key: int, payload) -> None:
        pc = key.bit_count()
        pos = bisect_right(self._pcs, pc)
        self._pcs.insert(pos, pc)
        self._keys.insert(pos, key)
        self._payloads.insert(pos, payload)

    def query(self, qkey: int, eps: float) -> list:
        p = qkey.bit_count()
        if eps >= 1.0:
            lo, hi = 0, len(self._keys)
        else:
            keep = 1.0 - eps
            lo = bisect_left(self._pcs, max(0, math.ceil(p * keep - 1e-9)))
            hi = bisect_right(self._pcs, math.floor(p / keep + 1e-9) if p else 0)
        keys = self._keys
        return [self._payloads[i] for i in range(lo, hi) if jaccard_masks(keys[i], qkey) <= eps]


def _cluster_keys(
    keys: list[int],
    existing: list[tuple[object, int]],
    epsilon: float,
    max_new_centers: int | None,
) -> ClusterResult:
    """Greedy clustering over packed keys (Jaccard distance on bitmaps).

    Pre-existing centers never change during a call, so proximity to them is
    resolved in bulk up front; the sequential pass only maintains the (small,
    capped) set of new centers.
    """
    n = len(keys)
    existing_tags = [("existing", key) for key, _ in existing]
    close_existing = _bulk_close_sets([kbits for _, kbits in existing], keys, 0, epsilon)
    new_index = _RawBandIndex()
    new_centers: list[int] = []
    assignments: list[list[tuple[str, int]]] = [[] for _ in keys]
    pos = 0
    while pos < n:
        if max_new_centers is not None and len(new_centers) >= max_new_centers:
            break
        qkey = keys[pos]
        close = [existing_tags[j] for j in close_existing.get(pos, ())]
        close += [("new", j) for j in new_index.query(qkey, epsilon)]
        if close:
            assignments[pos] = close
        else:
            new_index.insert(qkey, len(new_centers))
            new_centers.append(pos)
            assignments[pos] = [("new", len(new_centers) - 1)]
        pos += 1
    if pos < n:
        # The beam is full, so the center set is frozen; resolve proximity to
        # the new centers in bulk for the remaining candidates.
        close_new = _bulk_close_sets([keys[c] for c in new_centers], keys, pos, epsilon)
        for i in sorted(k for k in (close_existing.keys() | close_new.keys()) if k >= pos):
            close = [existing_tags[j] for j in close_existing.get(i, ())]
            close += [("new", j) for j in close_new.get(i, ())]
            assignments[i] = close
    return ClusterResult(new_centers, assignments)


def _pack_keys(keys: list[int], nwords: int) -> np.ndarray:
    nbytes = nwords * 8
    payload = b"".join(k.to_bytes(nbytes, "little") for k in keys)
    return np.frombuffer(payload, dtype=np.uint64).reshape(len(keys), nwords)


def _bulk_close_sets(
    center_keys: list[int], query_keys: list[int], start: int, eps: float
) -> dict[int, list[int]]:
    """Map query index -> [center positions within eps] for queries[start:];
    queries with no close center are omitted.

    Exact: the popcount band is only a prefilter, distances are verified.
    """
    out: dict[int, list[int]] = {}
    if not center_keys or start >= len(query_keys):
        return out
    tail = query_keys[start:]
    nbits = max(max(k.bit_length() for k in center_keys), max(k.bit_length() for k in tail), 1)
    nwords = (nbits + 63) // 64
    centers = _pack_keys(center_keys, nwords)
    center_pc = np.bitwise_count(centers).sum(axis=1).astype(np.int64)
    order = np.argsort(center_pc, kind="stable")
    centers = centers[order]
    center_pc_sorted = center_pc[order]
    order_list = order.tolist()

    q_pc = np.fromiter((k.bit_count() for k in tail), dtype=np.int64, count=len(tail))
    q_order = np.argsort(q_pc, kind="stable").tolist()
    keep = 1.0 - eps
    i = 0
    nq = len(tail)
    while i < nq:
        p = int(q_pc[q_order[i]])
        j = i
        while j < nq and q_pc[q_order[j]] == p:
            j += 1
        if eps >= 1.0:
            lo, hi = 0, len(center_keys)
        else:
            lo = int(np.searchsorted(center_pc_sorted, max(0, math.ceil(p * keep - 1e-9)), side="left"))
            hi = int(np.searchsorted(center_pc_sorted, (math.floor(p / keep + 1e-9) if p else 0), side="right"))
        if lo >= hi:
            i = j
            continue
        band = centers[lo:hi]
        band_pc = center_pc_sorted[lo:hi]
        for chunk_start in range(i, j, 512):
            chunk = q_order[chunk_start : min(j, chunk_start + 512)]
            qmat = _pack_keys([tail[qi] for qi in chunk], nwords)
            inter = np.bitwise_count(qmat[:, None, :] & band[None, :, :]).sum(axis=2).astype(np.int64)
            union = p + band_pc[None, :] - inter
            with np.errstate(invalid="ignore", divide="ignore"):
                dist = np.where(union == 0, 0.0, 1.0 - inter / union)
            close_rows = dist <= eps
            for row in np.nonzero(close_rows.any(axis=1))[0].tolist():
                cols = np.nonzero(close_rows[row])[0].tolist()
                out[start + chunk[row]] = [order_list[lo + c] for c in cols]
        i = j
    return out


def construct_xfta(
    alphabet: Alphabet,
    goal: Scene,
    cfg: SynthConfig,
    deadline: float | None = None,
) -> Xfta:
    """Build the approximate automaton bottom-up (see module docstring).

    Raises ResourceBudgetError when the state/transition store exceeds the
    memory budget or the deadline passes.
    """
    canvas = cfg.canvas
    if (goal.width, goal.height) != (canvas.width, canvas.height):
        raise ValueError(f"goal is {goal.width}x{goal.height}, config canvas is {canvas}")
    w, h = canvas.width, canvas.height
    full_mask = canvas.full_mask()
    goal_bits = goal.bits
    goal_pc = goal_bits.bit_count()
    eps = 0.0 if cfg.ablation is AblationMode.NO_CLUSTER else cfg.epsilon
    no_rank = cfg.ablation is AblationMode.NO_RANK
    rank_rng = derive_rng(cfg.seed, "norank") if no_rank else None

    a = Xfta(canvas=canvas, goal=goal, epsilon=eps)
    stats = a.stats
    # All states created so far, as (state id, goal-xored key) for clustering.
    existing_pairs: list[tuple[int, int]] = []
    states_by_cost: dict[int, list[int]] = {}

    def rank_of(bits: int) -> float:
        union = (goal_bits | bits).bit_count()
        if union == 0:
            return 0.0
        return 1.0 - (goal_bits & bits).bit_count() / union

    def check_budgets() -> None:
        if deadline is not None and time.perf_counter() > deadline:
            raise ResourceBudgetError("timeout", "automaton construction")
        if a.estimated_bytes() > cfg.memory_budget:
            raise ResourceBudgetError("memory", f"{a.state_count()} states")

    # Precompute (keep mask, shift) per repeat vector for fast translation.
    from .scene import _column_band

    vec_plans = []
    for dx, dy, counts in alphabet.repeat_vectors():
        if dx > 0:
            keep = _column_band(w, h, 0, w - dx)
        elif dx < 0:
            keep = _column_band(w, h, -dx, w)
        else:
            keep = full_mask
        vec_plans.append((dx, dy, counts, keep, dy * w + dx))

    for cost in range(1, cfg.c_max + 1):
        t0 = time.perf_counter()
        # Candidate scene -> transitions producing it this cost class.
        frontier: dict[int, list[tuple[tuple, tuple[int, ...]]]] = {}
        get = frontier.get

        if cost == 1:
            for op in alphabet.primitives:
                if op[0] == "circle":
                    bits = render_circle_mask(canvas, op[1], op[2], op[3])
                else:
                    bits = render_rect_mask(canvas, op[1], op[2], op[3], op[4])
                entry = get(bits)
                if entry is None:
                    frontier[bits] = [(op, ())]
                else:
                    entry.append((op, ()))
        else:
            scenes = a.scenes
            # Repeats over every state of cost-1 cheaper.
            bodies = states_by_cost.get(cost - 1, ())
            for q in bodies:
                qbits = scenes[q]
                args = (q,)
                for dx, dy, counts, keep, shift in vec_plans:
                    acc = qbits
                    prev = 1
                    for count in counts:
                        for _ in range(count - prev):
                            if shift >= 0:
                                acc = qbits | (((acc & keep) << shift) & full_mask)
                            else:
                                acc = qbits | ((acc & keep) >> -shift)
                        prev = count
                        entry = get(acc)
                        if entry is None:
                            frontier[acc] = [(("repeat", dx, dy, count), args)]
                        else:
                            entry.append((("repeat", dx, dy, count), args))
            # Binary operators over cost splits a + b = cost - 1.
            if alphabet.use_union or alphabet.use_diff:
                for asize in range(1, cost - 1):
                    bsize = cost - 1 - asize
                    qa_list = states_by_cost.get(asize, ())
                    qb_list = states_by_cost.get(bsize, ())
                    if not qa_list or not qb_list:
                        continue
                    if alphabet.use_union and asize <= bsize:
                        if asize == bsize:
                            ordered = sorted(qa_list, key=scenes.__getitem__)
                            for i, qa in enumerate(ordered):
                                abits = scenes[qa]
                                for qb in ordered[i:]:
                                    bits = abits | scenes[qb]
                                    entry = get(bits)
                                    if entry is None:
                                        frontier[bits] = [(("union",), (qa, qb))]
                                    else:
                                        entry.append((("union",), (qa, qb)))
                        else:
                            for qa in qa_list:
                                abits = scenes[qa]
                                for qb in qb_list:
                                    bbits = scenes[qb]
                                    bits = abits | bbits
                                    pair = (qa, qb) if abits <= bbits else (qb, qa)
                                    entry = get(bits)
                                    if entry is None:
                                        frontier[bits] = [(("union",), pair)]
                                    else:
                                        entry.append((("union",), pair))
                    if alphabet.use_diff:
                        for qa in qa_list:
                            abits = scenes[qa]
                            for qb in qb_list:
                                bits = abits & ~scenes[qb]
                                entry = get(bits)
                                if entry is None:
                                    frontier[bits] = [(("diff",), (qa, qb))]
                                else:
                                    entry.append((("diff",), (qa, qb)))
        stats.expansion_seconds += time.perf_counter() - t0
        stats.frontier_transitions += sum(len(v) for v in frontier.values())
        stats.frontier_scenes += len(frontier)
        check_budgets()

        # Ranking: order candidate scenes best-first (or shuffled for NoRank).
        t0 = time.perf_counter()
        scene_bits = list(frontier.keys())
        if no_rank:
            rank_rng.shuffle(scene_bits)
            ordered_bits = scene_bits
        else:
            ordered_bits = sorted(scene_bits, key=lambda b: (rank_of(b), b))
        stats.ranking_seconds += time.perf_counter() - t0

        # Clustering: greedy centers over (existing states + new centers).
        t0 = time.perf_counter()
        result = _cluster_keys(
            [b ^ goal_bits for b in ordered_bits],
            existing_pairs,
            eps,
            cfg.beam_width,
        )
        new_states: list[int] = []
        for center_pos in result.new_centers:
            cb = ordered_bits[center_pos]
            sid = len(a.scenes)
            a.scenes.append(cb)
            a.costs.append(cost)
            a.ranks.append(rank_of(cb))
            new_states.append(sid)
        for pos, targets in enumerate(result.assignments):
            if not targets:
                continue
            ops = frontier[ordered_bits[pos]]
            for kind, ref in targets:
                out = new_states[ref] if kind == "new" else ref
                for op, args in ops:
                    a.transitions.append(Transition(op, args, out))
        states_by_cost[cost] = new_states
        for sid in new_states:
            existing_pairs.append((sid, a.scenes[sid] ^ goal_bits))
        stats.clustering_seconds += time.perf_counter() - t0
        check_budgets()

    t0 = time.perf_counter()
    a.finals = top_k(a, range(len(a.scenes)), cfg.k)
    stats.ranking_seconds += time.perf_counter() - t0
    return a


@dataclass
class AuditViolation:
    transition_index: int
    distance: float


@dataclass
class AuditReport:
    violations: list[AuditViolation]
    transitions_checked: int

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_invariants(a: Xfta, epsilon: float) -> AuditReport:
    """Re-evaluate every transition and report those whose true output scene
    is farther than epsilon (goal-aware metric) from the target state."""
    goal_bits = a.goal.bits
    violations = []
    for i, t in enumerate(a.transitions):
        arg_bits = tuple(a.scenes[q] for q in t.args)
        out_bits = apply_operator(t.op, arg_bits, a.canvas)
        d = jaccard_masks(out_bits ^ goal_bits, a.scenes[t.out] ^ goal_bits)
        if d > epsilon:
            violations.append(AuditViolation(i, d))
    return AuditReport(violations, len(a.transitions))
