import random

import pytest

from symetric.config import AblationMode, ResourceBudgetError, SynthConfig
from symetric.metric import MaskMetric, goal_distance, goal_rank
from symetric.scene import Canvas, Scene
from symetric.semantics import evaluate, well_formed
from symetric.xfta import (
    Alphabet,
    Transition,
    audit_invariants,
    cluster_frontier,
    construct_xfta,
    top_k,
)

from conftest import brute_force_distinct_scenes, random_scene, random_wf_expr


C8 = Canvas(8, 8)


def test_cluster_frontier_separated_candidates():
    metric = MaskMetric()
    candidates = [
        Scene.from_pixels(C8, [(0, 0)]),
        Scene.from_pixels(C8, [(4, 4)]),
        Scene.from_pixels(C8, [(7, 7)]),
    ]
    result = cluster_frontier(candidates, metric, 0.2)
    assert result.new_centers == [0, 1, 2]
    assert result.assignments == [[("new", 0)], [("new", 1)], [("new", 2)]]


def test_cluster_frontier_greedy_first_wins():
    metric = MaskMetric()
    a = Scene.from_pixels(C8, [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)])
    b = Scene.from_pixels(C8, [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0)])
    assert metric(a, b) == pytest.approx(1 / 6)
    result = cluster_frontier([a, b], metric, 0.2)
    assert result.new_centers == [0]
    assert result.assignments[1] == [("new", 0)]


def test_cluster_frontier_duplicates_to_every_close_center():
    metric = MaskMetric()
    base = [(u, 0) for u in range(8)] + [(0, 1), (1, 1)]  # 10 pixels
    a = Scene.from_pixels(C8, base)
    b = Scene.from_pixels(C8, base + [(2, 1), (3, 1), (4, 1)])  # d(a, b) = 3/13
    q = Scene.from_pixels(C8, base + [(2, 1)])  # close to both a and b
    assert metric(a, b) > 0.2
    assert metric(a, q) <= 0.2 and metric(b, q) <= 0.2
    result = cluster_frontier([a, b, q], metric, 0.2)
    assert result.new_centers == [0, 1]
    assert sorted(result.assignments[2]) == [("new", 0), ("new", 1)]


def test_cluster_frontier_respects_existing_centers():
    metric = MaskMetric()
    a = Scene.from_pixels(C8, [(u, 0) for u in range(6)])
    near = Scene.from_pixels(C8, [(u, 0) for u in range(5)])
    result = cluster_frontier([near], metric, 0.2, existing=[(42, a)])
    assert result.new_centers == []
    assert result.assignments == [[("existing", 42)]]


def test_cluster_frontier_beam_cap_drops_leftovers():
    metric = MaskMetric()
    far = [
        Scene.from_pixels(C8, [(0, 0)]),
        Scene.from_pixels(C8, [(4, 4)]),
        Scene.from_pixels(C8, [(7, 7)]),
    ]
    result = cluster_frontier(far, metric, 0.1, max_new_centers=2)
    assert result.new_centers == [0, 1]
    assert result.assignments[2] == []


def test_cluster_frontier_audit_100_random_scenes():
    rng = random.Random(0)
    metric = MaskMetric()
    eps = 0.2
    scenes = [random_scene(rng, C8, rng.choice([0.2, 0.3, 0.4])) for _ in range(100)]
    result = cluster_frontier(scenes, metric, eps)
    centers = [scenes[i] for i in result.new_centers]
    # Every candidate maps to at least one center within eps.
    for i, targets in enumerate(result.assignments):
        assert targets, f"candidate {i} dropped without beam cap"
        for kind, ref in targets:
            assert kind == "new"
            assert metric(scenes[i], centers[ref]) <= eps
    # Greedy centers are pairwise separated by more than eps.
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            assert metric(centers[i], centers[j]) > eps


def test_cluster_frontier_generic_metric_matches_mask_path():
    rng = random.Random(1)
    eps = 0.25
    goal = random_scene(rng, C8, 0.3)
    scenes = [random_scene(rng, C8, rng.choice([0.2, 0.4])) for _ in range(150)]
    existing = [(101, random_scene(rng, C8, 0.3)), (202, random_scene(rng, C8, 0.4))]
    mask_metric = MaskMetric(goal)
    generic = lambda a, b: goal_distance(goal, a, b)  # noqa: E731
    for cap in (None, 5):
        fast = cluster_frontier(scenes, mask_metric, eps, existing=existing, max_new_centers=cap)
        slow = cluster_frontier(scenes, generic, eps, existing=existing, max_new_centers=cap)
        assert fast.new_centers == slow.new_centers
        assert [sorted(t) for t in fast.assignments] == [sorted(t) for t in slow.assignments]


def small_cfg(**kw):
    base = dict(
        canvas=Canvas(8, 8),
        epsilon=0.2,
        beam_width=32,
        c_max=3,
        time_budget=120.0,
        memory_budget=256 * 1024 * 1024,
    )
    base.update(kw)
    return SynthConfig(**base)


def test_primitives_only_cost1():
    canvas = Canvas(8, 8)
    goal = evaluate(random_wf_expr(random.Random(2), canvas, 3), canvas)
    cfg = small_cfg(epsilon=0.0, c_max=1, beam_width=10)
    alphabet = Alphabet.primitives_only(canvas)
    a = construct_xfta(alphabet, goal, cfg)
    # Distinct well-formed primitive scenes, truncated to the 10 closest.
    all_prim_bits = set()
    for op in alphabet.primitives:
        e = evaluate_symbol(op, canvas)
        all_prim_bits.add(e)
    assert a.state_count() == 10
    assert len(set(a.scenes)) == 10
    ranks = sorted(
        (1.0 - (goal.bits & b).bit_count() / (goal.bits | b).bit_count() if (goal.bits | b) else 0.0, b)
        for b in all_prim_bits
    )
    expected = {b for _, b in ranks[:10]}
    assert set(a.scenes) == expected
    # Every state is a final candidate and transitions are primitive leaves.
    assert all(t.args == () for t in a.transitions)


def evaluate_symbol(op, canvas):
    from symetric.semantics import apply_operator

    return apply_operator(op, (), canvas)


def test_epsilon_zero_matches_brute_force_4x4():
    canvas = Canvas(4, 4)
    rng = random.Random(3)
    goal = evaluate(random_wf_expr(rng, canvas, 3), canvas)
    cfg = SynthConfig(
        canvas=canvas,
        epsilon=0.0,
        beam_width=None,
        finals=None,
        c_max=3,
        memory_budget=2 * 1024**3,
    )
    a = construct_xfta(Alphabet.default(canvas), goal, cfg)
    expected = brute_force_distinct_scenes(canvas, 3)
    assert a.distinct_scene_bits() == expected
    # Exact mode: every transition re-evaluates to exactly its target state.
    assert audit_invariants(a, 0.0).ok


def test_relaxed_invariant_holds_at_eps_02():
    canvas = Canvas(8, 8)
    rng = random.Random(4)
    goal = evaluate(random_wf_expr(rng, canvas, 5), canvas)
    cfg = small_cfg()
    a = construct_xfta(Alphabet.default(canvas), goal, cfg)
    report = audit_invariants(a, 0.2)
    assert report.ok
    assert report.transitions_checked == len(a.transitions)
    assert audit_invariants(a, 1.0).ok


def test_audit_detects_mutated_state():
    canvas = Canvas(8, 8)
    rng = random.Random(5)
    goal = evaluate(random_wf_expr(rng, canvas, 4), canvas)
    a = construct_xfta(Alphabet.default(canvas), goal, small_cfg())
    # Corrupt one state's scene far beyond epsilon. Every incoming transition
    # that does not also consume the victim as an argument re-evaluates to a
    # scene near the old value, hence far from the corrupted one.
    victim = a.finals[0]
    incoming = [
        i for i, t in enumerate(a.transitions) if t.out == victim and victim not in t.args
    ]
    assert incoming
    a.scenes[victim] ^= a.canvas.full_mask()
    report = audit_invariants(a, 0.2)
    assert not report.ok
    flagged = {v.transition_index for v in report.violations}
    assert set(incoming) <= flagged


def test_audit_exactly_one_violation_on_hand_built_automaton():
    canvas = Canvas(8, 8)
    goal = Scene.empty(canvas)
    circle_bits = evaluate_symbol(("circle", 4, 4, 2), canvas)
    rect_bits = evaluate_symbol(("rect", 0, 0, 1, 1), canvas)
    from symetric.xfta import Xfta

    a = Xfta(canvas=canvas, goal=goal, epsilon=0.2)
    a.scenes = [circle_bits, rect_bits]
    a.costs = [1, 1]
    a.ranks = [1.0, 1.0]
    a.transitions = [
        Transition(("circle", 4, 4, 2), (), 0),
        Transition(("rect", 0, 0, 1, 1), (), 1),
    ]
    a.finals = [0, 1]
    assert audit_invariants(a, 0.2).ok
    a.scenes[1] ^= canvas.full_mask()  # flip one out-scene beyond epsilon
    report = audit_invariants(a, 0.2)
    assert len(report.violations) == 1
    assert report.violations[0].transition_index == 1
    assert audit_invariants(a, 1.0).ok


def test_top_k_matches_oracle_sort():
    canvas = Canvas(8, 8)
    rng = random.Random(6)
    goal = evaluate(random_wf_expr(rng, canvas, 4), canvas)
    a = construct_xfta(Alphabet.default(canvas), goal, small_cfg())
    ids = list(range(a.state_count()))
    ordered = top_k(a, ids, None)
    oracle = sorted(ids, key=lambda s: (goal_rank(goal, a.scene_of(s)), a.costs[s], a.scenes[s]))
    assert ordered == oracle
    assert top_k(a, ids, 5) == oracle[:5]
    # A state equal to the goal ranks first.
    if goal.bits in a.distinct_scene_bits():
        best = ordered[0]
        assert a.scenes[best] == goal.bits


def test_construction_is_deterministic():
    canvas = Canvas(8, 8)
    rng = random.Random(7)
    goal = evaluate(random_wf_expr(rng, canvas, 5), canvas)
    cfg = small_cfg(seed=123)
    a1 = construct_xfta(Alphabet.default(canvas), goal, cfg)
    a2 = construct_xfta(Alphabet.default(canvas), goal, cfg)
    assert a1.to_json() == a2.to_json()


def test_memory_budget_enforced():
    canvas = Canvas(8, 8)
    goal = Scene.empty(canvas)
    cfg = small_cfg(memory_budget=1024)
    with pytest.raises(ResourceBudgetError) as err:
        construct_xfta(Alphabet.default(canvas), goal, cfg)
    assert err.value.kind == "memory"


def test_finals_bounded_by_k():
    canvas = Canvas(8, 8)
    rng = random.Random(8)
    goal = evaluate(random_wf_expr(rng, canvas, 4), canvas)
    cfg = small_cfg(finals=7)
    a = construct_xfta(Alphabet.default(canvas), goal, cfg)
    assert len(a.finals) == 7
    assert set(a.finals) <= set(range(a.state_count()))


def test_transition_arities_and_references_valid():
    canvas = Canvas(8, 8)
    rng = random.Random(9)
    goal = evaluate(random_wf_expr(rng, canvas, 4), canvas)
    a = construct_xfta(Alphabet.default(canvas), goal, small_cfg())
    arity = {"circle": 0, "rect": 0, "union": 2, "diff": 2, "repeat": 1}
    for t in a.transitions:
        assert len(t.args) == arity[t.op[0]]
        assert all(0 <= q < a.state_count() for q in t.args)
        assert 0 <= t.out < a.state_count()


def test_states_pairwise_separated():
    canvas = Canvas(8, 8)
    rng = random.Random(10)
    goal = evaluate(random_wf_expr(rng, canvas, 4), canvas)
    eps = 0.2
    a = construct_xfta(Alphabet.default(canvas), goal, small_cfg(epsilon=eps))
    metric = MaskMetric(goal)
    scenes = [a.scene_of(i) for i in range(a.state_count())]
    for i in range(len(scenes)):
        for j in range(i + 1, len(scenes)):
            assert metric(scenes[i], scenes[j]) > eps


def test_nocluster_ablation_yields_exact_transitions():
    canvas = Canvas(8, 8)
    rng = random.Random(11)
    goal = evaluate(random_wf_expr(rng, canvas, 4), canvas)
    cfg = small_cfg(ablation=AblationMode.NO_CLUSTER)
    a = construct_xfta(Alphabet.default(canvas), goal, cfg)
    assert audit_invariants(a, 0.0).ok
