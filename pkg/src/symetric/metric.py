"""Distance metrics between scenes.

Two metrics with distinct roles:

* :func:`jaccard` is the plain Jaccard distance between filled-pixel sets.
  It ranks candidates against the goal (:func:`goal_rank`).
* :func:`goal_distance` compares two scenes through their pixelwise
  differences from a fixed goal scene. Scenes near the goal have small
  difference sets, so disagreements between them weigh more: distances near
  the goal are magnified. It is the clustering metric.

``goal_distance(O, q, q2)`` equals the Jaccard distance between the difference
sets ``f_O(q)`` and ``f_O(q2)``, where ``f_O(q)`` records the pixels of ``q``
that differ from ``O`` together with ``q``'s value there. Since the recorded
value at a differing pixel is always the negation of the goal's value, the
difference set is fully determined by the XOR bitmap ``q ^ O``, which is how
:class:`DiffSet` stores it. ``f_O`` is invertible: XORing the goal with the
difference bitmap reconstructs the original scene (:func:`diff_apply`).

Note that ``goal_distance(O, q, O) == 1`` for every ``q != O``: the goal's own
difference set is empty, so the goal-aware metric cannot rank candidates by
proximity to the goal. That is why ranking uses plain Jaccard.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scene import Scene


def _check_dims(a: Scene, b: Scene) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(f"scene dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")


def jaccard_masks(a: int, b: int) -> float:
    """Jaccard distance between two packed pixel sets; d(0, 0) = 0."""
    union = (a | b).bit_count()
    if union == 0:
        return 0.0
    return 1.0 - (a & b).bit_count() / union


def jaccard(q: Scene, q2: Scene) -> float:
    """Plain Jaccard distance in [0, 1] between filled-pixel sets."""
    _check_dims(q, q2)
    return jaccard_masks(q.bits, q2.bits)


@dataclass(frozen=True, slots=True)
class DiffSet:
    """The pixels of a scene that differ from a goal, as a packed XOR bitmap.

    A pixel (u, v) is in the set iff ``bits`` has bit ``v * width + u`` set;
    its recorded boolean is the negation of the goal's value there.
    """

    width: int
    height: int
    bits: int
    goal_bits: int

    def __len__(self) -> int:
        return self.bits.bit_count()

    def triples(self) -> frozenset[tuple[int, int, bool]]:
        """Explicit (u, v, b) view, mainly for tests and debugging."""
        out = []
        bits = self.bits
        while bits:
            low = bits & -bits
            idx = low.bit_length() - 1
            out.append((idx % self.width, idx // self.width, not (self.goal_bits >> idx & 1)))
            bits ^= low
        return frozenset(out)


def diff_set(goal: Scene, q: Scene) -> DiffSet:
    """f_goal(q): the differences of q from the goal."""
    _check_dims(goal, q)
    return DiffSet(goal.width, goal.height, q.bits ^ goal.bits, goal.bits)


def diff_apply(goal: Scene, d: DiffSet) -> Scene:
    """Reconstruct the unique scene q with diff_set(goal, q) == d."""
    if (goal.width, goal.height) != (d.width, d.height):
        raise ValueError("diff set does not match goal dimensions")
    return Scene(goal.width, goal.height, goal.bits ^ d.bits)


def goal_distance(goal: Scene, q: Scene, q2: Scene) -> float:
    """Goal-aware distance: Jaccard between difference-from-goal sets."""
    _check_dims(goal, q)
    _check_dims(goal, q2)
    return jaccard_masks(q.bits ^ goal.bits, q2.bits ^ goal.bits)


def goal_rank(goal: Scene, q: Scene) -> float:
    """Ranking distance of a candidate against the goal (plain Jaccard)."""
    return jaccard(goal, q)


class MaskMetric:
    """A pair metric on scenes reduced to Jaccard on derived bitmaps.

    With ``goal=None`` this is plain Jaccard; with a goal it is the goal-aware
    metric (Jaccard on XOR-with-goal bitmaps). ``key()`` exposes the derived
    bitmap so indexes can work on packed integers directly.
    """

    def __init__(self, goal: Scene | None = None):
        self.goal = goal
        self._goal_bits = 0 if goal is None else goal.bits

    def key(self, scene: Scene) -> int:
        return scene.bits ^ self._goal_bits

    def key_of_bits(self, bits: int) -> int:
        return bits ^ self._goal_bits

    def distance(self, a: Scene, b: Scene) -> float:
        if self.goal is not None:
            _check_dims(self.goal, a)
            _check_dims(self.goal, b)
        else:
            _check_dims(a, b)
        return jaccard_masks(a.bits ^ self._goal_bits, b.bits ^ self._goal_bits)

    def __call__(self, a: Scene, b: Scene) -> float:
        return self.distance(a, b)
