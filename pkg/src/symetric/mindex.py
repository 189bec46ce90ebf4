"""Metric indexes over scene centers supporting exact epsilon-range queries.

All indexes share one contract: ``insert(center)`` returns an integer handle,
and ``range_query(q, eps)`` returns the handles of exactly the inserted
centers within ``eps`` of ``q`` (ascending, no false positives or negatives).

Three realizations:

* :class:`LinearScanIndex` — the reference; scans every center.
* :class:`MTreeIndex` — a ball-tree over a generic metric, pruning subtrees
  with the triangle inequality via per-entry pivot distances and covering
  radii.
* :class:`PopcountBandIndex` — exploits the structure of Jaccard-on-bitmap
  metrics: two bitmaps with population counts p and c can only be within
  eps if ``min(p, c) / max(p, c) >= 1 - eps``, so only a popcount band of
  candidates needs exact distances.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from typing import Callable

from .metric import MaskMetric, jaccard_masks
from .scene import Scene

Metric = Callable[[Scene, Scene], float]


class LinearScanIndex:
    """Reference index: exact by construction."""

    def __init__(self, metric: Metric):
        self.metric = metric
        self._centers: list[Scene] = []

    def __len__(self) -> int:
        return len(self._centers)

    def center(self, handle: int) -> Scene:
        return self._centers[handle]

    def insert(self, center: Scene) -> int:
        self._centers.append(center)
        return len(self._centers) - 1

    def range_query(self, q: Scene, eps: float) -> list[int]:
        metric = self.metric
        return [i for i, c in enumerate(self._centers) if metric(c, q) <= eps]


class _Entry:
    """M-tree entry: a leaf object or a routing pivot with a subtree."""

    __slots__ = ("scene", "handle", "parent_dist", "radius", "child")

    def __init__(self, scene, handle=None, parent_dist=0.0, radius=0.0, child=None):
        self.scene = scene
        self.handle = handle
        self.parent_dist = parent_dist
        self.radius = radius
        self.child = child


class _Node:
    __slots__ = ("entries", "is_leaf")

    def __init__(self, entries: list[_Entry], is_leaf: bool):
        self.entries = entries
        self.is_leaf = is_leaf


class MTreeIndex:
    """Metric tree with covering-radius pruning.

    Node capacity and the split policy only affect performance; range_query
    results are exact for any metric satisfying the triangle inequality.
    """

    def __init__(self, metric: Metric, node_capacity: int = 8):
        if node_capacity < 2:
            raise ValueError("node capacity must be >= 2")
        self.metric = metric
        self.node_capacity = node_capacity
        self._root = _Node([], is_leaf=True)
        self._centers: list[Scene] = []

    def __len__(self) -> int:
        return len(self._centers)

    def center(self, handle: int) -> Scene:
        return self._centers[handle]

    def insert(self, center: Scene) -> int:
        handle = len(self._centers)
        self._centers.append(center)
        entry = _Entry(center, handle=handle)
        path: list[tuple[_Node, _Entry]] = []
        node = self._root
        while not node.is_leaf:
            best = None
            best_key = None
            for routing in node.entries:
                d = self.metric(routing.scene, center)
                # Prefer subtrees that need no radius growth, then nearest.
                key = (0.0, d) if d <= routing.radius else (d - routing.radius, d)
                if best_key is None or key < best_key:
                    best, best_key, best_d = routing, key, d
            best.radius = max(best.radius, best_d)
            path.append((node, best))
            node = best.child
        parent_pivot = path[-1][1].scene if path else None
        entry.parent_dist = self.metric(parent_pivot, center) if parent_pivot is not None else 0.0
        node.entries.append(entry)
        if len(node.entries) > self.node_capacity:
            self._split(node, path)
        return handle

    def _split(self, node: _Node, path: list[tuple[_Node, _Entry]]):
        entries = node.entries
        # Promote the farthest pair (deterministic; ties by entry order).
        best = (0, 1)
        best_d = -1.0
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                d = self.metric(entries[i].scene, entries[j].scene)
                if d > best_d:
                    best_d = d
                    best = (i, j)
        p1, p2 = entries[best[0]].scene, entries[best[1]].scene
        part1: list[_Entry] = []
        part2: list[_Entry] = []
        for e in entries:
            d1 = self.metric(p1, e.scene)
            d2 = self.metric(p2, e.scene)
            if d1 <= d2:
                e.parent_dist = d1
                part1.append(e)
            else:
                e.parent_dist = d2
                part2.append(e)
        n1 = _Node(part1, node.is_leaf)
        n2 = _Node(part2, node.is_leaf)
        r1 = _Entry(p1, radius=self._covering_radius(n1), child=n1)
        r2 = _Entry(p2, radius=self._covering_radius(n2), child=n2)
        if not path:
            self._root = _Node([r1, r2], is_leaf=False)
            return
        parent, routing = path[-1]
        parent.entries.remove(routing)
        grand_pivot = path[-2][1].scene if len(path) >= 2 else None
        for r in (r1, r2):
            r.parent_dist = self.metric(grand_pivot, r.scene) if grand_pivot is not None else 0.0
            parent.entries.append(r)
        if len(parent.entries) > self.node_capacity:
            self._split(parent, path[:-1])

    def _covering_radius(self, node: _Node) -> float:
        if node.is_leaf:
            return max((e.parent_dist for e in node.entries), default=0.0)
        return max((e.parent_dist + e.radius for e in node.entries), default=0.0)

    def range_query(self, q: Scene, eps: float) -> list[int]:
        out: list[int] = []
        self._range(self._root, q, eps, None, out)
        out.sort()
        return out

    # Pruning slack against float rounding; membership checks stay exact.
    _SLACK = 1e-12

    def _range(self, node: _Node, q: Scene, eps: float, q_parent_dist, out: list[int]):
        for e in node.entries:
            if q_parent_dist is not None:
                # |d(q, parent) - d(e, parent)| lower-bounds d(q, e).
                if abs(q_parent_dist - e.parent_dist) > eps + e.radius + self._SLACK:
                    continue
            d = self.metric(e.scene, q)
            if node.is_leaf:
                if d <= eps:
                    out.append(e.handle)
            elif d <= eps + e.radius + self._SLACK:
                self._range(e.child, q, eps, d, out)


class PopcountBandIndex:
    """Exact index for Jaccard-on-bitmap metrics using a popcount band filter.

    Centers are kept sorted by the popcount of their derived bitmaps; a range
    query only computes exact distances inside the feasible popcount band.
    """

    def __init__(self, metric: MaskMetric):
        self.metric = metric
        # Parallel sorted structure: (popcount, seq) -> key bits, handle.
        self._order: list[tuple[int, int]] = []
        self._keys: list[int] = []
        self._handles: list[int] = []
        self._centers: list[Scene] = []

    def __len__(self) -> int:
        return len(self._centers)

    def center(self, handle: int) -> Scene:
        return self._centers[handle]

    def insert(self, center: Scene) -> int:
        handle = len(self._centers)
        self._centers.append(center)
        key = self.metric.key(center)
        tag = (key.bit_count(), handle)
        pos = bisect_left(self._order, tag)
        self._order.insert(pos, tag)
        self._keys.insert(pos, key)
        self._handles.insert(pos, handle)
        return handle

    def range_query(self, q: Scene, eps: float) -> list[int]:
        qkey = self.metric.key(q)
        p = qkey.bit_count()
        if eps >= 1.0:
            lo, hi = 0, len(self._order)
        else:
            # The band is a prefilter, so round outward against float slop.
            keep = 1.0 - eps
            lo_count = max(0, math.ceil(p * keep - 1e-9))
            hi_count = math.floor(p / keep + 1e-9) if p else 0
            lo = bisect_left(self._order, (lo_count, -1))
            hi = bisect_right(self._order, (hi_count, 1 << 62))
        keys = self._keys
        handles = self._handles
        out = [handles[i] for i in range(lo, hi) if jaccard_masks(keys[i], qkey) <= eps]
        out.sort()
        return out
