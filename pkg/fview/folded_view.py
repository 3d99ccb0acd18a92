"""Folded views: leveled DAGs with labeled nodes and port-labeled edges.

A node is addressed by its (level, index) pair. Every edge of a level-j node points to a
node of level j+1 and carries the label (i, i'): the port at the node and the port at the
neighbor it came from.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import orjson

from exceptions import FViewDecodeError, MergeError, UsageError

logger = logging.getLogger(__name__)

Edge = tuple[int, int, int]
NodeRef = tuple[int, int]
ViewTree = tuple  # (label, ((i, i', ViewTree), ...))


@dataclass(frozen=True)
class FNode:
    label: int
    edges: tuple[Edge, ...] = ()

    @property
    def key(self) -> tuple:
        return (self.label, self.edges)


@dataclass(frozen=True)
class FView:
    levels: tuple[tuple[FNode, ...], ...]

    @classmethod
    def leaf(cls, label: int) -> "FView":
        return cls(((FNode(label),),))

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def root(self) -> FNode:
        return self.levels[0][0]

    def node(self, ref: NodeRef) -> FNode:
        level, idx = ref
        try:
            return self.levels[level][idx]
        except IndexError:
            raise UsageError(f"No node {ref} in a depth-{self.depth} f-view") from None

    def node_count(self) -> int:
        return sum(len(level) for level in self.levels)

    def level_sizes(self) -> list[int]:
        return [len(level) for level in self.levels]

    def children(self, ref: NodeRef) -> list[tuple[int, int, NodeRef]]:
        level, _ = ref
        return [(i, ip, (level + 1, t)) for i, ip, t in self.node(ref).edges]


def join(label: int, children: Sequence[tuple[int, int, FView]]) -> FView:
    """New root labeled `label` whose edges (i, i') lead to the roots of `children`."""
    children = sorted(children, key=lambda c: c[0])
    levels: list[list[FNode]] = [[]]
    root_edges = []
    for i, ip, child in children:
        while len(levels) <= child.depth + 1:
            levels.append([])
        # offsets[j]: where the child's level j starts inside levels[j + 1]
        offsets = [len(levels[j + 1]) for j in range(child.depth + 1)]
        root_edges.append((i, ip, offsets[0]))
        for j, level in enumerate(child.levels):
            below = offsets[j + 1] if j < child.depth else 0
            for node in level:
                levels[j + 1].append(FNode(node.label, tuple((a, b, t + below) for a, b, t in node.edges)))
    levels[0] = [FNode(label, tuple(root_edges))]
    return FView(tuple(tuple(level) for level in levels))


def relabel(fv: FView, mapping: Callable[[int], int]) -> FView:
    """Apply `mapping` to every node label and re-minimize."""
    return minimize(FView(tuple(tuple(FNode(mapping(n.label), n.edges) for n in level) for level in fv.levels)))


def truncate(fv: FView, h: int) -> FView:
    if h < 0:
        raise UsageError(f"Depth must be nonnegative, got {h}")
    if h >= fv.depth:
        return fv
    kept = list(fv.levels[: h + 1])
    kept[h] = tuple(FNode(n.label) for n in kept[h])
    return FView(tuple(kept))


def _prune_unreachable(fv: FView) -> FView:
    reach = [{0}]
    for j in range(fv.depth):
        nxt = set()
        for idx in reach[j]:
            nxt.update(t for _, _, t in fv.levels[j][idx].edges)
        reach.append(nxt)
    if all(len(r) == len(level) for r, level in zip(reach, fv.levels)):
        return fv
    levels = []
    remap_below: dict[int, int] = {}
    for j in range(fv.depth, -1, -1):
        order = sorted(reach[j])
        remap = {old: new for new, old in enumerate(order)}
        levels.append(
            tuple(
                FNode(fv.levels[j][old].label, tuple((i, ip, remap_below[t]) for i, ip, t in fv.levels[j][old].edges))
                for old in order
            )
        )
        remap_below = remap
    return FView(tuple(reversed(levels)))


def minimize(fv: FView, h: int = None) -> FView:
    """
    Minimal canonical form: merge every pair of same-level nodes with equal label and
    equal edges, bottom-up, and sort each level by (label, edges).

    Args:
        fv: any valid f-view
        h: optional depth to truncate to first

    Returns:
        The minimal f-view; equal f-views have equal minimal forms
    """
    if h is not None:
        fv = truncate(fv, h)
    fv = _prune_unreachable(fv)
    new_levels: list[tuple[FNode, ...]] = []
    remap_below: dict[int, int] = {}
    for j in range(fv.depth, -1, -1):
        keyed = []
        for node in fv.levels[j]:
            edges = tuple(sorted((i, ip, remap_below[t]) for i, ip, t in node.edges))
            keyed.append((node.label, edges))
        unique = sorted(set(keyed))
        position = {key: idx for idx, key in enumerate(unique)}
        remap_below = {old: position[key] for old, key in enumerate(keyed)}
        new_levels.append(tuple(FNode(label, edges) for label, edges in unique))
    return FView(tuple(reversed(new_levels)))


def _merge_violation(fv: FView, u: NodeRef, w: NodeRef) -> str:
    if u[0] != w[0]:
        return "nodes are at different depths"
    if u == w:
        return "a node cannot be merged with itself"
    a, b = fv.node(u), fv.node(w)
    if a.label != b.label:
        return "labels differ"
    if len(a.edges) != len(b.edges):
        return "out-degrees differ"
    for ea, eb in zip(sorted(a.edges), sorted(b.edges)):
        if ea != eb:
            return f"edges {ea} and {eb} differ"
    return ""


def merge_nodes(fv: FView, u: NodeRef, w: NodeRef) -> FView:
    """Remove w and point its incoming edges at u."""
    problem = _merge_violation(fv, u, w)
    if problem:
        raise MergeError(f"Cannot merge {u} and {w}: {problem}")
    level, gone = w
    keep = u[1]

    def shift(t: int) -> int:
        if t == gone:
            t = keep
        return t - 1 if t > gone else t

    levels = list(fv.levels)
    levels[level] = tuple(n for idx, n in enumerate(fv.levels[level]) if idx != gone)
    if level > 0:
        levels[level - 1] = tuple(
            FNode(n.label, tuple((i, ip, shift(t)) for i, ip, t in n.edges)) for n in fv.levels[level - 1]
        )
    return FView(tuple(levels))


def mergeable_pairs(fv: FView) -> list[tuple[NodeRef, NodeRef]]:
    pairs = []
    for j, level in enumerate(fv.levels):
        for a in range(len(level)):
            for b in range(a + 1, len(level)):
                if not _merge_violation(fv, (j, a), (j, b)):
                    pairs.append(((j, a), (j, b)))
    return pairs


def traverse(fv: FView, start: NodeRef = (0, 0)) -> list[tuple[NodeRef, int]]:
    """Breadth-first order of the nodes reachable from `start`, with their depths."""
    seen = {start}
    order = []
    queue = deque([start])
    while queue:
        ref = queue.popleft()
        order.append((ref, ref[0]))
        for _, _, child in fv.children(ref):
            if child not in seen:
                seen.add(child)
                queue.append(child)
    return order


# ── Wire format ─────────────────────────────────────────────────────────────


def serialize(fv: FView) -> bytes:
    """
    Canonical bytes: a JSON list of levels, each a list of flat nodes
    [label, i1, i1', t1, i2, i2', t2, ...], nodes sorted by (label, edges) bottom-up.
    """
    fv = _canonical_order(fv)
    return orjson.dumps([[[n.label, *[x for e in n.edges for x in e]] for n in level] for level in fv.levels])


def _canonical_order(fv: FView) -> FView:
    new_levels: list[tuple[FNode, ...]] = []
    remap_below: dict[int, int] = {}
    for j in range(fv.depth, -1, -1):
        keyed = []
        for old, node in enumerate(fv.levels[j]):
            edges = tuple(sorted((i, ip, remap_below[t]) for i, ip, t in node.edges))
            keyed.append(((node.label, edges), old))
        keyed.sort()
        remap_below = {old: new for new, (_, old) in enumerate(keyed)}
        new_levels.append(tuple(FNode(label, edges) for (label, edges), _ in keyed))
    return FView(tuple(reversed(new_levels)))


def deserialize(data: Union[bytes, str]) -> FView:
    try:
        raw = orjson.loads(data)
    except orjson.JSONDecodeError as e:
        raise FViewDecodeError(f"Not valid JSON: {e}") from e
    if not isinstance(raw, list) or not raw or not isinstance(raw[0], list) or len(raw[0]) != 1:
        raise FViewDecodeError("Expected a non-empty list of levels with a single root")
    levels = []
    for j, level in enumerate(raw):
        if not isinstance(level, list) or not level:
            raise FViewDecodeError(f"Level {j} is empty or not a list")
        nodes = []
        for flat in level:
            if (
                not isinstance(flat, list)
                or not flat
                or (len(flat) - 1) % 3
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in flat)
            ):
                raise FViewDecodeError(f"Malformed node {flat!r} at level {j}")
            edges = tuple(tuple(flat[k : k + 3]) for k in range(1, len(flat), 3))
            below = len(raw[j + 1]) if j + 1 < len(raw) else 0
            if any(not 0 <= t < below for _, _, t in edges):
                raise FViewDecodeError(f"Edge target out of range at level {j}")
            if list(edges) != sorted(edges):
                raise FViewDecodeError(f"Edges out of order at level {j}")
            nodes.append(FNode(flat[0], edges))
        if [n.key for n in nodes] != sorted(n.key for n in nodes):
            raise FViewDecodeError(f"Level {j} is not in canonical order")
        levels.append(tuple(nodes))
    fv = FView(tuple(levels))
    if _prune_unreachable(fv) is not fv:
        raise FViewDecodeError("F-view has unreachable nodes")
    return fv


# ── Unfolded views ──────────────────────────────────────────────────────────


def unfold(fv: FView, ref: NodeRef = (0, 0)) -> ViewTree:
    node = fv.node(ref)
    return (node.label, tuple((i, ip, unfold(fv, child)) for i, ip, child in fv.children(ref)))


def fold(tree: ViewTree) -> FView:
    label, branches = tree
    return minimize(join(label, [(i, ip, fold(sub)) for i, ip, sub in branches]))


def tree_size(tree: ViewTree) -> int:
    return 1 + sum(tree_size(sub) for _, _, sub in tree[1])


def iter_labels(fv: FView) -> Iterable[int]:
    for level in fv.levels:
        for node in level:
            yield node.label
