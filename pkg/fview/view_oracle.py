"""Brute-force views, only for cross-checking the f-view machinery on small networks."""

import logging
from typing import Sequence, Union

from exceptions import OracleRefusal
from fview.folded_view import FView, NodeRef, ViewTree
from network.topology_agent import Labeling, PortNumbering, Topology
from settings import get_settings

logger = logging.getLogger(__name__)

LabelValues = Union[Labeling, Sequence[int]]


def _values(labels: LabelValues) -> Sequence[int]:
    return labels.values if isinstance(labels, Labeling) else labels


def _guard(n: int, h: int) -> None:
    settings = get_settings()
    if n > settings.oracle_max_parties or h > settings.oracle_max_depth:
        raise OracleRefusal(
            f"View oracle limited to n <= {settings.oracle_max_parties} and h <= {settings.oracle_max_depth}, "
            f"got n={n}, h={h}"
        )


def build_view(topology: Topology, ports: PortNumbering, labels: LabelValues, v: int, h: int) -> ViewTree:
    """
    Depth-h view of party v as nested tuples (label, ((i, i', subtree), ...)).

    Children follow the in-ports 1..d of v in order; i is the in-port at v and i' the
    out-port of the neighbor the edge comes from.
    """
    _guard(topology.n, h)
    values = _values(labels)

    def expand(x: int, depth: int) -> ViewTree:
        if depth == 0:
            return (values[x], ())
        branches = []
        for p in range(1, ports.in_degree(x) + 1):
            u = ports.in_neighbor(x, p)
            branches.append((p, ports.out_port(u, x), expand(u, depth - 1)))
        return (values[x], tuple(branches))

    return expand(v, h)


def view_partition(topology: Topology, ports: PortNumbering, labels: LabelValues, depth: int) -> list[int]:
    """Class index of every party under depth-`depth` view equality, numbered by first appearance."""
    classes: dict[ViewTree, int] = {}
    result = []
    for v in range(topology.n):
        tree = build_view(topology, ports, labels, v, depth)
        result.append(classes.setdefault(tree, len(classes)))
    return result


def enumerate_paths(fv: FView, ref: NodeRef, length: int) -> frozenset:
    """All labeled paths of at most `length` edges starting at `ref`."""
    node = fv.node(ref)
    paths = {(node.label,)}
    if length > 0:
        for i, ip, child in fv.children(ref):
            for tail in enumerate_paths(fv, child, length - 1):
                paths.add((node.label, (i, ip), *tail))
    return frozenset(paths)
