import logging
from collections import deque
from functools import lru_cache
from typing import Iterable, Optional

from exceptions import InconsistentCountError, UsageError
from fview.folded_view import FView, NodeRef, traverse

logger = logging.getLogger(__name__)


def path_set_equal(fv: FView, u: NodeRef, w: NodeRef, n: int, length: Optional[int] = None) -> bool:
    """
    Whether the sub-f-views at u and w define the same labeled path set of `length` edges
    (n - 1 by default).

    Builds the node map phi from u's side to w's side breadth-first, checking labels,
    out-degrees, edge labels and that phi stays a function.
    """
    length = n - 1 if length is None else length
    if u[0] > w[0]:
        u, w = w, u
    if u[0] + length > fv.depth or w[0] + length > fv.depth:
        raise UsageError(f"Paths of length {length} from {u} and {w} leave a depth-{fv.depth} f-view")
    phi = {u: w}
    queue = deque([u])
    while queue:
        a = queue.popleft()
        b = phi[a]
        node_a, node_b = fv.node(a), fv.node(b)
        if node_a.label != node_b.label:
            return False
        if a[0] - u[0] == length:
            continue
        if len(node_a.edges) != len(node_b.edges):
            return False
        for (i, ip, ta), (j, jp, tb) in zip(node_a.edges, node_b.edges):
            if (i, ip) != (j, jp):
                return False
            child_a, child_b = (a[0] + 1, ta), (b[0] + 1, tb)
            mapped = phi.get(child_a)
            if mapped is None:
                phi[child_a] = child_b
                queue.append(child_a)
            elif mapped != child_b:
                return False
    return True


@lru_cache(maxsize=512)
def view_representatives(fv: FView, n: int) -> tuple[NodeRef, ...]:
    """
    One node per distinct length-(n-1) path set among the nodes of depth <= n-1,
    the first one met in breadth-first order.
    """
    reps: list[NodeRef] = []
    for ref, depth in traverse(fv):
        if depth > n - 1:
            break
        if all(not path_set_equal(fv, rep, ref, n) for rep in reps):
            reps.append(ref)
    return tuple(reps)


def count_views(fv: FView, labels: Iterable[int], n: int) -> int:
    """Number of distinct views among the parties whose label is in `labels`."""
    wanted = set(labels)
    if not wanted:
        return 0
    return sum(1 for ref in view_representatives(fv, n) if fv.node(ref).label in wanted)


def count_parties(fv: FView, labels: Iterable[int], n: int) -> int:
    """
    Number of parties whose label is in `labels`, as n * |views with such labels| / |views|.

    Raises:
        InconsistentCountError: the quotient is not an integer (n is not the true party count)
    """
    total = len(view_representatives(fv, n))
    part = count_views(fv, labels, n)
    if (n * part) % total:
        raise InconsistentCountError(f"{n} * {part} / {total} is not an integer")
    return n * part // total
