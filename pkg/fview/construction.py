import logging
from typing import Callable, Optional

from fview.folded_view import FView, deserialize, join, minimize, serialize
from runtime.engine import PartyContext
from runtime.messages import Message

logger = logging.getLogger(__name__)

PortTransform = Callable[[int, FView], FView]


def port_tag_width(degree: int) -> int:
    return max(1, degree.bit_length())


def construct_fview(ctx: PartyContext, h: int, label: int, transform: Optional[PortTransform] = None):
    """
    Build this party's minimal f-view of depth h in exactly h rounds.

    Every round the current f-view goes out on each out-port together with the port number;
    the copies received on in-ports 1..d become the children of a fresh root labeled `label`,
    the edge from in-port i carrying (i, sender's port).

    Args:
        ctx: party context
        h: depth (and number of rounds)
        label: this party's node label
        transform: optional (in-port, received f-view) -> f-view applied before joining

    Use as `fv = yield from construct_fview(ctx, h, label)`.
    """
    current = FView.leaf(label)
    width = port_tag_width(ctx.out_degree)
    for _ in range(h):
        wire = serialize(current)
        inbox = yield {q: [Message.from_int(q, width), Message.from_bytes(wire)] for q in ctx.out_ports}
        children = []
        for p in ctx.in_ports:
            tag, body = inbox[p][0], inbox[p][1]
            received = deserialize(body.payload)
            if transform is not None:
                received = transform(p, received)
            children.append((p, tag.to_int(), received))
        current = minimize(join(label, children))
    return current
