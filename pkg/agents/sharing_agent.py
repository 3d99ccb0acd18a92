import logging
from dataclasses import dataclass

from exceptions import UsageError
from quantum.gates import build_gate
from runtime.engine import PartyContext
from runtime.messages import Inbox, Message

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

_H = build_gate("hadamard")
_X = build_gate("x")


def _copy(bits):
    return (bits[0],)


def _xor(bits):
    return (bits[0] ^ bits[1],)


@dataclass
class CatShare:
    """One party's half-finished sharing: its own cat qubit and the copies it sends out."""

    r0: int
    outgoing: list[int]


class SharingAgent:
    """
    Shares a cat-like state (|x> + |x'>)/sqrt(2) over all parties, x' the complement of x,
    plus the parities y between each party and its neighbors.

    On undirected networks this is the neighbor-exchange sharing; on directed networks the
    copies go out through out-ports and y is indexed by in-ports.
    """

    def __init__(self, ctx: PartyContext):
        self.ctx = ctx
        self.device = ctx.quantum

    def prepare(self) -> CatShare:
        """Build a (d+1)-cat on a fresh R0 and one copy per out-port."""
        r0 = self.device.alloc()[0]
        outgoing = self.device.alloc(self.ctx.out_degree)
        self.device.apply_1q(_H, r0)
        for q in outgoing:
            self.device.apply_classical([r0], [q], _copy)
        return CatShare(r0, outgoing)

    def outbox(self, shares: list[CatShare]) -> dict[int, list[Message]]:
        return {p: [Message.from_qubit(share.outgoing[p - 1]) for share in shares] for p in self.ctx.out_ports}

    def finish(self, share: CatShare, inbox: Inbox, index: int = 0) -> tuple[int, tuple[int, ...]]:
        """
        Compare R0 with the qubit received on every in-port, measure the parities and
        return the received qubits to |0>.

        Returns:
            (R0, y) with y[p - 1] the parity measured for in-port p
        """
        device = self.device
        y = []
        for p in self.ctx.in_ports:
            received = inbox[p][index].qid
            s = device.alloc()[0]
            device.apply_classical([share.r0, received], [s], _xor)
            bit = device.measure([s])[0]
            device.release([s])
            device.apply_classical([share.r0], [received], _copy)
            if bit:
                device.apply_1q(_X, received)
            device.assert_zero_and_free([received])
            y.append(bit)
        return share.r0, tuple(y)

    def share(self, count: int = 1):
        """
        Run `count` sharings in parallel in a single round of quantum communication.

        Use as `pairs = yield from agent.share(s)`; returns a list of (R0, y).
        """
        shares = [self.prepare() for _ in range(count)]
        inbox = yield self.outbox(shares)
        results = [self.finish(share, inbox, i) for i, share in enumerate(shares)]
        logger.debug(f"Shared {count} cat states over {self.ctx.in_degree} in-ports")
        return results


def subroutine_q(ctx: PartyContext):
    """Undirected sharing; `r0, y = yield from subroutine_q(ctx)`."""
    if ctx.directed:
        raise UsageError("Undirected sharing called on a directed network; use subroutine_q_prime")
    (result,) = yield from SharingAgent(ctx).share(1)
    return result


def subroutine_q_prime(ctx: PartyContext):
    """Directed sharing; y has one bit per in-port."""
    (result,) = yield from SharingAgent(ctx).share(1)
    return result
