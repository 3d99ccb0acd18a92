import logging

from fview.construction import construct_fview
from fview.counting import count_parties
from runtime.engine import PartyContext
from runtime.messages import Message

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

Z_VALUES = (0, 1, 2, 3)
Z_WIDTH = 3


class VotingAgent:
    """Classical agreement on the measured values z in {-1, 0, 1, 2, 3}."""

    def __init__(self, ctx: PartyContext):
        self.ctx = ctx

    def subroutine_c(self, z: int, n: int):
        """Flood the maximum of z for n - 1 rounds; every party ends with the global maximum."""
        best = z + 1
        for _ in range(n - 1):
            inbox = yield {p: Message.from_int(best, Z_WIDTH) for p in self.ctx.out_ports}
            for p in self.ctx.in_ports:
                for msg in inbox[p]:
                    best = max(best, msg.to_int())
        return best - 1

    def subroutine_c_tilde(self, z: int, n: int, count: bool = True):
        """
        Find the least frequent measured value among the eligible parties.

        Counts c_i for every z value i on a depth 2n-1 f-view labeled z + 1; a value nobody
        holds counts as n. Ties go to the smallest value.

        Returns:
            (z_minor, c_minor), or (None, None) when count=False
        """
        fv = yield from construct_fview(self.ctx, 2 * n - 1, z + 1)
        if not count:
            return None, None
        counts = {}
        for value in Z_VALUES:
            counts[value] = count_parties(fv, [value + 1], n) or n
        z_minor = min(Z_VALUES, key=lambda value: (counts[value], value))
        logger.debug(f"Value counts {counts}, minority {z_minor}")
        return z_minor, counts[z_minor]
