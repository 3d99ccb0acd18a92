import logging
from enum import Enum
from functools import lru_cache, reduce

from fview.construction import construct_fview
from fview.folded_view import FView, iter_labels, relabel
from runtime.engine import PartyContext
from runtime.messages import Message

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Two-bit symbols exchanged by the quantum consistency check
ZERO, ONE, STAR, CROSS = 0b00, 0b01, 0b10, 0b11


class Verdict(str, Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"


def compose(a: int, b: int) -> int:
    """The commutative folding operator: * is neutral, x absorbs, 0 and 1 clash into x."""
    if a == STAR:
        return b
    if b == STAR:
        return a
    if a == b:
        return a
    return CROSS


def fold(symbols) -> int:
    return reduce(compose, symbols, STAR)


@lru_cache(maxsize=None)
def _fold_bits(bits: tuple[int, ...]) -> tuple[int, int]:
    symbols = [(bits[j] << 1) | bits[j + 1] for j in range(0, len(bits), 2)]
    value = fold(symbols)
    return (value >> 1, value & 1)


def _copy_pair(bits):
    return bits


def _copy_low(bits):
    return (0, bits[0])


def _star(bits):
    return (STAR >> 1, STAR & 1)


def _is_cross(bits):
    return (1 if bits == (1, 1) else 0,)


def _flip_bit(label: int) -> int:
    return label ^ 0b10


class ConsistencyAgent:
    """Decides whether the eligible parties' shared bits all agree."""

    def __init__(self, ctx: PartyContext):
        self.ctx = ctx
        self.device = ctx.quantum

    def subroutine_a(self, r0: int, s: int, eligible: bool, n: int):
        """
        Flip S (in superposition) on every branch where the eligible parties' R0 contents
        disagree, leaving every ancilla back at |0>. Takes 2(n - 1) rounds.

        Each round t forwards the folded symbol X0(t) as a two-qubit copy through every port,
        folds what comes back into X0(t+1), and after n - 1 rounds S picks up [X0(n) = x].
        The exchange is then run backwards to clean up.
        """
        device = self.device
        ports = self.ctx.out_ports
        x0 = [device.alloc(2)]
        if eligible:
            device.apply_classical([r0], x0[0], _copy_low)
        else:
            device.apply_classical([], x0[0], _star)

        received_by_round = []
        for t in range(n - 1):
            copies = [device.alloc(2) for _ in ports]
            for reg in copies:
                device.apply_classical(x0[t], reg, _copy_pair)
            inbox = yield {p: [Message.from_qubit(q) for q in copies[p - 1]] for p in ports}
            received = [[m.qid for m in inbox[p]] for p in ports]
            nxt = device.alloc(2)
            device.apply_classical(x0[t] + [q for reg in received for q in reg], nxt, _fold_bits)
            x0.append(nxt)
            received_by_round.append(received)

        device.apply_classical(x0[-1], [s], _is_cross)

        for t in reversed(range(n - 1)):
            received = received_by_round[t]
            device.apply_classical(x0[t] + [q for reg in received for q in reg], x0[t + 1], _fold_bits)
            device.assert_zero_and_free(x0[t + 1])
            inbox = yield {p: [Message.from_qubit(q) for q in received[p - 1]] for p in ports}
            for p in ports:
                original = [m.qid for m in inbox[p]]
                device.apply_classical(x0[t], original, _copy_pair)
                device.assert_zero_and_free(original)

        if eligible:
            device.apply_classical([r0], x0[0], _copy_low)
        else:
            device.apply_classical([], x0[0], _star)
        device.assert_zero_and_free(x0[0])

    def subroutine_a_tilde(self, eligible: bool, n: int, y: tuple[int, ...]):
        """
        Classical consistency check of a shared cat state using the parities y.

        Labels are (bit << 1) | eligible, with this party's own bit taken as 0; an f-view
        received on in-port j is re-expressed in this party's frame by flipping every bit
        when y_j = 1. Inconsistent iff eligible parties of both bits are seen.
        """

        def reframe(port: int, fv: FView) -> FView:
            return relabel(fv, _flip_bit) if y[port - 1] else fv

        fv = yield from construct_fview(self.ctx, n - 1, int(eligible), reframe)
        labels = set(iter_labels(fv))
        if {0b01, 0b11} <= labels:
            return Verdict.INCONSISTENT
        return Verdict.CONSISTENT
