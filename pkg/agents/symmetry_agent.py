import logging

from fview.construction import construct_fview
from fview.counting import count_parties
from quantum.gates import build_gate
from runtime.engine import PartyContext

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def _copy(bits):
    return (bits[0],)


class SymmetryAgent:
    """Turns a k-party cat state into a state on which the eligible parties cannot all agree."""

    def __init__(self, ctx: PartyContext):
        self.ctx = ctx
        self.device = ctx.quantum

    def subroutine_b(self, r0: int, r1: int, k: int) -> None:
        """Even k: U_k on R0. Odd k: copy R0 into R1, then V_k on (R0, R1)."""
        if k < 2:
            return
        if k % 2 == 0:
            self.device.apply_1q(build_gate("U_k", k=k), r0)
        else:
            self.device.apply_classical([r0], [r1], _copy)
            self.device.apply_2q(build_gate("V_k", k=k), r0, r1)

    def subroutine_b_tilde(
        self,
        r0: int,
        r1: int,
        eligible: bool,
        k: int,
        n: int,
        consistent: bool = True,
        count: bool = True,
    ):
        """
        Cut the n-party cat down to the eligible parties and run subroutine_b on it.

        Ineligible parties measure R0 in the +/- basis; the parity of their '-' outcomes,
        counted on a depth 2n-1 f-view, tells the eligible parties whether to fix the
        relative phase with W_k first. The f-view rounds always run; with consistent=False
        (or count=False) nothing quantum happens and no count is taken.

        Returns:
            the number of '-' outcomes, or None when no count was taken
        """
        act = consistent and count
        w = 0
        if act and not eligible:
            w = self.device.measure_hadamard(r0)
        fv = yield from construct_fview(self.ctx, 2 * n - 1, w)
        if not act:
            return None
        minus = count_parties(fv, [1], n)
        if eligible:
            if minus % 2:
                self.device.apply_1q(build_gate("W_k", k=k), r0)
            self.subroutine_b(r0, r1, k)
        return minus
