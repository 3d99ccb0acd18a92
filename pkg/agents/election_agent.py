import logging
from dataclasses import dataclass
from typing import Optional

from agents.consistency_agent import ConsistencyAgent, Verdict
from agents.sharing_agent import SharingAgent
from agents.symmetry_agent import SymmetryAgent
from agents.voting_agent import VotingAgent
from exceptions import InconsistentCountError, ParameterError, ProtocolError
from quantum.gates import build_gate
from runtime.engine import PartyContext, multiplex

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

ELIGIBLE = "eligible"
INELIGIBLE = "ineligible"
ERROR = "error"

GENERALIZED_MODES = ("parallel", "sequential")

_H = build_gate("hadamard")


def ceil_log2(n: int) -> int:
    return max(1, (n - 1).bit_length())


@dataclass
class PhaseOutcome:
    status: str
    k: int
    verdict: str
    z: int
    z_minor: Optional[int] = None
    c_minor: Optional[int] = None
    minus: Optional[int] = None
    error: bool = False


class ElectionAgent:
    """
    Runs the election protocols for one party. Every protocol method is a generator
    meant to be driven by the round engine (directly or through `yield from`).
    """

    def __init__(self, ctx: PartyContext):
        self.ctx = ctx
        self.device = ctx.quantum
        self.sharing = SharingAgent(ctx)
        self.consistency = ConsistencyAgent(ctx)
        self.symmetry = SymmetryAgent(ctx)
        self.voting = VotingAgent(ctx)

    def _close(self, registers: list[int]) -> None:
        """Measure whatever is left of a phase's registers and give them back."""
        for q in registers:
            self.device.measure([q])
            self.device.release([q])

    # ── Exact election with the consistency-check circuit ───────────────────

    def algorithm1(self, status: str, n: int):
        """
        One phase per k = n, n-1, ..., 2: check whether the eligible parties' fresh random
        bits agree, break the symmetry with subroutine_b if they do, then keep only the
        holders of the largest measured value. Works with any n at least the true count.
        """
        for k in range(n, 1, -1):
            eligible = status == ELIGIBLE
            r0, r1, s = self.device.alloc(3)
            if eligible:
                self.device.apply_1q(_H, r0)
            yield from self.consistency.subroutine_a(r0, s, eligible, n)
            consistent = self.device.measure([s])[0] == 0
            if consistent and eligible:
                self.symmetry.subroutine_b(r0, r1, k)
            z = -1
            if eligible:
                b0, b1 = self.device.measure([r0, r1])
                z = 2 * b0 + b1
            z_max = yield from self.voting.subroutine_c(z, n)
            before = status
            if z != z_max:
                status = INELIGIBLE
            self._close([r0, r1, s])
            self.ctx.trace(
                "phase",
                protocol="alg1",
                m=n,
                phase=n - k + 1,
                k=k,
                status_before=before,
                status=status,
                verdict=(Verdict.CONSISTENT if consistent else Verdict.INCONSISTENT).value,
                z=z,
                z_max=z_max,
            )
        return status

    # ── Exact election from shared cat states ───────────────────────────────

    def _phase(self, phase: int, r0: int, y: tuple, status: str, k: int, m: int, protocol: str, idle: bool, tolerant: bool):
        """
        One phase of the cat-state election. The round schedule is the same for every party
        whatever happens locally: consistency f-view (m-1 rounds), parity count (2m-1),
        minority count (2m-1).
        """
        eligible = status == ELIGIBLE and not idle
        verdict = yield from self.consistency.subroutine_a_tilde(eligible, m, y)
        consistent = verdict is Verdict.CONSISTENT
        registers = [r0]
        r1 = None
        if not idle:
            r1 = self.device.alloc()[0]
            registers.append(r1)

        error = False
        minus = None
        try:
            minus = yield from self.symmetry.subroutine_b_tilde(
                r0, r1, eligible, k, m, consistent=consistent, count=not idle
            )
        except InconsistentCountError:
            if not tolerant:
                raise
            logger.warning(f"Parity count is not an integer with m={m} in phase {phase}")
            error = True

        z = -1
        if eligible and not error:
            b0, b1 = self.device.measure([r0, r1])
            z = 2 * b0 + b1

        z_minor = c_minor = None
        try:
            z_minor, c_minor = yield from self.voting.subroutine_c_tilde(z, m, count=not (idle or error))
        except InconsistentCountError:
            if not tolerant:
                raise
            logger.warning(f"Value count is not an integer with m={m} in phase {phase}")
            error = True

        new_status, new_k = status, k
        if not (idle or error):
            if z != z_minor:
                new_status = INELIGIBLE
            new_k = c_minor
        self._close(registers)
        if not idle:
            self.ctx.trace(
                "phase",
                protocol=protocol,
                m=m,
                phase=phase,
                k=k,
                status_before=status,
                status=new_status,
                verdict=verdict.value,
                z=z,
                z_minor=z_minor,
                c_minor=c_minor,
                minus=minus,
                error=error,
            )
        return PhaseOutcome(new_status, new_k, verdict.value, z, z_minor, c_minor, minus, error)

    def algorithm2(self, status: str, n: int):
        """
        Share ceil(log2 n) cat states in the first round, then use them one per phase;
        each phase at least halves the eligible set. Only round 1 moves qubits.
        """
        s = ceil_log2(n)
        shared = yield from self.sharing.share(s)
        k = n
        for phase in range(1, s + 1):
            r0, y = shared[phase - 1]
            outcome = yield from self._phase(phase, r0, y, status, k, n, "alg2", idle=False, tolerant=False)
            status, k = outcome.status, outcome.k
            if k == 1:
                self._close([r for r, _ in shared[phase:]])
                return status
        raise ProtocolError(f"Eligible count still {k} after {s} phases")

    def le_modified(self, status: str, m: int):
        """
        Election with a guessed party count m that reports "error" instead of failing.

        Always runs exactly ceil(log2 m) phases so that runs with different guesses stay in
        step; phases after k reached 1, or after a count came out fractional, are idle.
        """
        if m < 2:
            raise ParameterError(f"Guessed party count must be at least 2, got {m}")
        s = ceil_log2(m)
        shared = yield from self.sharing.share(s)
        k = m
        finished = failed = False
        for phase in range(1, s + 1):
            r0, y = shared[phase - 1]
            idle = finished or failed
            outcome = yield from self._phase(phase, r0, y, status, k, m, "le_modified", idle=idle, tolerant=True)
            if outcome.error:
                failed = True
            elif not idle:
                status, k = outcome.status, outcome.k
                finished = k == 1
        result = status if finished and not failed else ERROR
        self.ctx.trace("result", protocol="le_modified", m=m, result=result)
        return result

    def generalized(self, status: str, N: int, mode: str = "parallel"):
        """
        Election knowing only an upper bound N: try every guess m in 2..N and keep the
        largest one that did not report an error, which is the true party count.
        """
        if N < 2:
            raise ParameterError(f"Upper bound must be at least 2, got {N}")
        if mode == "sequential":
            for m in range(N, 1, -1):
                result = yield from ElectionAgent(self.ctx).le_modified(status, m)
                if result != ERROR:
                    self.ctx.trace("winner", protocol="alg2_generalized", m=m, mode=mode)
                    return result
            raise ProtocolError(f"Every guess in 2..{N} reported an error")
        if mode != "parallel":
            raise ParameterError(f"Unknown generalized mode: {mode}")
        children = {m: ElectionAgent(self.ctx).le_modified(status, m) for m in range(2, N + 1)}
        results = yield from multiplex(children)
        winners = [m for m, result in results.items() if result != ERROR]
        if not winners:
            raise ProtocolError(f"Every guess in 2..{N} reported an error")
        best = max(winners)
        self.ctx.trace("winner", protocol="alg2_generalized", m=best, mode=mode)
        return results[best]


# ── Party programs for the round engine ─────────────────────────────────────


def _status(ctx: PartyContext) -> str:
    return ctx.inputs.get("status", ELIGIBLE)


def _size(ctx: PartyContext) -> int:
    return ctx.inputs["n"] if "n" in ctx.inputs else ctx.inputs["N"]


def algorithm1(ctx: PartyContext):
    return (yield from ElectionAgent(ctx).algorithm1(_status(ctx), _size(ctx)))


def algorithm2(ctx: PartyContext):
    return (yield from ElectionAgent(ctx).algorithm2(_status(ctx), _size(ctx)))


def le_modified(ctx: PartyContext):
    return (yield from ElectionAgent(ctx).le_modified(_status(ctx), ctx.inputs["m"]))


def algorithm2_generalized(ctx: PartyContext):
    mode = ctx.inputs.get("mode", "parallel")
    return (yield from ElectionAgent(ctx).generalized(_status(ctx), ctx.inputs["N"], mode))


@dataclass(frozen=True)
class ProtocolSpec:
    program: object
    size_key: str
    directed: Optional[bool]


# directed: True only directed, False only undirected, None both
PROTOCOLS = {
    "alg1": ProtocolSpec(algorithm1, "n", False),
    "alg1_upper": ProtocolSpec(algorithm1, "N", False),
    "alg2": ProtocolSpec(algorithm2, "n", False),
    "alg2_directed": ProtocolSpec(algorithm2, "n", True),
    "alg2_generalized": ProtocolSpec(algorithm2_generalized, "N", None),
}
