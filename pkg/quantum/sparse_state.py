import heapq
import logging
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from exceptions import GarbageLeakError, NormError, UsageError
from quantum.gates import GateMatrix, build_gate
from settings import get_settings

logger = logging.getLogger(__name__)

ClassicalFn = Callable[[tuple[int, ...]], Sequence[int]]

_HADAMARD = build_gate("hadamard")


class _Block:
    """One tensor factor of the global state: its qubits and its sparse branches."""

    __slots__ = ("qubits", "branches")

    def __init__(self, qubits: set[int], branches: dict[int, complex]):
        self.qubits = qubits
        self.branches = branches

    @property
    def mask(self) -> int:
        m = 0
        for q in self.qubits:
            m |= 1 << q
        return m


class SparseState:
    """
    Global pure state of every qubit in a run, kept as a product of independent blocks.

    Each block maps a configuration (an int whose bit q is the value of qubit q) to its
    complex amplitude. Operations on qubits of different blocks merge those blocks first;
    a qubit that becomes definite is split off again.
    """

    def __init__(self, prune_threshold: Optional[float] = None, norm_tolerance: Optional[float] = None):
        settings = get_settings()
        self.prune_threshold = settings.prune_threshold if prune_threshold is None else prune_threshold
        self.norm_tolerance = settings.norm_tolerance if norm_tolerance is None else norm_tolerance
        self.owners: dict[int, int] = {}
        self.allocated = 0
        self.retired = 0
        self.peak_branches = 1
        self._blocks: dict[int, _Block] = {}
        self._block_of: dict[int, int] = {}
        self._free: list[int] = []
        self._next_qubit = 0
        self._next_block = 0

    # ── Bookkeeping ─────────────────────────────────────────────────────────

    def alloc(self, owner: int, count: int = 1) -> list[int]:
        """Allocate `count` fresh |0> qubits owned by `owner`."""
        ids = []
        for _ in range(count):
            if self._free:
                q = heapq.heappop(self._free)
            else:
                q = self._next_qubit
                self._next_qubit += 1
            self._blocks[self._next_block] = _Block({q}, {0: 1 + 0j})
            self._block_of[q] = self._next_block
            self._next_block += 1
            self.owners[q] = owner
            ids.append(q)
        self.allocated += count
        return ids

    def is_live(self, q: int) -> bool:
        return q in self._block_of

    def live_qubits(self) -> list[int]:
        return sorted(self._block_of)

    def owner_of(self, q: int) -> int:
        self._require_live([q])
        return self.owners[q]

    def transfer(self, q: int, new_owner: int) -> None:
        self._require_live([q])
        self.owners[q] = new_owner

    def branch_count(self) -> int:
        total = 1
        for block in self._blocks.values():
            total *= len(block.branches)
        return total

    def norm(self) -> float:
        total = 1.0
        for block in self._blocks.values():
            total *= sum(abs(a) ** 2 for a in block.branches.values())
        return total

    def _require_live(self, qubits: Iterable[int]) -> None:
        for q in qubits:
            if q not in self._block_of:
                raise UsageError(f"Qubit {q} is not live")

    def _prune(self, branches: dict[int, complex]) -> dict[int, complex]:
        thr = self.prune_threshold
        return {c: a for c, a in branches.items() if abs(a) >= thr}

    def _check_norm(self, block: _Block) -> None:
        total = sum(abs(a) ** 2 for a in block.branches.values())
        if abs(total - 1.0) > self.norm_tolerance:
            raise NormError(f"Block norm drifted to {total:.12f}")

    def _merge(self, qubits: Iterable[int]) -> _Block:
        bids = sorted({self._block_of[q] for q in qubits})
        head = self._blocks[bids[0]]
        for bid in bids[1:]:
            other = self._blocks.pop(bid)
            head.branches = self._prune(
                {c1 | c2: a1 * a2 for c1, a1 in head.branches.items() for c2, a2 in other.branches.items()}
            )
            head.qubits |= other.qubits
            for q in other.qubits:
                self._block_of[q] = bids[0]
        self.peak_branches = max(self.peak_branches, len(head.branches))
        return head

    def _detach(self, q: int) -> int:
        """Split a definite qubit into its own block; returns its value."""
        bid = self._block_of[q]
        block = self._blocks[bid]
        mask = 1 << q
        values = {1 if c & mask else 0 for c in block.branches}
        if len(values) != 1:
            raise GarbageLeakError(f"Qubit {q} is entangled or in superposition")
        value = values.pop()
        if len(block.qubits) > 1:
            block.branches = {c & ~mask: a for c, a in block.branches.items()}
            block.qubits.discard(q)
            self._blocks[self._next_block] = _Block({q}, {value << q: 1 + 0j})
            self._block_of[q] = self._next_block
            self._next_block += 1
        return value

    def _retire(self, q: int) -> None:
        bid = self._block_of.pop(q)
        block = self._blocks.pop(bid)
        (phase,) = block.branches.values()
        # keep the global phase of the dropped factor on a surviving block
        if phase != 1 and self._blocks:
            keeper = self._blocks[min(self._blocks)]
            keeper.branches = {c: a * phase for c, a in keeper.branches.items()}
        del self.owners[q]
        heapq.heappush(self._free, q)
        self.retired += 1

    # ── Gates ───────────────────────────────────────────────────────────────

    def apply_1q(self, gate: GateMatrix, q: int) -> None:
        if gate.dim != 2:
            raise UsageError(f"{gate.name} is not a one-qubit gate")
        self._require_live([q])
        block = self._blocks[self._block_of[q]]
        (g00, g01), (g10, g11) = gate.rows()
        mask = 1 << q
        out: dict[int, complex] = {}
        for c, a in block.branches.items():
            lo = c & ~mask
            hi = lo | mask
            if c & mask:
                out[lo] = out.get(lo, 0j) + g01 * a
                out[hi] = out.get(hi, 0j) + g11 * a
            else:
                out[lo] = out.get(lo, 0j) + g00 * a
                out[hi] = out.get(hi, 0j) + g10 * a
        block.branches = self._prune(out)
        self.peak_branches = max(self.peak_branches, len(block.branches))
        self._check_norm(block)

    def apply_2q(self, gate: GateMatrix, q0: int, q1: int) -> None:
        """Apply a 4x4 gate with q0 as the high bit of the basis index."""
        if gate.dim != 4:
            raise UsageError(f"{gate.name} is not a two-qubit gate")
        if q0 == q1:
            raise UsageError("Two-qubit gate needs distinct qubits")
        self._require_live([q0, q1])
        block = self._merge([q0, q1])
        rows = gate.rows()
        m0, m1 = 1 << q0, 1 << q1
        targets = (0, m1, m0, m0 | m1)
        out: dict[int, complex] = {}
        for c, a in block.branches.items():
            col = (2 if c & m0 else 0) | (1 if c & m1 else 0)
            base = c & ~(m0 | m1)
            for r in range(4):
                coef = rows[r][col]
                if coef != 0:
                    key = base | targets[r]
                    out[key] = out.get(key, 0j) + coef * a
        block.branches = self._prune(out)
        self.peak_branches = max(self.peak_branches, len(block.branches))
        self._check_norm(block)

    def apply_classical(self, inputs: Sequence[int], targets: Sequence[int], f: ClassicalFn) -> None:
        """
        XOR f(inputs) into targets on every branch.

        Args:
            inputs: qubits read by f, in argument order
            targets: qubits receiving target ^= f(inputs), in result order
            f: pure function from a tuple of input bits to a sequence of len(targets) bits
        """
        inputs, targets = list(inputs), list(targets)
        if set(inputs) & set(targets):
            raise UsageError("Inputs and targets of a classical operation overlap")
        if len(set(targets)) != len(targets) or not targets:
            raise UsageError("Targets must be distinct and non-empty")
        self._require_live(inputs + targets)
        block = self._merge(inputs + targets)
        width = len(inputs)
        tmasks = [1 << t for t in targets]
        cache: dict[int, int] = {}
        out: dict[int, complex] = {}
        for c, a in block.branches.items():
            key = 0
            for q in inputs:
                key = (key << 1) | ((c >> q) & 1)
            flip = cache.get(key)
            if flip is None:
                bits = tuple((key >> (width - 1 - i)) & 1 for i in range(width))
                result = f(bits)
                if len(result) != len(targets):
                    raise UsageError(f"Classical function returned {len(result)} bits for {len(targets)} targets")
                flip = 0
                for m, b in zip(tmasks, result):
                    if b:
                        flip |= m
                cache[key] = flip
            out[c ^ flip] = a
        block.branches = out

    # ── Measurement and retirement ──────────────────────────────────────────

    def measure(self, qubits: Sequence[int], rng: np.random.Generator) -> list[int]:
        """Measure each qubit in the computational basis, one uniform draw per qubit."""
        self._require_live(qubits)
        outcomes = []
        for q in qubits:
            block = self._blocks[self._block_of[q]]
            mask = 1 << q
            w0 = sum(abs(a) ** 2 for c, a in block.branches.items() if not c & mask)
            w1 = sum(abs(a) ** 2 for c, a in block.branches.items() if c & mask)
            outcome = 0 if rng.random() < w0 / (w0 + w1) else 1
            kept = w1 if outcome else w0
            scale = 1 / np.sqrt(kept)
            block.branches = {
                c: a * scale for c, a in block.branches.items() if bool(c & mask) == bool(outcome)
            }
            self._check_norm(block)
            self._detach(q)
            outcomes.append(outcome)
        return outcomes

    def measure_hadamard(self, q: int, rng: np.random.Generator) -> int:
        """Measure in the {|+>, |->} basis; returns 0 for + and 1 for -."""
        self.apply_1q(_HADAMARD, q)
        return self.measure([q], rng)[0]

    def assert_zero_and_free(self, qubits: Sequence[int]) -> None:
        """Audit that every qubit reads 0 in every branch, then retire it."""
        self._require_live(qubits)
        for q in qubits:
            mask = 1 << q
            block = self._blocks[self._block_of[q]]
            if any(c & mask for c in block.branches):
                raise GarbageLeakError(f"Ancilla qubit {q} (owner {self.owners[q]}) is not back to |0>")
            self._detach(q)
            self._retire(q)

    def release(self, qubits: Sequence[int]) -> list[int]:
        """Retire qubits holding a definite value; returns those values."""
        self._require_live(qubits)
        values = []
        for q in qubits:
            values.append(self._detach(q))
            self._retire(q)
        return values

    # ── Inspection ──────────────────────────────────────────────────────────

    def amplitude(self, config: Union[Mapping[int, int], int]) -> complex:
        """Amplitude of a full configuration given as {qubit: bit} or as a bitmask."""
        if isinstance(config, Mapping):
            missing = set(self._block_of) - set(config)
            if missing:
                raise UsageError(f"Configuration misses live qubits {sorted(missing)}")
            mask_value = 0
            for q, bit in config.items():
                if bit:
                    mask_value |= 1 << q
        else:
            mask_value = int(config)
        result = 1 + 0j
        for block in self._blocks.values():
            result *= block.branches.get(mask_value & block.mask, 0j)
            if result == 0:
                return 0j
        return result

    def amplitudes(self, qubits: Sequence[int]) -> dict[tuple[int, ...], complex]:
        """
        Joint amplitudes over `qubits`, keyed by their bits in the given order.

        The blocks holding these qubits must not contain any other qubit.
        """
        self._require_live(qubits)
        wanted = set(qubits)
        bids = sorted({self._block_of[q] for q in qubits})
        for bid in bids:
            extra = self._blocks[bid].qubits - wanted
            if extra:
                raise UsageError(f"Qubits {sorted(extra)} are entangled with the requested set")
        joint = {0: 1 + 0j}
        for bid in bids:
            branches = self._blocks[bid].branches
            joint = {c1 | c2: a1 * a2 for c1, a1 in joint.items() for c2, a2 in branches.items()}
        return {tuple((c >> q) & 1 for q in qubits): a for c, a in joint.items() if abs(a) >= self.prune_threshold}
