"""Dense state-vector simulator with the same interface as SparseState.

Only meant for small runs: it is the reference the sparse simulator is tested against.
"""

import logging
from typing import Mapping, Sequence

import numpy as np

from exceptions import GarbageLeakError, UsageError
from quantum.gates import GateMatrix, build_gate
from quantum.sparse_state import ClassicalFn
from settings import get_settings

logger = logging.getLogger(__name__)

MAX_DENSE_QUBITS = 16


class DenseState:
    def __init__(self):
        self.norm_tolerance = get_settings().norm_tolerance
        self.owners: dict[int, int] = {}
        self.allocated = 0
        self.retired = 0
        # position p in `order` is bit p of the vector index
        self.order: list[int] = []
        self.vector = np.ones(1, dtype=complex)
        self._free: list[int] = []
        self._next_qubit = 0

    def _pos(self, q: int) -> int:
        try:
            return self.order.index(q)
        except ValueError:
            raise UsageError(f"Qubit {q} is not live") from None

    def alloc(self, owner: int, count: int = 1) -> list[int]:
        if len(self.order) + count > MAX_DENSE_QUBITS:
            raise UsageError(f"Dense state limited to {MAX_DENSE_QUBITS} qubits")
        ids = []
        for _ in range(count):
            if self._free:
                self._free.sort()
                q = self._free.pop(0)
            else:
                q = self._next_qubit
                self._next_qubit += 1
            self.vector = np.concatenate([self.vector, np.zeros_like(self.vector)])
            self.order.append(q)
            self.owners[q] = owner
            ids.append(q)
        self.allocated += count
        return ids

    def live_qubits(self) -> list[int]:
        return sorted(self.order)

    def transfer(self, q: int, new_owner: int) -> None:
        self._pos(q)
        self.owners[q] = new_owner

    def norm(self) -> float:
        return float(np.sum(np.abs(self.vector) ** 2))

    def _index(self) -> np.ndarray:
        return np.arange(self.vector.size)

    def apply_1q(self, gate: GateMatrix, q: int) -> None:
        p = self._pos(q)
        idx = self._index()
        i0 = idx[((idx >> p) & 1) == 0]
        i1 = i0 | (1 << p)
        a0, a1 = self.vector[i0].copy(), self.vector[i1].copy()
        g = gate.matrix
        self.vector[i0] = g[0, 0] * a0 + g[0, 1] * a1
        self.vector[i1] = g[1, 0] * a0 + g[1, 1] * a1

    def apply_2q(self, gate: GateMatrix, q0: int, q1: int) -> None:
        if q0 == q1:
            raise UsageError("Two-qubit gate needs distinct qubits")
        p0, p1 = self._pos(q0), self._pos(q1)
        idx = self._index()
        base = idx[(((idx >> p0) & 1) == 0) & (((idx >> p1) & 1) == 0)]
        groups = [base, base | (1 << p1), base | (1 << p0), base | (1 << p0) | (1 << p1)]
        before = np.stack([self.vector[g] for g in groups])
        after = gate.matrix @ before
        for r, g in enumerate(groups):
            self.vector[g] = after[r]

    def apply_classical(self, inputs: Sequence[int], targets: Sequence[int], f: ClassicalFn) -> None:
        if set(inputs) & set(targets):
            raise UsageError("Inputs and targets of a classical operation overlap")
        ip = [self._pos(q) for q in inputs]
        tp = [self._pos(q) for q in targets]
        out = np.zeros_like(self.vector)
        for i in range(self.vector.size):
            bits = tuple((i >> p) & 1 for p in ip)
            flip = 0
            for p, b in zip(tp, f(bits)):
                if b:
                    flip |= 1 << p
            out[i ^ flip] = self.vector[i]
        self.vector = out

    def measure(self, qubits: Sequence[int], rng: np.random.Generator) -> list[int]:
        outcomes = []
        for q in qubits:
            p = self._pos(q)
            bit = (self._index() >> p) & 1
            w0 = float(np.sum(np.abs(self.vector[bit == 0]) ** 2))
            w1 = float(np.sum(np.abs(self.vector[bit == 1]) ** 2))
            outcome = 0 if rng.random() < w0 / (w0 + w1) else 1
            self.vector = np.where(bit == outcome, self.vector, 0) / np.sqrt(w1 if outcome else w0)
            outcomes.append(outcome)
        return outcomes

    def measure_hadamard(self, q: int, rng: np.random.Generator) -> int:
        self.apply_1q(build_gate("hadamard"), q)
        return self.measure([q], rng)[0]

    def _drop(self, q: int, value: int) -> None:
        p = self._pos(q)
        bit = (self._index() >> p) & 1
        self.vector = self.vector[bit == value].copy()
        self.order.pop(p)
        del self.owners[q]
        self._free.append(q)
        self.retired += 1

    def _definite(self, q: int) -> int:
        p = self._pos(q)
        bit = (self._index() >> p) & 1
        ones = np.abs(self.vector[bit == 1]) ** 2
        zeros = np.abs(self.vector[bit == 0]) ** 2
        if np.sum(ones) < self.norm_tolerance:
            return 0
        if np.sum(zeros) < self.norm_tolerance:
            return 1
        raise GarbageLeakError(f"Qubit {q} is entangled or in superposition")

    def assert_zero_and_free(self, qubits: Sequence[int]) -> None:
        for q in qubits:
            if self._definite(q) != 0:
                raise GarbageLeakError(f"Ancilla qubit {q} is not back to |0>")
            self._drop(q, 0)

    def release(self, qubits: Sequence[int]) -> list[int]:
        values = []
        for q in qubits:
            value = self._definite(q)
            self._drop(q, value)
            values.append(value)
        return values

    def amplitude(self, config: Mapping[int, int]) -> complex:
        missing = set(self.order) - set(config)
        if missing:
            raise UsageError(f"Configuration misses live qubits {sorted(missing)}")
        i = 0
        for p, q in enumerate(self.order):
            if config[q]:
                i |= 1 << p
        return complex(self.vector[i])
