"""Synchronous round engine for anonymous networks.

A protocol is a generator function taking a PartyContext. Each round the program yields
its outbox ({out-port: Message or list of Messages}) and gets back an Inbox for the next
round; returning ends the party with the returned value as its output.
"""

import logging
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Any, Callable, Generator, Mapping, Optional, Sequence, Union

import numpy as np
import orjson

from exceptions import DivergenceError, UsageError
from network.topology_agent import PortNumbering, Topology
from quantum.gates import GateMatrix
from quantum.sparse_state import ClassicalFn, SparseState
from runtime.messages import Inbox, Message
from settings import get_settings

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

Outbox = Mapping[int, Union[Message, Sequence[Message]]]
PartyProgram = Generator[Outbox, Inbox, Any]
Protocol = Callable[["PartyContext"], PartyProgram]


class QuantumDevice:
    """A party's handle on the shared quantum state; it may only touch qubits it owns."""

    def __init__(self, state: SparseState, party: int, rng: np.random.Generator):
        self._state = state
        self._party = party
        self._rng = rng

    def _own(self, qubits: Sequence[int]) -> None:
        for q in qubits:
            if self._state.owners.get(q) != self._party:
                raise UsageError(f"Qubit {q} is not held by this party")

    def alloc(self, count: int = 1) -> list[int]:
        return self._state.alloc(self._party, count)

    def apply_1q(self, gate: GateMatrix, q: int) -> None:
        self._own([q])
        self._state.apply_1q(gate, q)

    def apply_2q(self, gate: GateMatrix, q0: int, q1: int) -> None:
        self._own([q0, q1])
        self._state.apply_2q(gate, q0, q1)

    def apply_classical(self, inputs: Sequence[int], targets: Sequence[int], f: ClassicalFn) -> None:
        self._own(list(inputs) + list(targets))
        self._state.apply_classical(inputs, targets, f)

    def measure(self, qubits: Sequence[int]) -> list[int]:
        self._own(qubits)
        return self._state.measure(qubits, self._rng)

    def measure_hadamard(self, q: int) -> int:
        self._own([q])
        return self._state.measure_hadamard(q, self._rng)

    def assert_zero_and_free(self, qubits: Sequence[int]) -> None:
        self._own(qubits)
        self._state.assert_zero_and_free(qubits)

    def release(self, qubits: Sequence[int]) -> list[int]:
        self._own(qubits)
        return self._state.release(qubits)

    def holds(self, q: int) -> bool:
        return self._state.owners.get(q) == self._party


class PartyContext:
    """
    Everything a party may see: its port counts, its inputs, its RNG stream and its qubits.

    There is no party identifier, no topology and no neighbor identity in here.
    """

    def __init__(
        self,
        out_degree: int,
        in_degree: int,
        directed: bool,
        inputs: Mapping[str, Any],
        rng: np.random.Generator,
        quantum: QuantumDevice,
        tracer: Callable[[str, dict], None],
    ):
        self.out_degree = out_degree
        self.in_degree = in_degree
        self.directed = directed
        self.inputs = MappingProxyType(dict(inputs))
        self.rng = rng
        self.quantum = quantum
        self._tracer = tracer

    @property
    def degree(self) -> int:
        return self.out_degree

    @property
    def out_ports(self) -> range:
        return range(1, self.out_degree + 1)

    @property
    def in_ports(self) -> range:
        return range(1, self.in_degree + 1)

    def trace(self, event: str, **fields) -> None:
        self._tracer(event, fields)


@dataclass
class RunStats:
    rounds: int = 0
    qubits_moved: int = 0
    classical_bits: int = 0
    per_round: list[dict] = field(default_factory=list)
    outputs: list = field(default_factory=list)
    channels: dict[str, int] = field(default_factory=dict)
    qubits_allocated: int = 0
    qubits_retired: int = 0
    qubits_live: int = 0
    peak_branches: int = 1
    trace: list[dict] = field(default_factory=list)

    def to_dict(self, with_trace: bool = False) -> dict:
        data = {
            "rounds": self.rounds,
            "qubits_moved": self.qubits_moved,
            "classical_bits": self.classical_bits,
            "per_round": self.per_round,
            "outputs": self.outputs,
            "channels": self.channels,
            "qubits_allocated": self.qubits_allocated,
            "qubits_retired": self.qubits_retired,
            "qubits_live": self.qubits_live,
            "peak_branches": self.peak_branches,
        }
        if with_trace:
            data["trace"] = self.trace
        return data

    def to_json(self, with_trace: bool = False) -> bytes:
        return orjson.dumps(self.to_dict(with_trace), option=orjson.OPT_SORT_KEYS)

    def leaders(self) -> list[int]:
        return [v for v, out in enumerate(self.outputs) if _status_of(out) == "eligible"]


def _status_of(output: Any) -> Any:
    return output.get("status") if isinstance(output, dict) else output


class RoundEngine:
    def __init__(self, round_cap: Optional[int] = None):
        self.round_cap = round_cap

    def _default_cap(self, topology: Topology, inputs: Mapping[str, Any]) -> int:
        size = inputs.get("N") or inputs.get("m") or inputs.get("n") or topology.n
        return get_settings().round_cap_factor * size * size

    def run(
        self,
        topology: Topology,
        ports: PortNumbering,
        protocol: Protocol,
        inputs: Mapping[str, Any],
        seed: int,
        stream_keys: Optional[Sequence[int]] = None,
        state: Optional[SparseState] = None,
    ) -> RunStats:
        """
        Run one protocol instance per party until every party halts.

        Args:
            topology: the network
            ports: its port numbering
            protocol: generator function run identically by every party
            inputs: shared protocol inputs (status, n or N, ...)
            seed: root seed; party streams are spawned from it
            stream_keys: RNG stream index of each party (defaults to its bookkeeping index);
                parties are stepped in ascending key order
            state: quantum state to run on (a fresh SparseState by default)

        Returns:
            RunStats with counters, outputs and trace events
        """
        n = topology.n
        keys = list(range(n)) if stream_keys is None else [int(k) for k in stream_keys]
        if sorted(keys) != list(range(n)):
            raise UsageError("Stream keys must be a permutation of the party indices")
        streams = np.random.SeedSequence(seed).spawn(n)
        order = sorted(range(n), key=lambda v: keys[v])
        state = SparseState() if state is None else state
        cap = self.round_cap or self._default_cap(topology, inputs)
        stats = RunStats(outputs=[None] * n)
        current = {"round": 1}

        def make_tracer(v: int):
            def tracer(event: str, fields: dict) -> None:
                stats.trace.append({"party": v, "round": current["round"], "event": event, **fields})
            return tracer

        programs: dict[int, PartyProgram] = {}
        for v in range(n):
            rng = np.random.default_rng(streams[keys[v]])
            ctx = PartyContext(
                out_degree=ports.out_degree(v),
                in_degree=ports.in_degree(v),
                directed=topology.directed,
                inputs=inputs,
                rng=rng,
                quantum=QuantumDevice(state, v, rng),
                tracer=make_tracer(v),
            )
            programs[v] = protocol(ctx)

        outboxes: dict[int, Outbox] = {}
        for v in order:
            self._advance(v, programs, outboxes, stats, None)

        while programs:
            stats.rounds += 1
            if stats.rounds > cap:
                raise DivergenceError(f"Run exceeded the round cap of {cap}")
            inboxes = {v: {p: [] for p in range(1, ports.in_degree(v) + 1)} for v in programs}
            bits = qubits = 0
            for v in order:
                for port, msgs in sorted((outboxes.get(v) or {}).items()):
                    if not isinstance(port, int) or not 1 <= port <= ports.out_degree(v):
                        raise UsageError(f"Send on port {port} outside 1..{ports.out_degree(v)}")
                    u = ports.out_neighbor(v, port)
                    arrival = ports.in_port(u, v)
                    for msg in [msgs] if isinstance(msgs, Message) else msgs:
                        if msg.is_quantum:
                            if state.owners.get(msg.qid) != v:
                                raise UsageError(f"Qubit {msg.qid} sent by a party that does not hold it")
                            state.transfer(msg.qid, u)
                            qubits += 1
                        else:
                            bits += msg.nbits
                            key = str(msg.channel)
                            stats.channels[key] = stats.channels.get(key, 0) + msg.nbits
                        if u in inboxes:
                            inboxes[u][arrival].append(msg.stamped(stats.rounds))
            stats.qubits_moved += qubits
            stats.classical_bits += bits
            stats.per_round.append({"round": stats.rounds, "qubits": qubits, "bits": bits})
            logger.debug(f"Round {stats.rounds}: {qubits} qubits, {bits} bits, {len(programs)} live parties")

            current["round"] = stats.rounds + 1
            outboxes = {}
            for v in order:
                if v in programs:
                    self._advance(v, programs, outboxes, stats, Inbox(range(1, ports.in_degree(v) + 1), inboxes[v]))

        stats.qubits_allocated = state.allocated
        stats.qubits_retired = state.retired
        stats.qubits_live = len(state.live_qubits())
        stats.peak_branches = getattr(state, "peak_branches", 1)
        return stats

    @staticmethod
    def _advance(v: int, programs: dict, outboxes: dict, stats: RunStats, inbox: Optional[Inbox]) -> None:
        program = programs[v]
        try:
            outboxes[v] = next(program) if inbox is None else program.send(inbox)
        except StopIteration as stop:
            stats.outputs[v] = stop.value
            del programs[v]


def run(
    topology: Topology,
    ports: PortNumbering,
    protocol: Protocol,
    inputs: Mapping[str, Any],
    seed: int,
    **kwargs,
) -> RunStats:
    round_cap = kwargs.pop("round_cap", None)
    return RoundEngine(round_cap).run(topology, ports, protocol, inputs, seed, **kwargs)


def multiplex(programs: Mapping[int, PartyProgram]):
    """
    Run several party programs side by side inside one party, each on its own channel.

    Every round the children's outboxes are bundled per port, with each message tagged by
    its child's channel; each child gets back only its own channel. Returns {channel: output}
    once all children have halted.
    """
    live = dict(programs)
    outputs: dict[int, Any] = {}
    outboxes: dict[int, Outbox] = {}

    def advance(channel: int, inbox: Optional[Inbox]) -> None:
        try:
            outboxes[channel] = next(live[channel]) if inbox is None else live[channel].send(inbox.on_channel(channel))
        except StopIteration as stop:
            outputs[channel] = stop.value
            del live[channel]

    for channel in sorted(live):
        advance(channel, None)
    while live:
        bundled: dict[int, list[Message]] = {}
        for channel in sorted(live):
            for port, msgs in sorted((outboxes.get(channel) or {}).items()):
                batch = [msgs] if isinstance(msgs, Message) else msgs
                bundled.setdefault(port, []).extend(replace(m, channel=channel) for m in batch)
        inbox = yield bundled
        for channel in sorted(live):
            advance(channel, inbox)
    return outputs
