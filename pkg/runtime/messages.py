import logging
from collections.abc import Mapping
from dataclasses import dataclass, replace
from typing import Iterator, Union

from exceptions import UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QubitRef:
    """Handle of a simulator-held qubit travelling inside a message."""

    qid: int


@dataclass(frozen=True)
class Message:
    payload: Union[bytes, QubitRef]
    nbits: int = 0
    channel: int = 0
    round: int = 0

    @property
    def is_quantum(self) -> bool:
        return isinstance(self.payload, QubitRef)

    @classmethod
    def from_int(cls, value: int, width: int, channel: int = 0) -> "Message":
        """Pack a nonnegative int into a `width`-bit classical message."""
        if width < 1 or value < 0 or value >= 1 << width:
            raise UsageError(f"Value {value} does not fit in {width} bits")
        return cls(value.to_bytes((width + 7) // 8, "big"), width, channel)

    @classmethod
    def from_bytes(cls, data: bytes, channel: int = 0) -> "Message":
        return cls(bytes(data), 8 * len(data), channel)

    @classmethod
    def from_qubit(cls, qid: int, channel: int = 0) -> "Message":
        return cls(QubitRef(qid), 0, channel)

    def to_int(self) -> int:
        if self.is_quantum:
            raise UsageError("Quantum message has no classical value")
        return int.from_bytes(self.payload, "big")

    @property
    def qid(self) -> int:
        if not self.is_quantum:
            raise UsageError("Classical message carries no qubit")
        return self.payload.qid

    def stamped(self, round_index: int) -> "Message":
        return replace(self, round=round_index)


class Inbox(Mapping):
    """Messages received on each in-port during the previous round."""

    def __init__(self, ports: range, received: Mapping[int, list[Message]] = None):
        self.ports = ports
        self._received = {p: list((received or {}).get(p, ())) for p in ports}

    def __getitem__(self, port: int) -> list[Message]:
        if port not in self.ports:
            raise UsageError(f"Port {port} is outside 1..{len(self.ports)}")
        return self._received[port]

    def __iter__(self) -> Iterator[int]:
        return iter(self.ports)

    def __len__(self) -> int:
        return len(self.ports)

    def on_channel(self, channel: int) -> "Inbox":
        return Inbox(self.ports, {p: [m for m in msgs if m.channel == channel] for p, msgs in self._received.items()})

    def first(self, port: int) -> Message:
        msgs = self[port]
        if not msgs:
            raise UsageError(f"Nothing received on port {port}")
        return msgs[0]
