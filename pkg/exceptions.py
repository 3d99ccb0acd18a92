"""Error types shared by every package of the simulator."""


class LeaderElectionError(Exception):
    """Base class for all simulator errors."""


class ParameterError(LeaderElectionError, ValueError):
    """Invalid parameters for a generator, gate builder or protocol."""


class ConfigError(LeaderElectionError, ValueError):
    """Experiment configuration that cannot be run."""


class UsageError(LeaderElectionError):
    """An API was used outside its contract (dead qubit, foreign qubit, bad port)."""


class GarbageLeakError(LeaderElectionError):
    """An ancilla audit found a register that is not back to a clean value."""


class NormError(LeaderElectionError):
    """The simulated state drifted away from unit norm."""


class DivergenceError(LeaderElectionError):
    """A run exceeded its round cap."""


class MergeError(LeaderElectionError):
    """Two f-view nodes do not satisfy the merging preconditions."""


class FViewDecodeError(LeaderElectionError, ValueError):
    """Malformed f-view wire bytes."""


class OracleRefusal(LeaderElectionError):
    """The brute-force view oracle refused an input that is too large."""


class InconsistentCountError(LeaderElectionError, ArithmeticError):
    """A party count derived from an f-view is not an integer."""


class ProtocolError(LeaderElectionError):
    """A protocol reached a state its correctness argument rules out."""
