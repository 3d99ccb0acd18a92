import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import networkx as nx
import numpy as np

from exceptions import ParameterError

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

KINDS = (
    "ring",
    "path",
    "complete",
    "petersen",
    "random_regular",
    "directed_cycle",
    "random_strong_digraph",
    "from_edge_list",
)
DIRECTED_KINDS = frozenset({"directed_cycle", "random_strong_digraph"})

# Attempts at drawing a connected random regular graph before giving up
MAX_REGULAR_ATTEMPTS = 200


@dataclass(frozen=True)
class Topology:
    """The anonymous network: n parties and their links.

    Undirected links are stored as (u, v) with u < v, directed links as (source, target).
    Node indices are simulator bookkeeping only; protocols never see them.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    directed: bool = False

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def _out(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in range(self.n)]
        for u, v in self.edges:
            out[u].append(v)
            if not self.directed:
                out[v].append(u)
        return tuple(tuple(sorted(nbrs)) for nbrs in out)

    @cached_property
    def _in(self) -> tuple[tuple[int, ...], ...]:
        if not self.directed:
            return self._out
        inc = [[] for _ in range(self.n)]
        for u, v in self.edges:
            inc[v].append(u)
        return tuple(tuple(sorted(nbrs)) for nbrs in inc)

    def out_neighbors(self, v: int) -> tuple[int, ...]:
        return self._out[v]

    def in_neighbors(self, v: int) -> tuple[int, ...]:
        return self._in[v]

    def degree(self, v: int) -> int:
        return len(self._out[v])

    def to_networkx(self) -> nx.Graph:
        graph = nx.DiGraph() if self.directed else nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class PortNumbering:
    """Per-node bijections from incident links to port numbers 1..d.

    For undirected networks the in- and out-maps are the same map sigma[v].
    Directed networks number in-ports and out-ports independently.
    """

    out_ports: tuple[Mapping[int, int], ...]
    in_ports: tuple[Mapping[int, int], ...]
    directed: bool = False

    @cached_property
    def _out_inverse(self) -> tuple[dict[int, int], ...]:
        return tuple({p: u for u, p in ports.items()} for ports in self.out_ports)

    @cached_property
    def _in_inverse(self) -> tuple[dict[int, int], ...]:
        return tuple({p: u for u, p in ports.items()} for ports in self.in_ports)

    def out_port(self, v: int, u: int) -> int:
        """Port at v through which v sends to u."""
        return self.out_ports[v][u]

    def in_port(self, v: int, u: int) -> int:
        """Port at v through which v receives from u."""
        return self.in_ports[v][u]

    def out_neighbor(self, v: int, port: int) -> int:
        return self._out_inverse[v][port]

    def in_neighbor(self, v: int, port: int) -> int:
        return self._in_inverse[v][port]

    def out_degree(self, v: int) -> int:
        return len(self.out_ports[v])

    def in_degree(self, v: int) -> int:
        return len(self.in_ports[v])


@dataclass(frozen=True)
class Labeling:
    """Per-party values x_v drawn from a finite integer domain of the given bit width."""

    values: tuple[int, ...]
    width: int = 1

    def __post_init__(self):
        limit = 1 << self.width
        for value in self.values:
            if not 0 <= value < limit:
                raise ParameterError(f"Label {value} does not fit in {self.width} bits")

    @classmethod
    def uniform(cls, n: int, value: int = 0, width: int = 1) -> "Labeling":
        return cls(tuple([value] * n), width)


class TopologyAgent:
    def __init__(self):
        self.cache = {}

    def generate(self, kind: str, params: Optional[Mapping] = None, seed: int = 0) -> Topology:
        """
        Build a topology of the requested kind.

        Args:
            kind: one of KINDS
            params: kind parameters (n, degree, arcs, path or text)
            seed: seed for the random kinds; ignored by the deterministic ones

        Returns:
            A Topology that passes validate()

        Raises:
            ParameterError: the parameters are infeasible for the kind
        """
        params = dict(params or {})
        if kind not in KINDS:
            raise ParameterError(f"Unknown topology kind: {kind}")
        key = (kind, tuple(sorted((k, str(v)) for k, v in params.items())), seed)
        if key in self.cache:
            return self.cache[key]

        if kind == "from_edge_list":
            topology, _ = self.load_edge_list(params.get("path") or params.get("text", ""))
        else:
            builder = getattr(self, f"_build_{kind}")
            topology = builder(params, seed)

        violations = self.validate(topology)
        if violations:
            raise ParameterError(f"Generated {kind} topology is invalid: {violations}")

        logger.debug(f"Generated {kind} topology: n={topology.n}, links={topology.edge_count}")
        self.cache[key] = topology
        return topology

    # ── Builders ─────────────────────────────────────────────────────────────

    @staticmethod
    def _party_count(params: Mapping, minimum: int) -> int:
        try:
            n = int(params["n"])
        except (KeyError, TypeError, ValueError):
            raise ParameterError("Parameter 'n' (party count) is required")
        if n < minimum:
            raise ParameterError(f"Need n >= {minimum}, got {n}")
        return n

    @staticmethod
    def _from_graph(graph: nx.Graph, directed: bool = False) -> Topology:
        graph = nx.convert_node_labels_to_integers(graph, ordering="sorted")
        if directed:
            edges = sorted((int(u), int(v)) for u, v in graph.edges())
        else:
            edges = sorted(tuple(sorted((int(u), int(v)))) for u, v in graph.edges())
        return Topology(graph.number_of_nodes(), tuple(edges), directed)

    def _build_ring(self, params: Mapping, seed: int) -> Topology:
        return self._from_graph(nx.cycle_graph(self._party_count(params, 3)))

    def _build_path(self, params: Mapping, seed: int) -> Topology:
        return self._from_graph(nx.path_graph(self._party_count(params, 2)))

    def _build_complete(self, params: Mapping, seed: int) -> Topology:
        return self._from_graph(nx.complete_graph(self._party_count(params, 2)))

    def _build_petersen(self, params: Mapping, seed: int) -> Topology:
        if "n" in params and int(params["n"]) != 10:
            raise ParameterError("The Petersen graph has exactly 10 parties")
        return self._from_graph(nx.petersen_graph())

    def _build_random_regular(self, params: Mapping, seed: int) -> Topology:
        n = self._party_count(params, 2)
        degree = int(params.get("degree", 3))
        if degree < 1 or degree >= n:
            raise ParameterError(f"Regular degree must satisfy 1 <= d < n, got d={degree}, n={n}")
        if (n * degree) % 2:
            raise ParameterError(f"n*d must be even for a regular graph, got n={n}, d={degree}")
        seeds = np.random.SeedSequence(seed).generate_state(MAX_REGULAR_ATTEMPTS)
        for attempt, attempt_seed in enumerate(seeds):
            graph = nx.random_regular_graph(degree, n, seed=int(attempt_seed))
            if nx.is_connected(graph):
                logger.debug(f"Connected {degree}-regular graph on {n} nodes after {attempt + 1} draws")
                return self._from_graph(graph)
        raise ParameterError(f"No connected {degree}-regular graph on {n} nodes found")

    def _build_directed_cycle(self, params: Mapping, seed: int) -> Topology:
        n = self._party_count(params, 2)
        return Topology(n, tuple((v, (v + 1) % n) for v in range(n)), directed=True)

    def _build_random_strong_digraph(self, params: Mapping, seed: int) -> Topology:
        # Hamiltonian cycle over a random order, plus m - n random extra arcs
        n = self._party_count(params, 2)
        arcs = int(params.get("arcs", params.get("m", n)))
        if not n <= arcs <= n * (n - 1):
            raise ParameterError(f"Arc count must lie in [n, n(n-1)], got m={arcs}, n={n}")
        rng = np.random.default_rng(seed)
        order = [int(v) for v in rng.permutation(n)]
        cycle = {(order[i], order[(i + 1) % n]) for i in range(n)}
        spare = [(u, v) for u in range(n) for v in range(n) if u != v and (u, v) not in cycle]
        picks = rng.choice(len(spare), size=arcs - n, replace=False) if arcs > n else []
        chosen = cycle | {spare[int(i)] for i in picks}
        return Topology(n, tuple(sorted(chosen)), directed=True)

    # ── Ports and validation ────────────────────────────────────────────────

    def assign_ports(self, topology: Topology, seed: int = 0) -> PortNumbering:
        """
        Choose an independent random port bijection at every node.

        Args:
            topology: a valid topology
            seed: numbering seed

        Returns:
            PortNumbering whose per-node maps are bijections onto 1..d
        """
        rng = np.random.default_rng(seed)

        def number(nbrs: Sequence[int]) -> dict[int, int]:
            order = rng.permutation(len(nbrs))
            return {nbrs[int(i)]: port for port, i in enumerate(order, start=1)}

        out_ports = tuple(number(topology.out_neighbors(v)) for v in range(topology.n))
        if not topology.directed:
            return PortNumbering(out_ports, out_ports, False)
        in_ports = tuple(number(topology.in_neighbors(v)) for v in range(topology.n))
        return PortNumbering(out_ports, in_ports, True)

    def validate(self, topology: Topology) -> list[str]:
        """
        Check the network invariants.

        Returns:
            List of violation messages; empty when the topology is valid
        """
        violations = []
        if topology.n < 1:
            violations.append("no parties")
            return violations

        seen = set()
        for u, v in topology.edges:
            if not (0 <= u < topology.n and 0 <= v < topology.n):
                violations.append(f"link ({u}, {v}) references an unknown party")
                continue
            if u == v:
                violations.append(f"self-loop at {u}")
                continue
            key = (u, v) if topology.directed else tuple(sorted((u, v)))
            if key in seen:
                violations.append(f"multiple links between {key[0]} and {key[1]}")
            seen.add(key)

        if violations:
            return violations

        graph = topology.to_networkx()
        if topology.directed:
            if not nx.is_strongly_connected(graph):
                violations.append("not strongly connected")
        elif not nx.is_connected(graph):
            violations.append("not connected")
        return violations

    def validate_ports(self, topology: Topology, ports: PortNumbering) -> list[str]:
        violations = []
        for v in range(topology.n):
            checks = [("out", ports.out_ports[v], topology.out_neighbors(v))]
            if topology.directed:
                checks.append(("in", ports.in_ports[v], topology.in_neighbors(v)))
            for side, mapping, nbrs in checks:
                if set(mapping) != set(nbrs):
                    violations.append(f"{side}-ports of {v} do not cover its links")
                if sorted(mapping.values()) != list(range(1, len(nbrs) + 1)):
                    violations.append(f"{side}-ports of {v} are not a bijection onto 1..{len(nbrs)}")
        return violations

    # ── Edge-list format ────────────────────────────────────────────────────

    def load_edge_list(self, source) -> tuple[Topology, Optional[PortNumbering]]:
        """
        Parse the edge-list format: "n [directed]" then "u v [pu pv]" per link.

        Args:
            source: a Path, a path string of an existing file, or the text itself

        Returns:
            (topology, ports) where ports is None when the file carries no port columns
        """
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).is_file()):
            text = Path(source).read_text()
        else:
            text = str(source)

        rows = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append(line.split())
        if not rows:
            raise ParameterError("Empty edge list")

        header = rows[0]
        try:
            n = int(header[0])
        except ValueError:
            raise ParameterError(f"Bad edge-list header: {' '.join(header)}")
        directed = len(header) > 1 and header[1].lower() in {"1", "true", "yes", "directed", "d"}

        edges, port_rows = [], []
        for row in rows[1:]:
            if len(row) not in (2, 4):
                raise ParameterError(f"Bad edge-list line: {' '.join(row)}")
            try:
                u, v, *pp = (int(tok) for tok in row)
            except ValueError:
                raise ParameterError(f"Non-integer token in line: {' '.join(row)}")
            edges.append((u, v) if directed else tuple(sorted((u, v))))
            port_rows.append((u, v, pp))

        topology = Topology(n, tuple(sorted(edges)), directed)
        with_ports = [pp for _, _, pp in port_rows if pp]
        if not with_ports:
            return topology, None
        if len(with_ports) != len(port_rows):
            raise ParameterError("Ports must be given on every line or on none")

        out_ports = [dict() for _ in range(n)]
        in_ports = [dict() for _ in range(n)] if directed else out_ports
        for u, v, (pu, pv) in port_rows:
            out_ports[u][v] = pu
            in_ports[v][u] = pv
        ports = PortNumbering(tuple(out_ports), tuple(in_ports), directed)
        violations = self.validate_ports(topology, ports) if not self.validate(topology) else []
        if violations:
            raise ParameterError(f"Invalid port columns: {violations}")
        return topology, ports

    def dump_edge_list(self, topology: Topology, ports: Optional[PortNumbering] = None) -> str:
        lines = [f"{topology.n} {'directed' if topology.directed else 'undirected'}"]
        for u, v in topology.edges:
            if ports is None:
                lines.append(f"{u} {v}")
            else:
                lines.append(f"{u} {v} {ports.out_port(u, v)} {ports.in_port(v, u)}")
        return "\n".join(lines) + "\n"


def permute(topology: Topology, ports: PortNumbering, perm: Sequence[int]) -> tuple[Topology, PortNumbering]:
    """Rename bookkeeping index v to perm[v], carrying each node's port maps along."""
    n = topology.n
    if sorted(perm) != list(range(n)):
        raise ParameterError("perm must be a permutation of 0..n-1")

    def move(edges: Iterable[tuple[int, int]]):
        moved = [(perm[u], perm[v]) for u, v in edges]
        if not topology.directed:
            moved = [tuple(sorted(e)) for e in moved]
        return tuple(sorted(moved))

    def remap(maps: Sequence[Mapping[int, int]]):
        result = [None] * n
        for v, mapping in enumerate(maps):
            result[perm[v]] = {perm[u]: p for u, p in mapping.items()}
        return tuple(result)

    out_ports = remap(ports.out_ports)
    in_ports = remap(ports.in_ports) if ports.directed else out_ports
    return Topology(n, move(topology.edges), topology.directed), PortNumbering(out_ports, in_ports, ports.directed)
