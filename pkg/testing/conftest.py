import sys
import os

# Add the project root to the path so imports work correctly
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import pytest

from fview.folded_view import FView, join, minimize
from network.topology_agent import PortNumbering, Topology, TopologyAgent
from settings import get_settings


@pytest.fixture(autouse=True)
def quiet_progress(monkeypatch):
    monkeypatch.setenv("QLE_PROGRESS", "false")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def topology_agent():
    return TopologyAgent()


def small_family(agent: TopologyAgent) -> list[Topology]:
    """Networks with at most five parties, undirected and directed."""
    family = []
    for n in (3, 4, 5):
        family.append(agent.generate("ring", {"n": n}))
        family.append(agent.generate("directed_cycle", {"n": n}))
    for n in (2, 3, 4, 5):
        family.append(agent.generate("path", {"n": n}))
    for n in (3, 4):
        family.append(agent.generate("complete", {"n": n}))
    family.append(Topology(4, ((0, 1), (0, 2), (0, 3))))
    family.append(Topology(5, ((0, 1), (1, 2), (1, 3), (2, 3), (3, 4))))
    family.append(agent.generate("random_strong_digraph", {"n": 4, "arcs": 6}, seed=3))
    return family


def symmetric_ring_ports(n: int) -> PortNumbering:
    """Port 1 leads to v + 1 and port 2 to v - 1 at every party."""
    maps = tuple({(v + 1) % n: 1, (v - 1) % n: 2} for v in range(n))
    return PortNumbering(maps, maps, False)


def folded_views(topology: Topology, ports: PortNumbering, labels, h: int) -> list[FView]:
    """Every party's minimal depth-h f-view, computed centrally with the construction recurrence."""
    views = [FView.leaf(labels[v]) for v in range(topology.n)]
    for _ in range(h):
        views = [
            minimize(
                join(
                    labels[v],
                    [
                        (p, ports.out_port(ports.in_neighbor(v, p), v), views[ports.in_neighbor(v, p)])
                        for p in range(1, ports.in_degree(v) + 1)
                    ],
                )
            )
            for v in range(topology.n)
        ]
    return views
