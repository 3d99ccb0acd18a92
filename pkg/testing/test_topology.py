import pytest
from hypothesis import given, settings, strategies as st

from exceptions import ParameterError
from network.topology_agent import Labeling, Topology, TopologyAgent, permute


def reaches_everything(n, arcs, start=0):
    seen, stack = {start}, [start]
    while stack:
        u = stack.pop()
        for a, b in arcs:
            if a == u and b not in seen:
                seen.add(b)
                stack.append(b)
    return len(seen) == n


def strongly_connected(topology):
    forward = list(topology.edges)
    backward = [(v, u) for u, v in forward]
    return reaches_everything(topology.n, forward) and reaches_everything(topology.n, backward)


def test_ring_and_complete_sizes(topology_agent):
    ring = topology_agent.generate("ring", {"n": 4})
    assert ring.n == 4 and ring.edge_count == 4
    assert all(ring.degree(v) == 2 for v in range(4))
    complete = topology_agent.generate("complete", {"n": 5})
    assert complete.edge_count == 10


def test_petersen_is_cubic(topology_agent):
    petersen = topology_agent.generate("petersen", {})
    assert petersen.n == 10 and petersen.edge_count == 15
    assert {petersen.degree(v) for v in range(10)} == {3}


def test_random_regular_is_connected_and_regular(topology_agent):
    graph = topology_agent.generate("random_regular", {"n": 8, "degree": 3}, seed=1)
    assert {graph.degree(v) for v in range(8)} == {3}
    assert topology_agent.validate(graph) == []


def test_random_regular_rejects_odd_product(topology_agent):
    with pytest.raises(ParameterError):
        topology_agent.generate("random_regular", {"n": 5, "degree": 3})


def test_unknown_kind_and_missing_n(topology_agent):
    with pytest.raises(ParameterError):
        topology_agent.generate("hypercube", {"n": 4})
    with pytest.raises(ParameterError):
        topology_agent.generate("ring", {})


def test_random_strong_digraph_example(topology_agent):
    graph = topology_agent.generate("random_strong_digraph", {"n": 6, "m": 10}, seed=7)
    assert graph.directed and graph.edge_count == 10
    assert strongly_connected(graph)


@pytest.mark.parametrize("seeds", [range(100), pytest.param(range(1000), marks=pytest.mark.slow)])
def test_random_strong_digraph_passes_independent_check(seeds):
    agent = TopologyAgent()
    for seed in seeds:
        graph = agent.generate("random_strong_digraph", {"n": 6, "arcs": 6 + seed % 20}, seed=seed)
        assert strongly_connected(graph), seed


def test_arc_count_out_of_range(topology_agent):
    with pytest.raises(ParameterError):
        topology_agent.generate("random_strong_digraph", {"n": 4, "arcs": 3})
    with pytest.raises(ParameterError):
        topology_agent.generate("random_strong_digraph", {"n": 4, "arcs": 13})


def test_ports_are_bijections(topology_agent):
    for kind, params in [("ring", {"n": 3}), ("complete", {"n": 5}), ("random_regular", {"n": 8, "degree": 3})]:
        graph = topology_agent.generate(kind, params, seed=2)
        for seed in range(5):
            ports = topology_agent.assign_ports(graph, seed)
            assert topology_agent.validate_ports(graph, ports) == []
            for v in range(graph.n):
                assert sorted(ports.out_ports[v].values()) == list(range(1, graph.degree(v) + 1))


def test_directed_cycle_ports(topology_agent):
    graph = topology_agent.generate("directed_cycle", {"n": 3})
    ports = topology_agent.assign_ports(graph, 0)
    for v in range(3):
        assert ports.out_ports[v] == {(v + 1) % 3: 1}
        assert ports.in_ports[v] == {(v - 1) % 3: 1}


def test_undirected_ports_agree_both_ways(topology_agent):
    graph = topology_agent.generate("complete", {"n": 4})
    ports = topology_agent.assign_ports(graph, 9)
    for v in range(4):
        for p in range(1, 4):
            u = ports.out_neighbor(v, p)
            assert ports.in_neighbor(u, ports.in_port(u, v)) == v


def test_validate_reports_problems(topology_agent):
    assert topology_agent.validate(topology_agent.generate("ring", {"n": 4})) == []
    sink = Topology(3, ((0, 1), (1, 2), (2, 1)), directed=True)
    assert "not strongly connected" in topology_agent.validate(sink)
    assert "not connected" in topology_agent.validate(Topology(4, ((0, 1), (2, 3))))
    assert any("self-loop" in v for v in topology_agent.validate(Topology(2, ((0, 0), (0, 1)))))


def test_edge_list_with_ports(topology_agent):
    graph = topology_agent.generate("ring", {"n": 5})
    ports = topology_agent.assign_ports(graph, 4)
    text = topology_agent.dump_edge_list(graph, ports)
    loaded, loaded_ports = topology_agent.load_edge_list(text)
    assert loaded == graph
    assert loaded_ports.out_ports == ports.out_ports


def test_edge_list_file_without_ports(topology_agent, tmp_path):
    path = tmp_path / "net.txt"
    path.write_text("# a directed triangle\n3 directed\n0 1\n1 2\n2 0\n")
    graph, ports = topology_agent.load_edge_list(path)
    assert graph.directed and graph.n == 3 and ports is None


def test_edge_list_rejects_bad_lines(topology_agent):
    with pytest.raises(ParameterError):
        topology_agent.load_edge_list("3\n0 1 2\n")
    with pytest.raises(ParameterError):
        topology_agent.load_edge_list("3\n0 1 1 1\n1 2\n")


def test_labeling_width():
    assert Labeling.uniform(3, 1, width=2).values == (1, 1, 1)
    with pytest.raises(ParameterError):
        Labeling((0, 4), width=2)


def test_permute_keeps_ports_with_parties(topology_agent):
    graph = topology_agent.generate("path", {"n": 4})
    ports = topology_agent.assign_ports(graph, 0)
    perm = [2, 0, 3, 1]
    moved, moved_ports = permute(graph, ports, perm)
    for u, v in graph.edges:
        assert moved_ports.out_port(perm[u], perm[v]) == ports.out_port(u, v)
    assert moved.edge_count == graph.edge_count


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["ring", "path", "complete", "random_regular", "directed_cycle", "random_strong_digraph"]),
    st.integers(min_value=4, max_value=9),
    st.integers(min_value=0, max_value=2**16),
)
def test_generation_is_seeded_and_ports_are_bijective(kind, n, seed):
    params = {"n": n}
    if kind == "random_regular":
        params["degree"] = 2 if n % 2 else 3
    first = TopologyAgent().generate(kind, params, seed=seed)
    second = TopologyAgent().generate(kind, params, seed=seed)
    assert first == second
    agent = TopologyAgent()
    assert agent.validate(first) == []
    ports = agent.assign_ports(first, seed)
    assert agent.validate_ports(first, ports) == []
    assert ports == agent.assign_ports(first, seed)
