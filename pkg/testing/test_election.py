import pytest

from agents.election_agent import (
    ELIGIBLE,
    ERROR,
    PROTOCOLS,
    algorithm1,
    algorithm2,
    algorithm2_generalized,
    ceil_log2,
    le_modified,
)
from exceptions import ParameterError
from network.topology_agent import TopologyAgent
from runtime.engine import run

agent = TopologyAgent()


def one_leader(stats):
    return len(stats.leaders()) == 1


def clean(stats):
    return stats.qubits_live == 0 and stats.qubits_allocated - stats.qubits_retired == 0


def phase_events(stats, m=None):
    return [e for e in stats.trace if e["event"] == "phase" and (m is None or e["m"] == m)]


def test_ceil_log2():
    assert [ceil_log2(n) for n in (2, 3, 4, 5, 8, 9)] == [1, 2, 2, 3, 3, 4]


def test_protocol_table():
    assert PROTOCOLS["alg2_directed"].directed is True
    assert PROTOCOLS["alg1_upper"].size_key == "N"
    assert PROTOCOLS["alg2_generalized"].directed is None


# ── Consistency-check election ───────────────────────────────────────────────


@pytest.mark.parametrize("kind,n", [("ring", 3), ("ring", 4), ("complete", 4), ("path", 3)])
def test_algorithm1_elects_one_leader(kind, n):
    graph = agent.generate(kind, {"n": n})
    for seed in range(5):
        stats = run(graph, agent.assign_ports(graph, seed), algorithm1, {"status": ELIGIBLE, "n": n}, seed=seed)
        assert one_leader(stats), seed
        assert clean(stats)
        phases = phase_events(stats)
        assert len(phases) == n * (n - 1)
        assert all(e["status"] == ELIGIBLE for e in phases if e["z"] == e["z_max"])


def test_algorithm1_with_upper_bound():
    graph = agent.generate("ring", {"n": 4})
    for seed in range(3):
        stats = run(graph, agent.assign_ports(graph, seed), algorithm1, {"status": ELIGIBLE, "N": 8}, seed=seed)
        assert one_leader(stats)


@pytest.mark.slow
@pytest.mark.parametrize(
    "kind,params,graph_seed",
    [("ring", {"n": n}, 0) for n in range(3, 9)]
    + [("complete", {"n": 4}, 0), ("complete", {"n": 5}, 0), ("petersen", {}, 0)]
    + [("random_regular", {"n": 8, "degree": 3}, s) for s in (1, 2)],
)
def test_algorithm1_sweep(kind, params, graph_seed):
    graph = agent.generate(kind, params, seed=graph_seed)
    for seed in range(20):
        stats = run(graph, agent.assign_ports(graph, seed), algorithm1, {"status": ELIGIBLE, "n": graph.n}, seed=seed)
        assert one_leader(stats), seed


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["ring", "complete"])
def test_algorithm1_upper_bound_sweep(kind):
    graph = agent.generate(kind, {"n": 4})
    for seed in range(20):
        stats = run(graph, agent.assign_ports(graph, seed), algorithm1, {"status": ELIGIBLE, "N": 8}, seed=seed)
        assert one_leader(stats), seed


# ── Cat-state election ───────────────────────────────────────────────────────


def check_algorithm2(graph, seed):
    n = graph.n
    stats = run(graph, agent.assign_ports(graph, seed), algorithm2, {"status": ELIGIBLE, "n": n}, seed=seed)
    assert one_leader(stats), seed
    assert clean(stats)
    per_link = 1 if graph.directed else 2
    assert stats.per_round[0]["qubits"] == per_link * graph.edge_count * ceil_log2(n)
    assert all(entry["qubits"] == 0 for entry in stats.per_round[1:])
    phases = {e["phase"] for e in phase_events(stats)}
    assert len(phases) <= ceil_log2(n)
    for phase in phases:
        events = [e for e in phase_events(stats) if e["phase"] == phase]
        eligible = sum(1 for e in events if e["status_before"] == ELIGIBLE)
        assert {e["k"] for e in events} == {eligible}
        assert all(e["c_minor"] <= eligible // 2 for e in events)


@pytest.mark.parametrize("kind,n", [("ring", 3), ("ring", 5), ("complete", 4), ("directed_cycle", 3), ("directed_cycle", 4)])
def test_algorithm2_elects_one_leader(kind, n):
    graph = agent.generate(kind, {"n": n})
    for seed in range(4):
        check_algorithm2(graph, seed)


@pytest.mark.slow
@pytest.mark.parametrize(
    "kind,params",
    [("ring", {"n": n}) for n in range(3, 7)]
    + [("complete", {"n": 4}), ("random_regular", {"n": 6, "degree": 3})]
    + [("directed_cycle", {"n": n}) for n in range(3, 6)]
    + [("random_strong_digraph", {"n": 5, "arcs": 9})],
)
def test_algorithm2_sweep(kind, params):
    graph = agent.generate(kind, params, seed=1)
    for seed in range(20):
        check_algorithm2(graph, seed)


def test_two_parties_need_one_phase():
    pair = agent.generate("path", {"n": 2})
    for seed in range(5):
        stats = run(pair, agent.assign_ports(pair, 0), algorithm2, {"status": ELIGIBLE, "n": 2}, seed=seed)
        assert one_leader(stats)
        assert {e["phase"] for e in phase_events(stats)} == {1}


# ── Unknown party count ──────────────────────────────────────────────────────


def test_guess_equal_to_party_count_elects():
    ring = agent.generate("ring", {"n": 3})
    for seed in range(4):
        stats = run(ring, agent.assign_ports(ring, seed), le_modified, {"status": ELIGIBLE, "m": 3}, seed=seed)
        assert one_leader(stats)
        assert ERROR not in stats.outputs


@pytest.mark.parametrize("m", [4, 5, 6, 7])
def test_guess_above_party_count_errors(m):
    ring = agent.generate("ring", {"n": 3})
    for seed in range(4):
        stats = run(ring, agent.assign_ports(ring, seed), le_modified, {"status": ELIGIBLE, "m": m}, seed=seed)
        assert stats.outputs == [ERROR] * 3
        assert clean(stats)


def test_guess_must_be_at_least_two():
    ring = agent.generate("ring", {"n": 3})
    with pytest.raises(ParameterError):
        run(ring, agent.assign_ports(ring, 0), le_modified, {"status": ELIGIBLE, "m": 1}, seed=0)


def test_every_guess_runs_the_same_schedule():
    ring = agent.generate("ring", {"n": 3})
    rounds = set()
    for seed in range(3):
        stats = run(ring, agent.assign_ports(ring, seed), le_modified, {"status": ELIGIBLE, "m": 4}, seed=seed)
        rounds.add(stats.rounds)
    assert rounds == {1 + ceil_log2(4) * (3 + 2 * 7)}


@pytest.mark.parametrize("mode", ["parallel", "sequential"])
def test_generalized_finds_the_party_count(mode):
    ring = agent.generate("ring", {"n": 3})
    for seed in range(3):
        stats = run(ring, agent.assign_ports(ring, seed), algorithm2_generalized, {"status": ELIGIBLE, "N": 5, "mode": mode}, seed=seed)
        assert one_leader(stats)
        assert {e["m"] for e in stats.trace if e["event"] == "winner"} == {3}
        assert clean(stats)
        results = {(e["m"], e["party"]): e["result"] for e in stats.trace if e["event"] == "result"}
        assert all(result == ERROR for (m, _), result in results.items() if m > 3)


def test_parallel_guesses_share_the_first_round():
    ring = agent.generate("ring", {"n": 3})
    stats = run(ring, agent.assign_ports(ring, 0), algorithm2_generalized, {"status": ELIGIBLE, "N": 4, "mode": "parallel"}, seed=0)
    instances = sum(ceil_log2(m) for m in range(2, 5))
    assert stats.per_round[0]["qubits"] == 2 * ring.edge_count * instances
    assert all(entry["qubits"] == 0 for entry in stats.per_round[1:])
    assert set(stats.channels) == {"2", "3", "4"}


@pytest.mark.slow
@pytest.mark.parametrize("n", [3, 4, 5])
def test_generalized_sweep(n):
    ring = agent.generate("ring", {"n": n})
    for seed in range(20):
        stats = run(ring, agent.assign_ports(ring, seed), algorithm2_generalized, {"status": ELIGIBLE, "N": n + 3}, seed=seed)
        assert one_leader(stats), seed
        assert {e["m"] for e in stats.trace if e["event"] == "winner"} == {n}
        assert all(e["result"] == ERROR for e in stats.trace if e["event"] == "result" and e["m"] > n)
