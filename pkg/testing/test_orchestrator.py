import orjson
import pytest

from exceptions import ConfigError
from orchestrator.orchestrator import aggregate, build_config, build_topology, protocol_inputs, run_experiment
from runtime.engine import RoundEngine


def test_algorithm1_sweep_succeeds(tmp_path):
    config = build_config(protocol="alg1", topology="ring", n=4, seeds=(0, 3), out=str(tmp_path / "report.json"))
    report = run_experiment(config)
    assert report.aggregates["success_rate"] == 1.0
    assert report.aggregates["violations"] == 0
    assert report.exit_code == 0
    saved = orjson.loads((tmp_path / "report.json").read_bytes())
    assert saved["aggregates"]["runs"] == 4


def test_algorithm2_moves_thirty_qubits_on_five_ring():
    report = run_experiment(build_config(protocol="alg2", topology="ring", n=5, seeds=(0, 1)))
    assert [cell["stats"]["qubits_moved"] for cell in report.cells] == [30, 30]
    assert all(cell["ok"] for cell in report.cells)
    assert report.aggregates["max_phases"] <= 3


def test_generalized_winner_is_recorded(tmp_path):
    trace = tmp_path / "trace.jsonl"
    config = build_config(protocol="alg2_generalized", topology="ring", n=3, upper_bound=5, seeds=(0, 1), trace=str(trace))
    report = run_experiment(config)
    assert report.ok
    lines = [orjson.loads(line) for line in trace.read_bytes().splitlines()]
    assert lines and {line["m"] for line in lines} >= {3}
    assert all(line["seed"] in (0, 1) for line in lines)


def test_directed_protocol_on_directed_cycle():
    report = run_experiment(build_config(protocol="alg2_directed", topology="directed_cycle", n=4, seeds=(0, 1)))
    assert report.ok
    assert [cell["stats"]["qubits_moved"] for cell in report.cells] == [8, 8]


def test_upper_bound_protocol_uses_the_bound():
    config = build_config(protocol="alg1_upper", topology="ring", n=4, upper_bound=6)
    topology, ports = build_topology(config)
    assert ports is None
    assert protocol_inputs(config, topology) == {"status": "eligible", "N": 6}


def test_reports_are_reproducible():
    config = build_config(protocol="alg2", topology="complete", n=4, seeds=(2, 4))
    assert run_experiment(config).to_json() == run_experiment(config).to_json()


def test_parallel_cells_match_serial_cells():
    serial = run_experiment(build_config(protocol="alg2", topology="ring", n=3, seeds=(0, 3), jobs=1))
    parallel = run_experiment(build_config(protocol="alg2", topology="ring", n=3, seeds=(0, 3), jobs=2))
    assert serial.cells == parallel.cells
    assert serial.aggregates == parallel.aggregates


def test_edge_list_topology(tmp_path):
    path = tmp_path / "square.txt"
    path.write_text("4\n0 1\n1 2\n2 3\n3 0\n")
    report = run_experiment(build_config(protocol="alg2", topology_file=str(path), seeds=(0, 1)))
    assert report.ok


def test_edge_list_ports_are_kept(tmp_path, monkeypatch):
    path = tmp_path / "square.txt"
    path.write_text("4\n0 1 1 1\n1 2 2 2\n2 3 1 1\n0 3 2 2\n")
    config = build_config(protocol="alg2", topology_file=str(path), seeds=(0, 3))
    _, file_ports = build_topology(config)
    assert file_ports is not None

    used = []
    original = RoundEngine.run

    def recording_run(self, topology, ports, *args, **kwargs):
        used.append(ports)
        return original(self, topology, ports, *args, **kwargs)

    monkeypatch.setattr(RoundEngine, "run", recording_run)
    report = run_experiment(config)
    assert report.ok
    assert len(used) == 4
    assert all(ports.out_ports == file_ports.out_ports for ports in used)
    assert all(ports.in_ports == file_ports.in_ports for ports in used)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"protocol": "alg2_directed", "topology": "ring", "n": 4},
        {"protocol": "alg1", "topology": "directed_cycle", "n": 4},
        {"protocol": "alg1_upper", "topology": "ring", "n": 4},
        {"protocol": "alg1_upper", "topology": "ring", "n": 4, "upper_bound": 3},
        {"protocol": "alg2", "topology": "ring"},
        {"protocol": "alg2", "topology": "ring", "n": 4, "seeds": (5, 2)},
        {"protocol": "alg2", "topology": "ring", "n": 40},
        {"protocol": "alg9", "topology": "ring", "n": 4},
        {"protocol": "alg2", "topology": "torus", "n": 4},
    ],
)
def test_invalid_configurations(kwargs):
    with pytest.raises(ConfigError):
        build_config(**kwargs)


def test_infeasible_topology_is_a_config_error():
    config = build_config(protocol="alg1", topology="random_regular", n=5, degree=3)
    with pytest.raises(ConfigError):
        run_experiment(config)


def test_failed_cell_counts_as_failure():
    cells = [
        {"seed": 0, "stats": {"rounds": 3, "qubits_moved": 0, "classical_bits": 9}, "ok": True, "violations": [], "leaders": 1, "phases": 2},
        {"seed": 1, "stats": None, "ok": False, "violations": ["ProtocolError: boom"], "leaders": 0, "phases": 0},
    ]
    summary = aggregate(cells)
    assert summary["success_rate"] == 0.5
    assert summary["violations"] == 1
    assert summary["max_rounds"] == 3
