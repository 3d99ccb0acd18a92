import importlib

import pytest

MODULES = [
    "settings",
    "exceptions",
    "network.topology_agent",
    "quantum.gates",
    "quantum.sparse_state",
    "quantum.dense_state",
    "runtime.messages",
    "runtime.engine",
    "fview.folded_view",
    "fview.view_oracle",
    "fview.counting",
    "fview.construction",
    "agents.sharing_agent",
    "agents.consistency_agent",
    "agents.symmetry_agent",
    "agents.voting_agent",
    "agents.election_agent",
    "orchestrator.orchestrator",
    "app",
]


@pytest.mark.parametrize("name", MODULES)
def test_module_imports(name):
    assert importlib.import_module(name) is not None


def test_settings_defaults():
    from settings import get_settings

    settings = get_settings()
    assert settings.prune_threshold == 1e-12
    assert settings.norm_tolerance == 1e-9
    assert settings.max_quantum_parties >= 10


def test_settings_from_environment(monkeypatch):
    from settings import get_settings

    monkeypatch.setenv("QLE_ROUND_CAP_FACTOR", "3")
    get_settings.cache_clear()
    assert get_settings().round_cap_factor == 3
