import sys
import os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import orjson
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, Field, ValidationError, model_validator
from tqdm import tqdm

from agents.election_agent import ELIGIBLE, ERROR, PROTOCOLS, ceil_log2
from exceptions import ConfigError, LeaderElectionError
from network.topology_agent import DIRECTED_KINDS, KINDS, PortNumbering, Topology, TopologyAgent
from runtime.engine import RoundEngine, RunStats
from settings import get_settings

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Initialize agents
topology_agent = TopologyAgent()

ProtocolName = Literal["alg1", "alg1_upper", "alg2", "alg2_directed", "alg2_generalized"]

REPORT_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2


class ExperimentConfig(BaseModel):
    """One sweep: a protocol on one network over an inclusive range of seeds."""

    protocol: ProtocolName
    topology: str = "ring"
    topology_file: Optional[str] = None
    n: Optional[int] = Field(None, ge=2)
    upper_bound: Optional[int] = Field(None, ge=2)
    degree: int = Field(3, ge=1)
    arcs: Optional[int] = None
    graph_seed: int = 0
    seeds: tuple[int, int] = (0, 0)
    out: Optional[str] = None
    trace: Optional[str] = None
    round_cap: Optional[int] = Field(None, ge=1)
    jobs: Optional[int] = Field(None, ge=1)
    generalized_mode: Literal["parallel", "sequential"] = "parallel"

    @model_validator(mode="after")
    def check_compatibility(self) -> "ExperimentConfig":
        spec = PROTOCOLS[self.protocol]
        if self.seeds[0] > self.seeds[1]:
            raise ValueError(f"Seed range {self.seeds[0]}..{self.seeds[1]} is empty")
        if self.topology_file is None:
            if self.topology not in KINDS or self.topology == "from_edge_list":
                raise ValueError(f"Unknown topology kind: {self.topology}")
            directed = self.topology in DIRECTED_KINDS
            if spec.directed is True and not directed:
                raise ValueError(f"{self.protocol} needs a directed topology, got {self.topology}")
            if spec.directed is False and directed:
                raise ValueError(f"{self.protocol} needs an undirected topology, got {self.topology}")
            if self.topology != "petersen" and self.n is None:
                raise ValueError(f"--n is required for topology {self.topology}")
        if spec.size_key == "N" and self.upper_bound is None:
            raise ValueError(f"{self.protocol} needs --upper-bound")
        if self.upper_bound is not None and self.n is not None and self.upper_bound < self.n:
            raise ValueError(f"Upper bound {self.upper_bound} is below the party count {self.n}")
        limit = get_settings().max_quantum_parties
        size = self.upper_bound if spec.size_key == "N" else self.n
        if size is not None and size > limit:
            raise ValueError(f"Party count {size} exceeds the simulator limit of {limit}")
        return self


def build_config(**kwargs) -> ExperimentConfig:
    try:
        return ExperimentConfig(**kwargs)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


@dataclass
class Report:
    config: dict
    cells: list[dict]
    aggregates: dict
    traces: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"config": self.config, "cells": self.cells, "aggregates": self.aggregates}

    def to_json(self) -> bytes:
        return orjson.dumps(self.to_dict(), option=REPORT_OPTIONS)

    @property
    def ok(self) -> bool:
        return self.aggregates["success_rate"] == 1.0 and self.aggregates["violations"] == 0

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1


# ── Topology ────────────────────────────────────────────────────────────────


def build_topology(config: ExperimentConfig) -> tuple[Topology, Optional[PortNumbering]]:
    """The network to run on, with the port numbering of an edge-list file that carries one."""
    if config.topology_file:
        topology, ports = topology_agent.load_edge_list(Path(config.topology_file))
        violations = topology_agent.validate(topology)
        if violations:
            raise ConfigError(f"Topology file {config.topology_file} is invalid: {violations}")
        spec = PROTOCOLS[config.protocol]
        if spec.directed is not None and spec.directed != topology.directed:
            raise ConfigError(f"{config.protocol} cannot run on a {'directed' if topology.directed else 'undirected'} network")
        if config.n is not None and config.n != topology.n:
            raise ConfigError(f"--n {config.n} does not match the {topology.n} parties in {config.topology_file}")
        return topology, ports
    params = {}
    if config.topology != "petersen":
        params["n"] = config.n
    if config.topology == "random_regular":
        params["degree"] = config.degree
    if config.topology == "random_strong_digraph" and config.arcs is not None:
        params["arcs"] = config.arcs
    try:
        return topology_agent.generate(config.topology, params, seed=config.graph_seed), None
    except LeaderElectionError as e:
        raise ConfigError(str(e)) from e


def protocol_inputs(config: ExperimentConfig, topology: Topology) -> dict:
    spec = PROTOCOLS[config.protocol]
    inputs = {"status": ELIGIBLE}
    if spec.size_key == "N":
        inputs["N"] = config.upper_bound
    else:
        inputs["n"] = topology.n
    if config.protocol == "alg2_generalized":
        inputs["mode"] = config.generalized_mode
    return inputs


# ── Audits ──────────────────────────────────────────────────────────────────


def _phase_events(stats: RunStats, m: Optional[int] = None) -> dict[int, list[dict]]:
    by_phase = defaultdict(list)
    for event in stats.trace:
        if event["event"] == "phase" and (m is None or event.get("m") == m):
            by_phase[event["phase"]].append(event)
    return dict(sorted(by_phase.items()))


def audit_leader(stats: RunStats) -> list[str]:
    leaders = stats.leaders()
    if len(leaders) != 1:
        return [f"expected exactly one leader, got {len(leaders)}"]
    return []


def audit_status(stats: RunStats) -> list[str]:
    violations = []
    last: dict[tuple, str] = {}
    for event in stats.trace:
        if event["event"] != "phase":
            continue
        key = (event["party"], event.get("m"))
        if last.get(key) not in (None, event["status_before"]):
            violations.append(f"party {event['party']} changed status between phases")
        if event["status_before"] != ELIGIBLE and event["status"] == ELIGIBLE:
            violations.append(f"party {event['party']} became eligible again in phase {event['phase']}")
        last[key] = event["status"]
    return violations


def audit_algorithm1(stats: RunStats) -> list[str]:
    violations = []
    previous = None
    for phase, events in _phase_events(stats).items():
        eligible = [e for e in events if e["status_before"] == ELIGIBLE]
        survivors = [e for e in events if e["status"] == ELIGIBLE]
        if not survivors:
            violations.append(f"phase {phase} left no eligible party")
        if previous is not None and len(eligible) > previous:
            violations.append(f"eligible count grew to {len(eligible)} in phase {phase}")
        previous = len(eligible)
        k = events[0]["k"]
        consistent = all(e["verdict"] == "consistent" for e in events)
        if k == len(eligible) and consistent and len(eligible) > 1 and len({e["z"] for e in eligible}) == 1:
            violations.append(f"phase {phase} with exact k={k} left all eligible z values equal")
    return violations


def audit_algorithm2(stats: RunStats, n: int, m: Optional[int] = None) -> list[str]:
    violations = []
    phases = _phase_events(stats, m)
    if len(phases) > ceil_log2(n):
        violations.append(f"used {len(phases)} phases, more than ceil(log2 {n})")
    for phase, events in phases.items():
        eligible = sum(1 for e in events if e["status_before"] == ELIGIBLE)
        ks = {e["k"] for e in events}
        if ks != {eligible}:
            violations.append(f"phase {phase}: parties hold k={sorted(ks)} but {eligible} are eligible")
        for c in {e["c_minor"] for e in events}:
            if eligible >= 2 and c is not None and c > eligible // 2:
                violations.append(f"phase {phase}: minority count {c} exceeds {eligible // 2}")
    return violations


def audit_quantum_rounds(stats: RunStats, expected_first: Optional[int]) -> list[str]:
    violations = []
    for entry in stats.per_round:
        if entry["round"] > 1 and entry["qubits"]:
            violations.append(f"round {entry['round']} moved {entry['qubits']} qubits")
    if expected_first is not None and stats.per_round and stats.per_round[0]["qubits"] != expected_first:
        violations.append(f"round 1 moved {stats.per_round[0]['qubits']} qubits, expected {expected_first}")
    return violations


def audit_generalized(stats: RunStats, n: int) -> list[str]:
    violations = []
    winners = {e["m"] for e in stats.trace if e["event"] == "winner"}
    if winners != {n}:
        violations.append(f"winning guess {sorted(winners)} differs from the party count {n}")
    for e in stats.trace:
        if e["event"] == "result" and e["m"] > n and e["result"] != ERROR:
            violations.append(f"guess m={e['m']} > {n} did not report an error")
    return violations


def audit_conservation(stats: RunStats) -> list[str]:
    if stats.qubits_allocated - stats.qubits_retired != stats.qubits_live:
        return ["qubit bookkeeping does not balance"]
    if stats.qubits_live:
        return [f"{stats.qubits_live} qubits still live after the run"]
    return []


def audit_run(config: ExperimentConfig, topology: Topology, stats: RunStats) -> list[str]:
    violations = audit_leader(stats) + audit_status(stats) + audit_conservation(stats)
    n = topology.n
    per_link = 1 if topology.directed else 2
    if config.protocol in ("alg1", "alg1_upper"):
        violations += audit_algorithm1(stats)
    elif config.protocol in ("alg2", "alg2_directed"):
        violations += audit_algorithm2(stats, n)
        violations += audit_quantum_rounds(stats, per_link * topology.edge_count * ceil_log2(n))
    else:
        violations += audit_generalized(stats, n)
        violations += audit_algorithm2(stats, n, m=n)
        if config.generalized_mode == "parallel":
            instances = sum(ceil_log2(m) for m in range(2, config.upper_bound + 1))
            violations += audit_quantum_rounds(stats, per_link * topology.edge_count * instances)
    return violations


def phases_used(config: ExperimentConfig, topology: Topology, stats: RunStats) -> int:
    m = topology.n if config.protocol == "alg2_generalized" else None
    return len(_phase_events(stats, m))


def trace_lines(seed: int, stats: RunStats) -> list[dict]:
    """One record per (guess m, phase) summing up what the parties reported."""
    groups = defaultdict(list)
    for e in stats.trace:
        if e["event"] == "phase":
            groups[(e.get("m"), e["phase"])].append(e)
    lines = []
    for (m, phase), events in sorted(groups.items()):
        eligible = [e for e in events if e["status_before"] == ELIGIBLE]
        verdicts = defaultdict(int)
        for e in events:
            verdicts[e["verdict"]] += 1
        lines.append(
            {
                "seed": seed,
                "protocol": events[0]["protocol"],
                "m": m,
                "phase": phase,
                "k": sorted({e["k"] for e in events}),
                "eligible": len(eligible),
                "survivors": sum(1 for e in events if e["status"] == ELIGIBLE),
                "verdicts": dict(verdicts),
                "z": sorted(e["z"] for e in eligible),
            }
        )
    return lines


# ── Sweep ───────────────────────────────────────────────────────────────────


def run_cell(
    config: ExperimentConfig, topology: Topology, seed: int, ports: Optional[PortNumbering] = None
) -> tuple[dict, list[dict]]:
    """Run one seed: the given port numbering or a fresh one drawn from the seed, one protocol run, audits."""
    try:
        if ports is None:
            ports = topology_agent.assign_ports(topology, seed)
        spec = PROTOCOLS[config.protocol]
        engine = RoundEngine(config.round_cap)
        stats = engine.run(topology, ports, spec.program, protocol_inputs(config, topology), seed)
        violations = audit_run(config, topology, stats)
        cell = {
            "seed": seed,
            "stats": stats.to_dict(),
            "ok": not violations,
            "violations": violations,
            "leaders": len(stats.leaders()),
            "phases": phases_used(config, topology, stats),
        }
        if violations:
            logger.warning(f"Seed {seed}: {violations}")
        return cell, trace_lines(seed, stats)
    except Exception as e:
        logger.error(f"Seed {seed} failed: {str(e)}", exc_info=True)
        cell = {
            "seed": seed,
            "stats": None,
            "ok": False,
            "violations": [f"{type(e).__name__}: {e}"],
            "leaders": 0,
            "phases": 0,
        }
        return cell, []


def aggregate(cells: list[dict]) -> dict:
    frame = pd.DataFrame(
        {
            "leaders": [c["leaders"] for c in cells],
            "rounds": [c["stats"]["rounds"] if c["stats"] else 0 for c in cells],
            "qubits": [c["stats"]["qubits_moved"] if c["stats"] else 0 for c in cells],
            "bits": [c["stats"]["classical_bits"] if c["stats"] else 0 for c in cells],
            "phases": [c["phases"] for c in cells],
            "violations": [len(c["violations"]) for c in cells],
        }
    )
    return {
        "runs": int(len(frame)),
        "success_rate": float((frame["leaders"] == 1).mean()) if len(frame) else 0.0,
        "max_rounds": int(frame["rounds"].max()) if len(frame) else 0,
        "max_qubits": int(frame["qubits"].max()) if len(frame) else 0,
        "max_bits": int(frame["bits"].max()) if len(frame) else 0,
        "max_phases": int(frame["phases"].max()) if len(frame) else 0,
        "violations": int(frame["violations"].sum()),
    }


def run_experiment(config: ExperimentConfig) -> Report:
    """
    Run every seed cell of the sweep, audit each run and write the report (and trace).

    Raises:
        ConfigError: the topology cannot be built or does not suit the protocol
    """
    settings = get_settings()
    topology, ports = build_topology(config)
    first, last = config.seeds
    seeds = list(range(first, last + 1))
    logger.info(f"Running {config.protocol} on {topology.n} parties ({topology.edge_count} links), seeds {first}..{last}")

    jobs = config.jobs or settings.jobs
    if jobs == 1:
        iterator = tqdm(seeds, desc=config.protocol, disable=not settings.progress)
        results = [run_cell(config, topology, seed, ports) for seed in iterator]
    else:
        results = Parallel(n_jobs=jobs)(delayed(run_cell)(config, topology, seed, ports) for seed in seeds)

    cells = [cell for cell, _ in results]
    traces = [line for _, lines in results for line in lines]
    report = Report(config.model_dump(), cells, aggregate(cells), traces)
    logger.info(f"Success rate {report.aggregates['success_rate']:.2f}, {report.aggregates['violations']} violations")

    if config.out:
        Path(config.out).write_bytes(report.to_json())
        logger.info(f"Report written to {config.out}")
    if config.trace:
        with open(config.trace, "wb") as handle:
            for line in traces:
                handle.write(orjson.dumps(line, option=orjson.OPT_SORT_KEYS) + b"\n")
        logger.info(f"Trace written to {config.trace}")
    return report
