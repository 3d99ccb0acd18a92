import sys
import os
import logging
from typing import Optional, Sequence

import click

# Add the project root to the path so imports work correctly
sys.path.append(os.path.abspath(os.path.dirname(__file__)))

from agents.election_agent import GENERALIZED_MODES, PROTOCOLS
from exceptions import ConfigError
from network.topology_agent import KINDS
from orchestrator.orchestrator import ExperimentConfig, build_config, run_experiment
from settings import get_settings

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

TOPOLOGY_CHOICES = [kind for kind in KINDS if kind != "from_edge_list"]


def parse_seeds(value: str) -> tuple[int, int]:
    """'A..B' (inclusive) or a single integer."""
    try:
        if ".." in value:
            first, last = value.split("..", 1)
            return int(first), int(last)
        seed = int(value)
        return seed, seed
    except ValueError:
        raise click.BadParameter(f"expected A..B or an integer, got {value!r}", param_hint="--seeds")


def _seeds_callback(ctx, param, value):
    return parse_seeds(value)


@click.command(name="qle")
@click.option("--protocol", type=click.Choice(sorted(PROTOCOLS)), required=True, help="Election protocol to run.")
@click.option("--topology", type=click.Choice(TOPOLOGY_CHOICES), default="ring", show_default=True)
@click.option("--topology-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Edge-list file; overrides --topology.")
@click.option("--n", "n", type=int, default=None, help="Number of parties.")
@click.option("--upper-bound", type=int, default=None, help="Upper bound N for alg1_upper / alg2_generalized.")
@click.option("--degree", type=int, default=3, show_default=True, help="Degree for random_regular.")
@click.option("--arcs", type=int, default=None, help="Arc count for random_strong_digraph.")
@click.option("--graph-seed", type=int, default=0, show_default=True)
@click.option("--seeds", default="0..0", show_default=True, callback=_seeds_callback, help="Inclusive range A..B.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report JSON path.")
@click.option("--trace", type=click.Path(dir_okay=False), default=None, help="Per-phase trace (JSON lines) path.")
@click.option("--round-cap", type=int, default=None)
@click.option("--jobs", type=int, default=None, help="Parallel seed cells.")
@click.option("--generalized-mode", type=click.Choice(GENERALIZED_MODES), default="parallel", show_default=True)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"]), default=None)
def cli(log_level: Optional[str], **options):
    """Run a quantum leader election sweep and write an audited report."""
    logging.getLogger().setLevel(log_level or get_settings().log_level)
    try:
        config = build_config(**options)
        report = run_experiment(config)
    except ConfigError as e:
        click.echo(f"Configuration error: {e}", err=True)
        sys.exit(2)

    agg = report.aggregates
    click.echo(
        f"{config.protocol}: {agg['runs']} runs, success rate {agg['success_rate']:.3f}, "
        f"max rounds {agg['max_rounds']}, max qubits {agg['max_qubits']}, max bits {agg['max_bits']}, "
        f"{agg['violations']} violations"
    )
    sys.exit(report.exit_code)


def parse_args(argv: Sequence[str]) -> ExperimentConfig:
    """
    Parse command-line flags into a validated ExperimentConfig.

    Raises:
        click.UsageError: unknown flag, missing or malformed value
        ConfigError: flags parse but describe an experiment that cannot run
    """
    ctx = cli.make_context("qle", list(argv))
    options = dict(ctx.params)
    options.pop("log_level", None)
    return build_config(**options)


def main(argv: Optional[Sequence[str]] = None) -> None:
    cli.main(args=list(argv) if argv is not None else None, prog_name="qle")


if __name__ == "__main__":
    main()
