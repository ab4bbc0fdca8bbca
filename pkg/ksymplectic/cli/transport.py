# KSymplectic project.
#
# ksym transport: parallel transport around closed loops inside a leaf.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command()
@common_cli_params
@click.option("--steps", type=int, default=None, help="RK4 steps per loop edge (default 64)")
@click.option("--size", type=float, default=None, help="Edge length of the loop (default 0.5)")
@click.argument("spec_file", type=click.Path())
def transport(spec_file, samples, seed, box, tol, threads, defaults, out, debug, steps, size):
    """
    Transport vectors around loops in the leaves of F
    \f
    $ ksym transport curved.json --steps 128
    """
    run_command(["transport"], spec_file, samples, seed, box, tol, threads, defaults, out, debug,
                options={"transport": {"steps": steps, "size": size}})
