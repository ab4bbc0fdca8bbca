# KSymplectic project.
#
# ksym curvature: bracket curvature against the closed form, leafwise flatness
# and k >= 2 rigidity.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command()
@common_cli_params
@click.argument("spec_file", type=click.Path())
def curvature(spec_file, samples, seed, box, tol, threads, defaults, out, debug):
    """
    Verify the curvature of the canonical connection
    \f
    $ ksym curvature curved.json --samples 20
    """
    run_command(["curvature"], spec_file, samples, seed, box, tol, threads, defaults, out, debug)
