# KSymplectic project.
#
# ksym validate: the k-symplectic conditions C1..C7 at sampled points.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command()
@common_cli_params
@click.argument("spec_file", type=click.Path())
def validate(spec_file, samples, seed, box, tol, threads, defaults, out, debug):
    """
    Check that a spec describes a k-symplectic structure
    \f
    Example:

    $ ksym validate flat.json --samples 100 --seed 0 --out report.json
    """
    run_command(["validate"], spec_file, samples, seed, box, tol, threads, defaults, out, debug)
