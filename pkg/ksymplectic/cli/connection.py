# KSymplectic project.
#
# ksym connection: uniqueness, parallel forms and torsion of the canonical
# connection.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command()
@common_cli_params
@click.argument("spec_file", type=click.Path())
def connection(spec_file, samples, seed, box, tol, threads, defaults, out, debug):
    """
    Verify the canonical connection of a spec
    \f
    Rebuilds the coefficients from the defining relations and compares them with
    the closed form, then checks nabla omega = 0 and the vanishing torsion
    components.

    $ ksym connection curved.json
    """
    run_command(["connection"], spec_file, samples, seed, box, tol, threads, defaults, out, debug)
