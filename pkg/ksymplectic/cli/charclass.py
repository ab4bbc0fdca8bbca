# KSymplectic project.
#
# ksym charclass: slot structure of the curvature form and vanishing of its
# wedge and trace powers beyond degree 2n.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command()
@common_cli_params
@click.option("--probes", type=int, default=None,
              help="Random multivector probes per point (default 3)")
@click.argument("spec_file", type=click.Path())
def charclass(spec_file, samples, seed, box, tol, threads, defaults, out, debug, probes):
    """
    Check the curvature form and its characteristic powers
    \f
    $ ksym charclass n2-curved.json
    """
    run_command(["charclass"], spec_file, samples, seed, box, tol, threads, defaults, out, debug,
                options={"charclass": {"probes": probes}})
