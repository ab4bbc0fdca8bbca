# KSymplectic project.
#
# ksym kaehler: the almost k-Kaehler tensors J_alpha and ghat_alpha.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command()
@common_cli_params
@click.option("--nijenhuis-samples", type=int, default=None,
              help="Points with tabulated Nijenhuis values (default 10)")
@click.argument("spec_file", type=click.Path())
def kaehler(spec_file, samples, seed, box, tol, threads, defaults, out, debug, nijenhuis_samples):
    """
    Build and verify the compatible almost complex structures
    \f
    $ ksym kaehler flat.json
    """
    run_command(["kaehler"], spec_file, samples, seed, box, tol, threads, defaults, out, debug,
                options={"kaehler": {"nijenhuis_samples": nijenhuis_samples}})
