# KSymplectic project.
#
# ksym rectangle: the rectangle spanned at the base point by the vertical line
# along y1 and the integral curve of X_1. The grid goes into the report so it can
# be plotted elsewhere.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command()
@common_cli_params
@click.option("--grid", type=int, default=None, help="Cells per side (default 10)")
@click.option("--length", type=float, default=None, help="Length of both generators (default 1)")
@click.argument("spec_file", type=click.Path())
def rectangle(spec_file, samples, seed, box, tol, threads, defaults, out, debug, grid, length):
    """
    Build and verify a rectangle from a vertical and a horizontal curve
    \f
    $ ksym rectangle flat.json --grid 20 --out rect.json
    """
    run_command(["rectangle"], spec_file, samples, seed, box, tol, threads, defaults, out, debug,
                options={"rectangle": {"grid": grid, "length": length}})
