# KSymplectic project.
#
# ksym normal-form: flat normal-form coordinates and their verification. Curved
# specs report the check as skipped.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command(name="normal-form")
@common_cli_params
@click.option("--grid", type=int, default=None, help="Verification grid per side (default 6)")
@click.option("--pairs", type=int, default=None, help="Tabulated (p, p') pairs (default 5)")
@click.argument("spec_file", type=click.Path())
def normal_form(spec_file, samples, seed, box, tol, threads, defaults, out, debug, grid, pairs):
    """
    Build flat normal-form coordinates
    \f
    $ ksym normal-form t1.json --grid 20
    """
    run_command(["normal-form"], spec_file, samples, seed, box, tol, threads, defaults, out, debug,
                options={"normal-form": {"grid": grid, "pairs": pairs}})
