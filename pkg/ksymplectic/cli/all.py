# KSymplectic project.
#
# ksym all: validation, then every suite when the spec validates.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command(name="all")
@common_cli_params
@click.argument("spec_file", type=click.Path())
def all_suites(spec_file, samples, seed, box, tol, threads, defaults, out, debug):
    """
    Run every verification suite
    \f
    Validation runs first; when it fails the other suites are skipped and the
    command exits with status 1.

    $ ksym all curved.json --samples 20
    """
    run_command(None, spec_file, samples, seed, box, tol, threads, defaults, out, debug)
