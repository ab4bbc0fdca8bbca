# KSymplectic project.
#
# ksym geodesic: self-convergence of geodesics under step refinement.
#
import click
from ksymplectic.common.config import *
from ksymplectic.cli.runner import run_command


@click.command()
@common_cli_params
@click.option("--steps", type=int, default=None, help="Coarse RK4 step count (default 100)")
@click.option("--duration", type=float, default=None, help="Integration time (default 1)")
@click.argument("spec_file", type=click.Path())
def geodesic(spec_file, samples, seed, box, tol, threads, defaults, out, debug, steps, duration):
    """
    Integrate geodesics and check their convergence
    \f
    $ ksym geodesic curved.json --steps 200
    """
    run_command(["geodesic"], spec_file, samples, seed, box, tol, threads, defaults, out, debug,
                options={"geodesic": {"steps": steps, "duration": duration}})
