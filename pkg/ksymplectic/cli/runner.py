# KSymplectic project.
#
# Shared body of the verification commands: load configuration and spec, run
# the requested suites, show the tables on stderr and write the JSON report.
#
# Exit codes: 0 when every executed check passes, 1 when a check fails, 2 on
# spec/expression errors (click usage errors exit 2 on their own).
#
import sys

import click
from rich import print
from rich.console import Console
from rich.markup import escape

from ksymplectic.common.config import load_spec, preload_config, setup_logging
from ksymplectic.common.errors import ExpressionError, SpecError
from ksymplectic.common.utils import build_report, show_checks, write_report
from ksymplectic.geometry.suites import SUITES, run_all

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2

err_console = Console(stderr=True)


def run_command(suite_names, spec_file, samples=None, seed=None, box=None, tol=None,
                threads=None, defaults=None, out=None, debug=False, options=None):
    """
    suite_names is a list of suite names, or None for the full run (validation
    first, the rest only on a spec that validates). options holds per-suite
    keyword arguments given on the command line; they override the defaults file.
    """
    ctx = click.get_current_context()
    if debug:
        setup_logging(True)
    try:
        config = preload_config(samples, seed, box, tol, threads, defaults, out, debug)
        for name, values in (options or {}).items():
            given = {key: value for key, value in values.items() if value is not None}
            config.options.setdefault(name, {}).update(given)
        spec = load_spec(spec_file)

        if suite_names is None:
            results = run_all(spec, config.plan, config.options)
        else:
            results = [SUITES[name](spec, config.plan, **config.options.get(name, {}))
                       for name in suite_names]
    except (SpecError, ExpressionError) as e:
        print(f"ERROR: {escape(str(e))}", file=sys.stderr)
        ctx.exit(EXIT_BAD_INPUT)
    except click.ClickException:
        raise
    except Exception as e:
        print(f"ERROR: {escape(str(e))}", file=sys.stderr)
        ctx.exit(EXIT_CHECK_FAILED)

    checks = [check for result in results for check in result.checks]
    artifacts = {result.name: result.artifacts for result in results if result.artifacts}
    title = spec.name or spec_file
    for result in results:
        show_checks(err_console, f"{title}: {result.name}", result.checks)

    report = build_report(spec, config.plan.seed, checks, artifacts)
    write_report(report, config.out, stream=sys.stdout)
    ctx.exit(EXIT_OK if all(check.passed for check in checks) else EXIT_CHECK_FAILED)
