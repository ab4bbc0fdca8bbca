# KSymplectic project.
#
# Configuration used by every command: the sampling plan and output settings,
# assembled from three layers (highest first):
#
#   command-line flags
#   defaults JSON file (--defaults or KSYM_DEFAULTS)
#   built-in defaults
#
# A defaults file is a flat JSON object with any of the keys "samples", "seed",
# "box", "tol", "threads" and an optional "options" object of per-suite keyword
# arguments, e.g. {"samples": 20, "options": {"rectangle": {"grid": 20}}}.
#
# Spec files are loaded here as well, so that file and JSON problems surface as
# SpecError before any geometry runs.
#
import functools
import json
import logging

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from ksymplectic.common.errors import SpecError, SpecIOError, SpecJSONError
from ksymplectic.geometry.chart import spec_from_document
from ksymplectic.geometry.structures import SamplingPlan

BUILTIN_DEFAULTS = {
    "samples": 100,
    "seed": 0,
    "box": None,
    "tol": 1e-9,
    "threads": 1,
    "options": {},
}

logger = logging.getLogger(__name__)


class Config(object):
    def __init__(self, plan, out, debug, options, defaults_path=None):
        self.plan = plan
        self.out = out
        self.debug = debug
        # per-suite keyword arguments
        self.options = options
        self.defaults_path = defaults_path


def preload_config(samples=None, seed=None, box=None, tol=None, threads=None,
                   defaults=None, out=None, debug=False):
    settings = dict(BUILTIN_DEFAULTS)
    if defaults:
        settings.update(load_defaults_config(defaults))
    flags = {"samples": samples, "seed": seed, "box": box, "tol": tol, "threads": threads}
    settings.update({key: value for key, value in flags.items() if value is not None})

    box = settings["box"]
    if isinstance(box, str):
        box = parse_box(box)
    elif box is not None:
        box = tuple(box)
    plan = SamplingPlan(sample_count=int(settings["samples"]), seed=int(settings["seed"]),
                        box=box, tolerance=float(settings["tol"]),
                        threads=int(settings["threads"]))
    if plan.sample_count < 1:
        raise click.BadParameter("need at least one sample", param_hint="--samples")

    if debug:
        logger.debug("sampling plan: %s", plan)
        if defaults:
            logger.debug("defaults file: %s", defaults)
    return Config(plan, out, debug, settings.get("options") or {}, defaults)


# Common options added to every command. Note that the options MUST be on the
# function definition.
def common_cli_params(func):
    @click.option("--samples", type=int, default=None, help="Number of sample points (default 100)")
    @click.option("--seed", type=int, default=None, help="Sampling seed (default 0)")
    @click.option("--box", default=None, help="Sampling box LO,HI applied to every coordinate")
    @click.option("--tol", type=float, default=None, help="Residual tolerance (default 1e-9)")
    @click.option("--threads", type=int, envvar="KSYM_THREADS", default=None,
                  help="Worker threads for sample points")
    @click.option("--defaults", envvar="KSYM_DEFAULTS", default=None,
                  type=click.Path(dir_okay=False), help="Defaults JSON file")
    @click.option("--out", default=None, type=click.Path(dir_okay=False),
                  help="Report file (default: stdout)")
    @click.option("--debug", is_flag=True, envvar="KSYM_DEBUG", help="Debug logging")
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)
    return wrapper


def parse_box(text):
    """'LO,HI' -> (lo, hi) floats."""
    try:
        lo, hi = (float(part) for part in str(text).split(","))
    except ValueError:
        raise click.BadParameter(f"expected LO,HI, got '{text}'", param_hint="--box")
    if not lo < hi:
        raise click.BadParameter(f"LO must be below HI, got '{text}'", param_hint="--box")
    return np.float64(lo), np.float64(hi)


def load_defaults_config(defaults_path):
    try:
        with open(defaults_path, "r") as infile:
            config_data = json.load(infile)
    except OSError as e:
        raise SpecIOError(f"cannot read defaults file {defaults_path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise SpecJSONError(f"defaults file {defaults_path}: {e.msg}", e.lineno, e.colno)
    if not isinstance(config_data, dict):
        raise SpecError(f"defaults file {defaults_path} must hold a JSON object")
    unknown = sorted(set(config_data) - set(BUILTIN_DEFAULTS))
    if unknown:
        raise SpecError(f"defaults file {defaults_path}: unknown key '{unknown[0]}'")
    return config_data


def load_spec(path):
    """Read, decode and check a spec file."""
    try:
        with open(path, "r") as infile:
            text = infile.read()
    except OSError as e:
        raise SpecIOError(f"cannot read spec file {path}: {e.strerror}")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecJSONError(f"{path}: {e.msg}", e.lineno, e.colno)
    spec = spec_from_document(document)
    logger.debug("spec %s loaded from %s", spec.name or "(unnamed)", path)
    return spec


def setup_logging(debug=False):
    logging.basicConfig(level=logging.DEBUG if debug else logging.WARNING,
                        format="%(message)s", datefmt="[%X]",
                        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
                        force=True)
