# KSymplectic project.
#
# Common helpers shared by the geometry suites and the commands: residual
# formatting, report assembly, rich tables and the ordered worker pool.
#
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from rich.table import Table


def format_residual(value):
    """Residuals go into reports as decimal strings with 17 significant digits."""
    return "%.17g" % float(value)


def map_ordered(fn, items, threads=1):
    """
    Apply fn to every item, on up to `threads` workers. Results come back in input
    order regardless of scheduling.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def spec_digest(document):
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def jsonable(value):
    """Convert numpy scalars/arrays (and nested containers) to plain JSON data."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    return value


def build_report(spec, seed, checks, artifacts=None):
    from ksymplectic import __version__
    return {
        "spec_digest": spec_digest(spec.document or {}),
        "tool_version": __version__,
        "seed": int(seed),
        "checks": [check.as_dict() for check in checks],
        "artifacts": jsonable(artifacts or {}),
    }


def dump_report(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report, out=None, stream=None):
    """Write the report to `out`, or to `stream` (stdout) when no path is given."""
    text = dump_report(report)
    if out:
        with open(out, "w") as outfile:
            outfile.write(text)
    elif stream is not None:
        stream.write(text)
    return text


def show_checks(console, title, checks):
    table = Table(title=title, show_header=True, header_style="bold green")
    table.add_column("Check", style="dim", overflow="flow")
    table.add_column("Status")
    table.add_column("Max residual", justify="right")
    table.add_column("Description")
    styles = {"pass": "green", "fail": "bold red", "skipped": "yellow"}
    for check in checks:
        style = styles.get(check.status, "")
        table.add_row(check.id, f"[{style}]{check.status}[/{style}]",
                      "%.3e" % check.max_residual, check.description)
    console.print(table)

