# KSymplectic project.
#
# Command line: exit codes, reports and determinism.
#
import json
import os

from click.testing import CliRunner

from ksymplectic import __version__
from ksymplectic.conftest import spec_path
from ksymplectic.ksym import ksymcli


def invoke(*args):
    return CliRunner().invoke(ksymcli, [str(arg) for arg in args])


def read_report(path):
    with open(path) as infile:
        return json.load(infile)


def test_help_and_version():
    result = invoke("--help")
    assert result.exit_code == 0
    for command in ("validate", "connection", "normal-form", "charclass", "all"):
        assert command in result.output

    result = invoke("--version")
    assert result.exit_code == 0
    assert __version__ in result.output


def test_unknown_command():
    assert invoke("frobnicate").exit_code == 2


def test_validate_exit_codes(tmp_path):
    out = tmp_path / "report.json"
    assert invoke("validate", spec_path("flat"), "--samples", 10, "--out", out).exit_code == 0
    report = read_report(out)
    assert [check["id"] for check in report["checks"]] == [f"C{i}" for i in range(1, 8)]
    assert report["tool_version"] == __version__
    assert report["seed"] == 0

    assert invoke("validate", spec_path("broken-c5"), "--samples", 10, "--out", out).exit_code == 1
    failed = [check for check in read_report(out)["checks"] if check["status"] == "fail"]
    assert "C5" in [check["id"] for check in failed]


def test_bad_input_exits_two(tmp_path):
    assert invoke("validate", spec_path("missing-k")).exit_code == 2
    assert invoke("validate", spec_path("bad-index")).exit_code == 2
    assert invoke("validate", tmp_path / "nowhere.json").exit_code == 2

    broken = tmp_path / "broken.json"
    broken.write_text('{"n": 1, "k": ')
    assert invoke("connection", broken).exit_code == 2

    bad_expr = tmp_path / "bad-expr.json"
    bad_expr.write_text(json.dumps({"n": 1, "k": 1, "t": {"t[1][1][1]": "foo(x1)"}}))
    assert invoke("curvature", bad_expr).exit_code == 2


def test_bad_options_exit_two():
    assert invoke("validate", spec_path("flat"), "--samples", 0).exit_code == 2
    assert invoke("validate", spec_path("flat"), "--box", "1,-1").exit_code == 2
    assert invoke("validate", spec_path("flat"), "--samples", "many").exit_code == 2


def test_suites_on_curved_spec(tmp_path):
    out = tmp_path / "curvature.json"
    assert invoke("curvature", spec_path("curved"), "--samples", 10, "--out", out).exit_code == 0
    checks = {check["id"]: check for check in read_report(out)["checks"]}
    assert checks["rigidity"]["status"] == "skipped"
    assert "curvature_at_base" in read_report(out)["artifacts"]["curvature"]

    out = tmp_path / "normal-form.json"
    assert invoke("normal-form", spec_path("curved"), "--out", out).exit_code == 0
    assert read_report(out)["checks"][0]["status"] == "skipped"


def test_normal_form_on_flat_spec(tmp_path):
    out = tmp_path / "normal-form.json"
    result = invoke("normal-form", spec_path("t1"), "--grid", 3, "--pairs", 2, "--out", out)
    assert result.exit_code == 0
    report = read_report(out)
    assert report["checks"][0]["status"] == "pass"
    assert len(report["artifacts"]["normal-form"]["normal_form_pairs"]) == 2


def test_all_stops_after_failed_validation(tmp_path):
    out = tmp_path / "all.json"
    assert invoke("all", spec_path("broken-c5"), "--samples", 5, "--out", out).exit_code == 1
    ids = [check["id"] for check in read_report(out)["checks"]]
    assert ids == [f"C{i}" for i in range(1, 8)]


def test_all_on_curved_spec(tmp_path):
    out = tmp_path / "all.json"
    result = invoke("all", spec_path("curved"), "--samples", 20, "--out", out)
    assert result.exit_code == 0, result.output
    report = read_report(out)
    checks = {check["id"]: check["status"] for check in report["checks"]}
    for check_id in ("nabla-omega", "torsion-mixed", "torsion-leafwise", "curvature-leafwise",
                     "rectangle"):
        assert checks[check_id] == "pass"
    assert checks["normal-form"] == "skipped"
    assert report["artifacts"]["rectangle"]["rectangle_residuals"]["horizontal_gated"] is False


def test_reports_are_deterministic(tmp_path):
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    for out in (first, second):
        result = invoke("connection", spec_path("random-k2"), "--samples", 8, "--seed", 3,
                        "--out", out)
        assert result.exit_code == 0
    with open(first) as a, open(second) as b:
        assert a.read() == b.read()


def test_defaults_file(tmp_path, monkeypatch):
    defaults = tmp_path / "defaults.json"
    defaults.write_text(json.dumps({"samples": 4, "seed": 9}))
    out = tmp_path / "report.json"
    monkeypatch.setenv("KSYM_DEFAULTS", str(defaults))
    assert invoke("validate", spec_path("flat"), "--out", out).exit_code == 0
    assert read_report(out)["seed"] == 9

    defaults.write_text(json.dumps({"colour": "red"}))
    assert invoke("validate", spec_path("flat"), "--out", out).exit_code == 2
    assert os.path.exists(out)
