import json
import math
import subprocess
import sys

import jsonschema
import pytest

from svperiod.cli import main, run
from svperiod.report import Report, data_file, load_schema, parse_chain, parse_complex, parse_point

REPORT_SCHEMA = load_schema("report.schema.json")
FIXTURE_SCHEMA = load_schema("fixture.schema.json")


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    out = json.loads(capsys.readouterr().out)
    jsonschema.validate(out, REPORT_SCHEMA)
    return code, out


def test_sv_log(capsys):
    code, out = run_json(capsys, "sv-log", "--a", "2")
    assert code == 0
    assert abs(out["values"]["value"] - 2 * math.log(2)) < 1e-6
    assert out["checks"][0]["pass"]


def test_sv_log_i_and_degenerate(capsys):
    code, out = run_json(capsys, "sv-log", "--a", "i")
    assert code == 0 and abs(out["values"]["value"]) < 1e-8
    code, out = run_json(capsys, "sv-log", "--a", "1")
    assert code == 2 and out["error"]["type"] == "DegenerateModulus"


def test_double_copy_fixture(capsys):
    code, out = run_json(capsys, "double-copy", str(data_file("fixtures/log_a2.json")), "--tol", "1e-5")
    assert code == 0 and all(c["pass"] for c in out["checks"])


def test_double_copy_sweep(capsys):
    args = []
    for a in ("2", "3", "-1.5+0.5i", "0.5i", "4-2i"):
        args.append(f"--a={a}")
    code, out = run_json(capsys, "double-copy", *args)
    assert code == 0 and len(out["checks"]) == 5


def test_double_copy_malformed(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nu": {"terms": []}, "omega": {"terms": []},
                               "gammas": [[{"path": [{"segmnt": {}}]}]], "deltas": []}))
    code, out = run_json(capsys, "double-copy", str(bad))
    assert code == 3 and out["error"]["type"] == "InputError"
    bad.write_text("{not json")
    code, _ = run_json(capsys, "double-copy", str(bad))
    assert code == 3


def test_sv_mzv_two(capsys):
    code, out = run_json(capsys, "sv-mzv", "2", "--samples", "2e6", "--seed", "7")
    assert code == 0
    assert abs(out["values"]["value"]) <= 3 * out["abs_error"]


def test_sv_mzv_divergent(capsys):
    code, out = run_json(capsys, "sv-mzv", "1", "--samples", "1000")
    assert code == 2 and out["error"]["type"] == "DivergentIndex"


def test_elliptic_at_i(capsys):
    code, out = run_json(capsys, "elliptic", "--tau", "i", "--lambda", "1")
    assert code == 0
    m = out["values"]["matrix"]
    assert abs(m[0][1][0] + 1 / (4 * math.pi)) < 1e-12 and abs(m[1][0][0] + 4 * math.pi) < 1e-12
    assert {c["name"] for c in out["checks"]} >= {"S2_minus_I", "trace", "det_plus_1"}


def test_elliptic_lower_half_plane(capsys):
    code, _ = run_json(capsys, "elliptic", "--tau=-i")
    assert code == 2


def test_height(capsys):
    code, out = run_json(capsys, "height", "--D", '[[1, 0], [-1, "inf"]]', "--E", '[[1, 2], [-1, 3]]')
    assert code == 0 and abs(out["values"]["value"] - math.log(4 / 9)) < 1e-5
    code, out = run_json(capsys, "height", "--D", '[[1, 0], [1, "inf"]]', "--E", '[[1, 2], [-1, 3]]')
    assert code == 2 and out["error"]["type"] == "NonZeroDegree"


def test_period_matrix(capsys, tmp_path):
    spec = {"forms": [{"terms": [], "polynomial": [1]}, {"terms": [[1, 0]]}],
            "chains": [[{"path": [{"segment": {"start": 1, "end": 2}}]}],
                       [{"path": [{"circle": {"center": 0, "radius": 0.4}}]}]]}
    f = tmp_path / "pm.json"
    f.write_text(json.dumps(spec))
    code, out = run_json(capsys, "period-matrix", str(f))
    assert code == 0
    sv = out["values"]["sv_matrix"]
    assert abs(sv[0][1][0] - math.log(4)) < 1e-8 and abs(sv[1][1][0] + 1) < 1e-8


def test_argparse_errors_are_input_errors():
    with pytest.raises(SystemExit) as exc:
        main(["sv-log"])
    assert exc.value.code == 3
    with pytest.raises(SystemExit) as exc:
        main(["sv-mzv", "2", "--samples", "abc"])
    assert exc.value.code == 3


def test_selftest_fast_passes_and_is_deterministic(capsys):
    code1, a = run_json(capsys, "selftest", "fast", "--seed", "3")
    code2, b = run_json(capsys, "selftest", "fast", "--seed", "3")
    assert code1 == code2 == 0
    a.pop("wall_time_ms"), b.pop("wall_time_ms")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_report_round_trip():
    rep, _ = run(["sv-log", "--a", "3"])
    d = rep.to_json()
    again = Report.from_json(json.loads(json.dumps(d)))
    assert again.to_json() == d


def test_fixture_schema():
    fx = json.loads(data_file("fixtures/log_a2.json").read_text())
    jsonschema.validate(fx, FIXTURE_SCHEMA)


def test_parsers():
    assert parse_complex("1+i") == 1 + 1j
    assert parse_complex("-0.5+2.1i") == -0.5 + 2.1j
    assert parse_complex([1, -2]) == 1 - 2j
    assert parse_point("inf") is parse_point("oo")
    c = parse_chain([{"coeff": "1/2", "path": [{"segment": {"start": [0, 0], "end": "inf", "direction": [0, 1]}}]}])
    (k, path), = c.terms
    assert k == 0.5 and path[0].is_ray


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "svperiod.cli", "sv-log", "--a", "1"], capture_output=True, text=True)
    assert proc.returncode == 2
