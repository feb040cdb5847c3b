import json

import numpy as np
import pytest

from polychar import cli
from polychar.examples import gen_random_commuting, gen_section7
from polychar.tuples import OperatorTuple


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(argv, capsys):
    code, out, err = run(argv + ["--output", "json"], capsys)
    return code, (json.loads(out) if out.strip() else None), err


def write_fixture(path, t, expected=None):
    path.write_text(json.dumps(cli.tuple_to_dict(t, expected)))
    return str(path)


# ---- fixture files

def test_tuple_dict_round_trip_is_bit_faithful():
    t = gen_random_commuting(2, 3, seed=4)
    doc = json.loads(json.dumps(cli.tuple_to_dict(t)))
    back = cli.tuple_from_dict(doc)
    assert all(np.array_equal(a, b) for a, b in zip(t.mats, back.mats))


@pytest.mark.parametrize("doc", [
    {"n": 1, "dim": 1},
    {"n": 2, "dim": 1, "matrices": [[[{"re": 0, "im": 0}]]]},
    {"n": 1, "dim": 2, "matrices": [[[{"re": 0, "im": 0}]]]},
    {"n": 1, "dim": 1, "matrices": [[[{"re": "x", "im": 0}]]]},
    {"n": 1, "dim": 1, "matrices": [[[{"re": float("nan"), "im": 0}]]]},
])
def test_tuple_from_dict_rejects(doc):
    with pytest.raises(cli.errors.ParseError):
        cli.tuple_from_dict(doc)


def test_parse_helpers():
    assert cli.parse_split("3").bounds == (3,)
    assert cli.parse_split("2,5").bounds == (2, 5)
    assert cli.parse_params(["n=2", "m=3", "name=abc"]) == {"n": 2, "m": 3, "name": "abc"}


# ---- example -> analyze round trip

def test_example_then_analyze_round_trip(tmp_path, capsys):
    out = tmp_path / "nil.json"
    code, rep, _ = run_json(["example", "--kind", "nilpotent_poly", "n=2", "m=3",
                             "--out", str(out)], capsys)
    assert code == 0 and rep["results"]["expected"]["degree"] == "3"
    code, rep, _ = run_json(["analyze", str(out)], capsys)
    assert code == 0
    assert all(v.startswith("match") for v in rep["results"]["annotations"].values())
    assert rep["results"]["analysis"]["phi"] == [0, 3, 0]


def test_report_stable_modulo_wall_time(tmp_path, capsys):
    path = write_fixture(tmp_path / "c.json", gen_random_commuting(2, 3, seed=1))
    reps = []
    for _ in range(2):
        code, rep, _ = run_json(["analyze", path], capsys)
        assert code == 0
        rep.pop("wall_time")
        reps.append(rep)
    assert reps[0] == reps[1]


def test_report_file_written(tmp_path, capsys):
    path = write_fixture(tmp_path / "c.json", gen_random_commuting(2, 2, seed=2))
    rpath = tmp_path / "rep.json"
    code, _, _ = run(["analyze", path, "--report", str(rpath)], capsys)
    rep = json.loads(rpath.read_text())
    assert code == 0 and rep["format"] == cli.REPORT_FORMAT and "wall_time" in rep


def test_text_output(tmp_path, capsys):
    path = write_fixture(tmp_path / "s.json", gen_section7(4))
    code, out, _ = run(["analyze", path], capsys)
    assert code == 0 and "degree" in out


# ---- exit codes

def test_exit_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(["analyze", str(bad)], capsys)
    assert code == cli.EXIT_PARSE and "parse error" in err
    code, _, _ = run(["analyze", str(tmp_path / "missing.json")], capsys)
    assert code == cli.EXIT_PARSE


def test_exit_precondition_not_row_contraction(tmp_path, capsys):
    t = OperatorTuple((np.eye(1), np.eye(1)))
    path = write_fixture(tmp_path / "big.json", t)
    code, _, err = run(["decompose", path], capsys)
    assert code == cli.EXIT_PRECONDITION and "NotRowContraction" in err


def test_exit_precondition_exceeds_horizon(tmp_path, capsys):
    path = write_fixture(tmp_path / "s7.json", gen_section7(8))
    code, rep, _ = run_json(["analyze", path, "--horizon", "6"], capsys)
    assert code == 0
    assert rep["results"]["analysis"]["degree"]["value"].startswith("exceeds-horizon")
    code, _, err = run(["decompose", path, "--horizon", "6"], capsys)
    assert code == cli.EXIT_PRECONDITION and "DegreeUndetermined" in err


def test_exit_verify_on_annotation_mismatch(tmp_path, capsys):
    t = gen_random_commuting(2, 2, seed=3, nilpotent=True)
    expected = cli.annotations(cli.analysis(t))
    expected["phi"] = [9, 9, 9]
    path = write_fixture(tmp_path / "m.json", t, expected)
    code, rep, _ = run_json(["analyze", path], capsys)
    assert code == cli.EXIT_VERIFY
    assert rep["results"]["annotations"]["phi"].startswith("mismatch")


def test_exit_verify_on_corrupted_fixture(tmp_path, capsys):
    t = gen_random_commuting(2, 3, seed=5)
    doc = cli.tuple_to_dict(t)
    doc["matrices"][0][0][1]["re"] += 1e-3
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    code, rep, _ = run_json(["verify", "--fixture", str(path)], capsys)
    assert code == cli.EXIT_VERIFY
    failures = [f for s in rep["results"]["suites"] for f in s["failures"]]
    assert any("commuting[broken]" in f for f in failures)


def test_exit_generation_failed(capsys):
    code, _, err = run(["example", "--kind", "mystery"], capsys)
    assert code == cli.EXIT_GENERATION
    code, _, _ = run(["example", "--kind", "nilpotent_poly", "n=2"], capsys)
    assert code == cli.EXIT_GENERATION


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as ei:
        cli.main(["frobnicate"])
    assert ei.value.code == 2


# ---- other commands

def test_decompose_nilpotent(tmp_path, capsys):
    code, _, _ = run(["example", "--kind", "nilpotent_poly", "n=2", "m=2",
                      "--out", str(tmp_path / "n.json")], capsys)
    code, rep, _ = run_json(["decompose", str(tmp_path / "n.json")], capsys)
    assert code == 0
    assert rep["results"]["degree_used"] == 2
    assert all(rep["results"]["checks"].values())


def test_factorize_two_and_three_blocks(tmp_path, capsys):
    blocks = json.dumps([{"kind": "random_noncommuting", "params": {"d": 1}},
                         {"kind": "nilpotent_poly", "params": {"m": 2}},
                         {"kind": "spherical_coiso", "params": {"d": 2}}])
    out = tmp_path / "b.json"
    code, _, _ = run(["example", "--kind", "block_composite", "n=2", "seed=7",
                      f"blocks={blocks}", "--out", str(out)], capsys)
    assert code == 0
    code, rep, _ = run_json(["factorize", str(out), "--split", "1"], capsys)
    assert code == 0 and rep["results"]["passed"]
    code, rep, _ = run_json(["factorize", str(out), "--split", "1,4"], capsys)
    assert code == 0 and rep["results"]["passed"]
    assert "g_form" in rep["results"]


def test_verify_bridge_suite(capsys):
    code, rep, _ = run_json(["verify", "--suite", "bridge", "--count", "5"], capsys)
    assert code == 0 and rep["results"]["passed"]


def test_verify_clean_fixture(tmp_path, capsys):
    path = write_fixture(tmp_path / "ok.json", gen_random_commuting(2, 3, seed=6))
    code, rep, _ = run_json(["verify", "--fixture", path], capsys)
    assert code == 0 and rep["results"]["passed"]
