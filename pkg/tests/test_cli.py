import json

import pytest

from frameforge.cli import main
from frameforge.pelczynski import coordinate_projection, operator_to_json
from frameforge.spaces import CoefVector

E = CoefVector.unit


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_frame_info(capsys):
    code, rep = run(capsys, "frame", "info", "--spec", "example23", "--horizon", "6",
                    "--vec", json.dumps(E(3).to_json()))
    assert code == 0
    assert rep["frame_constant"]["lower"] == rep["frame_constant"]["upper"]
    assert rep["analysis"][0]["n_star"] == 4


def test_norm_eval_modes(capsys):
    vec = json.dumps(E(3).to_json())
    for mode, want in (("min", "1"), ("nk", "4"), ("k=2", "4"), ("subseq=5,6", "1")):
        code, rep = run(capsys, "norm", "eval", "--spec", "example23", "--sched", "k+1",
                        "--vec", vec, "--mode", mode)
        assert code == 0 and rep["value"]["exact"] == want, (mode, rep)


def test_norm_compare_writes_csv(capsys, tmp_path):
    fam = json.dumps([E(2 * i - 1).to_json() for i in range(1, 5)])
    out = tmp_path / "cmp.json"
    code, _ = run(capsys, "norm", "compare", "--spec", "example23", "--sched", "k+1",
                  "--family", fam, "--out", str(out))
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["strictly_growing"] and rep["label"] == "witness"
    assert (tmp_path / "cmp.csv").read_text().startswith("vector_id,norm_a,norm_b,ratio")


def test_nk_find_and_validate(capsys, tmp_path):
    code, rep = run(capsys, "nk", "find", "--spec", "canonical", "--kmax", "5")
    assert code == 0 and rep["values"] == [2, 3, 4, 5, 6]
    path = tmp_path / "sched.json"
    path.write_text(json.dumps(rep))
    code, rep = run(capsys, "nk", "validate", "--spec", "example23", "--sched", str(path),
                    "--kmax", "5", "--horizon", "20")
    assert code == 0 and rep["passed"]
    code, rep = run(capsys, "nk", "validate", "--spec", "example23", "--sched", "1,2,3",
                    "--kmax", "1", "--horizon", "10")
    assert code == 1 and not rep["passed"]


def test_pel_roundtrip(capsys, tmp_path):
    op = tmp_path / "op.json"
    op.write_text(json.dumps({"matrix": {"1": {"1": "1", "2": "1"}, "2": {"2": "2"}}}))
    sys_path = tmp_path / "sys.json"
    assert main(["pel", "split", "--op", str(op), "--m", "3", "--out", str(sys_path)]) == 0
    code, rep = run(capsys, "pel", "verify", "--sys", str(sys_path))
    assert code == 0 and rep["passed"]
    data = json.loads(sys_path.read_text())
    data["pairs"][0]["f"] = [[i, 2 * n, d] for i, n, d in data["pairs"][0]["f"]]
    sys_path.write_text(json.dumps(data))
    code, rep = run(capsys, "pel", "verify", "--sys", str(sys_path))
    assert code == 1 and rep["first_failing_q"] == 1


def test_pel_assemble_produces_loadable_spec(capsys, tmp_path):
    ops = tmp_path / "ops.json"
    ops.write_text(json.dumps({"ops": [operator_to_json(coordinate_projection(k)) for k in range(1, 6)]}))
    spec = tmp_path / "frame.json"
    assert main(["pel", "assemble", "--ops", str(ops), "--rule", "m_k=k", "--out", str(spec)]) == 0
    code, rep = run(capsys, "nk", "find", "--spec", str(spec), "--kmax", "3")
    assert code == 0 and rep["values"]


def test_experiments_exit_codes(capsys, tmp_path):
    assert main(["exp", "example23", "--out", str(tmp_path / "e.json")]) == 0
    out = tmp_path / "inc.json"
    assert main(["exp", "incomparable", "--L", "1,2,3,4", "--M", "2,4", "--out", str(out)]) == 0
    assert (tmp_path / "inc.csv").exists()
    blocks = json.dumps([E(2 * p + 1, 1).to_json() for p in range(1, 2)])
    code, _ = run(capsys, "exp", "dichotomy", "--blocks", blocks)
    assert code == 2  # not normalized
    ops = tmp_path / "ops.json"
    ops.write_text(json.dumps({"template": "coordinate_projections", "count": 4, "m": "m_k=k"}))
    assert main(["exp", "pipeline", "--ops", str(ops), "--out", str(tmp_path / "p.json")]) == 0


def test_pipeline_failure_exit_code(capsys, tmp_path):
    ops = tmp_path / "ops.json"
    ops.write_text(json.dumps({"template": "coordinate_projections", "count": 8, "m": "m_k=k",
                               "tail_certificate": "estimate"}))
    code, rep = run(capsys, "exp", "pipeline", "--ops", str(ops))
    assert code == 1 and rep["failed_stage"] == "nk_find"


def test_bad_input_exit_code(capsys):
    assert main(["frame", "info", "--spec", '{"generators": {"type": "bogus"}}']) == 2
    assert main(["norm", "eval", "--spec", "example23", "--vec", "[[1,1,1]]", "--mode", "weird"]) == 2
    with pytest.raises(SystemExit):
        main(["nope"])


def test_deterministic_output(capsys):
    first = run(capsys, "exp", "incomparable", "--seed", "4")
    second = run(capsys, "exp", "incomparable", "--seed", "4")
    assert first == second
