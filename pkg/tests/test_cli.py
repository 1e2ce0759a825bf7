from __future__ import annotations

import hashlib
import json

import numpy as np
import pytest

from hybridgates import __version__
from hybridgates.cli import main
from hybridgates.evolve import PulseSequence, standard_target, verify


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture(scope="module")
def hadamard_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("h") / "h.json"
    assert main(["synthesize", "--gate", "hadamard", "--topology", "single", "--seed", "42", "--out", str(out)]) == 0
    return out


# -- synthesize -------------------------------------------------------------------------


def test_synthesize_hadamard_file_and_manifest(hadamard_file):
    seq = PulseSequence.from_json(hadamard_file.read_text())
    assert seq.fidelity >= 0.9999
    assert verify(seq, standard_target("hadamard")).fidelity >= 0.9999
    manifest = json.loads(hadamard_file.with_name("h.json.manifest.json").read_text())
    assert manifest["command"] == "synthesize"
    assert manifest["seed"] == 42 and manifest["version"] == __version__
    assert manifest["config"]["gate"] == "hadamard" and manifest["config"]["j12"] == 0.5
    assert manifest["wall_time_s"] > 0


def test_synthesize_dimension_mismatch(capsys):
    code, _, err = run(capsys, "synthesize", "--gate", "cnot", "--topology", "single")
    assert code == 1 and "acts on 4 states" in err


def test_synthesize_identity_one_step(capsys):
    code, out, err = run(capsys, "synthesize", "--gate", "identity", "--topology", "single", "--max-steps", "1")
    assert code == 0
    seq = PulseSequence.from_json(out)
    assert len(seq.steps) == 1 and seq.total_tau == 0.0
    assert seq.fidelity == pytest.approx(1.0, abs=1e-12)
    assert json.loads(err)["manifest"]["command"] == "synthesize"


def test_synthesize_not_found_writes_best(tmp_path, capsys):
    out = tmp_path / "best.json"
    code, _, err = run(
        capsys, "synthesize", "--gate", "hadamard", "--max-steps", "1", "--fmin", "0.999999999999",
        "--out", out,
    )
    assert code == 2 and "no sequence" in err
    seq = PulseSequence.from_json(out.read_text())
    assert len(seq.steps) == 1
    assert out.with_name("best.json.manifest.json").exists()


def test_synthesize_custom_gate_file(tmp_path, capsys):
    gate = write_json(tmp_path / "x.json", {"name": "x", "real": [[0, 1], [1, 0]]})
    out = tmp_path / "x_seq.json"
    code, _, _ = run(capsys, "synthesize", "--gate", gate, "--seed", "3", "--out", out)
    assert code == 0
    manifest = json.loads(out.with_name("x_seq.json.manifest.json").read_text())
    digest = hashlib.sha256(gate.read_bytes()).hexdigest()
    assert manifest["inputs"] == {str(gate): digest}
    code, report, _ = run(capsys, "verify", out, "--gate", gate)
    assert code == 0 and json.loads(report)["fidelity"] >= 0.9999


@pytest.mark.parametrize(
    "argv",
    [
        ["synthesize"],
        ["synthesize", "--gate", "hadamard", "--topology", "C"],
        ["synthesize", "--gate", "hadamard", "--coupling-mode", "ternary"],
        ["synthesize", "--gate", "toffoli"],
        ["synthesize", "--gate", "hadamard", "--fmin", "1.5"],
        ["synthesize", "--gate", "hadamard", "--max-steps", "0"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


# -- verify -----------------------------------------------------------------------------


def test_verify_round_trip(hadamard_file, capsys):
    code, out, _ = run(capsys, "verify", hadamard_file)
    rep = json.loads(out)
    seq = PulseSequence.from_json(hadamard_file.read_text())
    assert code == 0 and rep["passed"]
    assert abs(rep["fidelity"] - seq.fidelity) <= 1e-12
    assert rep["leakage"] == pytest.approx(seq.metadata["leakage"], abs=1e-12)
    assert abs(rep["total_tau"] - seq.total_tau) <= 1e-12
    assert rep["physical_time_ns"] is None
    assert rep["manifest"]["inputs"][str(hadamard_file)]


def test_verify_wrong_gate_exit_3(hadamard_file, capsys):
    code, out, _ = run(capsys, "verify", hadamard_file, "--gate", "pi8")
    assert code == 3 and json.loads(out)["fidelity"] < 0.9999


def test_verify_topology_gate_mismatch(hadamard_file, capsys):
    code, _, _ = run(capsys, "verify", hadamard_file, "--gate", "cnot")
    assert code == 1


def test_verify_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "verify", bad)[0] == 1
    wrong = write_json(tmp_path / "wrong.json", {"topology": "single", "steps": [{"tau": 1, "J99": 1}]})
    assert run(capsys, "verify", wrong, "--gate", "hadamard")[0] == 1
    assert run(capsys, "verify", tmp_path / "missing.json")[0] == 1
    nogate = write_json(tmp_path / "nogate.json", {"topology": "single", "steps": [{"tau": 1}]})
    assert run(capsys, "verify", nogate)[0] == 1


def test_verify_physical_time(tmp_path, capsys):
    seq = write_json(
        tmp_path / "t.json",
        {"topology": "single", "steps": [{"tau": 4.0}, {"tau": 0.596}], "gate": "hadamard"},
    )
    code, out, _ = run(capsys, "verify", seq, "--jmax-uev", "7.2")
    assert code == 3  # an idle sequence is not a Hadamard
    assert json.loads(out)["physical_time_ns"] == pytest.approx(2.64, abs=1e-3)


# -- couplings --------------------------------------------------------------------------

PERTURBATIVE = {
    "unit": "dimensionless",
    "config": "single",
    "eps_a": [0.0, 0.02, -0.01],
    "U_a": [1.0, 1.0, 1.0],
    "t13_a": 0.015,
    "t23_a": 0.01,
    "Je_12_a": 0.003,
}


def test_couplings_symmetric_file(tmp_path, capsys):
    doc = {"eps_a": [0.1, 0.1, 0.0], "U_a": [1, 1, 1], "t13_a": 0.02, "t23_a": 0.02}
    code, out, _ = run(capsys, "couplings", write_json(tmp_path / "s.json", doc))
    J = json.loads(out)["couplings"]
    assert code == 0 and J["J13"] == pytest.approx(J["J23"], abs=1e-15)


def test_couplings_config_b_je_only(tmp_path, capsys):
    doc = {
        "unit": "meV",
        "config": "B",
        "eps_a": [0, 0.1, 0.05],
        "U_a": [1, 1, 1],
        "eps_b": [0, 0.1, 0.05],
        "U_b": [1, 1, 1],
        "Je_1a1b": 0.1,
    }
    code, out, _ = run(capsys, "couplings", write_json(tmp_path / "b.json", doc))
    res = json.loads(out)
    assert code == 0 and res["unit"] == "meV"
    assert res["couplings"]["J1a1b"] == pytest.approx(-0.2)
    assert res["couplings"]["J2a2b"] == 0.0
    assert set(res["denominators"]) == {f"dE{k}{q}" for k in range(1, 5) for q in "ab"}


def test_couplings_oracle_mode(tmp_path, capsys):
    code, out, err = run(capsys, "couplings", write_json(tmp_path / "p.json", PERTURBATIVE), "--oracle")
    res = json.loads(out)
    assert code == 0 and "warning" not in res and not err
    assert res["oracle"]["relative_error"] <= 0.05
    assert res["manifest"]["config"]["oracle"] is True


def test_couplings_warning(tmp_path, capsys):
    doc = dict(PERTURBATIVE, t13_a=0.3)
    code, out, err = run(capsys, "couplings", write_json(tmp_path / "w.json", doc))
    assert code == 0 and "warning" in json.loads(out) and "warning" in err


def test_couplings_degenerate_exit_4(tmp_path, capsys):
    code, _, err = run(capsys, "couplings", write_json(tmp_path / "d.json", {"t13_a": 0.1}))
    assert code == 4 and "dE1" in err


def test_couplings_bad_file(tmp_path, capsys):
    assert run(capsys, "couplings", write_json(tmp_path / "x.json", {"eps_q": [1]}))[0] == 1
    assert run(capsys, "couplings", write_json(tmp_path / "y.json", [1, 2]))[0] == 1


# -- spectrum ---------------------------------------------------------------------------


def test_spectrum_t23_gap(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, stdout, _ = run(capsys, "spectrum", "--scenario", "T23On", "--eps-min", "-2", "--eps-max", "2",
                          "--points", "401", "--out", out, "--gap")
    assert code == 0
    gap = float(stdout.strip().split("=")[1])
    assert gap > 0
    rows = out.read_text().splitlines()
    assert rows[0] == "eps,lambda0,lambda1,lambda2" and len(rows) == 402
    assert json.loads(out.with_name("s.csv.manifest.json").read_text())["command"] == "spectrum"


def test_spectrum_both_off_crossing_to_stdout(capsys):
    code, out, err = run(capsys, "spectrum", "--scenario", "both_off", "--j12", "0", "--points", "11", "--gap")
    assert code == 0
    assert len(out.splitlines()) == 12
    gap_line = [line for line in err.splitlines() if line.startswith("min_gap=")][0]
    assert float(gap_line.split("=")[1]) < 1e-9


@pytest.mark.parametrize(
    "argv", [["--points", "1"], ["--eps-min", "1", "--eps-max", "-1"], ["--eps-max", "nan"], ["--scenario", "x"]]
)
def test_spectrum_bad_range(argv, capsys):
    try:
        code = main(["spectrum", *argv])
    except SystemExit as exc:
        code = exc.code
    assert code == 1


# -- times ------------------------------------------------------------------------------


def test_times(hadamard_file, capsys):
    code, out, _ = run(capsys, "times", hadamard_file, "--jmax-uev", "7.2")
    res = json.loads(out)
    assert code == 0
    assert res["unit_ns"] == pytest.approx(0.574398, abs=1e-6)
    assert res["total_ns"] == pytest.approx(sum(s["time_ns"] for s in res["steps"]))
    _, out2, _ = run(capsys, "times", hadamard_file, "--jmax-uev", "14.4")
    res2 = json.loads(out2)
    assert res2["total_ns"] == pytest.approx(res["total_ns"] / 2)
    np.testing.assert_allclose(
        [s["time_ns"] for s in res2["steps"]], [s["time_ns"] / 2 for s in res["steps"]]
    )


def test_times_errors(tmp_path, hadamard_file, capsys):
    assert run(capsys, "times", hadamard_file, "--jmax-uev", "0")[0] == 1
    assert run(capsys, "times", hadamard_file, "--jmax-uev", "-3")[0] == 1
    empty = write_json(tmp_path / "e.json", {"topology": "single", "steps": []})
    assert run(capsys, "times", empty, "--jmax-uev", "7.2")[0] == 1
