import json
import subprocess
import sys

from kgcoord.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_validate_datum(capsys):
    code, rep = run(capsys, "validate-datum", "--preset", "A1-AI")
    assert code == 0 and rep["status"] == "ok"


def test_ckg_basis_sizes(capsys):
    code, rep = run(capsys, "ckg-basis", "--preset", "A1xA1-diag", "--bound", "2")
    assert code == 0
    assert [p["size"] for p in rep["result"]["pieces"] if p["size"]] == [1, 4, 9]


def test_deterministic_output(tmp_path):
    outs = []
    for k in range(2):
        target = tmp_path / f"o{k}.json"
        assert main(["ckg-basis", "--preset", "A2-AI", "--bound", "1,1", "--output", str(target)]) == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("KGCOORD_OUTPUT_DIR", str(tmp_path))
    assert main(["biinvariants", "--preset", "A1-AI", "--bound", "4", "--output", "bi.json"]) == 0
    rep = json.loads((tmp_path / "bi.json").read_text())
    assert rep["status"] == "ok"


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"preset": "A1-AI", "bound": 4}))
    code, rep = run(capsys, "filtration-report", "--config", str(cfg))
    assert code == 0 and rep["config"]["bound"] == 4


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"preset": "A1-AI", "bogus": 1}))
    code, rep = run(capsys, "ckg-basis", "--config", str(cfg))
    assert code == 2 and rep["error"] == "CONFIG_INVALID"


def test_missing_preset(capsys):
    code, rep = run(capsys, "ckg-basis", "--preset", "E8-nope", "--bound", "1")
    assert code == 2


def test_coinvariants_strict_failure_exit(capsys):
    code, rep = run(capsys, "coinvariants", "--preset", "A1-AI", "--module", "2x2")
    assert code == 1 and rep["error"] == "CORRECTION_NOT_INTEGRAL"


def test_coinvariants_ok(capsys):
    code, rep = run(capsys, "coinvariants", "--preset", "A1-AI", "--module", "1x1")
    assert code == 0 and rep["status"] == "ok"


def test_icanonical_and_dump(capsys):
    code, rep = run(capsys, "icanonical", "--preset", "A1-AI", "--module", "2")
    assert code == 0
    code, rep = run(capsys, "dump-module", "--preset", "A2-AI", "--module", "1,0")
    assert code == 0 and rep["result"]


def test_structure_constants(capsys):
    code, rep = run(capsys, "structure-constants", "--preset", "A1-AI", "--bound", "2")
    assert code == 0 and rep["status"] == "ok"


def test_params_flag(capsys):
    code, rep = run(capsys, "validate-datum", "--preset", "A1-AI", "--params", '{"0": [1, -1]}')
    assert code == 0


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "kgcoord.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "kgcoord" in res.stdout


def test_verify_small(capsys):
    code, rep = run(capsys, "verify", "--preset", "A1-AI", "--bound", "2")
    checks = {r["check"]: r["ok"] for r in (rep.get("result") or rep["details"])["checks"]}
    # V(2) x V(2) carries the non-Laurent coinvariant correction; everything else holds
    assert code == 1
    assert [k for k, ok in checks.items() if not ok] == ["coinvariants"]


def test_verify_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        target = tmp_path / f"v{k}.json"
        main(["verify", "--preset", "A1-AI", "--bound", "2", "--output", str(target)])
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
