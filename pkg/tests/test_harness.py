import json

import jsonschema
import pytest

from qmaplus import harness as H


def stable(rec):
    return H.record_json(dict(rec, wall_time=0.0))


def test_same_seed_same_record():
    cfg = H.resolve_config("run-sse", overrides={"mode": "monte_carlo", "trials": 500, "seed": 4})
    assert stable(H.run(cfg)) == stable(H.run(cfg))


def test_records_validate_against_schema():
    rec = H.run(H.resolve_config("run-ug"))
    jsonschema.validate(rec, H.load_schema())
    assert rec["ok"] and set(rec["subtests"]) == set(H.MENUS["run-ug"])
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({k: v for k, v in rec.items() if k != "ok"}, H.load_schema())


def test_precedence():
    cfg = H.resolve_config("run-sse", {"params": {"eta": 0.2, "k": 2}, "seed": 9},
                           {"params.eta": 0.3, "seed": 5}, ["eta=0.05", "instance.n=32"])
    assert cfg.params["eta"] == 0.05        # --set beats flags beats file
    assert cfg.params["k"] == 2             # file beats defaults
    assert cfg.params["delta"] == 0.25      # defaults survive
    assert cfg.seed == 5 and cfg.instance["n"] == 32


def test_config_errors():
    with pytest.raises(H.HarnessError):
        H.resolve_config("run-sse", {"bogus": 1})
    with pytest.raises(H.HarnessError):
        H.resolve_config("run-sse", sets=["no-equals-sign"])
    with pytest.raises(H.HarnessError):
        H.ExperimentConfig.from_dict({"id": "x", "verb": "nope"})


def test_empty_grid_header_only():
    for grid in ({}, {"params.eta": []}):
        cfg = H.resolve_config("sweep", {"template_verb": "run-sse", "grid": grid})
        rec, text = H.sweep(cfg)
        lines = text.strip().splitlines()
        assert len(lines) == 1 and lines[0].startswith("cell,seed")
        assert rec["results"]["cells"] == 0


def test_sweep_rows_and_parallel_match():
    doc = {"template_verb": "run-sse", "grid": {"params.eta": [0.05, 0.1]}, "seed": 3}
    rec, text = H.sweep(H.resolve_config("sweep", doc))
    par, text2 = H.sweep(H.resolve_config("sweep", dict(doc, jobs=2)))
    assert text == text2
    assert len(text.strip().splitlines()) == 3
    assert rec["results"]["rows"][0]["grid:params.eta"] == 0.05


def test_grid_budget():
    with pytest.raises(H.HarnessError):
        H.grid_cells({"a": list(range(200)), "b": list(range(200))})


def test_cli_writes_outputs(tmp_path, capsys):
    code = H.main(["verify-gap-max", "--results", str(tmp_path), "--id", "gap", "--quiet"])
    assert code == 0
    files = sorted(p.suffix for p in (tmp_path / "gap").iterdir())
    assert files == [".csv", ".json"]
    rec = json.loads(next((tmp_path / "gap").glob("*.json")).read_text())
    assert rec["verb"] == "verify-gap-max" and rec["ok"]


def test_cli_no_write_prints_record(capsys):
    assert H.main(["pcp-index", "--no-write"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["invariants"] and all(rec["invariants"].values())


def test_cli_bad_input_exit_code(capsys):
    assert H.main(["run-sse", "--no-write", "--set", "mode=weird"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "HarnessError"


def test_cli_invariant_failure_exit_code(capsys):
    # a corrupted Hadamard proof must not be accepted with certainty
    code = H.main(["pcp-verify", "--no-write", "--set", 'flips=[["Y", 3]]'])
    rec = json.loads(capsys.readouterr().out)
    assert code == (0 if rec["ok"] else 1)


@pytest.mark.parametrize("flips", ["[0, 3]", '[["X", 1]]', '[["Y", 99]]'])
def test_malformed_flips_exit_code_2(flips, capsys):
    assert H.main(["pcp-verify", "--no-write", "--set", f"flips={flips}"]) == 2
    assert "flips" in json.loads(capsys.readouterr().err)["message"]


def test_fixture_prover(tmp_path):
    flat = [0.25] * 16
    path = tmp_path / "proof.json"
    path.write_text(json.dumps({"psi": [flat] * 8, "phi": [flat] * 8}))
    cfg = H.resolve_config("run-sse", overrides={"prover": {"fixture": str(path)}})
    rec = H.run(cfg)
    # the uniform state is far denser than the planted witness
    assert rec["subtests"]["sparsity"] == 0.0
    assert rec["subtests"]["symmetry"] == pytest.approx(1.0)
