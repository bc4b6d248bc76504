import json

import pytest

from diamond_heat.cli import main

P1 = '{"j": [2], "n": [2]}'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dim(capsys):
    code, out, _ = run(capsys, "dim", "--j", "2", "--n", "4")
    assert code == 0 and json.loads(out)["dimension"] == 3
    code, out, _ = run(capsys, "dim", "--j", "2", "--n", "2")
    assert json.loads(out)["dimension"] == 2


def test_eval_level_and_limit(capsys):
    code, out, _ = run(capsys, "eval", "--t", "0.1", "--level", "1", "--params", P1, "--x", "1/4:1", "--y", "1/4:1")
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] > 0 and doc["config"]["limit"] is False and doc["config"]["params"]["j"] == [2]
    code, out, _ = run(capsys, "eval", "--t", "0.5", "--t", "1.0", "--x", "1/3:1,2,1,1", "--y", "1/2:2,1,1,1")
    assert code == 0 and len(json.loads(out)["results"]) == 2


def test_grid_and_solve(capsys, tmp_path):
    path = tmp_path / "grid.csv"
    code, _, _ = run(capsys, "grid", "--t", "0.2", "--level", "1", "--m", "4", "--params", P1, "--x", "1/4:1", "--out", str(path))
    text = path.read_text().splitlines()
    assert code == 0 and text[0].startswith("# ") and len(text) == 2 + 8 * 4
    code, out, _ = run(capsys, "solve", "--t", "0.3", "--level", "1", "--m", "8", "--params", P1, "--u0", "const:2", "--x", "1/4:1")
    assert code == 0 and json.loads(out)["results"][0]["values"][0] == pytest.approx(2.0, abs=1e-9)


def test_schrodinger_and_bound(capsys):
    code, out, _ = run(capsys, "schrodinger", "--t", "0.3", "--eps", "0.01", "--x", "1/4:1,1,1,1", "--y", "1/3:1,1,2,1")
    doc = json.loads(out)
    assert code == 0 and doc["eps"] == 0.01 and "im" in doc
    code, out, _ = run(capsys, "bound", "--t", "0.5")
    doc = json.loads(out)
    assert code == 0 and set(doc["bounds"]) == {"1", "2", "3", "4"}


def test_exit_codes(capsys):
    # Usage errors and bad configuration.
    with pytest.raises(SystemExit) as err:
        main(["eval", "--x", "0:1"])
    assert err.value.code == 3
    capsys.readouterr()
    code, _, err = run(capsys, "eval", "--t", "1", "--params", '{"j": [2, 2], "n": [2]}', "--x", "0:1", "--y", "0:1")
    assert code == 3 and "configuration" in err
    code, _, _ = run(capsys, "eval", "--t", "1", "--level", "9", "--x", "0:1", "--y", "0:1")
    assert code == 3
    # Invalid input.
    code, _, _ = run(capsys, "eval", "--t", "-1", "--level", "1", "--x", "1/4:1", "--y", "1/4:1")
    assert code == 2
    # Limit requested beyond the configured depth.
    code, _, err = run(capsys, "eval", "--t", "0.001", "--params", P1, "--x", "1/4:1", "--y", "1/4:1")
    assert code == 4 and "capacity" in err
