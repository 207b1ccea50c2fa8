import json
from pathlib import Path

import pytest

from levyqueue.cli import main, parse_grid

MODELS = Path(__file__).resolve().parents[1] / "models"
BM = str(MODELS / "bm.model")
SP = str(MODELS / "sp.model")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(out):
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, l.split(","))) for l in lines[1:]]


def test_parse_grid():
    assert parse_grid("0:5:11")[:3] == [0.0, 0.5, 1.0] and len(parse_grid("0:5:11")) == 11
    assert parse_grid("1,2.5") == [1.0, 2.5]
    assert parse_grid("3") == [3.0]


def test_validate(capsys, tmp_path):
    assert run(capsys, "validate", "--model", BM)[0] == 0
    pos = tmp_path / "pos.model"
    pos.write_text("drift = 1.0\n")
    code, out, _ = run(capsys, "validate", "--model", str(pos))
    assert code == 1 and "nonnegative mean drift" in out
    cpp = tmp_path / "cpp.model"
    cpp.write_text("drift = 0\nup.rate = 1\nup.phases = [(1, 1)]\ndown.rate = 2\ndown.phases = [(1, 1)]\n")
    code, out, _ = run(capsys, "validate", "--model", str(cpp))
    assert code == 1 and "compound Poisson" in out
    bad = tmp_path / "bad.model"
    bad.write_text("drift = -1\nspeed = 2\n")
    code, _, err = run(capsys, "validate", "--model", str(bad))
    assert code == 1 and ":2:" in err and "speed" in err


def test_wh(capsys):
    code, out, _ = run(capsys, "wh", "--model", BM, "--q", "0,1")
    assert code == 0
    assert "ascending zeros  : 2.732050808" in out
    assert "descending zeros : 0\n" in out
    residuals = [float(l.split(":")[1]) for l in out.splitlines() if "factor residual" in l]
    assert residuals and max(residuals) <= 1e-8


def test_transform_values(capsys):
    code, out, _ = run(capsys, "transform", "min-workload", "--model", BM, "--q", "1", "--theta", "1")
    assert code == 0 and float(rows(out)[0]["value"]) == pytest.approx(0.910684, abs=5e-7)
    code, out, _ = run(capsys, "transform", "busy-period", "--model", BM, "--q", "1")
    assert float(rows(out)[0]["value"]) == pytest.approx(0.732051, abs=5e-7)
    # omitted Laplace arguments default to zero: event probability
    code, out, _ = run(capsys, "transform", "unused-capacity", "--model", BM, "--q", "1")
    assert float(rows(out)[0]["value"]) == pytest.approx(0.732051, abs=5e-7)


def test_transform_grid_and_json(capsys):
    code, out, _ = run(capsys, "transform", "stationary", "--model", BM, "--theta", "0:2:3", "--json")
    rec = json.loads(out)
    assert rec["columns"] == ["theta", "value"]
    assert [r[1] for r in rec["rows"]] == pytest.approx([1.0, 2 / 3, 0.5])
    assert rec["manifest"]["command"] == "transform"


def test_usage_errors(capsys):
    assert run(capsys, "transform", "nope", "--model", BM)[0] == 2
    assert run(capsys, "transform", "min-workload", "--model", BM, "--theta", "1")[0] == 2
    assert run(capsys, "transform", "stationary", "--model", BM, "--q", "1")[0] == 2
    assert run(capsys, "transform", "stationary", "--model", BM, "--theta", "a:b")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--model", BM])
    assert exc.value.code == 2


def test_compare_pass_and_perturbed_fail(capsys):
    code, out, _ = run(capsys, "compare", "min-workload", "--model", BM, "--q", "1",
                       "--theta", "0.5,1,2", "--samples", "20000", "--seed", "3")
    assert code == 0 and all(r["result"] == "pass" for r in rows(out))
    code, out, _ = run(capsys, "compare", "min-workload", "--model", BM, "--q", "1",
                       "--theta", "1", "--samples", "100", "--perturb-se", "-10")
    assert code == 1 and rows(out)[0]["result"] == "fail"


def test_simulate_is_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        # same file names: the manifest records the output path
        path = tmp_path / "run.csv"
        paths = tmp_path / "paths.csv"
        code, _, _ = run(capsys, "simulate", "finished-joint", "--model", SP, "--q", "1",
                         "--alpha", "0.5", "--beta", "0.5", "--gamma", "0.5", "--u", "0.5",
                         "--v", "0.5", "--w", "0.5", "--samples", "3000", "--seed", "11",
                         "--mode", "grid", "--step", "0.005", "--out", str(path),
                         "--paths-out", str(paths))
        assert code == 0
        outs.append((path.read_bytes(), paths.read_bytes()))
    assert outs[0] == outs[1]
    assert b"time_readings" in outs[0][0]
    assert outs[0][1].count(b"\n") > 3000


def test_invert(capsys):
    code, out, _ = run(capsys, "invert", "stationary", "--model", BM, "--x", "0.5:3:6")
    import math

    assert code == 0
    for r in rows(out):
        assert float(r["F"]) == pytest.approx(1 - math.exp(-2 * float(r["x"])), abs=1e-8)
    code, out, _ = run(capsys, "invert", "min-workload", "--model", BM, "--q", "1", "--x", "0.5,1")
    assert "atom_at_zero: 0.7320508075688773" in out
    fs = [float(r["F"]) for r in rows(out)]
    assert fs == sorted(fs)


def test_manifest_timestamp_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    _, out, _ = run(capsys, "transform", "stationary", "--model", BM, "--theta", "1")
    assert "# timestamp: 1700000000" in out
    assert "# model_sha256: " in out
