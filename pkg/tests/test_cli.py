import json

import numpy as np
import pytest

from leastenergy.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SHAPE, EXIT_VERDICT, main
from leastenergy.config import parse_config
from leastenergy.errors import ConfigError
from leastenergy.field import Field, Grid, from_function, load_field, save_field

CRITICAL = "[problem]\nN = 2\np = 2\nnonlinearity = cubic\n[grid]\nL = 10\nn = 48\n"


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    root = tmp_path_factory.mktemp("solve")
    cfg = root / "run.ini"
    cfg.write_text(CRITICAL + "[output]\nformat = both\n")
    code = main(["solve", "--config", str(cfg), "--out", str(root / "out")])
    return root, cfg, code


def test_solve_writes_artifacts(solved):
    root, _, code = solved
    assert code == EXIT_OK
    out = root / "out"
    for name in ("result.json", "verdicts.json", "profile.csv", "solution.csv", "solution.bin"):
        assert (out / name).exists(), name
    data = json.loads((out / "result.json").read_text())
    assert data["status"] == "ok"
    assert data["metadata"]["command"] == "solve"
    assert data["result"]["converged"] is True
    assert data["config"]["grid"] == {"L": 10.0, "n": 48}
    assert np.array_equal(load_field(out / "solution.csv").values, load_field(out / "solution.bin").values)
    assert (out / "profile.csv").read_text().startswith("r,u1")


def test_verify_reproduces_the_solve_verdicts(solved, tmp_path):
    root, cfg, _ = solved
    out = root / "out"
    sol = load_field(out / "solution.csv")
    # verify runs on the configured grid size; the solution grid differs only in L
    code = main(["verify", "--config", str(cfg), "--out", str(tmp_path), str(out / "solution.csv")])
    assert code == EXIT_OK
    solve_v = {d["name"]: d for d in json.loads((out / "verdicts.json").read_text())}
    for d in json.loads((tmp_path / "verdicts.json").read_text()):
        assert d == solve_v[d["name"]]
    assert sol.grid.cells == 48


def test_verify_radial_synthetic_field(tmp_path):
    cfg = tmp_path / "v.ini"
    cfg.write_text(CRITICAL)
    grid = Grid(2, 10.0, 48)
    path = save_field(from_function(grid, lambda x, y: 2.5 * np.exp(-(x**2 + y**2) / 4)), tmp_path / "f.csv")
    code = main(["verify", "--config", str(cfg), "--out", str(tmp_path / "o"), str(path)])
    verdicts = {d["name"]: d for d in json.loads((tmp_path / "o" / "verdicts.json").read_text())}
    assert verdicts["symmetry"]["pass"] and verdicts["sign"]["pass"] and verdicts["monotonicity"]["pass"]
    assert code in (EXIT_OK, EXIT_VERDICT)  # the sum rule needs V = 0, which a bump need not satisfy


def test_verify_shape_mismatch(tmp_path):
    cfg = tmp_path / "v.ini"
    cfg.write_text(CRITICAL)
    path = save_field(Field(Grid(2, 10.0, 32), np.zeros((32, 32))), tmp_path / "f.csv")
    assert main(["verify", "--config", str(cfg), str(path)]) == EXIT_SHAPE


def test_io_errors(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "missing.ini")]) == EXIT_IO
    cfg = tmp_path / "v.ini"
    cfg.write_text(CRITICAL)
    assert main(["verify", "--config", str(cfg), str(tmp_path / "missing.csv")]) == EXIT_IO


@pytest.mark.parametrize("text,line", [
    ("[problem]\nN = 2\np = 3\nnonlinearity = cubic\n", 3),
    ("[problem]\nN = 3\np = 2\nnonlinearity = cubic\n[grid]\nn = 4\n", 6),
    ("[problem]\nN = 3\np = 2\nnonlinearity = quintic\n", 4),
    ("[problem]\nN = 3\np = 2\nnonlinearity = cubic\n[solver]\nseed = x\n", 6),
    ("[problem]\nN = 3\np = 2\nnonlinearity = cubic\n[solver]\nstep = 1\n", 6),
    ("[problem]\nN = 3\np = 2\nnonlinearity = cubic\n[verify]\nsymmetry = -1\n", 6),
    ("[problem]\nN = 3\np = 2\nnonlinearity = cubic\n[output]\nformat = xml\n", 6),
    ("[problem]\nN = 3\np = 2\nnonlinearity = cubic\n[problem]\nN = 3\n", 5),
    ("[problem]\nN = 3\np = 2\nnonlinearity = coupled_quartic\nm = 1\n", 5),
])
def test_config_errors_name_the_line(text, line, tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    assert main(["solve", "--config", str(cfg)]) == EXIT_CONFIG


def test_config_roundtrip_and_overrides():
    cfg = parse_config(CRITICAL + "[params]\n[solver]\ncenter = 0.5, -0.5\nrestarts = 2\n"
                       "[verify]\nhalving = 0.1\ndirections = 5\n")
    assert cfg.solver.center == (0.5, -0.5) and cfg.solver.restarts == 2
    assert cfg.thresholds == {"halving": 0.1} and cfg.directions == 5
    over = cfg.with_overrides(seed=9, out="elsewhere", threads=2)
    assert over.solver.seed == 9 and over.solver.workers == 2 and str(over.output_dir) == "elsewhere"
    json.dumps(over.to_dict())
    dp = parse_config("[problem]\nN = 3\np = 2\nnonlinearity = double_power\n[params]\nq = 3\nr = 2\n")
    assert dp.problem.nonlinearity.params == {"q": 3.0, "r": 2.0}


def test_usage_errors():
    assert main([]) == EXIT_CONFIG
    assert main(["solve"]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG


def test_threads_must_be_positive(tmp_path):
    cfg = tmp_path / "v.ini"
    cfg.write_text(CRITICAL)
    assert main(["solve", "--config", str(cfg), "--threads", "0"]) == EXIT_CONFIG


def test_rearrange_command(tmp_path):
    grid = Grid(2, 3.0, 16)
    rng = np.random.default_rng(0)
    f = Field(grid, rng.random(grid.shape))
    path = save_field(f, tmp_path / "f.csv")
    assert main(["rearrange", str(path)]) == EXIT_OK
    g = load_field(tmp_path / "f_rearranged.csv")
    assert np.array_equal(np.sort(g.values.ravel()), np.sort(f.values.ravel()))
    assert (tmp_path / "f_rearranged_levels.csv").read_text().startswith("t,volume,radius")


def test_oracle_and_report(tmp_path, capsys):
    cfg = tmp_path / "o.ini"
    cfg.write_text("[problem]\nN = 3\np = 2\nnonlinearity = cubic\n[oracle]\ndr = 0.002\n")
    assert main(["oracle", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    data = json.loads((tmp_path / "oracle.json").read_text())
    assert data["result"]["classification"] == "decays"
    assert data["result"]["u0"] == pytest.approx(4.3374, rel=1e-3)
    assert main(["report", str(tmp_path / "oracle.json")]) == EXIT_OK
    assert "T_ref" in capsys.readouterr().out


def test_report_on_verdicts(solved, capsys):
    root, _, _ = solved
    assert main(["report", str(root / "out" / "verdicts.json")]) == EXIT_OK
    assert "symmetry" in capsys.readouterr().out
    assert main(["report", str(root / "out" / "result.json")]) == EXIT_OK


def test_failed_verdict_exit_code(tmp_path):
    cfg = tmp_path / "strict.ini"
    cfg.write_text(CRITICAL + "[verify]\nsymmetry = 1e-12\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_VERDICT
