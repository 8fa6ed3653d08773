import csv
import json
import os

import numpy as np
import pytest

from qudit_bell.cli import EXIT_CONFIG, EXIT_DEGRADED, EXIT_OK, main
from qudit_bell.config import ConfigError, RunConfig, load_config, parse_grid
from qudit_bell.experiments import derive_seed
from qudit_bell.states import DensityOperator


def read_csv(path):
    with open(path) as fh:
        comment = fh.readline()
        rows = list(csv.DictReader(fh))
    return comment, rows


def write_cfg(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text)
    return str(p)


def test_parse_grid():
    assert parse_grid("0:1:5") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0.1, 0.5,1") == [0.1, 0.5, 1.0]
    assert len(parse_grid("0:1:41")) == 41
    for bad in ("0:1", "a,b", "0:1:0"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_load_config_sections(tmp_path):
    path = write_cfg(tmp_path, """
[run]
dim = 2
seed = 7
gamma_grid = 0:1:3
lambda = 0.9

[optimizer]
restarts = 4
max_evals = 1e4

[tomography]
poisson = false
shots = 5000
""")
    cfg = load_config(path)
    assert (cfg.dim, cfg.seed, cfg.gamma_grid, cfg.lam) == (2, 7, [0.0, 0.5, 1.0], 0.9)
    assert cfg.optimizer.restarts == 4 and cfg.optimizer.max_evals == 10000
    assert cfg.tomography.poisson is False and cfg.tomography.shots == 5000


@pytest.mark.parametrize("text", [
    "[run]\ncolour = blue\n",
    "[nonsense]\nx = 1\n",
    "[optimizer]\nrestarts = many\n",
    "[tomography]\npoisson = perhaps\n",
    "not an ini file",
])
def test_load_config_errors(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path, text))


@pytest.mark.parametrize("mutate", [
    lambda c: setattr(c, "dim", 4),
    lambda c: setattr(c, "gamma_grid", [0.5, 1.2]),
    lambda c: setattr(c, "gamma_grid", []),
    lambda c: setattr(c, "lam", -0.1),
    lambda c: setattr(c.tomography, "trials", 10),
    lambda c: setattr(c.spectral, "pump_width", 5.0),
    lambda c: setattr(c.spectral, "bin_spacing", 0.5),
])
def test_validation_errors(tmp_path, mutate):
    cfg = RunConfig(out=str(tmp_path / "o"))
    mutate(cfg)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigError):
        RunConfig(out=str(blocker / "sub")).validate()


def test_digest_ignores_output_dir():
    a, b = RunConfig(out="x"), RunConfig(out="y")
    assert a.digest() == b.digest()
    b.seed = 1
    assert a.digest() != b.digest()


def test_derive_seed_is_order_free():
    assert derive_seed(3, "full", 2) == derive_seed(3, "full", 2)
    seeds = {derive_seed(3, t, i) for t in ("full", "restricted") for i in range(5)}
    assert len(seeds) == 10
    assert 0 <= derive_seed(0, "x") < 2**64


def test_cli_config_error_exit(tmp_path, capsys):
    assert main(["optimize", "--dim", "2", "--gamma-grid", "0.5,1.5",
                 "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert main(["optimize", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG


def test_cli_rejects_bad_dim():
    with pytest.raises(SystemExit):
        main(["optimize", "--dim", "5"])


def test_cli_optimize(tmp_path, capsys):
    code = main(["optimize", "--dim", "2", "--gamma", "1", "--restarts", "2", "--seed", "1",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert "I_max=2.828427" in capsys.readouterr().out
    data = json.loads((tmp_path / "optimize.json").read_text())
    res = data["results"][0]
    assert res["best_value"] == pytest.approx(2 * np.sqrt(2), abs=1e-6)
    assert res["horodecki"] == pytest.approx(2 * np.sqrt(2), abs=1e-12)
    assert len(res["settings"]["a1"]["params"]) == 4


def test_cli_optimize_restricted(tmp_path):
    assert main(["optimize", "--dim", "3", "--gamma", "1", "--restarts", "3", "--restricted",
                 "--out", str(tmp_path)]) == EXIT_OK
    res = json.loads((tmp_path / "optimize.json").read_text())["results"][0]
    assert res["family"] == "restricted"
    assert res["best_value"] == pytest.approx(2.8729, abs=1e-3)


def test_cli_degraded_exit(tmp_path):
    path = write_cfg(tmp_path, "[optimizer]\nmax_evals = 5\nrestarts = 1\n")
    assert main(["optimize", "--config", path, "--dim", "2", "--out",
                 str(tmp_path / "o")]) == EXIT_DEGRADED


def test_cli_sweep_bell_qubit(tmp_path):
    code = main(["sweep-bell", "--dim", "2", "--gamma-grid", "0:1:3", "--lambda", "0.9",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    comment, rows = read_csv(tmp_path / "sweep_bell.csv")
    assert comment.startswith("# command=sweep-bell config_hash=")
    assert "seed=0" in comment
    assert list(rows[0]) == ["gamma", "i_full", "i_restricted", "i_horodecki", "i_scaled", "status"]
    last = rows[-1]
    assert float(last["i_full"]) == pytest.approx(2.8284, abs=1e-4)
    assert float(last["i_scaled"]) == pytest.approx(0.9 * float(last["i_full"]), rel=1e-8)
    for r in rows:
        assert float(r["i_restricted"]) <= float(r["i_full"]) + 1e-6
        assert abs(float(r["i_full"]) - float(r["i_horodecki"])) < 1e-4
        assert r["status"] == "ok"
    side = json.loads((tmp_path / "sweep_bell_settings.json").read_text())
    assert len(side["points"]) == 3


def test_cli_simulate_experiment(tmp_path):
    assert main(["simulate-experiment", "--dim", "3", "--gamma-grid", "0,1",
                 "--out", str(tmp_path)]) == EXIT_OK
    _, rows = read_csv(tmp_path / "simulate_experiment.csv")
    for r in rows:
        assert float(r["deviation"]) < 1e-3
        assert int(r["projector_evals"]) == 36
    assert float(rows[0]["state_fidelity"]) >= 0.999
    _, cjk = read_csv(tmp_path / "cjk_raw.csv")
    assert [(r["j"], r["k"]) for r in cjk[:2]] == [("0", "0"), ("0", "1")]
    assert len(cjk) == 9


def test_cli_tomography(tmp_path):
    assert main(["tomography", "--dim", "3", "--gamma", "0", "--shots", "100000",
                 "--out", str(tmp_path)]) == EXIT_OK
    _, rows = read_csv(tmp_path / "tomography.csv")
    assert float(rows[0]["fidelity"]) >= 0.999
    data = json.loads((tmp_path / "rho_gamma0.0000.json").read_text())
    rho = DensityOperator.from_json(data["rho"])
    middle = [3 * j + k for j in range(3) for k in range(3) if j == 1 or k == 1]
    assert np.abs(rho.matrix[middle, :]).max() < 0.01
    assert np.abs(rho.matrix[:, middle]).max() < 0.01
    assert np.array(data["r_kl"]).shape == (9, 9)
    _, bars = read_csv(tmp_path / "rho_gamma0.0000_bars.csv")
    assert len(bars) == 81


def test_csv_precision(tmp_path):
    main(["sweep-bell", "--dim", "2", "--gamma", "1", "--out", str(tmp_path)])
    _, rows = read_csv(tmp_path / "sweep_bell.csv")
    assert rows[0]["i_full"] == "2.82842712"
    assert os.path.exists(tmp_path / "sweep_bell_settings.json")
