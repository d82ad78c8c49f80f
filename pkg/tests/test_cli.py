import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from sgdexp.cli import main


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {
                "dimension": 6,
                "horizon": 300,
                "seeds": [1, 2],
                "checkpoint_every": 100,
                "measurement": {"kind": "gaussian_sphere"},
                "corruption": {"kind": "sign_flip", "p": 0.2},
                "solvers": [
                    {"name": "sgd-exp", "method": "sgd_exp_linear", "lam": 1.01, "G": "auto"}
                ],
            }
        )
    )
    return path


def test_run_success(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", str(config_path), "--out-dir", str(out)])
    assert code == 0
    assert (out / "results.csv").exists()
    assert (out / "results.manifest.json").exists()
    assert (out / "results.svg").exists()


def test_run_quiet_suppresses_output(config_path, tmp_path, capsys):
    code = main(["run", str(config_path), "--out-dir", str(tmp_path / "q"), "--quiet"])
    assert code == 0
    assert capsys.readouterr().out == ""


def test_invalid_config_nonzero_with_diagnostic(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dimension": 0}))
    code = main(["run", str(path)])
    assert code != 0
    err = capsys.readouterr().err
    assert err.startswith("error:")


def test_missing_file_nonzero(capsys):
    code = main(["run", "/nonexistent/config.json"])
    assert code != 0
    assert "error:" in capsys.readouterr().err


def test_seed_override(config_path, tmp_path):
    out = tmp_path / "seeded"
    code = main(["run", str(config_path), "--out-dir", str(out), "--seed", "9"])
    assert code == 0
    manifest = json.loads((out / "results.manifest.json").read_text())
    assert manifest["seeds"] == [9]


def test_env_out_dir(config_path, tmp_path, monkeypatch):
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv("RSGD_OUT_DIR", str(env_dir))
    assert main(["run", str(config_path), "--quiet"]) == 0
    assert (env_dir / "results.csv").exists()
    # explicit flag beats the environment
    flag_dir = tmp_path / "flag_out"
    assert main(["run", str(config_path), "--quiet", "--out-dir", str(flag_dir)]) == 0
    assert (flag_dir / "results.csv").exists()


def test_sweep(config_path, tmp_path):
    out = tmp_path / "sweep"
    code = main(
        ["sweep", str(config_path), "--p", "0.1,0.3", "--seeds", "1,2", "--out-dir", str(out), "--quiet"]
    )
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "solver,p,k,mean_value,n_seeds,metric"
    assert len(lines) > 1


def test_ctilde_json(capsys):
    code = main(
        ["ctilde", "--model", "gaussian_sphere", "--d", "25", "--samples", "20000", "--seed", "3"]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["d"] == 25
    assert 0.7 < payload["value"] < 0.95
    assert payload["n_directions"] == 32


def test_drift_check(tmp_path, capsys):
    config = tmp_path / "drift.json"
    config.write_text(
        json.dumps(
            {
                "dimension": 20,
                "horizon": 1000,
                "seeds": [1],
                "measurement": {"kind": "gaussian_sphere"},
                "corruption": {"kind": "residual_sign", "p": 0.4},
                "solvers": [
                    {
                        "name": "sgd-exp",
                        "method": "sgd_exp_linear",
                        "lam": 1.0000000053,
                        "G": "auto",
                        "g_scale": 1.05,
                    }
                ],
                "signal": {"kind": "scaled_standard_normal", "norm": 3.0},
            }
        )
    )
    out = tmp_path / "drift_out"
    code = main(
        ["drift-check", str(config), "--ctilde", "0.8079", "--mc", "5", "--K", "200",
         "--out-dir", str(out), "--quiet"]
    )
    assert code == 0
    report = json.loads((out / "drift_report.json").read_text())
    assert report["drift_params"]["b"] == 3.0 * report["drift_params"]["a"]
    assert report["mc"]["empirical_prob"] == 0.0
    payload = json.loads(capsys.readouterr().out)
    assert payload["K"] == 200


def test_drift_check_window_violation_exits_nonzero(config_path, capsys):
    # lam = 1.01 at p=0.2, d=6 is far outside the admissible window
    code = main(["drift-check", str(config_path), "--ctilde", "0.8", "--quiet"])
    assert code != 0
    assert "window" in capsys.readouterr().err


def test_dataset_prep(tmp_path):
    src = tmp_path / "raw.csv"
    src.write_text("a,b,y\n1,10,0\n2,20,1\n3,30,0\n")
    out = tmp_path / "prepped.csv"
    code = main(
        [
            "dataset", "prep", str(src),
            "--features", "a,b", "--response", "y",
            "--z-score", "-o", str(out), "--quiet",
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "a,b,y"
    values = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert np.allclose(values[:, :2].mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(values[:, :2].std(axis=0, ddof=1), 1.0, atol=1e-12)


def test_dataset_prep_missing_column(tmp_path, capsys):
    src = tmp_path / "raw.csv"
    src.write_text("a,y\n1,0\n")
    code = main(
        ["dataset", "prep", str(src), "--features", "a,b", "--response", "y", "-o",
         str(tmp_path / "x.csv")]
    )
    assert code != 0
    assert "'b'" in capsys.readouterr().err


def test_plot_from_csv(config_path, tmp_path):
    out = tmp_path / "run_out"
    assert main(["run", str(config_path), "--out-dir", str(out), "--quiet"]) == 0
    svg = tmp_path / "replot.svg"
    code = main(["plot", str(out / "results.csv"), "-o", str(svg), "--quiet"])
    assert code == 0
    root = ET.parse(svg).getroot()
    assert len([e for e in root.iter() if e.tag.endswith("polyline")]) == 1
