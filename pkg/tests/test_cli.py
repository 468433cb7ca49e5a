import os

import yaml

from flatlimit.cli import main

SWEEP_CFG = {
    "kernel": {"family": "gaussian"},
    "functional": {"kind": "lebesgue_box", "lower": -1.0, "upper": 1.0},
    "points": [-1.0, 0.0, 1.0],
    "degree": 2,
    "ell_grid": {"min": 1.0, "max": 100.0, "count": 3},
    "precision": "auto",
}


def write_cfg(path, cfg):
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def test_sweep_writes_csv_and_manifest(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.yaml", SWEEP_CFG)
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "sweep.csv").exists()
    assert (out / "manifest.yaml").exists()
    man = yaml.safe_load((out / "manifest.yaml").read_text())
    assert man["command"] == "sweep"
    assert "config_sha256" in man
    header = (out / "sweep.csv").read_text().splitlines()[0]
    assert header.startswith("ell,w_0,w_1,w_2,wce,")


def test_sweep_output_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", SWEEP_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()
    assert (out1 / "manifest.yaml").read_bytes() == (out2 / "manifest.yaml").read_bytes()


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfg = dict(SWEEP_CFG)
    cfg["mystery"] = 1
    path = write_cfg(tmp_path / "c.yaml", cfg)
    assert main(["sweep", "--config", path]) == 2
    assert "mystery" in capsys.readouterr().err


def test_missing_config_file_is_config_error(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_malformed_yaml_is_config_error(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("kernel: [unclosed")
    assert main(["sweep", "--config", str(path)]) == 2


def test_single_point_grid_rejected(tmp_path):
    cfg = dict(SWEEP_CFG)
    cfg["ell_grid"] = {"min": 10.0, "max": 10.0, "count": 1}
    path = write_cfg(tmp_path / "c.yaml", cfg)
    assert main(["sweep", "--config", path]) == 2


def test_oracle_functional_rejected_in_config(tmp_path):
    cfg = dict(SWEEP_CFG)
    cfg["functional"] = {"kind": "numeric_oracle"}
    path = write_cfg(tmp_path / "c.yaml", cfg)
    assert main(["sweep", "--config", path]) == 2


def test_series_kernel_rejected_in_config(tmp_path):
    cfg = dict(SWEEP_CFG)
    cfg["kernel"] = {"family": "damped_power_series"}
    path = write_cfg(tmp_path / "c.yaml", cfg)
    assert main(["sweep", "--config", path]) == 2


def test_precision_flag_overrides_config(tmp_path):
    cfg = dict(SWEEP_CFG)
    cfg["ell_grid"] = {"min": 1.0, "max": 10.0, "count": 2}
    cfg["precision"] = "machine"
    path = write_cfg(tmp_path / "c.yaml", cfg)
    out = tmp_path / "out"
    assert main(["sweep", "--config", path, "--out", str(out), "--precision", "128"]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()[1:]
    assert all(r.rsplit(",", 1)[1] == "128" for r in rows)


def test_precision_env_var_between_flag_and_config(tmp_path):
    cfg = dict(SWEEP_CFG)
    cfg["ell_grid"] = {"min": 1.0, "max": 10.0, "count": 2}
    cfg["precision"] = "machine"
    path = write_cfg(tmp_path / "c.yaml", cfg)
    out_env = tmp_path / "env"
    out_flag = tmp_path / "flag"
    old = os.environ.get("FLATLIMIT_PRECISION_BITS")
    os.environ["FLATLIMIT_PRECISION_BITS"] = "96"
    try:
        assert main(["sweep", "--config", path, "--out", str(out_env)]) == 0
        assert main(
            ["sweep", "--config", path, "--out", str(out_flag), "--precision", "160"]
        ) == 0
    finally:
        if old is None:
            del os.environ["FLATLIMIT_PRECISION_BITS"]
        else:
            os.environ["FLATLIMIT_PRECISION_BITS"] = old
    env_rows = (out_env / "sweep.csv").read_text().splitlines()[1:]
    flag_rows = (out_flag / "sweep.csv").read_text().splitlines()[1:]
    assert all(r.rsplit(",", 1)[1] == "96" for r in env_rows)
    assert all(r.rsplit(",", 1)[1] == "160" for r in flag_rows)


def test_gauss_command(tmp_path, capsys):
    cfg = {
        "functional": {"kind": "lebesgue_box", "lower": -1.0, "upper": 1.0},
        "n_points": 2,
        "precision": 128,
    }
    path = write_cfg(tmp_path / "g.yaml", cfg)
    out = tmp_path / "out"
    assert main(["gauss", "--config", path, "--out", str(out)]) == 0
    txt = capsys.readouterr().out
    assert "5.773502691896257e-01" in txt
    assert (out / "gauss.csv").exists()


def test_wce_command(tmp_path, capsys):
    cfg = {
        "kernel": {"family": "gaussian", "length_scale": 2.0},
        "functional": {"kind": "lebesgue_box", "lower": -1.0, "upper": 1.0},
        "points": [-1.0, 0.0, 1.0],
        "precision": "auto",
    }
    path = write_cfg(tmp_path / "w.yaml", cfg)
    assert main(["wce", "--config", path]) == 0
    assert "wce" in capsys.readouterr().out


def test_check_unisolvent_exit_codes(tmp_path):
    good = write_cfg(
        tmp_path / "good.yaml", {"points": [-1.0, 0.0, 1.0], "degree": 2}
    )
    assert main(["check-unisolvent", "--config", good]) == 0
    bad = write_cfg(
        tmp_path / "bad.yaml",
        {"points": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], "degree": 1},
    )
    assert main(["check-unisolvent", "--config", bad]) == 3


def test_optimal_command_unbounded_rejected(tmp_path):
    cfg = {
        "kernel": {"family": "gaussian"},
        "functional": {"kind": "gaussian_measure"},
        "n_points": 2,
        "ell_grid": {"min": 10.0, "max": 100.0, "count": 2},
    }
    path = write_cfg(tmp_path / "o.yaml", cfg)
    assert main(["optimal", "--config", path]) == 2
