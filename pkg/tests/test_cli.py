import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from sparsetomo.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def test_atlas_build(tmp_path, runner):
    res = runner.invoke(main, ["atlas", "build", "--wavelet-order", "1",
                               "--jmax", "2", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "atoms 244" in res.output
    assert (tmp_path / "atlas_order1_j2.bin").exists()
    assert (tmp_path / "atlas_order1_j2.bin.hdr").exists()


def test_certify_writes_reports(tmp_path, runner):
    res = runner.invoke(main, ["certify", "--j0", "1", "--jmax", "2",
                               "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "certificate.txt").exists()
    assert (tmp_path / "coherence.csv").exists()
    assert "b_fit" in res.output


def test_reconstruct_outputs(tmp_path, runner):
    res = runner.invoke(main, ["reconstruct", "--j0", "1", "--jmax", "2",
                               "--s", "2", "--m", "24", "--seed", "3",
                               "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "reconstruction.pgm").exists()
    assert (tmp_path / "reconstruction.bin").exists()
    assert (tmp_path / "trace.csv").exists()
    assert (tmp_path / "system" / "A.bin").exists()
    assert "status optimal" in res.output


def test_sweep_and_fit(tmp_path, runner):
    out = tmp_path / "sweep"
    res = runner.invoke(main, ["sweep", "--j0", "1", "--jmax", "2", "--s", "2",
                               "--betas", "0.1,0.05,0.025,0.0125",
                               "--ms", "24", "--seeds", "0,1",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert (out / "records.csv").exists()
    res2 = runner.invoke(main, ["fit", "--records", str(out / "records.csv"),
                                "--x-axis", "beta", "--out", str(out)])
    assert res2.exit_code == 0, res2.output
    assert (out / "fit.txt").exists()
    assert "exponent" in res2.output


def test_config_file_merging(tmp_path, runner):
    cfg = {"wavelet_order": 1, "jmax": 2, "out_dir": str(tmp_path)}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    res = runner.invoke(main, ["atlas", "build", "--config", str(cfg_path)])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "atlas_order1_j2.bin").exists()


def test_sweep_rerun_identical(tmp_path, runner):
    args = ["sweep", "--j0", "1", "--jmax", "2", "--s", "2",
            "--betas", "0.1", "--ms", "16", "--seeds", "0"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    r1 = runner.invoke(main, args + ["--out", str(out1)])
    r2 = runner.invoke(main, args + ["--out", str(out2)])
    assert r1.exit_code == 0 and r2.exit_code == 0
    rows1 = open(out1 / "records.csv").read().splitlines()
    rows2 = open(out2 / "records.csv").read().splitlines()
    for a, b in zip(rows1, rows2):
        ca, cb = a.split(","), b.split(",")
        ca.pop(7), cb.pop(7)  # wall time
        assert ca == cb
