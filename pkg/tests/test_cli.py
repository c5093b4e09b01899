"""Command-line interface: subcommands, outputs, exit codes."""
import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from tndecode.cli import main

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture()
def runner():
    return CliRunner()


def parse_class_values(output):
    vals = []
    for line in output.splitlines():
        if line.startswith("class "):
            vals.append(float(line.split(":")[1]))
    return vals


def test_decode_five_qubit_matches_oracle(runner):
    args = ["--code", "five-qubit", "--p", "0.1", "--syndrome", "0110"]
    dec = runner.invoke(main, ["decode", *args, "--engine", "exact"])
    assert dec.exit_code == 0, dec.output
    orc = runner.invoke(main, ["oracle", *args])
    assert orc.exit_code == 0, orc.output
    got = parse_class_values(dec.output)
    want = parse_class_values(orc.output)
    assert np.allclose(got, want, rtol=1e-9)
    assert dec.output.splitlines()[-1] == orc.output.splitlines()[-1]


def test_decode_surface2d_matches_oracle(runner):
    args = ["--code", "surface2d", "--sector", "x", "--p", "0.1", "--d", "3",
            "--syndrome", "010010"]
    dec = runner.invoke(main, ["decode", *args])
    orc = runner.invoke(main, ["oracle", *args])
    assert dec.exit_code == 0 and orc.exit_code == 0, dec.output + orc.output
    assert np.allclose(parse_class_values(dec.output),
                       parse_class_values(orc.output), rtol=1e-9)


def test_input_errors_exit_2(runner):
    cases = [
        ["decode", "--code", "five-qubit", "--dem", "x.dem", "--p", "0.1",
         "--syndrome", "0000"],
        ["decode", "--p", "0.1", "--syndrome", "0000"],  # neither source
        ["decode", "--code", "five-qubit", "--syndrome", "0000"],  # no p
        ["decode", "--code", "five-qubit", "--p", "0.1",
         "--syndrome", "01a0"],  # bad syndrome characters
        ["decode", "--code", "five-qubit", "--p", "0.1"],  # no syndrome
        ["decode", "--code", "surface2d", "--p", "0.1",
         "--syndrome", "000000"],  # sector required in 2D
        ["decode", "--dem", os.path.join(DATA, "missing.dem"),
         "--syndrome", "0"],
        ["compress-dem", "--dem", os.path.join(DATA, "missing.dem"),
         "--out", "x.npz"],
        ["oracle", "--code", "surface3d", "--d", "3", "--p", "0.1",
         "--sector", "z", "--syndrome", "0"],  # n > 16
    ]
    for args in cases:
        res = runner.invoke(main, args)
        assert res.exit_code == 2, (args, res.output)


def test_sample_writes_csv_and_manifest(runner, tmp_path):
    out = str(tmp_path / "runs.csv")
    args = ["sample", "--code", "five-qubit", "--p", "0.05", "--shots", "50",
            "--seed", "3", "--engine", "exact", "--out", out]
    res = runner.invoke(main, args)
    assert res.exit_code == 0, res.output
    res2 = runner.invoke(main, args)
    assert res2.exit_code == 0
    lines = open(out).read().strip().splitlines()
    assert lines[0].startswith("problem,p,d,shots,failures,rate")
    assert len(lines) == 3  # header + one row per run
    assert lines[1] == lines[2]  # same seed, same counts
    manifest = json.load(open(str(tmp_path / "runs.config.json")))
    assert manifest["engine"] == "exact" and manifest["chi_peps"] == 24


def test_threshold_writes_json(runner, tmp_path):
    out = str(tmp_path / "cross.json")
    res = runner.invoke(main, [
        "threshold", "--code", "surface2d", "--sector", "x",
        "--picture", "detector", "--engine", "mps", "--chi-mps", "16",
        "--p", "0.08", "--p", "0.10", "--p", "0.12",
        "--d", "3", "--d", "5", "--shots", "40", "--seed", "1", "--out", out,
    ])
    assert res.exit_code == 0, res.output
    data = json.load(open(out))
    assert data["ps"] == [0.08, 0.10, 0.12]
    assert set(data["curves"]) == {"3", "5"}
    assert len(data["curves"]["3"]) == 3
    assert "crossing_found" in data


def test_threshold_argument_validation(runner, tmp_path):
    out = str(tmp_path / "x.json")
    res = runner.invoke(main, [
        "threshold", "--code", "five-qubit", "--p", "0.1", "--p", "0.2",
        "--p", "0.3", "--d", "3", "--shots", "10", "--out", out,
    ])
    assert res.exit_code == 2
    res = runner.invoke(main, [
        "threshold", "--code", "five-qubit", "--p", "0.1",
        "--d", "3", "--d", "5", "--shots", "10", "--out", out,
    ])
    assert res.exit_code == 2


def test_compress_dem_and_decode_from_cache(runner, tmp_path):
    dem = os.path.join(DATA, "rotated_d3.dem")
    out = str(tmp_path / "cache.npz")
    res = runner.invoke(main, ["compress-dem", "--dem", dem,
                               "--chi-compress", "4", "--out", out])
    assert res.exit_code == 0, res.output
    assert os.path.exists(out)
    assert "mechanisms" in res.output
    # decoding straight from the DEM with on-the-fly compression
    res = runner.invoke(main, [
        "decode", "--dem", dem, "--p", "0.005", "--chi-compress", "4",
        "--chi-peps", "8", "--chi-split", "4", "--chi-mps", "16",
        "--syndrome", "0" * 24,
    ])
    assert res.exit_code == 0, res.output
    assert "chosen class: 0" in res.output


def test_dem_decode_matches_oracle_small(runner, tmp_path):
    dem = str(tmp_path / "toy.dem")
    with open(dem, "w") as f:
        f.write("error(0.1) D0\nerror(0.2) D0 D1 L0\nerror(0.3) D1\n"
                "logical_observable L0\n")
    for syndrome in ("00", "01", "10", "11"):
        dec = runner.invoke(main, ["decode", "--dem", dem,
                                   "--syndrome", syndrome])
        orc = runner.invoke(main, ["oracle", "--dem", dem,
                                   "--syndrome", syndrome])
        assert dec.exit_code == 0 and orc.exit_code == 0
        assert np.allclose(parse_class_values(dec.output),
                           parse_class_values(orc.output), rtol=1e-9)


def test_numerical_failure_exits_3(runner):
    # exact contraction of a d=5 3D network blows through the dense-size cap
    from tndecode.codes import surface_code_3d

    n_checks = surface_code_3d(5).h_z.shape[0]
    res = runner.invoke(main, [
        "decode", "--code", "surface3d", "--sector", "x", "--d", "5",
        "--p", "0.2", "--engine", "exact", "--syndrome", "0" * n_checks,
    ])
    assert res.exit_code == 3, res.output
    assert "numerical failure" in res.output
