"""End-to-end command-line checks driving run_command directly."""

import json
import math

import numpy as np
import pytest

from cnlight.cli import run_command

SQRT2 = repr(math.sqrt(2.0))
XI_REF = ["--config", "xi", "--mu12", "1", "--mu23", SQRT2]


def run_csv(capsys, argv):
    code = run_command(argv)
    out = capsys.readouterr().out
    assert code == 0
    lines = [ln for ln in out.splitlines() if ln]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


# ---------------------------------------------------------------------------
# exit codes


def test_unknown_command_exits_2(capsys):
    assert run_command(["frobnicate"]) == 2


def test_unknown_flag_exits_2(capsys):
    assert run_command(["basis", "--m", "3", "--what"]) == 2


def test_bump_without_t_tof_exits_2(capsys):
    code = run_command(
        ["evolve", *XI_REF, "--nu0", "3", "--mode", "bump", "--t-end", "2"]
    )
    assert code == 2
    assert "t-tof" in capsys.readouterr().err


def test_bad_grid_exits_2(capsys):
    assert run_command(["husimi", "--nu0", "0", "--grid", "oops"]) == 2


def test_failed_exit_search_exits_3(capsys):
    code = run_command(
        ["protocol", *XI_REF, "--nu0", "3", "--passes", "1",
         "--t-tof-first", "1.2"]
    )
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_version_flag(capsys):
    assert run_command(["--version"]) == 0


# ---------------------------------------------------------------------------
# tabular commands


def test_basis_csv_golden(capsys):
    header, rows = run_csv(capsys, ["basis", "--config", "xi", "--m", "3"])
    assert header == ["index", "nu", "na", "q", "r", "n1", "n2", "n3"]
    assert rows == [
        ["0", "1", "1", "0", "0", "0", "0", "1"],
        ["1", "2", "1", "1", "0", "0", "1", "0"],
        ["2", "3", "1", "1", "1", "1", "0", "0"],
    ]


def test_spectrum_values(capsys):
    header, rows = run_csv(capsys, ["spectrum", *XI_REF, "--m", "3"])
    assert header == ["branch", "energy"]
    values = {name: float(e) for name, e in rows}
    assert values["plus"] == pytest.approx(3.0 + math.sqrt(7.0), abs=1e-12)
    assert values["zero"] == 3.0
    assert values["minus"] == pytest.approx(3.0 - math.sqrt(7.0), abs=1e-12)


def test_dressed_zero_branch_entropy(capsys):
    header, rows = run_csv(
        capsys,
        ["dressed", "--config", "xi", "--mu12", "1", "--mu23", "1", "--m", "2"],
    )
    assert header[:3] == ["branch", "energy", "entropy"]
    by_branch = {r[0]: r for r in rows}
    assert float(by_branch["zero"][2]) == pytest.approx(4.0 / 9.0, abs=1e-12)
    assert float(by_branch["plus"][2]) == pytest.approx(11.0 / 18.0, abs=1e-12)


def test_propagate_prints_unitary_matrix(capsys):
    header, rows = run_csv(
        capsys, ["propagate", *XI_REF, "--m", "3", "--tau", "1.3"]
    )
    assert header == ["row", "col", "re", "im"]
    u = np.zeros((3, 3), dtype=complex)
    for i, j, re, im in rows:
        u[int(i), int(j)] = float(re) + 1j * float(im)
    assert np.max(np.abs(u.conj().T @ u - np.eye(3))) < 1e-12


def test_evolve_csv_shape(capsys):
    header, rows = run_csv(
        capsys,
        ["evolve", *XI_REF, "--nu0", "3", "--t-end", "1", "--snapshots", "4"],
    )
    assert header == ["time", "p0", "p1", "p2", "p3", "entropy"]
    assert len(rows) == 5
    first = [float(x) for x in rows[0]]
    assert first[0] == 0.0 and first[4] == pytest.approx(1.0, abs=1e-12)
    for row in rows:
        probs = [float(x) for x in row[1:5]]
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)


def test_table1_single_row(capsys):
    header, rows = run_csv(capsys, ["table1", "--rows", "1"])
    assert header == [
        "m1", "m2", "delta_nu", "t_tof", "leakage",
        "p0", "p1", "p2", "p3", "p4", "p5",
    ]
    assert len(rows) == 1
    row = rows[0]
    assert row[:3] == ["1", "3", "3"]
    assert abs(float(row[3]) - 5.749) / 5.749 < 0.15
    assert float(row[4]) < 0.03
    assert float(row[5]) == pytest.approx(0.4993, abs=0.02)
    assert float(row[8]) == pytest.approx(0.5000, abs=0.02)
    assert row[9] == "" and row[10] == ""  # no p4/p5 above the top component


# ---------------------------------------------------------------------------
# JSON commands


def test_symmetry_pure_cat(capsys):
    assert run_command(["symmetry", "--nu1", "2", "--nu2", "7"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["order"] == 5
    assert payload["support_differences"] == [5]
    assert payload["max_residual"] < 1e-10


def test_protocol_zero_passes(capsys):
    assert run_command(["protocol", *XI_REF, "--nu0", "3", "--passes", "0"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload) == 1
    assert payload[0]["exit_time"] == 0.0
    assert payload[0]["order"] == 0
    assert payload[0]["probabilities"] == [0.0, 0.0, 0.0, 1.0]


def test_protocol_negative_passes_exits_2(capsys):
    assert run_command(["protocol", "--passes", "-1"]) == 2


# ---------------------------------------------------------------------------
# file outputs and manifests


def test_husimi_writes_file_and_manifest(tmp_path, capsys):
    out = tmp_path / "vac.csv"
    argv = ["husimi", "--nu0", "0", "--grid=-3:3:61", "--out", str(out)]
    assert run_command(argv) == 0
    header = out.read_text().splitlines()[0]
    assert header == "q,p,value"
    values = np.loadtxt(out, delimiter=",", skiprows=1)
    assert np.max(values[:, 2]) == pytest.approx(1.0 / math.pi, abs=1e-12)

    manifest = json.loads((tmp_path / "vac.manifest.json").read_text())
    assert manifest["command"] == "husimi"
    assert manifest["outputs"] == ["vac.csv"]
    assert manifest["grid"] == {"q": [-3.0, 3.0, 61], "p": [-3.0, 3.0, 61]}
    assert "out" not in manifest["parameters"]
    assert manifest["parameters"]["nu0"] == 0

    # replays are byte-identical
    first = out.read_bytes()
    assert run_command(argv) == 0
    assert out.read_bytes() == first


def test_animate_writes_frames(tmp_path, capsys):
    out = tmp_path / "frames"
    code = run_command(
        ["animate", *XI_REF, "--nu0", "2", "--t-end", "0.4", "--dt", "0.1",
         "--grid=-2:2:21", "--out", str(out)]
    )
    assert code == 0
    frames = sorted(p.name for p in out.glob("husimi_*.csv"))
    assert frames == [f"husimi_{k:05d}.csv" for k in range(5)]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"] == frames
    assert len(manifest["parameters"]["frame_times"]) == 5
    assert manifest["parameters"]["frame_times"][-1] == pytest.approx(0.4)


def test_animate_stride_larger_than_trajectory(tmp_path, capsys):
    out = tmp_path / "one"
    code = run_command(
        ["animate", *XI_REF, "--nu0", "2", "--t-end", "0.2", "--dt", "0.1",
         "--stride", "50", "--grid=-2:2:11", "--out", str(out)]
    )
    assert code == 0
    assert [p.name for p in sorted(out.glob("husimi_*.csv"))] == ["husimi_00000.csv"]
