import json

import numpy as np
import pytest
from click.testing import CliRunner

from auralize import cli, geometry, io

from conftest import make_shoebox


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def room_file(tmp_path):
    model = make_shoebox(
        dims=(4.0, 3.0, 2.5), absorption=0.3,
        sources={"s": (0.9, 0.8, 1.2)}, receivers={"r": (3.0, 2.2, 1.3)},
    )
    path = tmp_path / "room.yaml"
    geometry.save_room(model, path)
    return path


def test_help_lists_subcommands(runner):
    result = runner.invoke(cli.main, ["--help"])
    assert result.exit_code == 0
    for cmd in ("simulate", "decimate", "band-reduce", "calibrate", "render",
                "anchor", "metrics", "compare", "run-plan", "serve"):
        assert cmd in result.output


def test_simulate_writes_air(runner, room_file, tmp_path):
    out = tmp_path / "air.wav"
    result = runner.invoke(cli.main, [
        "simulate", str(room_file), "-o", str(out),
        "--rays", "2000", "--max-time", "0.3", "--seed", "1",
    ])
    assert result.exit_code == 0, result.output
    air = io.read_air(out)
    assert air.channels.shape[0] == 16
    assert air.onset_index > 0


def test_simulate_missing_room_fails(runner, tmp_path):
    result = runner.invoke(cli.main, ["simulate", str(tmp_path / "nope.yaml"),
                                      "-o", str(tmp_path / "x.wav")])
    assert result.exit_code != 0


def test_decimate_shoebox_flag(runner, room_file, tmp_path):
    out = tmp_path / "reduced.yaml"
    result = runner.invoke(cli.main, [
        "decimate", str(room_file), "-o", str(out), "--shoebox",
    ])
    assert result.exit_code == 0, result.output
    assert len(geometry.load_room(out).polygons) == 6


def test_band_reduce_round_trip(runner, room_file, tmp_path):
    out = tmp_path / "br.yaml"
    result = runner.invoke(cli.main, [
        "band-reduce", str(room_file), "-o", str(out), "--bands", "2",
    ])
    assert result.exit_code == 0, result.output
    model = geometry.load_room(out)
    centers = next(iter(model.materials.values())).absorption.centers
    assert len(centers) == 2

    bad = runner.invoke(cli.main, [
        "band-reduce", str(room_file), "-o", str(out), "--bands", "3",
    ])
    assert bad.exit_code != 0


def test_metrics_reports_values(runner, tmp_path):
    fs = 44100.0
    rng = np.random.default_rng(3)
    t = np.arange(int(fs * 0.8)) / fs
    br = np.zeros((2, len(t)))
    br[:, 150:] = rng.normal(size=(2, len(t) - 150))
    br *= np.exp(-6.9078 * t / 0.4)
    br[:, 100] = 2.0  # direct spike
    path = tmp_path / "brir.wav"
    io.write_wav(path, br, fs)

    result = runner.invoke(cli.main, ["metrics", str(path)])
    assert result.exit_code == 0, result.output
    assert "t30[1000Hz]" in result.output
    assert "asw =" in result.output
    assert "drr_db =" in result.output


def test_compare_outputs_json(runner, tmp_path):
    fs = 44100.0
    rng = np.random.default_rng(4)
    a = rng.normal(size=(2, int(fs)))
    from scipy import signal
    sos = signal.butter(8, 2500.0 / (fs / 2), output="sos")
    b = signal.sosfiltfilt(sos, a)
    io.write_wav(tmp_path / "a.wav", a, fs)
    io.write_wav(tmp_path / "b.wav", b, fs)

    result = runner.invoke(cli.main, [
        "compare", str(tmp_path / "a.wav"), str(tmp_path / "b.wav"),
    ])
    assert result.exit_code == 0, result.output
    out = json.loads(result.output)
    assert out["erb_difference_db"] > 3.0
    assert "delta_asw" in out


def test_anchor_command(runner, room_file, tmp_path):
    air_path = tmp_path / "air.wav"
    runner.invoke(cli.main, [
        "simulate", str(room_file), "-o", str(air_path),
        "--rays", "2000", "--max-time", "0.3",
    ])
    out = tmp_path / "anchor.wav"
    result = runner.invoke(cli.main, ["anchor", str(air_path), "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert io.read_air(out).channels.shape[0] == 16
