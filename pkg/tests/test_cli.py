import json

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import speech_like

from fbsd.cli import cli
from fbsd.dsp import AudioBuffer
from fbsd.wavio import read_wav, write_wav


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workdir(tmp_path):
    clean = speech_like(48000, seed=1)
    noise = np.random.default_rng(2).normal(0, 0.1, 48000).astype(np.float32)
    write_wav(tmp_path / "clean.wav", AudioBuffer(clean), "pcm16")
    write_wav(tmp_path / "noise.wav", AudioBuffer(noise), "float32")
    return tmp_path


def _run(runner, args):
    result = runner.invoke(cli, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_init_weights_deterministic(runner, tmp_path):
    a, b = tmp_path / "a.fbsd", tmp_path / "b.fbsd"
    _run(runner, ["init-weights", str(a), "--seed", "5"])
    _run(runner, ["init-weights", str(b), "--seed", "5"])
    assert a.read_bytes() == b.read_bytes()


def test_info_json(runner):
    result = _run(runner, ["info", "--json"])
    body = json.loads(result.output)
    assert body["params_total"] == body["params_mapping"] + body["params_core"]
    assert abs(body["params_mapping"] - 197_921) <= 1000


def test_info_text_millions(runner):
    result = _run(runner, ["info"])
    assert "0.461 M" in result.output
    assert "0.253" not in result.output  # core printed from actual count


def test_mix_denoise_eval_flow(runner, workdir):
    w = workdir / "w.fbsd"
    _run(runner, ["init-weights", str(w), "--seed", "0"])

    mix_out = workdir / "mix.wav"
    result = _run(runner, [
        "mix", str(workdir / "clean.wav"), str(mix_out),
        "--noise", str(workdir / "noise.wav"), "--snr", "0", "--peak", "0.5",
    ])
    assert "snr: 0 dB" in result.output
    assert abs(np.max(np.abs(read_wav(str(mix_out)).samples)) - 0.5) <= 1 / 32768

    den_out = workdir / "den.wav"
    result = _run(runner, [
        "denoise", str(mix_out), str(den_out), "--weights", str(w),
    ])
    assert "frames processed" in result.output
    assert len(read_wav(str(den_out)).samples) == 48000

    # denoising twice is bit-identical
    den2 = workdir / "den2.wav"
    _run(runner, ["denoise", str(mix_out), str(den2), "--weights", str(w)])
    assert den_out.read_bytes() == den2.read_bytes()


def test_eval_writes_report(runner, workdir):
    clean3 = workdir / "clean3.wav"
    write_wav(clean3, AudioBuffer(speech_like(3 * 48000, seed=3)), "pcm16")
    report = workdir / "report.jsonl"
    result = _run(runner, [
        "eval", str(clean3), str(clean3), "--report", str(report),
    ])
    assert "SI-SDR" in result.output
    lines = report.read_text().strip().split("\n")
    assert json.loads(lines[0])["stoi"] == 1.0


def test_mix_segments_written(runner, workdir):
    out = workdir / "seg.wav"
    result = _run(runner, [
        "mix", str(workdir / "clean.wav"), str(out),
        "--noise", str(workdir / "noise.wav"),
        "--snr", "10", "--peak", "0.4", "--segment-seconds", "0.25",
    ])
    assert "segments: 4" in result.output
    segs = sorted(workdir.glob("seg_*.wav"))
    assert len(segs) == 4
    assert len(read_wav(str(segs[0])).samples) == 12000


def test_bench_single_pass(runner, workdir):
    w = workdir / "w.fbsd"
    _run(runner, ["init-weights", str(w)])
    result = _run(runner, ["bench", "--weights", str(w), "--passes", "1"])
    assert "RTF" in result.output
    result = _run(runner, ["bench", "--weights", str(w), "--passes", "1", "--no-mapping"])
    assert "with mapping:    - " in result.output


def test_trace_command(runner, workdir):
    w = workdir / "w.fbsd"
    _run(runner, ["init-weights", str(w)])
    frames = np.abs(np.random.default_rng(4).normal(size=(3, 1025))).astype(np.float32)
    fpath = workdir / "frames.npy"
    np.save(fpath, frames)
    out = workdir / "trace.npz"
    _run(runner, ["trace", str(out), "--weights", str(w), "--frames", str(fpath)])
    data = np.load(out)
    assert data["h_map_in"].shape == (3, 96)


def test_error_surfaces_cleanly(runner, workdir):
    bad = workdir / "bad.fbsd"
    bad.write_bytes(b"not a weight file")
    result = runner.invoke(cli, [
        "denoise", str(workdir / "clean.wav"), str(workdir / "x.wav"),
        "--weights", str(bad),
    ])
    assert result.exit_code != 0
    assert "magic" in result.output
