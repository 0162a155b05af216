import io
import zipfile

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import speech_like

from fbsd.dsp import AudioBuffer
from fbsd.service.app import app
from fbsd.wavio import read_wav_bytes, write_wav_bytes
from fbsd.weights_io import load_bytes, random_init, save_bytes


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def weight_blob(default_weights):
    return save_bytes(default_weights)


def _wav(samples, sr=48000, encoding="float32"):
    return write_wav_bytes(AudioBuffer(np.asarray(samples, np.float32), sr), encoding)


def test_health_and_config(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    cfg = client.get("/config").json()
    assert cfg["n_bins"] == 1025 and cfg["n_features"] == 96


def test_info_default_and_from_weights(client, weight_blob):
    base = client.post("/info").json()
    assert base["params_total"] == base["params_mapping"] + base["params_core"]
    viaw = client.post("/info", files={"weights": ("w.fbsd", weight_blob)}).json()
    assert viaw["params_total"] == base["params_total"]
    assert "0.0064 G" in viaw["text"]


def test_weights_init_deterministic(client):
    a = client.post("/weights/init", json={"seed": 11})
    b = client.post("/weights/init", json={"seed": 11})
    c = client.post("/weights/init", json={"seed": 12})
    assert a.content == b.content != c.content
    loaded = load_bytes(a.content)
    assert loaded.config.n_bins == 1025


def test_denoise_roundtrip(client, weight_blob):
    x = speech_like(48000, seed=1)
    r = client.post("/denoise", files={
        "audio": ("in.wav", _wav(x), "audio/wav"),
        "weights": ("w.fbsd", weight_blob),
    })
    assert r.status_code == 200
    out = read_wav_bytes(r.content)
    assert len(out.samples) == len(x)
    assert int(r.headers["X-Fbsd-Frames"]) == int(np.ceil(len(x) / 1024)) + 1


def test_denoise_rejects_wrong_rate(client, weight_blob):
    r = client.post("/denoise", files={
        "audio": ("in.wav", _wav(np.zeros(4000), sr=16000), "audio/wav"),
        "weights": ("w.fbsd", weight_blob),
    })
    assert r.status_code == 400
    assert "48000" in r.json()["detail"]


def test_denoise_rejects_stereo(client, weight_blob):
    # hand-build a stereo wav: wavio only writes mono, so patch the header
    mono = bytearray(_wav(np.zeros(2048), encoding="pcm16"))
    idx = mono.find(b"fmt ")
    mono[idx + 10:idx + 12] = (2).to_bytes(2, "little")
    r = client.post("/denoise", files={
        "audio": ("in.wav", bytes(mono), "audio/wav"),
        "weights": ("w.fbsd", weight_blob),
    })
    assert r.status_code == 400
    assert "mono" in r.json()["detail"]


def test_denoise_rejects_bad_weights(client):
    r = client.post("/denoise", files={
        "audio": ("in.wav", _wav(np.zeros(2048)), "audio/wav"),
        "weights": ("w.fbsd", b"garbage"),
    })
    assert r.status_code == 400
    assert r.json()["error"] == "CorruptHeaderError"


def test_mix_endpoint_snr_and_peak(client):
    clean = speech_like(48000, seed=2)
    noise = np.random.default_rng(3).normal(0, 0.1, 48000).astype(np.float32)
    r = client.post(
        "/mix",
        files=[
            ("clean", ("c.wav", _wav(clean), "audio/wav")),
            ("noise", ("n.wav", _wav(noise), "audio/wav")),
        ],
        data={"snr_db": "0", "peak": "0.5", "seed": "0"},
    )
    assert r.status_code == 200
    assert r.headers["X-Fbsd-Snr-Db"] == "0"
    mixture = read_wav_bytes(r.content)
    assert abs(np.max(np.abs(mixture.samples)) - 0.5) <= 1.0 / 32768


def test_mix_endpoint_segments_zip(client):
    clean = speech_like(48000, seed=4)
    noise = np.random.default_rng(5).normal(0, 0.1, 48000).astype(np.float32)
    r = client.post(
        "/mix",
        files=[
            ("clean", ("c.wav", _wav(clean), "audio/wav")),
            ("noise", ("n.wav", _wav(noise), "audio/wav")),
        ],
        data={"snr_db": "5", "peak": "0.5", "segment_seconds": "0.25"},
    )
    assert r.status_code == 200
    with zipfile.ZipFile(io.BytesIO(r.content)) as zf:
        names = zf.namelist()
        assert len(names) == int(r.headers["X-Fbsd-Segments"])
        seg = read_wav_bytes(zf.read(names[0]))
        assert len(seg.samples) == 12000


def test_mix_sampled_params_deterministic(client):
    clean = speech_like(24000, seed=6)
    noise = np.random.default_rng(7).normal(0, 0.1, 24000).astype(np.float32)

    def call():
        return client.post(
            "/mix",
            files=[
                ("clean", ("c.wav", _wav(clean), "audio/wav")),
                ("noise", ("n.wav", _wav(noise), "audio/wav")),
            ],
            data={"seed": "9"},
        )

    a, b = call(), call()
    assert a.headers["X-Fbsd-Snr-Db"] == b.headers["X-Fbsd-Snr-Db"]
    assert a.content == b.content
    assert -10 <= int(a.headers["X-Fbsd-Snr-Db"]) <= 25


def test_eval_endpoint_identity(client):
    x = speech_like(3 * 48000, seed=8)
    r = client.post("/eval", files={
        "clean": ("c.wav", _wav(x), "audio/wav"),
        "processed": ("p.wav", _wav(x), "audio/wav"),
    })
    body = r.json()
    assert body["aggregate"]["si_sdr"] == 120.0
    assert abs(body["aggregate"]["stoi"] - 1.0) <= 1e-6
    assert body["utterances"][0]["name"] == "p.wav"
    assert "SI-SDR" in body["table"]


def test_eval_endpoint_length_mismatch(client):
    x = speech_like(48000, seed=9)
    r = client.post("/eval", files={
        "clean": ("c.wav", _wav(x), "audio/wav"),
        "processed": ("p.wav", _wav(x[:-100]), "audio/wav"),
    })
    assert r.status_code == 400


def test_bench_endpoint_single_pass(client, weight_blob):
    r = client.post("/bench", files={"weights": ("w.fbsd", weight_blob)},
                    data={"passes": "1"})
    body = r.json()
    assert body["passes"] == 1
    assert body["rtf_with_mapping"] > 0
    assert body["rtf_without_mapping"] > 0


def test_trace_endpoint(client, weight_blob, default_engine):
    rng = np.random.default_rng(10)
    mags = np.abs(rng.normal(size=(4, 1025))).astype(np.float32)
    buf = io.BytesIO()
    np.save(buf, mags)
    r = client.post("/trace", files={
        "weights": ("w.fbsd", weight_blob),
        "frames": ("frames.npy", buf.getvalue()),
    })
    assert r.status_code == 200
    data = np.load(io.BytesIO(r.content))
    assert data["mask"].shape == (4, 1025)
    np.testing.assert_array_equal(data["frames"], mags)
    expected = default_engine.process_offline(mags)
    np.testing.assert_allclose(data["mask"], expected, atol=1e-7)
