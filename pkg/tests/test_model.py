import numpy as np
import pytest

from fbsd import SpectralFrame, StreamingDenoiser, random_init, tiny_config
from fbsd.errors import InvalidArgumentError
from fbsd.model import ActivationTrace


def _random_mags(rng, t, n_bins):
    return np.abs(rng.normal(size=(t, n_bins))).astype(np.float32)


def test_shape_chain_default(default_engine):
    cfg = default_engine.config
    rng = np.random.default_rng(0)
    x = np.abs(rng.normal(size=cfg.n_bins)).astype(np.float32)
    h = default_engine.map_in(x)
    assert h.shape == (96,)
    in_pad = np.tile(h, (cfg.lookback + 1, 1))
    h_enc, skips = default_engine.encoder(in_pad)
    assert h_enc.shape == (64, 6)
    assert [s.shape for s in skips] == [
        (16, 48), (16, 48), (16, 24), (16, 24), (16, 12), (64, 6)
    ]
    h_bott, hidden = default_engine.bottleneck(h_enc, np.zeros(64, np.float32))
    assert h_bott.shape == (64, 6)
    assert hidden.shape == (64,)
    h_dec = default_engine.decoder(h_bott, skips)
    assert h_dec.shape == (96,)
    h_ae, ae_hidden = default_engine.ae(h_dec, np.zeros(48, np.float32))
    assert h_ae.shape == (96,)
    assert ae_hidden.shape == (48,)
    h_mask = default_engine.mask_head(np.zeros((4, 96), np.float32),
                                      np.zeros((4, 96), np.float32))
    assert h_mask.shape == (96,)
    mask = default_engine.map_out(h_mask)
    assert mask.shape == (1025,)


def test_map_in_validates_length(default_engine):
    with pytest.raises(InvalidArgumentError):
        default_engine.map_in(np.zeros(7, np.float32))


def test_map_in_zero_input_deterministic(default_engine):
    a = default_engine.map_in(np.zeros(1025, np.float32))
    b = default_engine.map_in(np.zeros(1025, np.float32))
    np.testing.assert_array_equal(a, b)
    assert np.all(np.isfinite(a))


def test_map_out_zero_weights_gives_half(default_config):
    w = random_init(default_config, seed=0)
    tensors = dict(w.tensors)
    tensors["map_out.fc.weight"] = np.zeros_like(tensors["map_out.fc.weight"])
    tensors["map_out.fc.bias"] = np.zeros_like(tensors["map_out.fc.bias"])
    from fbsd.weights_io import ModelWeights

    eng = StreamingDenoiser(ModelWeights(default_config, tensors))
    mask = eng.map_out(np.random.default_rng(0).normal(size=96).astype(np.float32) * 0)
    np.testing.assert_allclose(mask, 0.5, atol=1e-7)


def test_map_out_large_negative_bias_suppresses(default_config):
    w = random_init(default_config, seed=0)
    tensors = dict(w.tensors)
    tensors["map_out.fc.bias"] = np.full_like(tensors["map_out.fc.bias"], -60.0)
    from fbsd.weights_io import ModelWeights

    eng = StreamingDenoiser(ModelWeights(default_config, tensors))
    mask = eng.map_out(np.zeros(96, np.float32))
    assert np.all(mask < 1e-9)


def test_bottleneck_state_evolves(default_engine):
    rng = np.random.default_rng(1)
    h_enc = rng.normal(size=(64, 6)).astype(np.float32)
    out1, hid1 = default_engine.bottleneck(h_enc, np.zeros(64, np.float32))
    out2, hid2 = default_engine.bottleneck(h_enc, hid1)
    # same input, evolved state: outputs differ unless weights are degenerate
    assert not np.allclose(out1, out2)


def test_mask_head_zero_history_gives_bias(default_engine, default_weights):
    bias = float(default_weights["mask.conv.bias"][0])
    out = default_engine.mask_head(np.zeros((4, 96), np.float32),
                                   np.zeros((4, 96), np.float32))
    np.testing.assert_allclose(out, bias, atol=1e-7)


def test_step_mask_in_range_and_attenuating(default_engine):
    rng = np.random.default_rng(2)
    state = default_engine.new_state()
    for _ in range(5):
        mag = np.abs(rng.normal(size=1025)).astype(np.float32)
        phase = rng.uniform(-np.pi, np.pi, 1025).astype(np.float32)
        mask, denoised = default_engine.step(SpectralFrame(mag, phase), state)
        assert np.all(mask >= 0) and np.all(mask <= 1)
        assert np.all(denoised.magnitude <= mag * (1 + 1e-6))
        np.testing.assert_array_equal(denoised.phase, phase)


def test_streaming_equals_offline(tiny_engine):
    rng = np.random.default_rng(3)
    mags = _random_mags(rng, 50, tiny_engine.config.n_bins)
    state = tiny_engine.new_state()
    streamed = np.stack([tiny_engine.step_mask(m, state) for m in mags])
    offline = tiny_engine.process_offline(mags)
    rel = np.abs(streamed - offline).max(axis=1) / np.maximum(
        np.abs(offline).max(axis=1), 1e-12
    )
    assert rel.max() <= 1e-5


def test_single_frame_offline_equals_step(tiny_engine):
    rng = np.random.default_rng(4)
    mags = _random_mags(rng, 1, tiny_engine.config.n_bins)
    state = tiny_engine.new_state()
    step_mask = tiny_engine.step_mask(mags[0], state)
    np.testing.assert_allclose(tiny_engine.process_offline(mags)[0], step_mask,
                               rtol=1e-5, atol=1e-7)


def test_offline_truncation_causality(tiny_engine):
    rng = np.random.default_rng(5)
    mags = _random_mags(rng, 30, tiny_engine.config.n_bins)
    full = tiny_engine.process_offline(mags)
    for t in (0, 7, 19, 29):
        part = tiny_engine.process_offline(mags[: t + 1])
        np.testing.assert_array_equal(part[t], full[t])


def test_future_perturbation_does_not_change_past(tiny_engine):
    rng = np.random.default_rng(6)
    mags = _random_mags(rng, 25, tiny_engine.config.n_bins)
    base = tiny_engine.process_offline(mags)
    for t, k in [(3, 1), (10, 5), (20, 4), (0, 24)]:
        perturbed = mags.copy()
        perturbed[t + k] += np.abs(rng.normal(size=mags.shape[1])).astype(np.float32)
        got = tiny_engine.process_offline(perturbed)
        assert np.array_equal(got[t], base[t])
        assert not np.array_equal(got[t + k], base[t + k])


def test_reset_restores_stream_start(tiny_engine):
    rng = np.random.default_rng(7)
    mag = np.abs(rng.normal(size=tiny_engine.config.n_bins)).astype(np.float32)
    state = tiny_engine.new_state()
    first = tiny_engine.step_mask(mag, state)
    tiny_engine.step_mask(mag, state)
    state.reset()
    again = tiny_engine.step_mask(mag, state)
    np.testing.assert_array_equal(first, again)
    # reset is idempotent and equals a fresh state
    state.reset().reset()
    fresh = tiny_engine.new_state()
    np.testing.assert_array_equal(state.map_in_hist, fresh.map_in_hist)
    np.testing.assert_array_equal(state.bottleneck_hidden, fresh.bottleneck_hidden)


def test_trace_collection_shapes(tiny_engine):
    rng = np.random.default_rng(8)
    cfg = tiny_engine.config
    mags = _random_mags(rng, 6, cfg.n_bins)
    trace = ActivationTrace()
    tiny_engine.process_offline(mags, trace=trace)
    arrays = trace.arrays()
    assert arrays["h_map_in"].shape == (6, cfg.n_features)
    assert arrays["h_enc"].shape == (6, cfg.block_channels[-1], cfg.encoder_features[-1])
    assert arrays["h_dec"].shape == (6, cfg.n_features)
    assert arrays["mask"].shape == (6, cfg.n_bins)


def test_step_trace_matches_offline_trace(tiny_engine):
    rng = np.random.default_rng(9)
    mags = _random_mags(rng, 5, tiny_engine.config.n_bins)
    t_stream = ActivationTrace()
    state = tiny_engine.new_state()
    for m in mags:
        tiny_engine.step_mask(m, state, trace=t_stream)
    t_off = ActivationTrace()
    tiny_engine.process_offline(mags, trace=t_off)
    for key, a in t_stream.arrays().items():
        np.testing.assert_allclose(a, t_off.arrays()[key], rtol=1e-5, atol=1e-7,
                                   err_msg=key)


def test_wrong_bins_rejected(tiny_engine):
    with pytest.raises(InvalidArgumentError):
        tiny_engine.process_offline(np.zeros((3, 11), np.float32))


def test_tiny_config_roundtrips_through_validation():
    cfg = tiny_config()
    assert cfg.encoder_features == (24, 12, 6)
    assert cfg.decoder_features == (6, 12, 24)
    eng = StreamingDenoiser(random_init(cfg, seed=1))
    state = eng.new_state()
    mask = eng.step_mask(np.ones(cfg.n_bins, np.float32), state)
    assert mask.shape == (cfg.n_bins,)
