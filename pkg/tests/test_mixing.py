import numpy as np
import pytest

from conftest import speech_like

from fbsd.dsp import AudioBuffer
from fbsd.errors import InvalidArgumentError, MixError
from fbsd.metrics import si_sdr
from fbsd.mixing import (
    MixSpec,
    fit_length,
    mix,
    mix_signals,
    sample_mix_params,
    segment_samples,
)


@pytest.fixture(scope="module")
def sources():
    rng = np.random.default_rng(0)
    clean = speech_like(2 * 48000, seed=1)
    noise = rng.normal(0, 0.1, 2 * 48000).astype(np.float32)
    return clean, noise


def test_zero_snr_equalizes_powers(sources):
    clean, noise = sources
    mixture, c, n = mix_signals(clean, [noise], snr_db=0, peak=0.6)
    p_c = np.mean(c.astype(np.float64) ** 2)
    p_n = np.mean(n.astype(np.float64) ** 2)
    assert abs(p_c / p_n - 1.0) <= 1e-6
    np.testing.assert_allclose(mixture, c + n, atol=1e-6)


def test_peak_normalization(sources):
    clean, noise = sources
    mixture, _, _ = mix_signals(clean, [noise], snr_db=5, peak=0.5)
    assert abs(np.max(np.abs(mixture)) - 0.5) <= 1.0 / 32768


def test_snr_difference_measured_by_si_sdr(sources):
    clean, noise = sources
    high, c_h, _ = mix_signals(clean, [noise], snr_db=25, peak=0.9)
    low, c_l, _ = mix_signals(clean, [noise], snr_db=-10, peak=0.9)
    diff = si_sdr(c_h, high) - si_sdr(c_l, low)
    assert abs(diff - 35.0) <= 0.5


def test_two_noises_summed(sources):
    clean, noise = sources
    rng = np.random.default_rng(2)
    noise2 = rng.normal(0, 0.3, len(clean)).astype(np.float32)
    mixture, c, n = mix_signals(clean, [noise, noise2], snr_db=3, peak=0.7)
    p_c = np.mean(c.astype(np.float64) ** 2)
    p_n = np.mean(n.astype(np.float64) ** 2)
    assert abs(10 * np.log10(p_c / p_n) - 3.0) <= 1e-6


def test_silent_sources_rejected(sources):
    clean, noise = sources
    with pytest.raises(MixError):
        mix_signals(np.zeros_like(clean), [noise], snr_db=0, peak=0.5)
    with pytest.raises(MixError):
        mix_signals(clean, [np.zeros_like(noise)], snr_db=0, peak=0.5)


def test_mixspec_validation():
    with pytest.raises(InvalidArgumentError):
        MixSpec(clean="c", noises=[])
    with pytest.raises(InvalidArgumentError):
        MixSpec(clean="c", noises=["a", "b", "c"])
    with pytest.raises(InvalidArgumentError):
        MixSpec(clean="c", noises=["a"], snr_db=26)
    with pytest.raises(InvalidArgumentError):
        MixSpec(clean="c", noises=["a"], peak=0.9999)
    MixSpec(clean="c", noises=["a"], snr_db=-10, peak=0.5)


def test_sampled_params_in_range_and_deterministic():
    a = sample_mix_params(np.random.default_rng(7))
    b = sample_mix_params(np.random.default_rng(7))
    assert a == b
    snrs = set()
    for seed in range(200):
        s, p = sample_mix_params(np.random.default_rng(seed))
        assert -10 <= s <= 25 and isinstance(s, int)
        assert 0.001 <= p <= 0.999
        snrs.add(s)
    assert len(snrs) > 20  # integers across the range


def test_mix_buffers_deterministic(sources):
    clean, noise = sources
    a = mix(AudioBuffer(clean, 48000), [AudioBuffer(noise, 48000)], seed=3)
    b = mix(AudioBuffer(clean, 48000), [AudioBuffer(noise, 48000)], seed=3)
    np.testing.assert_array_equal(a[0].samples, b[0].samples)
    assert a[1:] == b[1:]


def test_fit_length_crop_and_tile():
    rng = np.random.default_rng(4)
    long = rng.normal(size=1000)
    short = rng.normal(size=300)
    assert len(fit_length(long, 400, np.random.default_rng(1))) == 400
    tiled = fit_length(short, 700, np.random.default_rng(1))
    assert len(tiled) == 700
    np.testing.assert_array_equal(tiled[:300], short)
    np.testing.assert_array_equal(tiled[300:600], short)


def test_segmentation_pads_at_beginning():
    x = np.arange(1, 11, dtype=np.float32)
    segs = segment_samples(x, 4)
    assert len(segs) == 3
    np.testing.assert_array_equal(segs[0], [0, 0, 1, 2])
    np.testing.assert_array_equal(segs[-1], [7, 8, 9, 10])
    # 4 s segmentation of 48 kHz audio
    segs = segment_samples(np.ones(5 * 48000, np.float32), 4 * 48000)
    assert len(segs) == 2 and all(len(s) == 4 * 48000 for s in segs)
    assert np.all(segs[0][: 3 * 48000] == 0)
