import numpy as np
import pytest

from fbsd import ModelConfig, StreamingDenoiser, random_init, tiny_config


@pytest.fixture(scope="session")
def default_config():
    return ModelConfig()


@pytest.fixture(scope="session")
def tiny_cfg():
    return tiny_config()


@pytest.fixture(scope="session")
def default_weights(default_config):
    return random_init(default_config, seed=1234)


@pytest.fixture(scope="session")
def default_engine(default_weights):
    return StreamingDenoiser(default_weights)


@pytest.fixture(scope="session")
def tiny_engine(tiny_cfg):
    return StreamingDenoiser(random_init(tiny_cfg, seed=99))


def make_rng(seed=0):
    return np.random.default_rng(seed)


def speech_like(n, sr=48000, seed=0, f0=180.0):
    """Harmonic tone stack with slow amplitude modulation, speech-shaped enough
    for SNR/metric tests."""
    rng = make_rng(seed)
    t = np.arange(n) / sr
    sig = np.zeros(n)
    for k in range(1, 6):
        sig += (0.5 / k) * np.sin(2 * np.pi * f0 * k * t + rng.uniform(0, 2 * np.pi))
    am = 0.55 + 0.45 * np.sin(2 * np.pi * 2.3 * t + 1.0)
    out = (sig * am).astype(np.float32)
    return 0.5 * out / np.max(np.abs(out))
