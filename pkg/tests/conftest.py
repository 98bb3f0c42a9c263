import numpy as np
import pytest

from splitfwi.model import LatentSet, LatentVector, ModelConfig, init_weights

# Small architecture for unit tests; full defaults are exercised in
# test_acceptance.py.
TINY = ModelConfig(
    n_devices=3,
    latent_dim=16,
    d_k=8,
    d_pos=6,
    n_heads=1,
    encoder_channels=(5, 6, 8, 16),
    decoder_channels=(12, 10, 8, 8, 6),
)


@pytest.fixture(scope="session")
def tiny_config():
    return TINY


@pytest.fixture(scope="session")
def tiny_weights():
    return init_weights(TINY, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_latents(config, seed=5, device_ids=None, sample_id=0):
    """Seeded random LatentSet over the given devices."""
    if device_ids is None:
        device_ids = range(config.n_devices)
    rng = np.random.default_rng(seed)
    lset = LatentSet(config.n_devices)
    for d in device_ids:
        vals = rng.normal(size=config.latent_dim).astype(np.float32)
        lset.add(LatentVector(values=vals, device_id=d, sample_id=sample_id))
    return lset


@pytest.fixture
def tiny_latents(tiny_config):
    return make_latents(tiny_config)
