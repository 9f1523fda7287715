import numpy as np
import pytest

from irswet.channel import ChannelRealization, SystemConfig, sample_channels
from irswet.eh import derive_constants


@pytest.fixture(scope="session")
def eh_default():
    return derive_constants(150.0, 0.014, 0.024)


@pytest.fixture(scope="session")
def small_cfg():
    return SystemConfig(n_elements=8, n_ers=2)


@pytest.fixture(scope="session")
def small_channel(small_cfg):
    return sample_channels(small_cfg, 12345)


def make_channel(h_d, g, h_r, er_positions=None):
    """Assemble a realization from raw channels by the documented derivation:
    q_k = h_r_k * conj(g), q_bar_k = [q_k, h_d_k], lift = outer(q_bar, q_bar^H).
    Mirrors the production derivation independently so tests can cross-check
    sampled realizations and build hand-crafted instances."""
    h_d = np.asarray(h_d, dtype=complex)
    g = np.asarray(g, dtype=complex)
    h_r = np.atleast_2d(np.asarray(h_r, dtype=complex))
    k, n = h_r.shape
    q = h_r * np.conj(g)[None, :]
    q_bar = np.concatenate([q, h_d.reshape(k, 1)], axis=1)
    q_lift = np.stack([np.outer(q_bar[i], np.conj(q_bar[i])) for i in range(k)])
    if er_positions is None:
        er_positions = np.zeros((k, 3))
    return ChannelRealization(h_d=h_d, g=g, h_r=h_r, q=q, q_bar=q_bar,
                              q_lift=q_lift, er_positions=np.asarray(er_positions, float))
