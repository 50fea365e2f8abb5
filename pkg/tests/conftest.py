"""Shared fixtures: small configurations and prebuilt dictionaries."""

import numpy as np
import pytest

from afdm_rpe.dictionary import build_dictionary, build_grid
from afdm_rpe.waveform import AfdmConfig


@pytest.fixture(scope="session")
def cfg16():
    """N=16 configuration with delay- and Doppler-anchoring chirp rates."""
    return AfdmConfig(n_samples=16, c1=1.2 / 32.0, c2=1.0 / 32.0)


@pytest.fixture(scope="session")
def grid33():
    return build_grid(3, 3, 0.1)


@pytest.fixture(scope="session")
def dict16(cfg16, grid33):
    return build_dictionary(cfg16, grid33)


@pytest.fixture(scope="session")
def cfg64():
    """Full-scale configuration (N=64) with anchoring chirp rates."""
    return AfdmConfig(n_samples=64, c1=1.2 / 128.0, c2=1.0 / 128.0)


@pytest.fixture(scope="session")
def grid55():
    return build_grid(5, 5, 0.1)


@pytest.fixture(scope="session")
def dict64(cfg64, grid55):
    return build_dictionary(cfg64, grid55)


@pytest.fixture
def rng():
    return np.random.default_rng(0xAFD)
