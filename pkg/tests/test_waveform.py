"""Transform construction, modulation round trips, and constellation shaping."""

import numpy as np
import pytest

from afdm_rpe.waveform import (AfdmConfig, build_chirp_diag, build_daft_matrix,
                               default_chirp_rate, demodulate, draw_qam_frame,
                               draw_qam_frames, modulate, qam_constellation)


def test_default_chirp_rate_formula():
    assert default_chirp_rate(64, 0.1) == pytest.approx(3.0 / 128.0)
    assert default_chirp_rate(64, 2.0) == pytest.approx(5.0 / 128.0)
    assert default_chirp_rate(64, 2.3) == pytest.approx(7.0 / 128.0)
    assert default_chirp_rate(16, 0.0) == pytest.approx(1.0 / 32.0)


def test_chirp_diag_frozen_value():
    diag = build_chirp_diag(2, 0.25)
    assert np.allclose(np.diag(diag), [1.0, -1.0j], atol=1e-12)


def test_chirp_diag_unit_modulus(rng):
    for n in (3, 8, 17):
        c = float(rng.uniform(-1, 1))
        diag = build_chirp_diag(n, c)
        assert np.allclose(np.abs(np.diag(diag)), 1.0, atol=1e-12)
        assert np.count_nonzero(diag - np.diag(np.diag(diag))) == 0


def test_daft_matrix_matches_triple_product():
    n, c1, c2 = 4, 0.1, 0.05
    cfg = AfdmConfig(n_samples=n, c1=c1, c2=c2)
    idx = np.arange(n)
    dft = np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)
    expected = (np.diag(np.exp(-2j * np.pi * c2 * idx**2)) @ dft
                @ np.diag(np.exp(-2j * np.pi * c1 * idx**2)))
    assert np.allclose(build_daft_matrix(cfg), expected, atol=1e-12)


@pytest.mark.parametrize("n", [8, 16, 64])
def test_daft_matrix_unitary(n):
    cfg = AfdmConfig(n_samples=n, c1=default_chirp_rate(n, 0.1), c2=1.0 / (2 * n))
    a = build_daft_matrix(cfg)
    assert np.abs(a @ a.conj().T - np.eye(n)).max() < 1e-10


def test_modulate_demodulate_roundtrip(cfg16):
    frame = draw_qam_frame(cfg16, seed=3)
    recovered = demodulate(modulate(frame, cfg16), cfg16)
    assert np.allclose(recovered, frame.symbols, atol=1e-10)


def test_modulate_preserves_energy(cfg16):
    frame = draw_qam_frame(cfg16, seed=4)
    sent = modulate(frame, cfg16)
    assert np.linalg.norm(sent) == pytest.approx(np.linalg.norm(frame.symbols))


def test_qam_constellation_unit_power():
    for order in (4, 16, 64):
        points = qam_constellation(order)
        assert points.size == order
        assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0)


def test_qam_constellation_qpsk_points():
    points = qam_constellation(4)
    expected = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
    assert sorted(points.round(12), key=lambda z: (z.real, z.imag)) == \
        sorted(expected.round(12), key=lambda z: (z.real, z.imag))


def test_qam_constellation_rejects_non_square():
    with pytest.raises(ValueError):
        qam_constellation(8)


def test_draw_qam_frames_shape_and_seeding(cfg16):
    frames = draw_qam_frames(cfg16, 40, seed=11)
    again = draw_qam_frames(cfg16, 40, seed=11)
    other = draw_qam_frames(cfg16, 40, seed=12)
    assert frames.shape == (16, 40)
    assert np.array_equal(frames, again)
    assert not np.array_equal(frames, other)
    constellation = qam_constellation(cfg16.constellation_order)
    dists = np.abs(frames[..., None] - constellation).min(axis=-1)
    assert dists.max() < 1e-12


def test_config_resolutions():
    cfg = AfdmConfig(n_samples=64, c1=0.009375, c2=0.0078125)
    assert cfg.delay_resolution_s == pytest.approx(1.0 / 20e6)
    assert cfg.doppler_resolution_hz == pytest.approx(20e6 / 64)


def test_config_validation():
    with pytest.raises(ValueError):
        AfdmConfig(n_samples=1, c1=0.1)
    with pytest.raises(ValueError):
        AfdmConfig(n_samples=16, c1=0.1, sample_rate_hz=-1.0)
