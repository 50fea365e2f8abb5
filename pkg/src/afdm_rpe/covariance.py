"""Covariance statistics of received frames and their row-sum observations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PathSet, build_daft_path_operator
from .waveform import AfdmConfig


@dataclass(frozen=True)
class CovarianceObservation:
    """Noise-compensated received-signal covariance and its row-sum vector.

    ``frames_used`` is 0 for the analytic (perfect) covariance.
    """

    modified_cov: np.ndarray
    row_sum: np.ndarray
    frames_used: int
    is_perfect: bool = False


def _hermitian_part(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


def modified_sample_covariance(rx_frames, noise_power: float) -> CovarianceObservation:
    """Sample covariance of received frames minus the known noise floor.

    Computes (1/T) Y Y^H - noise_power * I and symmetrizes, so the result is
    exactly Hermitian despite floating-point asymmetry.
    """
    y = np.asarray(rx_frames, dtype=complex)
    if y.ndim != 2 or y.shape[1] < 1:
        raise ValueError(f"need an N x T frame matrix with T >= 1, got shape {y.shape}")
    if noise_power < 0:
        raise ValueError("noise_power must be non-negative")
    n, t = y.shape
    cov = (y @ y.conj().T) / t - noise_power * np.eye(n)
    cov = _hermitian_part(cov)
    return CovarianceObservation(cov, cov @ np.ones(n), t, False)


def perfect_covariance(paths: PathSet, cfg: AfdmConfig) -> CovarianceObservation:
    """Infinite-frame limit of the modified covariance for unit-energy symbols.

    Evaluated as the double sum over path pairs h_p conj(h_q) G_p G_q^H so the
    per-path operators enter explicitly.
    """
    n = cfg.n_samples
    ops = [build_daft_path_operator(cfg, p) for p in paths]
    gains = paths.gains
    cov = np.zeros((n, n), dtype=complex)
    for p, op_p in enumerate(ops):
        for q, op_q in enumerate(ops):
            cov += gains[p] * np.conj(gains[q]) * (op_p @ op_q.conj().T)
    cov = _hermitian_part(cov)
    return CovarianceObservation(cov, cov @ np.ones(n), 0, True)


def row_sum_observation(observation: CovarianceObservation) -> np.ndarray:
    """Covariance rows summed against the all-ones vector."""
    return observation.modified_cov @ np.ones(observation.modified_cov.shape[0])
