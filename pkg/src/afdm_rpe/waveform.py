"""AFDM waveform primitives: chirp transforms, (de)modulation, QAM frame generation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import dft

SPEED_OF_LIGHT = 299_792_458.0


def default_chirp_rate(n_samples: int, f_max: float) -> float:
    """First chirp rate (2 * ceil(f_max) + 1) / (2 N) that keeps integer-shifted
    chirp subcarriers resolvable for normalized Doppler up to f_max."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    return (2.0 * math.ceil(f_max) + 1.0) / (2.0 * n_samples)


def _is_square_qam(order) -> bool:
    # powers of 4 only: 4, 16, 64, ... (power of two with odd bit length)
    return isinstance(order, int) and order >= 4 and (order & (order - 1)) == 0 \
        and order.bit_length() % 2 == 1


@dataclass(frozen=True)
class AfdmConfig:
    """Waveform parameters: frame length, chirp rates, sampling and carrier frequencies.

    ``c1`` controls the pre-DFT chirp and must normally come from
    :func:`default_chirp_rate`; ``c2`` is free and defaults to zero.
    """

    n_samples: int
    c1: float
    c2: float = 0.0
    sample_rate_hz: float = 20e6
    carrier_hz: float = 70e9
    constellation_order: int = 4

    def __post_init__(self):
        if not isinstance(self.n_samples, int) or self.n_samples < 2:
            raise ValueError("n_samples must be an integer >= 2")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")
        if not _is_square_qam(self.constellation_order):
            raise ValueError("constellation_order must be a power of 4 (square QAM)")

    @property
    def delay_resolution_s(self) -> float:
        """Delay covered by one sample, 1 / sample_rate."""
        return 1.0 / self.sample_rate_hz

    @property
    def doppler_resolution_hz(self) -> float:
        """Doppler shift corresponding to one unit of normalized frequency."""
        return self.sample_rate_hz / self.n_samples


@dataclass(frozen=True)
class SymbolFrame:
    """One frame of data symbols with its average per-symbol energy."""

    symbols: np.ndarray
    average_energy: float = 1.0


def build_chirp_diag(n: int, c: float) -> np.ndarray:
    """Diagonal chirp matrix diag(exp(-j 2 pi c k^2)), k = 0..n-1."""
    if n < 1:
        raise ValueError("chirp matrix size must be positive")
    k = np.arange(n, dtype=float)
    return np.diag(np.exp(-2j * np.pi * c * k**2))


def build_daft_matrix(cfg: AfdmConfig) -> np.ndarray:
    """Forward transform Lambda2 @ F @ Lambda1 with the unit-norm DFT.

    Unitary for any chirp rates since all three factors are.  The inverse
    transform is the conjugate transpose.
    """
    f_n = dft(cfg.n_samples, scale="sqrtn")
    return build_chirp_diag(cfg.n_samples, cfg.c2) @ f_n @ build_chirp_diag(cfg.n_samples, cfg.c1)


def _frame_symbols(frame, n: int) -> np.ndarray:
    x = np.asarray(getattr(frame, "symbols", frame), dtype=complex)
    if x.shape != (n,):
        raise ValueError(f"expected a length-{n} symbol vector, got shape {x.shape}")
    return x


def modulate(frame, cfg: AfdmConfig) -> np.ndarray:
    """Map one symbol frame to its time-domain transmit signal (inverse transform)."""
    x = _frame_symbols(frame, cfg.n_samples)
    return build_daft_matrix(cfg).conj().T @ x


def demodulate(received, cfg: AfdmConfig) -> np.ndarray:
    """Apply the forward transform to one received time-domain frame."""
    r = _frame_symbols(received, cfg.n_samples)
    return build_daft_matrix(cfg) @ r


def qam_constellation(order: int) -> np.ndarray:
    """Unit-average-energy square QAM points, row-major over the I/Q lattice."""
    if not _is_square_qam(order):
        raise ValueError("constellation order must be a power of 4 (square QAM)")
    side = int(round(math.sqrt(order)))
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    points = (re + 1j * im).reshape(-1)
    return points / math.sqrt(float(np.mean(np.abs(points) ** 2)))


def draw_qam_frame(cfg: AfdmConfig, seed=None) -> SymbolFrame:
    """One frame of i.i.d. uniformly drawn constellation symbols."""
    rng = np.random.default_rng(seed)
    points = qam_constellation(cfg.constellation_order)
    return SymbolFrame(rng.choice(points, size=cfg.n_samples), 1.0)


def draw_qam_frames(cfg: AfdmConfig, count: int, seed=None) -> np.ndarray:
    """n_samples x count matrix of i.i.d. symbols, one frame per column."""
    if count < 1:
        raise ValueError("frame count must be positive")
    rng = np.random.default_rng(seed)
    points = qam_constellation(cfg.constellation_order)
    return rng.choice(points, size=(cfg.n_samples, count))
