"""Doubly-dispersive channel operators and multi-frame propagation.

Each propagation path applies, in the time domain, a cyclic delay, a Doppler
phase ramp, and the chirp-periodic-prefix phase correction.  Conjugating by
the forward transform gives the per-path frequency-domain operator; the
effective channel is the gain-weighted sum of those.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import SPEED_OF_LIGHT, AfdmConfig, build_daft_matrix


class OutOfGridError(ValueError):
    """A path's delay or Doppler falls outside the representable grid."""


@dataclass(frozen=True)
class PathParams:
    """One propagation path: complex gain plus physical and normalized delay/Doppler.

    ``delay_idx`` is the integer delay bin round(delay_s * sample_rate) and
    ``delay_residual`` the fractional remainder, kept for error bookkeeping.
    ``doppler_norm`` is n_samples * doppler_hz / sample_rate and may be
    fractional.
    """

    gain: complex
    delay_s: float
    doppler_hz: float
    delay_idx: int
    doppler_norm: float
    delay_residual: float = 0.0

    def __post_init__(self):
        if self.delay_s < 0:
            raise ValueError("path delay must be non-negative")
        if self.delay_idx < 0:
            raise ValueError("delay bin must be non-negative")

    @classmethod
    def from_physical(cls, gain: complex, delay_s: float, doppler_hz: float,
                      cfg: AfdmConfig) -> "PathParams":
        """Quantize a physical (delay, Doppler) pair onto the sampling lattice."""
        exact = delay_s * cfg.sample_rate_hz
        idx = int(round(exact))
        norm = cfg.n_samples * doppler_hz / cfg.sample_rate_hz
        return cls(complex(gain), float(delay_s), float(doppler_hz), idx, norm, exact - idx)

    @classmethod
    def on_grid(cls, gain: complex, delay_idx: int, doppler_norm: float,
                cfg: AfdmConfig) -> "PathParams":
        """Path placed exactly on an integer delay bin and a normalized Doppler value."""
        delay_s = delay_idx * cfg.delay_resolution_s
        doppler_hz = doppler_norm * cfg.doppler_resolution_hz
        return cls(complex(gain), delay_s, doppler_hz, int(delay_idx), float(doppler_norm), 0.0)


@dataclass(frozen=True)
class PathSet:
    """Immutable collection of paths making up one channel realization."""

    paths: tuple[PathParams, ...]

    def __post_init__(self):
        if len(self.paths) < 1:
            raise ValueError("a channel needs at least one path")

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def __getitem__(self, i) -> PathParams:
        return self.paths[i]

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths], dtype=complex)


@dataclass(frozen=True)
class Scene:
    """Bistatic geometry: a static line-of-sight path plus moving point targets.

    ``targets`` holds (range_m, velocity_mps) pairs.  ``gain_power`` is the
    per-path gain variance used when drawing random path gains.
    """

    los_distance_m: float
    targets: tuple[tuple[float, float], ...] = ()
    gain_power: float = 1.0

    def __post_init__(self):
        if self.los_distance_m < 0:
            raise ValueError("line-of-sight distance must be non-negative")
        for rng_m, _vel in self.targets:
            if rng_m < 0:
                raise ValueError("target range must be non-negative")
        if self.gain_power <= 0:
            raise ValueError("gain_power must be positive")

    @property
    def path_count(self) -> int:
        return 1 + len(self.targets)


def scene_to_paths(scene: Scene, cfg: AfdmConfig, seed=None, *, unit_gains: bool = False,
                   max_delay_idx: int | None = None,
                   max_doppler_norm: float | None = None) -> PathSet:
    """Draw one channel realization for a scene.

    The line-of-sight path comes first with zero velocity.  Gains are
    circularly-symmetric Gaussian with variance ``scene.gain_power``, or
    fixed-magnitude random-phase when ``unit_gains`` is set.  Optional bounds
    reject paths the estimation grid cannot represent.
    """
    rng = np.random.default_rng(seed)
    geometry = [(scene.los_distance_m, 0.0), *scene.targets]
    paths = []
    for range_m, velocity in geometry:
        delay = range_m / SPEED_OF_LIGHT
        doppler = cfg.carrier_hz * velocity / SPEED_OF_LIGHT
        if unit_gains:
            phase = rng.uniform(0.0, 2.0 * np.pi)
            gain = np.sqrt(scene.gain_power) * np.exp(1j * phase)
        else:
            gain = np.sqrt(scene.gain_power / 2.0) * (rng.standard_normal()
                                                      + 1j * rng.standard_normal())
        path = PathParams.from_physical(gain, delay, doppler, cfg)
        if max_delay_idx is not None and path.delay_idx > max_delay_idx:
            raise OutOfGridError(
                f"path delay bin {path.delay_idx} exceeds grid limit {max_delay_idx}")
        if max_doppler_norm is not None and abs(path.doppler_norm) > max_doppler_norm:
            raise OutOfGridError(
                f"path normalized Doppler {path.doppler_norm:.6g} exceeds grid "
                f"limit {max_doppler_norm:.6g}")
        paths.append(path)
    return PathSet(tuple(paths))


def build_shift_matrix(n: int, ell: int) -> np.ndarray:
    """Cyclic forward-shift permutation: entry (i, j) is 1 iff i = j + ell (mod n)."""
    if not 0 <= ell < n:
        raise ValueError(f"shift must satisfy 0 <= ell < {n}, got {ell}")
    rows = np.arange(n)
    mat = np.zeros((n, n))
    mat[rows, (rows - ell) % n] = 1.0
    return mat


def build_doppler_matrix(n: int, f: float) -> np.ndarray:
    """Doppler phase ramp diag(exp(-j 2 pi f k / n)); f may be fractional."""
    if n < 1:
        raise ValueError("matrix size must be positive")
    k = np.arange(n, dtype=float)
    return np.diag(np.exp(-2j * np.pi * f * k / n))


def build_cpp_phase_matrix(cfg: AfdmConfig, ell: int) -> np.ndarray:
    """Phase correction turning the chirp-periodic prefix into a cyclic model.

    The first ``ell`` diagonal entries are exp(-j 2 pi c1 (n^2 - 2 n m)) for
    m = ell down to 1; the rest are 1.
    """
    n = cfg.n_samples
    if not 0 <= ell < n:
        raise ValueError(f"shift must satisfy 0 <= ell < {n}, got {ell}")
    diag = np.ones(n, dtype=complex)
    if ell > 0:
        m = np.arange(ell, 0, -1, dtype=float)
        diag[:ell] = np.exp(-2j * np.pi * cfg.c1 * (n**2 - 2.0 * n * m))
    return np.diag(diag)


def time_domain_path_operator(cfg: AfdmConfig, delay_idx: int,
                              doppler_norm: float) -> np.ndarray:
    """Time-domain action of one path with unit gain: prefix phase, Doppler ramp, shift."""
    n = cfg.n_samples
    return (build_cpp_phase_matrix(cfg, delay_idx)
            @ build_doppler_matrix(n, doppler_norm)
            @ build_shift_matrix(n, delay_idx))


def build_daft_path_operator(cfg: AfdmConfig, path: PathParams) -> np.ndarray:
    """Unit-gain per-path operator in the transform domain, A T A^H.

    Unitary, being a product of unitary factors.
    """
    a = build_daft_matrix(cfg)
    t = time_domain_path_operator(cfg, path.delay_idx, path.doppler_norm)
    return a @ t @ a.conj().T


def build_effective_channel(cfg: AfdmConfig, paths: PathSet) -> np.ndarray:
    """Gain-weighted sum of per-path transform-domain operators."""
    n = cfg.n_samples
    g = np.zeros((n, n), dtype=complex)
    for path in paths:
        g += path.gain * build_daft_path_operator(cfg, path)
    return g


@dataclass(frozen=True)
class FrameBatch:
    """Matched transmit/receive frames from one simulation run.

    ``rx_daft`` holds the received frames after the forward transform; the
    estimator side of the toolkit consumes only that and ``noise_power``.
    """

    tx_symbols: np.ndarray
    rx_daft: np.ndarray
    noise_power: float
    frame_count: int


def propagate_frames(cfg: AfdmConfig, paths: PathSet, tx_symbols, noise_power: float,
                     seed=None) -> FrameBatch:
    """Push symbol frames through the effective channel and add receiver noise.

    ``tx_symbols`` must be n_samples x frame_count.  Noise is circularly
    symmetric with total variance ``noise_power`` per sample.
    """
    x = np.asarray(tx_symbols, dtype=complex)
    if x.ndim != 2 or x.shape[0] != cfg.n_samples or x.shape[1] < 1:
        raise ValueError(f"tx_symbols must be {cfg.n_samples} x T with T >= 1, "
                         f"got shape {x.shape}")
    if noise_power < 0:
        raise ValueError("noise_power must be non-negative")
    rng = np.random.default_rng(seed)
    g = build_effective_channel(cfg, paths)
    noise = np.sqrt(noise_power / 2.0) * (rng.standard_normal(x.shape)
                                          + 1j * rng.standard_normal(x.shape))
    y = g @ x + noise
    return FrameBatch(x, y, float(noise_power), x.shape[1])
