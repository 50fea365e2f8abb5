"""Delay-Doppler candidate grid and the coupling-column dictionary for blind recovery.

Column (g, g') holds A T_g T_{g'}^H A^H applied to the all-ones vector, where
T_g is the unit-gain time-domain operator of grid point g.  The row-sum of a
covariance observation is a linear combination of these columns weighted by the
entries of the path-gain Gram matrix.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .channel import time_domain_path_operator
from .waveform import AfdmConfig, build_daft_matrix

DEFAULT_COLUMN_BUDGET_BYTES = 1 << 30
CACHE_FORMAT_VERSION = 1


class DictionaryBudgetError(ValueError):
    """Requested dictionary would exceed the configured memory budget."""


@dataclass(frozen=True, eq=False)
class DelayDopplerGrid:
    """Cartesian candidate grid, delay-major: point g = (delay g // d_nu, Doppler g % d_nu)."""

    delay_indices: np.ndarray
    doppler_values: np.ndarray
    f_max: float

    def __post_init__(self):
        delays = np.asarray(self.delay_indices, dtype=int)
        dopplers = np.asarray(self.doppler_values, dtype=float)
        if delays.size < 1 or dopplers.size < 1:
            raise ValueError("grid needs at least one delay and one Doppler value")
        if np.any(delays < 0) or np.any(np.diff(delays) <= 0):
            raise ValueError("delay indices must be non-negative and strictly increasing")
        if self.f_max <= 0:
            raise ValueError("f_max must be positive")
        if np.any(np.abs(dopplers) > self.f_max + 1e-12):
            raise ValueError("Doppler values must lie within [-f_max, f_max]")
        object.__setattr__(self, "delay_indices", delays)
        object.__setattr__(self, "doppler_values", dopplers)

    @property
    def k_tau(self) -> int:
        return int(self.delay_indices.size)

    @property
    def d_nu(self) -> int:
        return int(self.doppler_values.size)

    @property
    def size(self) -> int:
        return self.k_tau * self.d_nu

    @property
    def doppler_spacing(self) -> float:
        """Gap between adjacent Doppler candidates (f_max if there is only one)."""
        if self.d_nu < 2:
            return float(self.f_max)
        return float(self.doppler_values[1] - self.doppler_values[0])

    def point(self, g: int) -> tuple[int, float]:
        """Grid point g as a (delay_idx, doppler_norm) pair."""
        if not 0 <= g < self.size:
            raise IndexError(f"grid point {g} out of range [0, {self.size})")
        return (int(self.delay_indices[g // self.d_nu]),
                float(self.doppler_values[g % self.d_nu]))

    def points(self) -> list[tuple[int, float]]:
        return [self.point(g) for g in range(self.size)]

    def contains(self, delay_idx: int, doppler_norm: float, tol: float = 1e-9) -> bool:
        return bool(np.any(self.delay_indices == delay_idx)
                    and np.any(np.abs(self.doppler_values - doppler_norm) <= tol))


def build_grid(k_tau: int, d_nu: int, f_max: float) -> DelayDopplerGrid:
    """Delay bins 0..k_tau-1 crossed with d_nu Doppler values even over [-f_max, f_max]."""
    if k_tau < 1 or d_nu < 1:
        raise ValueError("grid dimensions must be positive")
    if f_max <= 0:
        raise ValueError("f_max must be positive")
    delays = np.arange(k_tau, dtype=int)
    if d_nu == 1:
        dopplers = np.zeros(1)
    else:
        dopplers = np.linspace(-f_max, f_max, d_nu)
    return DelayDopplerGrid(delays, dopplers, float(f_max))


@dataclass(eq=False)
class Dictionary:
    """Coupling-column dictionary over a delay-Doppler grid.

    ``columns`` is n_samples x size**2 with column j = g * size + g' holding
    the coupling vector of grid points (g, g'), matching the row-major
    vectorization of the Gram matrix.
    """

    columns: np.ndarray
    grid: DelayDopplerGrid
    cfg: AfdmConfig

    def __post_init__(self):
        m = self.grid.size
        if self.columns.shape != (self.cfg.n_samples, m * m):
            raise ValueError(f"columns must be {self.cfg.n_samples} x {m * m}, "
                             f"got {self.columns.shape}")

    @cached_property
    def spectral_norm(self) -> float:
        """Largest singular value, used for gradient step sizing."""
        return float(np.linalg.svd(self.columns, compute_uv=False)[0])

    def index_of(self, g: int, g_prime: int) -> int:
        m = self.grid.size
        if not (0 <= g < m and 0 <= g_prime < m):
            raise IndexError("grid point index out of range")
        return g * m + g_prime

    def pair_of(self, j: int) -> tuple[int, int]:
        m = self.grid.size
        if not 0 <= j < m * m:
            raise IndexError("column index out of range")
        return divmod(j, m)


def _require_on_grid(grid: DelayDopplerGrid, point) -> tuple[int, float]:
    ell, f = point
    if not grid.contains(int(ell), float(f)):
        raise ValueError(f"point (delay={ell}, doppler={f}) is not on the grid")
    return int(ell), float(f)


def dictionary_column(cfg: AfdmConfig, grid: DelayDopplerGrid, point,
                      point_prime) -> np.ndarray:
    """Coupling column for one ordered pair of grid points.

    Diagonal pairs always give the all-ones vector because the per-point
    operators are unitary.
    """
    ell, f = _require_on_grid(grid, point)
    ell_p, f_p = _require_on_grid(grid, point_prime)
    a = build_daft_matrix(cfg)
    t = time_domain_path_operator(cfg, ell, f)
    t_p = time_domain_path_operator(cfg, ell_p, f_p)
    ones = np.ones(cfg.n_samples, dtype=complex)
    if (ell, f) == (ell_p, f_p):
        return ones
    return a @ (t @ (t_p.conj().T @ (a.conj().T @ ones)))


def build_dictionary(cfg: AfdmConfig, grid: DelayDopplerGrid,
                     max_bytes: int = DEFAULT_COLUMN_BUDGET_BYTES) -> Dictionary:
    """Assemble all size**2 coupling columns for a grid.

    Shares the transform and per-point operators across columns; refuses
    grids whose column matrix would exceed ``max_bytes``.
    """
    m = grid.size
    required = 16 * cfg.n_samples * m * m
    if required > max_bytes:
        raise DictionaryBudgetError(
            f"dictionary of {m * m} columns needs {required} bytes, "
            f"budget is {max_bytes}")
    a = build_daft_matrix(cfg)
    a_h = a.conj().T
    ops = [time_domain_path_operator(cfg, ell, f) for ell, f in grid.points()]
    ones = np.ones(cfg.n_samples, dtype=complex)
    u = a_h @ ones
    right = [op.conj().T @ u for op in ops]
    cols = np.empty((cfg.n_samples, m * m), dtype=complex)
    for g in range(m):
        for g_prime in range(m):
            if g == g_prime:
                cols[:, g * m + g_prime] = ones
            else:
                cols[:, g * m + g_prime] = a @ (ops[g] @ right[g_prime])
    return Dictionary(cols, grid, cfg)


def vec_gram(matrix: np.ndarray) -> np.ndarray:
    """Row-major vectorization pairing entry (g, g') with column g * m + g'."""
    mat = np.asarray(matrix)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix")
    return mat.reshape(-1)


def unvec_gram(vector: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec_gram`."""
    vec = np.asarray(vector)
    m = int(round(np.sqrt(vec.size)))
    if m * m != vec.size:
        raise ValueError(f"vector of length {vec.size} is not a vectorized square matrix")
    return vec.reshape(m, m)


def _cache_key(cfg: AfdmConfig, grid: DelayDopplerGrid) -> str:
    payload = repr((cfg.n_samples, cfg.c1, cfg.c2,
                    grid.delay_indices.tolist(), grid.doppler_values.tolist(),
                    grid.f_max)).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def cache_path(directory, cfg: AfdmConfig, grid: DelayDopplerGrid) -> Path:
    """Deterministic cache file location for a (waveform, grid) pair."""
    return Path(directory) / f"dict_{_cache_key(cfg, grid)}.npz"


def save_dictionary(dictionary: Dictionary, path) -> Path:
    """Write the column matrix plus the parameters that determine it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path,
             format_version=np.array(CACHE_FORMAT_VERSION),
             n_samples=np.array(dictionary.cfg.n_samples),
             c1=np.array(dictionary.cfg.c1),
             c2=np.array(dictionary.cfg.c2),
             delay_indices=dictionary.grid.delay_indices,
             doppler_values=dictionary.grid.doppler_values,
             f_max=np.array(dictionary.grid.f_max),
             columns=dictionary.columns)
    return path


def load_dictionary(path, cfg: AfdmConfig, grid: DelayDopplerGrid) -> Dictionary | None:
    """Load a cached dictionary if it matches the requested parameters, else None."""
    path = Path(path)
    if not path.exists():
        return None
    try:
        with np.load(path) as data:
            if int(data["format_version"]) != CACHE_FORMAT_VERSION:
                return None
            if int(data["n_samples"]) != cfg.n_samples:
                return None
            if float(data["c1"]) != cfg.c1 or float(data["c2"]) != cfg.c2:
                return None
            if not np.array_equal(data["delay_indices"], grid.delay_indices):
                return None
            if not np.array_equal(data["doppler_values"], grid.doppler_values):
                return None
            if float(data["f_max"]) != grid.f_max:
                return None
            columns = np.array(data["columns"])
    except (OSError, KeyError, ValueError):
        return None
    return Dictionary(columns, grid, cfg)
