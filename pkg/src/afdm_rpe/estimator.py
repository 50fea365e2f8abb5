"""Blind sparse recovery of delay-Doppler couplings from covariance row sums.

Works entirely from received frames (or a covariance observation) and a
candidate dictionary.  The pipeline is: L1-regularized least squares for an
initial Gram estimate, then a few fixed-point reweighting rounds where each
round solves a PSD-constrained weighted quadratic by projected gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariance import CovarianceObservation, modified_sample_covariance
from .dictionary import DelayDopplerGrid, Dictionary, unvec_gram
from .waveform import SPEED_OF_LIGHT, AfdmConfig

LASSO_MAX_ITERS = 500
QUAD_MAX_ITERS = 300


@dataclass(frozen=True)
class Hyperparams:
    """Tuning knobs of the recovery pipeline.

    ``beta`` weights the L1 initialization, ``eta`` the reweighted penalty,
    ``alpha`` the smoothing of the sparsity surrogate; ``max_iters`` counts
    the outer reweighting rounds.
    """

    beta: float = 1.0
    eta: float = 0.1
    alpha: float = 1e-3
    max_iters: int = 3
    inner_tol: float = 1e-6
    support_threshold: float = 0.5

    def __post_init__(self):
        if self.beta <= 0 or self.eta <= 0 or self.alpha <= 0:
            raise ValueError("beta, eta and alpha must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.inner_tol <= 0:
            raise ValueError("inner_tol must be positive")
        if not 0.0 < self.support_threshold < 1.0:
            raise ValueError("support_threshold must lie in (0, 1)")


@dataclass(frozen=True)
class GramEstimate:
    """Candidate path-gain Gram matrix over the grid, with solver status."""

    matrix: np.ndarray
    converged: bool = True

    @property
    def vectorized(self) -> np.ndarray:
        return self.matrix.reshape(-1)


@dataclass(frozen=True)
class Detection:
    """One detected grid point with its support score."""

    delay_idx: int
    doppler_norm: float
    magnitude: float


@dataclass
class RpeResult:
    """Detections plus their physical-parameter estimates and solver diagnostics."""

    detections: list[Detection]
    delay_estimates_s: np.ndarray
    doppler_estimates_hz: np.ndarray
    range_estimates_m: np.ndarray
    velocity_estimates_mps: np.ndarray
    support_scores: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = True

    @property
    def is_empty(self) -> bool:
        return len(self.detections) == 0


def _coupling_vector(estimate) -> np.ndarray:
    if isinstance(estimate, GramEstimate):
        return estimate.vectorized
    return np.asarray(estimate, dtype=complex).reshape(-1)


def soft_threshold(values: np.ndarray, threshold: float) -> np.ndarray:
    """Complex soft shrinkage: scale each entry toward zero by ``threshold``."""
    mag = np.abs(values)
    scale = np.maximum(1.0 - threshold / np.maximum(mag, 1e-300), 0.0)
    return scale * values


def _misfit(columns: np.ndarray, v: np.ndarray, r_bar: np.ndarray) -> float:
    resid = columns @ v - r_bar
    return float(np.real(np.vdot(resid, resid)))


def solve_lasso(dictionary: Dictionary, r_bar: np.ndarray, beta: float, *,
                max_iters: int = LASSO_MAX_ITERS, tol: float = 1e-6) -> GramEstimate:
    """L1-regularized least squares on the vectorized Gram matrix.

    Accelerated proximal gradient with step 1 / (2 sigma_max^2); stops on
    relative objective change below ``tol``.  Past the iteration cap the best
    iterate is returned with ``converged`` unset.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    cols = dictionary.columns
    r_bar = np.asarray(r_bar, dtype=complex).reshape(-1)
    if r_bar.size != cols.shape[0]:
        raise ValueError("observation length does not match dictionary rows")
    lip = 2.0 * dictionary.spectral_norm**2
    step = 1.0 / max(lip, 1e-300)
    m2 = cols.shape[1]
    v = np.zeros(m2, dtype=complex)
    z = v.copy()
    momentum = 1.0
    prev_obj = _misfit(cols, v, r_bar)
    best_v, best_obj = v, prev_obj
    converged = False
    for _ in range(max_iters):
        grad = 2.0 * (cols.conj().T @ (cols @ z - r_bar))
        v_next = soft_threshold(z - step * grad, step * beta)
        momentum_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum**2))
        z = v_next + ((momentum - 1.0) / momentum_next) * (v_next - v)
        v, momentum = v_next, momentum_next
        obj = _misfit(cols, v, r_bar) + beta * float(np.sum(np.abs(v)))
        if obj < best_obj:
            best_v, best_obj = v, obj
        if abs(prev_obj - obj) <= tol * max(abs(prev_obj), 1e-12):
            converged = True
            break
        prev_obj = obj
    return GramEstimate(unvec_gram(best_v), converged)


def fp_weight_matrix(current, alpha: float) -> np.ndarray:
    """Squared fixed-point weights sqrt(alpha) / (|b|^2 + alpha), one per entry.

    Returned as the real diagonal of the weighting matrix, ready to scale a
    vectorized Gram candidate elementwise.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    b = _coupling_vector(current)
    aux = np.sqrt(alpha) / (np.abs(b) ** 2 + alpha)
    return aux**2


def smoothed_l0(values, alpha: float) -> float:
    """Smooth sparsity measure sum |b|^2 / (|b|^2 + alpha); tends to the L0 norm."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    mag_sq = np.abs(_coupling_vector(values)) ** 2
    return float(np.sum(mag_sq / (mag_sq + alpha)))


def surrogate_l0(values, weights: np.ndarray, alpha: float) -> float:
    """Quadratic majorant of :func:`smoothed_l0` anchored at the weights' origin.

    Equals the smooth measure exactly when ``weights`` were built from
    ``values`` themselves.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    b = _coupling_vector(values)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != b.shape:
        raise ValueError("weights and values must have matching length")
    aux = np.sqrt(w)
    terms = 2.0 * aux * np.sqrt(alpha) - w * (np.abs(b) ** 2 + alpha)
    return float(b.size - np.sum(terms))


def psd_project(matrix: np.ndarray) -> np.ndarray:
    """Frobenius-nearest Hermitian positive semidefinite matrix.

    Symmetrizes, then clips negative eigenvalues to zero.
    """
    mat = np.asarray(matrix, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix")
    herm = 0.5 * (mat + mat.conj().T)
    eigvals, eigvecs = np.linalg.eigh(herm)
    clipped = np.maximum(eigvals, 0.0)
    out = (eigvecs * clipped) @ eigvecs.conj().T
    return 0.5 * (out + out.conj().T)


def solve_psd_quadratic(dictionary: Dictionary, r_bar: np.ndarray, eta: float,
                        weights: np.ndarray, init: GramEstimate, *,
                        max_iters: int = QUAD_MAX_ITERS,
                        tol: float = 1e-6) -> GramEstimate:
    """Weighted quadratic data fit over the PSD cone, by projected gradient.

    Minimizes ||r_bar - E v||^2 + eta * sum(weights |v|^2) subject to the
    unvectorized candidate being Hermitian PSD.  The step is the inverse of
    the quadratic form's Lipschitz constant, so iterates never increase the
    objective.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    cols = dictionary.columns
    r_bar = np.asarray(r_bar, dtype=complex).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != cols.shape[1]:
        raise ValueError("weights length does not match dictionary columns")
    lip = 2.0 * (dictionary.spectral_norm**2 + eta * (w.max() if w.size else 0.0))
    step = 1.0 / max(lip, 1e-300)

    def objective(vec: np.ndarray) -> float:
        return _misfit(cols, vec, r_bar) + eta * float(np.sum(w * np.abs(vec) ** 2))

    mat = psd_project(init.matrix)
    v = mat.reshape(-1)
    prev_obj = objective(v)
    converged = False
    for _ in range(max_iters):
        grad = 2.0 * (cols.conj().T @ (cols @ v - r_bar) + eta * w * v)
        mat = psd_project((v - step * grad).reshape(mat.shape))
        v = mat.reshape(-1)
        obj = objective(v)
        if abs(prev_obj - obj) <= tol * max(abs(prev_obj), 1e-12):
            converged = True
            break
        prev_obj = obj
    return GramEstimate(mat, converged)


def _grid_point_scores(estimate: GramEstimate, grid: DelayDopplerGrid) -> np.ndarray:
    """Per-grid-point support scores from a Gram estimate.

    A point's score is the L2 norm of its off-diagonal row magnitudes, which
    captures cross-path coupling; when the estimate carries no off-diagonal
    mass (single dominant path) the diagonal magnitudes are scored instead.
    """
    mag = np.abs(estimate.matrix)
    m = grid.size
    if mag.shape != (m, m):
        raise ValueError(f"estimate shape {mag.shape} does not match grid size {m}")
    diag = np.diag(mag)
    off_sq = np.sum(mag**2, axis=1) - diag**2
    scores = np.sqrt(np.maximum(off_sq, 0.0))
    # an essentially diagonal estimate carries its support on the diagonal
    if scores.max() <= 1e-9 * max(diag.max(), 1e-300):
        scores = diag.copy()
    return scores


def _result_from_kept(kept: np.ndarray, scores: np.ndarray, grid: DelayDopplerGrid,
                      cfg: AfdmConfig, converged: bool) -> RpeResult:
    """Assemble detections (strongest first) and physical estimates."""
    kept = kept[np.argsort(scores[kept], kind="stable")[::-1]]
    detections = []
    delays, dopplers = [], []
    for g in kept:
        ell, f = grid.point(int(g))
        detections.append(Detection(ell, f, float(scores[g])))
        delays.append(ell * cfg.delay_resolution_s)
        dopplers.append(f * cfg.doppler_resolution_hz)
    delay_s = np.array(delays)
    doppler_hz = np.array(dopplers)
    return RpeResult(detections,
                     delay_s,
                     doppler_hz,
                     SPEED_OF_LIGHT * delay_s,
                     SPEED_OF_LIGHT * doppler_hz / cfg.carrier_hz,
                     scores,
                     [],
                     converged)


def extract_support_and_match(estimate: GramEstimate, grid: DelayDopplerGrid,
                              cfg: AfdmConfig, threshold: float) -> RpeResult:
    """Score grid points from the Gram estimate and map survivors to physics.

    Points at or above ``threshold`` times the best score are kept, strongest
    first.  This is the blind detection rule: it needs no knowledge of how
    many paths the channel actually has.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    scores = _grid_point_scores(estimate, grid)
    top = scores.max()
    if top <= 0.0:
        empty = np.empty(0)
        return RpeResult([], empty, empty, empty, empty, scores, [],
                         estimate.converged)
    keep = np.flatnonzero(scores >= threshold * top)
    return _result_from_kept(keep, scores, grid, cfg, estimate.converged)


def extract_top_k(estimate: GramEstimate, grid: DelayDopplerGrid,
                  cfg: AfdmConfig, k: int) -> RpeResult:
    """Keep exactly the ``k`` best-scoring grid points.

    Oracle-mode counterpart of :func:`extract_support_and_match` for studies
    where the path count is known a priori; the blind pipeline never calls
    it.  Only points scoring above zero are returned, so the result can hold
    fewer than ``k`` detections.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    scores = _grid_point_scores(estimate, grid)
    positive = np.flatnonzero(scores > 0.0)
    if positive.size == 0:
        empty = np.empty(0)
        return RpeResult([], empty, empty, empty, empty, scores, [],
                         estimate.converged)
    order = positive[np.argsort(scores[positive], kind="stable")[::-1]]
    return _result_from_kept(order[:k], scores, grid, cfg, estimate.converged)


def run_blind_rpe(observed, dictionary: Dictionary, hyper: Hyperparams,
                  noise_power: float = 0.0) -> RpeResult:
    """Full blind recovery from received frames or a covariance observation.

    ``observed`` is either an N x T matrix of received transform-domain
    frames (``noise_power`` then compensates the noise floor) or a
    ready-made :class:`~afdm_rpe.covariance.CovarianceObservation`.  Nothing
    about transmitted symbols or true paths enters here.

    The objective trace holds the smoothed-sparsity objective after the
    initialization and after each reweighting round; from the first round on
    it is non-increasing up to inner-solver tolerance.
    """
    if isinstance(observed, CovarianceObservation):
        observation = observed
    else:
        observation = modified_sample_covariance(observed, noise_power)
    r_bar = observation.row_sum
    cols = dictionary.columns

    def traced_objective(est: GramEstimate) -> float:
        vec = est.vectorized
        return _misfit(cols, vec, r_bar) + hyper.eta * smoothed_l0(vec, hyper.alpha)

    estimate = solve_lasso(dictionary, r_bar, hyper.beta, tol=hyper.inner_tol)
    converged = estimate.converged
    trace = [traced_objective(estimate)]
    for _ in range(hyper.max_iters):
        weights = fp_weight_matrix(estimate, hyper.alpha)
        estimate = solve_psd_quadratic(dictionary, r_bar, hyper.eta, weights,
                                       estimate, tol=hyper.inner_tol)
        converged = converged and estimate.converged
        trace.append(traced_objective(estimate))
    result = extract_support_and_match(estimate, dictionary.grid, dictionary.cfg,
                                       hyper.support_threshold)
    result.objective_trace = trace
    result.converged = converged
    return result
