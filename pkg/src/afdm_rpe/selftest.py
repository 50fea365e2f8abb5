"""Built-in consistency checks, runnable as ``rpe selftest``.

Each check exercises one identity the toolkit relies on and reports a
pass/fail line; all run in a few seconds.
"""

from __future__ import annotations

import numpy as np

from .channel import (PathParams, PathSet, build_daft_path_operator,
                      build_effective_channel, time_domain_path_operator)
from .covariance import perfect_covariance
from .dictionary import build_dictionary, build_grid, vec_gram
from .estimator import (GramEstimate, Hyperparams, fp_weight_matrix, psd_project,
                        run_blind_rpe, smoothed_l0, surrogate_l0)
from .waveform import (AfdmConfig, build_daft_matrix, default_chirp_rate,
                       demodulate, draw_qam_frame, modulate)


def _config(n: int = 16, f_max: float = 0.1) -> AfdmConfig:
    return AfdmConfig(n_samples=n, c1=default_chirp_rate(n, f_max))


def _random_paths(cfg: AfdmConfig, count: int, rng) -> PathSet:
    paths = []
    for _ in range(count):
        gain = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
        ell = int(rng.integers(0, min(5, cfg.n_samples)))
        f = float(rng.uniform(-0.1, 0.1))
        paths.append(PathParams.on_grid(gain, ell, f, cfg))
    return PathSet(tuple(paths))


def check_transform_unitary():
    worst = 0.0
    for n in (8, 16, 64):
        a = build_daft_matrix(_config(n))
        worst = max(worst, np.abs(a @ a.conj().T - np.eye(n)).max())
    return "transform unitarity", worst < 1e-10, f"max deviation {worst:.2e}"


def check_modulation_roundtrip():
    cfg = _config(32)
    frame = draw_qam_frame(cfg, seed=0)
    err = np.abs(demodulate(modulate(frame, cfg), cfg) - frame.symbols).max()
    return "modulation round trip", err < 1e-10, f"max deviation {err:.2e}"


def check_path_operator_unitary():
    cfg = _config(32)
    rng = np.random.default_rng(1)
    worst = 0.0
    for path in _random_paths(cfg, 10, rng):
        op = build_daft_path_operator(cfg, path)
        worst = max(worst, np.abs(op @ op.conj().T - np.eye(cfg.n_samples)).max())
    return "path operator unitarity", worst < 1e-10, f"max deviation {worst:.2e}"


def check_channel_aggregation():
    cfg = _config(16)
    rng = np.random.default_rng(2)
    paths = _random_paths(cfg, 3, rng)
    g = build_effective_channel(cfg, paths)
    a = build_daft_matrix(cfg)
    aggregate = np.zeros((16, 16), dtype=complex)
    for p in paths:
        aggregate += p.gain * time_domain_path_operator(cfg, p.delay_idx, p.doppler_norm)
    err = np.linalg.norm(g - a @ aggregate @ a.conj().T)
    return "channel aggregation", err < 1e-10, f"deviation {err:.2e}"


def check_covariance_identity():
    cfg = _config(16)
    rng = np.random.default_rng(3)
    paths = _random_paths(cfg, 3, rng)
    g = build_effective_channel(cfg, paths)
    err = np.linalg.norm(perfect_covariance(paths, cfg).modified_cov - g @ g.conj().T)
    return "covariance identity", err < 1e-10, f"deviation {err:.2e}"


def check_synthesis_identity():
    cfg = _config(16)
    grid = build_grid(3, 3, 0.1)
    dictionary = build_dictionary(cfg, grid)
    gains = np.array([0.9 + 0.3j, -0.4 + 0.7j])
    points = [0, 7]
    paths = PathSet(tuple(PathParams.on_grid(gains[i], *grid.point(points[i]), cfg)
                          for i in range(2)))
    coeff = np.zeros(grid.size, dtype=complex)
    coeff[points] = gains
    gram = np.outer(coeff, coeff.conj())
    obs = perfect_covariance(paths, cfg)
    err = np.linalg.norm(obs.row_sum - dictionary.columns @ vec_gram(gram))
    rel = err / np.linalg.norm(obs.row_sum)
    return "synthesis identity", rel < 1e-9, f"relative deviation {rel:.2e}"


def check_surrogate_tightness():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        b = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        alpha = float(rng.uniform(1e-4, 1e-1))
        w = fp_weight_matrix(b, alpha)
        worst = max(worst, abs(surrogate_l0(b, w, alpha) - smoothed_l0(b, alpha)))
    return "surrogate tightness", worst < 1e-9, f"max gap {worst:.2e}"


def check_psd_projection():
    mat = np.diag([1.0, -1.0]).astype(complex)
    once = psd_project(mat)
    twice = psd_project(once)
    ok = (np.abs(once - np.diag([1.0, 0.0])).max() < 1e-12
          and np.abs(twice - once).max() < 1e-10)
    return "psd projection", ok, "negative eigenvalue clipped, idempotent"


def check_support_coverage():
    """Blind detections must cover every true grid point at perfect covariance.

    Coverage, not exactness: couplings between grid points that differ by a
    common delay or Doppler shift produce near-identical row-sum signatures,
    so the blind detection set typically includes shift-related neighbours of
    the truth alongside the truth itself.
    """
    cfg = _config(16)
    grid = build_grid(2, 3, 0.1)
    dictionary = build_dictionary(cfg, grid)
    rng = np.random.default_rng(5)
    truth = [(0, 0.0), (1, 0.1)]
    paths = PathSet(tuple(
        PathParams.on_grid(np.exp(2j * np.pi * rng.uniform()), ell, f, cfg)
        for ell, f in truth))
    result = run_blind_rpe(perfect_covariance(paths, cfg), dictionary, Hyperparams())
    found = {(d.delay_idx, d.doppler_norm) for d in result.detections}
    covered = all(any(ell == d and abs(f - v) < 1e-9 for d, v in found)
                  for ell, f in truth)
    return ("support coverage", covered,
            f"{len(found)} detections, truth covered: {covered}")


CHECKS = (
    check_transform_unitary,
    check_modulation_roundtrip,
    check_path_operator_unitary,
    check_channel_aggregation,
    check_covariance_identity,
    check_synthesis_identity,
    check_surrogate_tightness,
    check_psd_projection,
    check_support_coverage,
)


def run_selftest(emit=print) -> bool:
    """Run every check; returns True when all pass."""
    all_ok = True
    for check in CHECKS:
        name, ok, detail = check()
        all_ok = all_ok and ok
        if emit is not None:
            emit(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
