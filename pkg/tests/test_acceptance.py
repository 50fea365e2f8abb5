"""Acceptance gate: ten system-level criteria with pinned tolerances.

Each test prints one PASS/FAIL line (visible with ``pytest -v -s`` or in
failure output).  Two criteria probe properties the pinned algorithm does
not deliver on this observation model — exact support recovery (07) and the
perfect-covariance RMSE floor (08).  They are implemented faithfully and
left to fail rather than weakened; the detection sets cover the truth, but
ranking among shift-related grid couplings is not identifiable from
covariance row sums (see README limitations).
"""

import ast
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import afdm_rpe.channel as channel_module
from afdm_rpe.channel import (PathParams, PathSet, Scene,
                              build_daft_path_operator, build_effective_channel,
                              propagate_frames, scene_to_paths,
                              time_domain_path_operator)
from afdm_rpe.covariance import (modified_sample_covariance, perfect_covariance,
                                 row_sum_observation)
from afdm_rpe.dictionary import build_dictionary, build_grid, vec_gram
from afdm_rpe.estimator import (Hyperparams, fp_weight_matrix, run_blind_rpe,
                                smoothed_l0, surrogate_l0)
from afdm_rpe.experiment import (ExperimentConfig, run_experiment, scene_truths)
from afdm_rpe.waveform import (SPEED_OF_LIGHT, AfdmConfig, build_daft_matrix,
                               draw_qam_frames)

REFERENCE_HYPER = Hyperparams(beta=1.0, eta=0.1, alpha=1e-3, max_iters=3)


def _report(num: int, name: str, ok: bool, detail: str):
    print(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"criterion {num:02d} {name}: {detail}"


def _random_path(cfg, rng) -> PathParams:
    gain = complex(rng.standard_normal(), rng.standard_normal()) / np.sqrt(2)
    ell = int(rng.integers(0, min(8, cfg.n_samples)))
    f = float(rng.uniform(-1.0, 1.0))
    return PathParams.on_grid(gain, ell, f, cfg)


def test_criterion_01_unitarity_suite():
    start = time.monotonic()
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (8, 16, 64):
        cfg = AfdmConfig(n_samples=n, c1=1.2 / (2 * n), c2=1.0 / (2 * n))
        a = build_daft_matrix(cfg)
        eye = np.eye(n)
        worst = max(worst, np.linalg.norm(a @ a.conj().T - eye))
        for _ in range(100):
            op = build_daft_path_operator(cfg, _random_path(cfg, rng))
            worst = max(worst, np.linalg.norm(op @ op.conj().T - eye))
    elapsed = time.monotonic() - start
    _report(1, "unitarity", worst < 1e-10 and elapsed < 5.0,
            f"max Frobenius deviation {worst:.2e}, {elapsed:.1f}s")


def test_criterion_02_channel_equivalence():
    rng = np.random.default_rng(2)
    cfg = AfdmConfig(n_samples=16, c1=1.2 / 32.0, c2=1.0 / 32.0)
    a = build_daft_matrix(cfg)
    worst = 0.0
    for _ in range(50):
        paths = PathSet(tuple(_random_path(cfg, rng) for _ in range(3)))
        g = build_effective_channel(cfg, paths)
        psi = sum(p.gain * time_domain_path_operator(cfg, p.delay_idx, p.doppler_norm)
                  for p in paths.paths)
        worst = max(worst, np.linalg.norm(g - a @ psi @ a.conj().T))
    _report(2, "channel equivalence", worst < 1e-10,
            f"max Frobenius deviation {worst:.2e} over 50 draws")


def test_criterion_03_covariance_identity():
    rng = np.random.default_rng(3)
    worst = 0.0
    for trial in range(30):
        n = int(rng.choice([8, 16, 32]))
        cfg = AfdmConfig(n_samples=n, c1=1.2 / (2 * n), c2=1.0 / (2 * n))
        count = int(rng.integers(1, 4))
        paths = PathSet(tuple(_random_path(cfg, rng) for _ in range(count)))
        outer = build_effective_channel(cfg, paths)
        outer = outer @ outer.conj().T
        double_sum = perfect_covariance(paths, cfg).modified_cov
        worst = max(worst, np.linalg.norm(outer - double_sum))
    _report(3, "covariance identity", worst < 1e-10,
            f"max Frobenius deviation {worst:.2e}, path counts <= 3")


def test_criterion_04_synthesis_identity():
    rng = np.random.default_rng(4)
    worst = 0.0
    for n, k_tau, d_nu in ((16, 3, 3), (64, 5, 5)):
        cfg = AfdmConfig(n_samples=n, c1=1.2 / (2 * n), c2=1.0 / (2 * n))
        grid = build_grid(k_tau, d_nu, 0.1)
        dictionary = build_dictionary(cfg, grid)
        for _ in range(10):
            points = rng.choice(grid.size, size=2, replace=False)
            gains = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            paths = PathSet(tuple(
                PathParams.on_grid(gains[i], *grid.point(int(points[i])), cfg)
                for i in range(2)))
            coeff = np.zeros(grid.size, dtype=complex)
            coeff[points] = gains
            obs = perfect_covariance(paths, cfg)
            resid = obs.row_sum - dictionary.columns @ vec_gram(
                np.outer(coeff, coeff.conj()))
            worst = max(worst,
                        np.linalg.norm(resid) / np.linalg.norm(obs.row_sum))
    _report(4, "synthesis identity", worst < 1e-9,
            f"max relative residual {worst:.2e}")


def test_criterion_05_covariance_convergence_rate():
    cfg = AfdmConfig(n_samples=16, c1=1.2 / 32.0, c2=1.0 / 32.0)
    frame_counts = (100, 1_000, 10_000)
    sigma2 = 0.1
    errors = np.zeros(len(frame_counts))
    for seed in range(20):
        rng = np.random.default_rng(np.random.SeedSequence([5, seed]))
        paths = PathSet(tuple(_random_path(cfg, rng) for _ in range(2)))
        perfect = perfect_covariance(paths, cfg).modified_cov
        for i, frames in enumerate(frame_counts):
            tx = draw_qam_frames(cfg, frames, seed=rng)
            batch = propagate_frames(cfg, paths, tx, sigma2, seed=rng)
            est = modified_sample_covariance(batch.rx_daft, sigma2).modified_cov
            errors[i] += np.linalg.norm(est - perfect) / 20.0
    slope = np.polyfit(np.log10(frame_counts), np.log10(errors), 1)[0]
    _report(5, "covariance convergence", abs(slope + 0.5) <= 0.1,
            f"log-log slope {slope:.3f} (target -0.5 +/- 0.1)")


def test_criterion_06_fp_tightness_and_monotonicity():
    rng = np.random.default_rng(6)
    worst_gap = 0.0
    for _ in range(1000):
        size = int(rng.integers(2, 40))
        b = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        alpha = float(10.0 ** rng.uniform(-4, -1))
        w = fp_weight_matrix(b, alpha)
        worst_gap = max(worst_gap,
                        abs(surrogate_l0(b, w, alpha) - smoothed_l0(b, alpha)))
    monotone = True
    for _ in range(100):
        size = int(rng.integers(2, 20))
        b = rng.uniform(0.1, 3.0, size=size) * np.exp(2j * np.pi * rng.uniform(size=size))
        gaps = [abs(smoothed_l0(b, alpha) - size) for alpha in (1e-1, 1e-2, 1e-3)]
        monotone = monotone and gaps[0] > gaps[1] > gaps[2]
    _report(6, "fp tightness", worst_gap < 1e-9 and monotone,
            f"max anchor gap {worst_gap:.2e}, monotone in alpha: {monotone}")


def test_criterion_07_exact_recovery():
    """Noise-free exact support recovery, reference scenario and hyperparameters.

    Expected to FAIL: delay/Doppler translation families of coupling columns
    are near-coherent in the row-sum observation, and the reweighting rounds
    spread mass across each family, so detections cover the truth but the
    detection set is larger than the true support (zero index error is not
    reached).  Kept faithful rather than weakened.
    """
    start = time.monotonic()
    cfg = AfdmConfig(n_samples=64, c1=1.2 / 128.0, c2=1.0 / 128.0)
    grid = build_grid(5, 5, 0.1)
    dictionary = build_dictionary(cfg, grid)
    truth = {(0, 0.0), (1, 0.05)}
    exact = 0
    excess = []
    for seed in range(100):
        rng = np.random.default_rng(np.random.SeedSequence([7, seed]))
        paths = PathSet(tuple(
            PathParams.on_grid(np.exp(2j * np.pi * rng.uniform()), ell, f, cfg)
            for ell, f in sorted(truth)))
        result = run_blind_rpe(perfect_covariance(paths, cfg), dictionary,
                               REFERENCE_HYPER)
        found = {(d.delay_idx, d.doppler_norm) for d in result.detections}
        if found == truth:
            exact += 1
        excess.append(len(found) - len(truth))
    elapsed = time.monotonic() - start
    detail = (f"{exact}/100 exact recoveries, median excess detections "
              f"{int(np.median(excess))}, {elapsed:.0f}s")
    _report(7, "exact recovery", exact == 100 and elapsed < 60.0, detail)


def test_criterion_08_rmse_trend_and_floor():
    """SNR x frame-count sweep: monotone trend plus quantization floor.

    Expected to FAIL on the floor clause: the detection sets cover the truth
    (the trend part holds), but the magnitude ranking that feeds the pinned
    detection-truth association is arbitrary among near-coherent couplings,
    so the strongest detections sit 1-3 bins off truth even with perfect
    covariance.  Kept faithful rather than weakened.
    """
    start = time.monotonic()
    cfg = AfdmConfig(n_samples=64, c1=1.2 / 128.0, c2=1.0 / 128.0)
    grid = build_grid(5, 5, 0.1)
    scene = Scene(los_distance_m=3.75, targets=((15.0, 37.0),))
    config = ExperimentConfig(
        afdm=cfg, scene=scene, grid=grid, hyper=Hyperparams(),
        snr_db_list=(10.0, 20.0, 30.0), frame_counts=(200, 2000, "perfect"),
        trials=200, seed=8)
    outcome = run_experiment(config, dictionary=build_dictionary(cfg, grid))
    elapsed = time.monotonic() - start

    range_floor = SPEED_OF_LIGHT * cfg.delay_resolution_s
    velocity_floor = (grid.doppler_spacing * cfg.doppler_resolution_hz
                      * SPEED_OF_LIGHT / cfg.carrier_hz)
    trend_ok, floor_ok = True, True
    lines = []
    for snr_db in config.snr_db_list:
        row = [r for r in outcome.records if r.snr_db == snr_db]
        ranges = [r.range_rmse_m for r in row]
        velocities = [r.velocity_rmse_mps for r in row]
        trend_ok = trend_ok and all(b <= a + 1e-9 for a, b in zip(ranges, ranges[1:]))
        trend_ok = trend_ok and all(b <= a + 1e-9
                                    for a, b in zip(velocities, velocities[1:]))
        floor_ok = floor_ok and ranges[-1] <= range_floor
        floor_ok = floor_ok and velocities[-1] <= velocity_floor
        lines.append(f"snr {snr_db:g}: range {np.round(ranges, 1).tolist()} m, "
                     f"velocity {np.round(velocities, 1).tolist()} m/s")
    detail = ("; ".join(lines)
              + f"; floors {range_floor:.1f} m / {velocity_floor:.1f} m/s"
              + f"; trend_ok={trend_ok} floor_ok={floor_ok}, {elapsed:.0f}s")
    _report(8, "rmse trend and floor",
            trend_ok and floor_ok and elapsed < 1800.0, detail)


def test_criterion_09_blindness_audit():
    # Static: the estimator module must not import or mention channel truth.
    source = Path(channel_module.__file__).with_name("estimator.py").read_text()
    tree = ast.parse(source)
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            imported.update(alias.name for alias in node.names)
        elif isinstance(node, ast.ImportFrom):
            imported.add(node.module or "")
    static_ok = (not any("channel" in name or "experiment" in name
                         for name in imported)
                 and "tx_symbols" not in source
                 and "PathParams" not in source
                 and "scene" not in source)

    # Runtime: a full blind run must never call into truth-side constructors.
    cfg = AfdmConfig(n_samples=16, c1=1.2 / 32.0, c2=1.0 / 32.0)
    grid = build_grid(3, 3, 0.1)
    dictionary = build_dictionary(cfg, grid)
    paths = PathSet((PathParams.on_grid(1.0, 0, 0.0, cfg),
                     PathParams.on_grid(0.5, 1, 0.1, cfg)))
    observation = perfect_covariance(paths, cfg)
    tx = draw_qam_frames(cfg, 100, seed=9)
    batch = propagate_frames(cfg, paths, tx, 0.01, seed=10)

    guarded = ("scene_to_paths", "build_effective_channel",
               "time_domain_path_operator", "build_daft_path_operator",
               "propagate_frames")
    originals = {name: getattr(channel_module, name) for name in guarded}

    def _tripwire(*_args, **_kwargs):
        raise AssertionError("estimator reached channel truth")

    runtime_ok = True
    try:
        for name in guarded:
            setattr(channel_module, name, _tripwire)
        run_blind_rpe(observation, dictionary, Hyperparams())
        run_blind_rpe(batch.rx_daft, dictionary, Hyperparams(),
                      noise_power=batch.noise_power)
    except AssertionError:
        runtime_ok = False
    finally:
        for name, fn in originals.items():
            setattr(channel_module, name, fn)
    _report(9, "blindness audit", static_ok and runtime_ok,
            f"static imports clean: {static_ok}, runtime tripwires silent: "
            f"{runtime_ok}")


def test_criterion_10_csv_determinism(tmp_path):
    config = {
        "afdm": {"n_samples": 16, "c1": 0.0375, "c2": 0.03125},
        "scene": {"los_distance_m": 3.75, "targets": [[15.0, 37.0]]},
        "grid": {"k_tau": 3, "d_nu": 3, "f_max": 0.1},
        "snr_db_list": [20.0],
        "frame_counts": [50, "perfect"],
        "trials": 2,
        "output_path": str(tmp_path / "ignored.csv"),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    outputs = []
    for name in ("first.csv", "second.csv"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "afdm_rpe.cli", "run",
             "--config", str(config_path), "--quiet", "--output", str(out)],
            capture_output=True, text=True, timeout=600)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    identical = outputs[0] == outputs[1]
    _report(10, "csv determinism", identical,
            f"two CLI runs, {len(outputs[0])} bytes, byte-identical: {identical}")
