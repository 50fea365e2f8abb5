"""Monte-Carlo RMSE sweeps over SNR and frame count, plus strict config parsing."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import FrameBatch, Scene, propagate_frames, scene_to_paths
from .covariance import perfect_covariance
from .dictionary import DelayDopplerGrid, Dictionary, build_dictionary, build_grid
from .estimator import Hyperparams, RpeResult, run_blind_rpe
from .waveform import (SPEED_OF_LIGHT, AfdmConfig, default_chirp_rate,
                       draw_qam_frames)

PERFECT_TOKEN = "perfect"


class ConfigError(ValueError):
    """Configuration input is syntactically or semantically invalid."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one sweep needs: waveform, scene, grid, solver knobs, schedule."""

    afdm: AfdmConfig
    scene: Scene
    grid: DelayDopplerGrid
    hyper: Hyperparams
    snr_db_list: tuple[float, ...]
    frame_counts: tuple[int | str, ...]
    trials: int = 200
    seed: int = 0
    output_path: str = "results.csv"

    def __post_init__(self):
        if len(self.snr_db_list) < 1:
            raise ValueError("snr_db_list must not be empty")
        if len(self.frame_counts) < 1:
            raise ValueError("frame_counts must not be empty")
        for count in self.frame_counts:
            if count == PERFECT_TOKEN:
                continue
            if isinstance(count, bool) or not isinstance(count, int) or count < 1:
                raise ValueError(f"frame count must be a positive integer or "
                                 f"'{PERFECT_TOKEN}', got {count!r}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class RmseRecord:
    """Aggregated errors for one (SNR, frame count) cell of the sweep."""

    snr_db: float
    frames: int | str
    range_rmse_m: float
    velocity_rmse_mps: float
    detection_rate: float
    trials: int


@dataclass(frozen=True)
class ExperimentResult:
    """All sweep records plus a count of solves that hit their iteration cap."""

    records: tuple[RmseRecord, ...]
    nonconverged_runs: int = 0


@dataclass(frozen=True)
class PathTruth:
    """Ground-truth path position in normalized and physical units."""

    delay_norm: float
    doppler_norm: float
    range_m: float
    velocity_mps: float


def scene_truths(scene: Scene, cfg: AfdmConfig) -> list[PathTruth]:
    """Unquantized truth for every path, line of sight first."""
    truths = []
    for range_m, velocity in [(scene.los_distance_m, 0.0), *scene.targets]:
        delay_s = range_m / SPEED_OF_LIGHT
        doppler_hz = cfg.carrier_hz * velocity / SPEED_OF_LIGHT
        truths.append(PathTruth(delay_s * cfg.sample_rate_hz,
                                cfg.n_samples * doppler_hz / cfg.sample_rate_hz,
                                float(range_m), float(velocity)))
    return truths


def snr_to_noise_power(snr_linear: float, target_count: int, gain_power: float) -> float:
    """Noise variance putting (P+1) * gain_power / noise at the requested SNR."""
    if snr_linear <= 0:
        raise ValueError("linear SNR must be positive")
    if target_count < 0:
        raise ValueError("target count must be non-negative")
    if gain_power <= 0:
        raise ValueError("gain_power must be positive")
    return (target_count + 1) * gain_power / snr_linear


def rmse_metric(estimates, truths, trials: int) -> float:
    """Root of the matched squared errors averaged over trials (not over pairs)."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.size == 0:
        raise ValueError("rmse needs at least one matched estimate")
    if est.shape != tru.shape:
        raise ValueError("estimates and truths must have matching shapes")
    if trials < 1:
        raise ValueError("trials must be positive")
    return float(np.sqrt(np.sum((est - tru) ** 2) / trials))


def match_detections(result: RpeResult, truths: list[PathTruth],
                     doppler_bin: float) -> list[tuple[int, int]]:
    """Greedy association of detections to truths, strongest detection first.

    Distances are measured in bins: delay already is, Doppler is divided by
    the grid spacing.  Each truth is claimed at most once; surplus detections
    are left unmatched.
    """
    if doppler_bin <= 0:
        raise ValueError("doppler_bin must be positive")
    available = list(range(len(truths)))
    pairs = []
    for det_idx, det in enumerate(result.detections):
        if not available:
            break
        dists = [(det.delay_idx - truths[t].delay_norm) ** 2
                 + ((det.doppler_norm - truths[t].doppler_norm) / doppler_bin) ** 2
                 for t in available]
        pairs.append((det_idx, available.pop(int(np.argmin(dists)))))
    return pairs


def blind_estimate(batch: FrameBatch, dictionary: Dictionary,
                   hyper: Hyperparams) -> RpeResult:
    """Estimate from a frame batch using only its received side and noise floor."""
    return run_blind_rpe(batch.rx_daft, dictionary, hyper,
                         noise_power=batch.noise_power)


def run_experiment(config: ExperimentConfig, *, dictionary: Dictionary | None = None,
                   progress=None, diagnostics_path=None) -> ExperimentResult:
    """Full sweep over every (SNR, frame count) cell of a configuration.

    Each trial draws a fresh channel realization from a seed sequence derived
    from (seed, snr index, frame-count index, trial index), so results are
    reproducible and independent of sweep ordering.  ``frames == "perfect"``
    cells skip simulation and hand the estimator the analytic covariance.
    """
    cfg, grid, hyper, scene = config.afdm, config.grid, config.hyper, config.scene
    if dictionary is None:
        dictionary = build_dictionary(cfg, grid)
    truths = scene_truths(scene, cfg)
    doppler_bin = grid.doppler_spacing
    max_delay = int(grid.delay_indices.max())
    records = []
    nonconverged = 0
    diag_file = open(diagnostics_path, "w") if diagnostics_path else None
    try:
        for snr_idx, snr_db in enumerate(config.snr_db_list):
            noise_power = snr_to_noise_power(10.0 ** (snr_db / 10.0),
                                             len(scene.targets), scene.gain_power)
            for frame_idx, frames in enumerate(config.frame_counts):
                if progress is not None:
                    progress(f"snr={snr_db:g} dB frames={frames} "
                             f"({config.trials} trials)")
                range_est, range_tru = [], []
                vel_est, vel_tru = [], []
                matched = 0
                for trial in range(config.trials):
                    rng = np.random.default_rng(
                        np.random.SeedSequence([config.seed, snr_idx, frame_idx, trial]))
                    paths = scene_to_paths(scene, cfg, rng,
                                           max_delay_idx=max_delay,
                                           max_doppler_norm=grid.f_max)
                    if frames == PERFECT_TOKEN:
                        result = run_blind_rpe(perfect_covariance(paths, cfg),
                                               dictionary, hyper)
                    else:
                        tx = draw_qam_frames(cfg, frames, rng)
                        batch = propagate_frames(cfg, paths, tx, noise_power, rng)
                        result = blind_estimate(batch, dictionary, hyper)
                    if not result.converged:
                        nonconverged += 1
                    pairs = match_detections(result, truths, doppler_bin)
                    matched += len(pairs)
                    for det_idx, truth_idx in pairs:
                        range_est.append(result.range_estimates_m[det_idx])
                        range_tru.append(truths[truth_idx].range_m)
                        vel_est.append(result.velocity_estimates_mps[det_idx])
                        vel_tru.append(truths[truth_idx].velocity_mps)
                    if diag_file is not None:
                        diag_file.write(json.dumps({
                            "snr_db": snr_db,
                            "frames": frames,
                            "trial": trial,
                            "matched": len(pairs),
                            "objective_trace": result.objective_trace,
                            "support_scores": result.support_scores.tolist(),
                            "detections": [[d.delay_idx, d.doppler_norm, d.magnitude]
                                           for d in result.detections],
                        }) + "\n")
                if matched:
                    range_rmse = rmse_metric(range_est, range_tru, config.trials)
                    vel_rmse = rmse_metric(vel_est, vel_tru, config.trials)
                else:
                    range_rmse = float("nan")
                    vel_rmse = float("nan")
                records.append(RmseRecord(float(snr_db), frames, range_rmse, vel_rmse,
                                          matched / (config.trials * len(truths)),
                                          config.trials))
    finally:
        if diag_file is not None:
            diag_file.close()
    return ExperimentResult(tuple(records), nonconverged)


_MISSING = object()


def _as_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return dict(value)


def _reject_unknown(mapping: dict, prefix: str):
    if mapping:
        key = sorted(str(k) for k in mapping)[0]
        raise ConfigError(f"{prefix}{key}: unknown key")


def _require(mapping: dict, key: str, prefix: str):
    value = mapping.pop(key, _MISSING)
    if value is _MISSING:
        raise ConfigError(f"{prefix}{key}: missing required key")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _integer(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be at least {minimum}")
    return value


def parse_config(data) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a JSON document or parsed mapping.

    Every key is checked: wrong types, out-of-range values and unknown keys
    all raise :class:`ConfigError` naming the offending dotted path.
    """
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as err:
            raise ConfigError(f"line {err.lineno}, column {err.colno}: {err.msg}") from err
    root = _as_mapping(data, "config")

    grid_map = _as_mapping(_require(root, "grid", ""), "grid")
    k_tau = _integer(_require(grid_map, "k_tau", "grid."), "grid.k_tau", minimum=1)
    d_nu = _integer(_require(grid_map, "d_nu", "grid."), "grid.d_nu", minimum=1)
    f_max = _number(_require(grid_map, "f_max", "grid."), "grid.f_max")
    _reject_unknown(grid_map, "grid.")
    try:
        grid = build_grid(k_tau, d_nu, f_max)
    except ValueError as err:
        raise ConfigError(f"grid: {err}") from err

    afdm_map = _as_mapping(_require(root, "afdm", ""), "afdm")
    n_samples = _integer(_require(afdm_map, "n_samples", "afdm."),
                         "afdm.n_samples", minimum=2)
    c1_raw = afdm_map.pop("c1", None)
    c1 = default_chirp_rate(n_samples, f_max) if c1_raw is None \
        else _number(c1_raw, "afdm.c1")
    c2 = _number(afdm_map.pop("c2", 0.0), "afdm.c2")
    sample_rate = _number(afdm_map.pop("sample_rate_hz", 20e6), "afdm.sample_rate_hz")
    carrier = _number(afdm_map.pop("carrier_hz", 70e9), "afdm.carrier_hz")
    order = _integer(afdm_map.pop("constellation_order", 4),
                     "afdm.constellation_order", minimum=4)
    _reject_unknown(afdm_map, "afdm.")
    try:
        afdm = AfdmConfig(n_samples, c1, c2, sample_rate, carrier, order)
    except ValueError as err:
        raise ConfigError(f"afdm: {err}") from err

    scene_map = _as_mapping(_require(root, "scene", ""), "scene")
    los = _number(_require(scene_map, "los_distance_m", "scene."),
                  "scene.los_distance_m")
    targets_raw = scene_map.pop("targets", [])
    if not isinstance(targets_raw, list):
        raise ConfigError("scene.targets: expected a list of [range_m, velocity_mps] pairs")
    targets = []
    for i, entry in enumerate(targets_raw):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ConfigError(f"scene.targets[{i}]: expected a [range_m, velocity_mps] pair")
        targets.append((_number(entry[0], f"scene.targets[{i}][0]"),
                        _number(entry[1], f"scene.targets[{i}][1]")))
    gain_power = _number(scene_map.pop("gain_power", 1.0), "scene.gain_power")
    _reject_unknown(scene_map, "scene.")
    try:
        scene = Scene(los, tuple(targets), gain_power)
    except ValueError as err:
        raise ConfigError(f"scene: {err}") from err

    hyper_map = _as_mapping(root.pop("hyper", {}), "hyper")
    hyper_kwargs = {}
    for key in ("beta", "eta", "alpha", "inner_tol", "support_threshold"):
        if key in hyper_map:
            hyper_kwargs[key] = _number(hyper_map.pop(key), f"hyper.{key}")
    if "max_iters" in hyper_map:
        hyper_kwargs["max_iters"] = _integer(hyper_map.pop("max_iters"),
                                             "hyper.max_iters", minimum=1)
    _reject_unknown(hyper_map, "hyper.")
    try:
        hyper = Hyperparams(**hyper_kwargs)
    except ValueError as err:
        raise ConfigError(f"hyper: {err}") from err

    snr_raw = _require(root, "snr_db_list", "")
    if not isinstance(snr_raw, list) or not snr_raw:
        raise ConfigError("snr_db_list: expected a non-empty list of numbers")
    snr_db_list = tuple(_number(v, f"snr_db_list[{i}]") for i, v in enumerate(snr_raw))

    frames_raw = _require(root, "frame_counts", "")
    if not isinstance(frames_raw, list) or not frames_raw:
        raise ConfigError(f"frame_counts: expected a non-empty list of positive "
                          f"integers or '{PERFECT_TOKEN}'")
    frame_counts = []
    for i, value in enumerate(frames_raw):
        if value == PERFECT_TOKEN:
            frame_counts.append(PERFECT_TOKEN)
        else:
            frame_counts.append(_integer(value, f"frame_counts[{i}]", minimum=1))

    trials = _integer(root.pop("trials", 200), "trials", minimum=1)
    seed = _integer(root.pop("seed", 0), "seed", minimum=0)
    output_path = root.pop("output_path", "results.csv")
    if not isinstance(output_path, str) or not output_path:
        raise ConfigError("output_path: expected a non-empty string")
    _reject_unknown(root, "")

    try:
        return ExperimentConfig(afdm, scene, grid, hyper, snr_db_list,
                                tuple(frame_counts), trials, seed, output_path)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: line {err.lineno}, column {err.colno}: "
                          f"{err.msg}") from err
    return parse_config(data)
