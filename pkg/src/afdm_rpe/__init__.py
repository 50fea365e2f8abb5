"""Simulation and blind radar parameter estimation for AFDM transmissions.

The toolkit simulates chirp-multiplexed frames over doubly-dispersive
channels and recovers path delays and Doppler shifts (ranges and velocities)
from received-signal covariance statistics alone, without access to the
transmitted data.
"""

from .channel import (FrameBatch, OutOfGridError, PathParams, PathSet, Scene,
                      build_cpp_phase_matrix, build_daft_path_operator,
                      build_doppler_matrix, build_effective_channel,
                      build_shift_matrix, propagate_frames, scene_to_paths,
                      time_domain_path_operator)
from .covariance import (CovarianceObservation, modified_sample_covariance,
                         perfect_covariance, row_sum_observation)
from .dictionary import (DelayDopplerGrid, Dictionary, DictionaryBudgetError,
                         build_dictionary, build_grid, cache_path,
                         dictionary_column, load_dictionary, save_dictionary,
                         unvec_gram, vec_gram)
from .estimator import (Detection, GramEstimate, Hyperparams, RpeResult,
                        extract_support_and_match, extract_top_k, fp_weight_matrix,
                        psd_project,
                        run_blind_rpe, smoothed_l0, soft_threshold, solve_lasso,
                        solve_psd_quadratic, surrogate_l0)
from .experiment import (ConfigError, ExperimentConfig, ExperimentResult,
                         PathTruth, RmseRecord, blind_estimate, load_config,
                         match_detections, parse_config, rmse_metric,
                         run_experiment, scene_truths, snr_to_noise_power)
from .waveform import (SPEED_OF_LIGHT, AfdmConfig, SymbolFrame, build_chirp_diag,
                       build_daft_matrix, default_chirp_rate, demodulate,
                       draw_qam_frame, draw_qam_frames, modulate,
                       qam_constellation)

__version__ = "0.1.0"

__all__ = [
    "AfdmConfig", "SymbolFrame", "SPEED_OF_LIGHT", "build_chirp_diag",
    "build_daft_matrix", "default_chirp_rate", "modulate", "demodulate",
    "qam_constellation", "draw_qam_frame", "draw_qam_frames",
    "PathParams", "PathSet", "Scene", "FrameBatch", "OutOfGridError",
    "scene_to_paths", "build_shift_matrix", "build_doppler_matrix",
    "build_cpp_phase_matrix", "time_domain_path_operator",
    "build_daft_path_operator", "build_effective_channel", "propagate_frames",
    "CovarianceObservation", "modified_sample_covariance", "perfect_covariance",
    "row_sum_observation",
    "DelayDopplerGrid", "Dictionary", "DictionaryBudgetError", "build_grid",
    "build_dictionary", "dictionary_column", "vec_gram", "unvec_gram",
    "cache_path", "save_dictionary", "load_dictionary",
    "Hyperparams", "GramEstimate", "Detection", "RpeResult", "soft_threshold",
    "solve_lasso", "fp_weight_matrix", "smoothed_l0", "surrogate_l0",
    "psd_project", "solve_psd_quadratic", "extract_support_and_match",
    "extract_top_k",
    "run_blind_rpe",
    "ConfigError", "ExperimentConfig", "ExperimentResult", "RmseRecord",
    "PathTruth", "scene_truths", "snr_to_noise_power", "rmse_metric",
    "match_detections", "blind_estimate", "run_experiment", "parse_config",
    "load_config",
    "__version__",
]
