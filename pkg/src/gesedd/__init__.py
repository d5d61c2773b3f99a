"""Sub-Nyquist pulse-Doppler processing: sequential delay-Doppler
estimation from compressively sampled radar returns.

The flow is model -> aic -> delay_est -> doppler_est -> pipeline; the
sweeps/emit/cli layers wrap it in a reproducible simulation harness.
"""

from .aic import (ComReport, DataMatrix, MeasurementMatrix, NoiseStats,
                  RankReport, com_test, compress, compressed_noise_stats,
                  make_matrix, rank_check, xampling_degeneracy_check)
from .delay_est import (BeamspaceModel, DelayEstimate, MusicConfig,
                        build_beamspace, music_spectrum, root_music,
                        sample_covariance, theorem2_check, whiten, whitener)
from .doppler_est import (CoeffMatrix, DopplerEstimate, ModelOrderResult,
                          doppler_vector, esprit, extract_coeffs, model_order)
from .errors import (ConfigError, ContractViolation, DomainError,
                     EstimationError)
from .metrics import MatchResult, PooledError, match_and_rrmse, sign_test_p
from .model import (CLUTTER_FREE, NOISELESS, ClutterParams, DelayClass,
                    NoiseParams, RadarParams, Scene, Target, add_noise, atom,
                    coeff_sequence, derive_noise_psd, echo_matrix,
                    gen_clutter, lfm_pulse, pulse_spectrum)
from .pipeline import (EstimateReport, PipelineConfig, detect_topk,
                       doppler_lowpass, ls_reflectivity, parse_record, run,
                       to_record)
from .config import RunConfig, default_config, emit_default_yaml, load_config

__version__ = "0.1.0"

__all__ = [
    "CLUTTER_FREE", "NOISELESS",
    "BeamspaceModel", "ClutterParams", "CoeffMatrix", "ComReport",
    "ConfigError", "ContractViolation", "DataMatrix", "DelayClass",
    "DelayEstimate", "DomainError", "DopplerEstimate", "EstimateReport",
    "EstimationError", "MatchResult", "MeasurementMatrix", "ModelOrderResult",
    "MusicConfig", "NoiseParams", "NoiseStats", "PipelineConfig",
    "PooledError", "RadarParams", "RankReport", "RunConfig", "Scene",
    "Target",
    "add_noise", "atom", "build_beamspace", "coeff_sequence", "com_test",
    "compress", "compressed_noise_stats", "default_config",
    "derive_noise_psd", "detect_topk", "doppler_lowpass", "doppler_vector",
    "echo_matrix", "emit_default_yaml", "esprit", "extract_coeffs",
    "gen_clutter", "lfm_pulse", "load_config", "ls_reflectivity",
    "make_matrix", "match_and_rrmse", "model_order", "music_spectrum",
    "parse_record", "pulse_spectrum", "rank_check", "root_music", "run",
    "sample_covariance", "sign_test_p", "theorem2_check", "to_record",
    "whiten", "whitener", "xampling_degeneracy_check",
]
