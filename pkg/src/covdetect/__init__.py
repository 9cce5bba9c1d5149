"""Covariance-based activity detection and channel estimation for massive-MIMO
grant-free access with constant-modulus signature pilots."""

from .config import ExperimentConfig, parse_config
from .covariance import SampleCov, ideal_covariance, q_matrix, sample_covariance
from .detector import (IDEAL, DetectionReport, Spectrum, ThresholdPolicy, default_threshold,
                       detect, esprit_phases, estimate_k_ideal, estimate_k_threshold,
                       hermitian_evd, match_active_set)
from .errors import (ConfigError, DegenerateSubspaceError, InvalidParameterError,
                     PatternLimitError, SingularSystemError)
from .mmse import ChannelEstimate, mmse_error_cov, mmse_estimate
from .pilot import PilotBook, assign_signatures, build_pilot_book, gaussian_pilot_book, make_pilot
from .sim import (ActivityPattern, RxBlock, Scene, build_scene, draw_activity, draw_channels,
                  path_loss_db, synthesize_rx)

__version__ = "0.1.0"
