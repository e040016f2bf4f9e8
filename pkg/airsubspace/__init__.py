"""
airsubspace

Online acoustic MISO system identification with a DFT-domain Kalman filter
and adaptive nearest-neighbour subspace fusion.

Components:
- dsp: block DFT and overlap-save primitives
- rir: image-source impulse responses and corpus generation
- subspace: global, mixture and nearest-neighbour affine subspace models
- fdkf: baseline DFT-domain Kalman filter
- kfasp: Kalman filter with subspace projection and soft combination
- metrics: system mismatch, ERLE and trial aggregation
- experiment: multi-trial comparison and the offline projection study

Usage:
    from airsubspace.rir import generate_corpus
    from airsubspace.kfasp import KfAspFilter
    from airsubspace.models import FrameConfig, FusionConfig
"""

__version__ = "1.0.0"

from .constants import AIRSUBSPACE_VERSION
from .env import get_env_value, get_runtime_config
from .fdkf import FdkfFilter, KalmanState
from .kfasp import KfAspFilter
from .models import (
    AnalysisConfig,
    ExperimentConfig,
    FrameConfig,
    FusionConfig,
    KfHyperParams,
    RoomSpec,
    SceneGeometry,
)
from .storage import CorpusStore
from .subspace import AffineSubspace, TrainingSet

__all__ = [
    "AIRSUBSPACE_VERSION",
    "get_env_value",
    "get_runtime_config",
    "FdkfFilter",
    "KalmanState",
    "KfAspFilter",
    "AnalysisConfig",
    "ExperimentConfig",
    "FrameConfig",
    "FusionConfig",
    "KfHyperParams",
    "RoomSpec",
    "SceneGeometry",
    "CorpusStore",
    "AffineSubspace",
    "TrainingSet",
]
