"""
Reference estimators that know the true AIR.

``oracle_gt`` keeps the first L taps of the ground truth; ``oracle_nn``
keeps the training AIR closest to it in squared Euclidean distance. Both
run through the same block interface as the adaptive filters and never
update.
"""
import logging

import numpy as np

from .dsp import embed_filters
from .fdkf import FdkfFilter
from .models import FrameConfig
from .rir import AirSample
from .subspace import TrainingSet, knn_select

logger = logging.getLogger(__name__)


class OracleFilter(FdkfFilter):
    """Kalman filter frozen at a fixed stacked AIR vector."""

    def __init__(self, frame: FrameConfig, air_vector):
        super().__init__(frame)
        w = np.asarray(air_vector, dtype=float)
        if w.shape != (frame.vector_length,):
            raise ValueError(f"air_vector must have length {frame.vector_length}, got {w.shape}")
        self.state = self.state.with_mean(embed_filters(w, frame))

    def _correct(self, spectra: np.ndarray, e_plus: np.ndarray, mic_block: np.ndarray) -> None:
        pass


def truncated_truth(truth: AirSample, frame: FrameConfig) -> np.ndarray:
    if truth.num_channels != frame.num_channels:
        raise ValueError(f"ground truth has {truth.num_channels} channels, frame expects {frame.num_channels}")
    if truth.channels.shape[1] < frame.filter_length:
        raise ValueError("ground truth is shorter than the filter length")
    return truth.air_vector(frame.filter_length)


def oracle_gt_filter(truth: AirSample, frame: FrameConfig) -> OracleFilter:
    return OracleFilter(frame, truncated_truth(truth, frame))


def oracle_nn_filter(truth: AirSample, frame: FrameConfig, training: TrainingSet) -> OracleFilter:
    """Nearest training AIR to the truncated truth."""
    if training.frame.vector_length != frame.vector_length:
        raise ValueError(f"training vectors have length {training.frame.vector_length}, frame expects {frame.vector_length}")
    w = truncated_truth(truth, frame)
    nn = int(knn_select(w, training, 1)[0])
    logger.debug("oracle_nn picked training AIR %d", nn)
    return OracleFilter(frame, training.vectors[nn])
