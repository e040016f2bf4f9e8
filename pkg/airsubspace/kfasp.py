"""
Kalman filter with adaptive subspace projection.

After every Kalman correction the estimate is projected onto the affine hull
of its nearest training AIRs and merged with the unprojected estimate using
per-bin weights α = P / (P + Ψ_M). The merged estimate replaces the Kalman
mean; the state uncertainty is left as the Kalman update produced it.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .dsp import embed_filters, extract_filters
from .fdkf import FdkfFilter, KalmanState, kf_update, prior_error, track_noise_covariances
from .models import FrameConfig, FusionConfig, FusionMode, KfHyperParams, Metric
from .subspace import AffineSubspace, TrainingSet, build_knn_subspace, knn_select

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DenoisedEstimate:
    """Merged transfer functions (B, M) and the weights α (B, M) that produced them."""
    mean: np.ndarray
    alpha: np.ndarray


def _check_training(state: KalmanState, training: TrainingSet) -> None:
    a, b = state.frame, training.frame
    if (a.filter_length, a.num_channels) != (b.filter_length, b.num_channels):
        raise ValueError(
            f"training set frame (L={b.filter_length}, B={b.num_channels}) does not match "
            f"filter frame (L={a.filter_length}, B={a.num_channels})"
        )


def project_kf_estimate(state: KalmanState, subspace: AffineSubspace) -> np.ndarray:
    """Project the Kalman mean in the time domain and embed the result back into ATFs."""
    w = extract_filters(state.mean, state.frame)
    return embed_filters(subspace.project(w), state.frame)


def model_prior_cov(state: KalmanState, a: float, beta_pr: float) -> np.ndarray:
    """
    Per-channel, per-bin prior weight of the subspace model.

    β_pr/(1 - A²) · Ψ^ΔW simplifies to β_pr · Ψ^W, which stays finite at A = 1.
    """
    if not 0.0 < a <= 1.0:
        raise ValueError(f"state transition coefficient must lie in (0, 1], got {a}")
    if beta_pr <= 0:
        raise ValueError(f"beta_pr must be positive, got {beta_pr}")
    return beta_pr * state.psi_w


def soft_combine(state: KalmanState, projected, psi_m,
                 mode: FusionMode = FusionMode.SOFT_COMBINATION) -> DenoisedEstimate:
    """Convex per-bin combination of the Kalman mean and its projection."""
    projected = np.asarray(projected)
    if mode == FusionMode.HARD_PROJECTION:
        alpha = np.ones(state.mean.shape)
        return DenoisedEstimate(projected.astype(complex, copy=True), alpha)
    p = state.p_diag
    psi_m = np.broadcast_to(np.asarray(psi_m, dtype=float), p.shape)
    denom = p + psi_m
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(denom > 0, p / denom, 0.0)
    alpha = np.clip(np.nan_to_num(alpha, nan=0.0), 0.0, 1.0)
    merged = np.where(alpha > 0, state.mean + alpha * (projected - state.mean), state.mean)
    return DenoisedEstimate(merged, alpha)


def search_subspace(state: KalmanState, fusion: FusionConfig, training: TrainingSet) -> AffineSubspace:
    """Affine hull of the ``k_tau`` training AIRs nearest to the current estimate."""
    if fusion.metric == Metric.KF:
        query = (state.mean, state.p_diag)
    else:
        query = extract_filters(state.mean, state.frame)
    indices = knn_select(query, training, fusion.k_tau, fusion.metric)
    return build_knn_subspace(training.vectors[indices])


def fuse(state: KalmanState, fusion: FusionConfig, training: TrainingSet, hyper: KfHyperParams,
         subspace: Optional[AffineSubspace] = None) -> Tuple[KalmanState, DenoisedEstimate, Optional[AffineSubspace]]:
    """Projection and combination on an already corrected state; writes the merged mean back."""
    if not fusion.enabled:
        return state, DenoisedEstimate(state.mean.copy(), np.zeros(state.mean.shape)), subspace
    _check_training(state, training)
    if subspace is None:
        subspace = search_subspace(state, fusion, training)
    projected = project_kf_estimate(state, subspace)
    psi_m = model_prior_cov(state, hyper.a, fusion.beta_pr)
    denoised = soft_combine(state, projected, psi_m, fusion.mode)
    return state.with_mean(denoised.mean), denoised, subspace


def step(state: KalmanState, fusion: FusionConfig, training: TrainingSet, spectra, mic_block,
         hyper: Optional[KfHyperParams] = None,
         subspace: Optional[AffineSubspace] = None) -> Tuple[KalmanState, DenoisedEstimate, np.ndarray]:
    """
    Process one block: prior error, noise tracking, Kalman update, neighbour
    search, projection, weighting and write-back.

    Passing ``subspace`` skips the neighbour search and reuses it.
    """
    hyper = hyper or KfHyperParams(p0=fusion.p0)
    e_plus = prior_error(state, spectra, mic_block)
    state = track_noise_covariances(state, e_plus, hyper)
    state = kf_update(state, spectra, e_plus, hyper)
    state, denoised, _ = fuse(state, fusion, training, hyper, subspace)
    return state, denoised, e_plus


class KfAspFilter(FdkfFilter):
    """Streaming estimator with neighbourhood subspace fusion every ``search_stride`` blocks."""

    def __init__(self, frame: FrameConfig, training: TrainingSet, fusion: Optional[FusionConfig] = None,
                 hyper: Optional[KfHyperParams] = None):
        fusion = fusion or FusionConfig()
        super().__init__(frame, hyper, p0=fusion.p0)
        self.fusion = fusion
        self.training = training
        self.last_estimate: Optional[DenoisedEstimate] = None
        self._subspace: Optional[AffineSubspace] = None
        self._blocks = 0

    def _correct(self, spectra: np.ndarray, e_plus: np.ndarray, mic_block: np.ndarray) -> None:
        super()._correct(spectra, e_plus, mic_block)
        cached = self._subspace if self._blocks % self.fusion.search_stride else None
        self.state, self.last_estimate, self._subspace = fuse(
            self.state, self.fusion, self.training, self.hyper, cached
        )
        self._blocks += 1
