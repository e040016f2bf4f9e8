"""
DFT-domain Kalman filter for MISO system identification.

The state uncertainty keeps one diagonal per loudspeaker pair, so every
recursion reduces to independent per-bin operations on B x B blocks. With
a single microphone the innovation power D is a scalar per bin.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .constants import INNOVATION_FLOOR, PSI_N_INIT
from .dsp import LoudspeakerBuffer, constrain_gradient, extract_filter, zero_pad_block
from .models import FrameConfig, KfHyperParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class KalmanState:
    """
    Posterior of the stacked transfer functions after block ``tau``.

    Shapes: mean (B, M) complex, p (B, B, M) complex with real diagonal,
    psi_w and psi_dw (B, M) real, psi_n (M,) real.
    """
    frame: FrameConfig
    mean: np.ndarray
    p: np.ndarray
    psi_w: np.ndarray
    psi_dw: np.ndarray
    psi_n: np.ndarray
    tau: int = 0

    @property
    def p_diag(self) -> np.ndarray:
        """Per-channel diagonal of the state uncertainty, shape (B, M)."""
        return np.einsum("bbm->bm", self.p).real.copy()

    def filters(self) -> np.ndarray:
        """Current time-domain estimate, shape (B, L)."""
        return extract_filter(self.mean, self.frame)

    def with_mean(self, mean: np.ndarray) -> "KalmanState":
        return replace(self, mean=np.array(mean, dtype=complex))


def init_state(frame: FrameConfig, p0: float) -> KalmanState:
    """Zero mean, P = p0 I, Ψ^W = p0 and a tiny Ψ^N until the first block arrives."""
    if p0 <= 0:
        raise ValueError(f"p0 must be positive, got {p0}")
    B, M = frame.num_channels, frame.dft_length
    p = np.zeros((B, B, M), dtype=complex)
    p[np.arange(B), np.arange(B)] = p0
    return KalmanState(
        frame=frame,
        mean=np.zeros((B, M), dtype=complex),
        p=p,
        psi_w=np.full((B, M), float(p0)),
        psi_dw=np.zeros((B, M)),
        psi_n=np.full(M, PSI_N_INIT),
    )


def _check_spectra(state: KalmanState, spectra) -> np.ndarray:
    X = np.asarray(spectra)
    expected = (state.frame.num_channels, state.frame.dft_length)
    if X.shape != expected:
        raise ValueError(f"spectra must have shape {expected}, got {X.shape}")
    return X


def predict_echo(state: KalmanState, spectra) -> np.ndarray:
    """R-sample echo estimate Q1ᵀ F⁻¹ Σ_b X_b ŵ_b of the current mean."""
    X = _check_spectra(state, spectra)
    y = np.fft.ifft(np.sum(X * state.mean, axis=0)).real
    return y[state.frame.filter_length:]


def prior_error(state: KalmanState, spectra, mic_block) -> np.ndarray:
    """Prior error spectrum e⁺ = F Q1 (y - d̂) of the zero-padded block."""
    y = np.asarray(mic_block, dtype=float)
    if y.shape != (state.frame.frame_shift,):
        raise ValueError(f"mic_block must have length {state.frame.frame_shift}, got {y.shape}")
    return np.fft.fft(zero_pad_block(y - predict_echo(state, spectra), state.frame))


def track_noise_covariances(state: KalmanState, e_plus, hyper: KfHyperParams) -> KalmanState:
    """Recursive averages of the ATF power, process noise and observation noise diagonals."""
    e = np.asarray(e_plus)
    psi_w = hyper.lambda_w * state.psi_w + (1.0 - hyper.lambda_w) * np.abs(state.mean) ** 2
    psi_dw = (1.0 - hyper.a**2) * psi_w
    psi_n = hyper.lambda_n * state.psi_n + (1.0 - hyper.lambda_n) * np.abs(e) ** 2
    return replace(state, psi_w=psi_w, psi_dw=psi_dw, psi_n=psi_n)


def kf_update(state: KalmanState, spectra, e_plus, hyper: KfHyperParams) -> KalmanState:
    """
    One Kalman correction step.

    Prediction P⁺ = A²P + Ψ^ΔW, innovation power D, gain Λ, gradient-constrained
    mean update and the covariance update. P is re-symmetrized afterwards and
    negative diagonal entries from round-off are clamped to zero.
    """
    X = _check_spectra(state, spectra)
    e = np.asarray(e_plus)
    frame = state.frame
    B = frame.num_channels
    ratio = frame.dft_length / frame.frame_shift
    idx = np.arange(B)

    p_plus = hyper.a**2 * state.p
    p_plus[idx, idx] += state.psi_dw

    # (xᵀ P⁺)_j = Σ_l X_l P⁺_lj and Λ_i = Σ_j P⁺_ij conj(X_j) / D
    row = np.einsum("lm,ljm->jm", X, p_plus)
    d = np.einsum("jm,jm->m", row, X.conj()).real + ratio * state.psi_n
    if np.any(d <= INNOVATION_FLOOR):
        logger.debug("innovation power floored in %d bins", int(np.sum(d <= INNOVATION_FLOOR)))
        d = np.maximum(d, INNOVATION_FLOOR)
    gain = np.einsum("ijm,jm->im", p_plus, X.conj()) / d

    mean = state.mean + constrain_gradient(gain * e, frame)

    p = p_plus - (1.0 / ratio) * np.einsum("im,jm->ijm", gain, row)
    p = 0.5 * (p + np.conj(np.swapaxes(p, 0, 1)))
    diag = np.maximum(p[idx, idx].real, 0.0)
    p[idx, idx] = diag

    return replace(state, mean=mean, p=p, tau=state.tau + 1)


@dataclass(frozen=True, eq=False)
class BlockResult:
    """Per-block outputs used by the harness."""
    error: np.ndarray
    echo_estimate: np.ndarray
    filters: np.ndarray


class FdkfFilter:
    """
    Streaming baseline estimator.

    Feed one block of loudspeaker samples ``(B, R)`` and the matching
    microphone block ``(R,)`` at a time.
    """

    def __init__(self, frame: FrameConfig, hyper: Optional[KfHyperParams] = None, p0: Optional[float] = None):
        self.frame = frame
        self.hyper = hyper or KfHyperParams()
        self.state = init_state(frame, self.hyper.p0 if p0 is None else p0)
        self._buffer = LoudspeakerBuffer(frame)

    def _correct(self, spectra: np.ndarray, e_plus: np.ndarray, mic_block: np.ndarray) -> None:
        state = track_noise_covariances(self.state, e_plus, self.hyper)
        self.state = kf_update(state, spectra, e_plus, self.hyper)

    def process_block(self, loudspeaker_block, mic_block) -> BlockResult:
        spectra = self._buffer.push(loudspeaker_block)
        echo = predict_echo(self.state, spectra)
        mic = np.asarray(mic_block, dtype=float)
        e_plus = prior_error(self.state, spectra, mic)
        self._correct(spectra, e_plus, mic)
        return BlockResult(error=mic - echo, echo_estimate=echo, filters=self.state.filters())
