"""
Block DFT primitives for overlap-save system identification.

**What:** DFT convention, overlap-save convolution and the zero-padding,
truncation and gradient-constraint operators every estimator builds on.

**How:** All transforms are full-length (M complex bins). The forward DFT is
unnormalized (``numpy.fft.fft``) and the inverse carries 1/M, so
``‖dft(x)‖² = M‖x‖²``. Multi-channel quantities are arrays with a leading
channel axis and the bin/tap axis last.
"""
import logging
from typing import Optional

import numpy as np

from .models import FrameConfig

logger = logging.getLogger(__name__)


def _check_length(x: np.ndarray, expected: int, what: str) -> None:
    if x.shape[-1] != expected:
        raise ValueError(f"{what} must have length {expected} along the last axis, got {x.shape[-1]}")


def dft(block, frame: Optional[FrameConfig] = None) -> np.ndarray:
    """Unnormalized DFT along the last axis; checks the length against M when a frame is given."""
    x = np.asarray(block)
    if frame is not None:
        _check_length(x, frame.dft_length, "block")
    return np.fft.fft(x, axis=-1)


def idft(spectrum, frame: Optional[FrameConfig] = None) -> np.ndarray:
    """Inverse of :func:`dft` (complex output; callers take ``.real`` for real signals)."""
    X = np.asarray(spectrum)
    if frame is not None:
        _check_length(X, frame.dft_length, "spectrum")
    return np.fft.ifft(X, axis=-1)


def embed_filter(air_channel, frame: FrameConfig) -> np.ndarray:
    """DFT of ``[air; 0_R]``: maps L taps to an M-bin transfer function."""
    a = np.asarray(air_channel, dtype=float)
    _check_length(a, frame.filter_length, "air_channel")
    return np.fft.fft(a, n=frame.dft_length, axis=-1)


def extract_filter(atf, frame: FrameConfig) -> np.ndarray:
    """First L taps of the inverse DFT; left inverse of :func:`embed_filter`."""
    W = np.asarray(atf)
    _check_length(W, frame.dft_length, "atf")
    return np.fft.ifft(W, axis=-1)[..., : frame.filter_length].real


def embed_filters(air_vector, frame: FrameConfig) -> np.ndarray:
    """Stacked AIR vector(s) ``(..., B*L)`` to per-channel ATFs ``(..., B, M)``."""
    w = np.asarray(air_vector, dtype=float)
    _check_length(w, frame.vector_length, "air_vector")
    channels = w.reshape(*w.shape[:-1], frame.num_channels, frame.filter_length)
    return embed_filter(channels, frame)


def extract_filters(atfs, frame: FrameConfig) -> np.ndarray:
    """Per-channel ATFs ``(..., B, M)`` to the stacked channel-major AIR vector ``(..., B*L)``."""
    taps = extract_filter(atfs, frame)
    return taps.reshape(*taps.shape[:-2], frame.vector_length)


def constrain_gradient(atf, frame: FrameConfig) -> np.ndarray:
    """
    Apply G = F Q2 Q2ᵀ F⁻¹ along the last axis.

    The time-domain image is truncated to its first L samples. The
    operator is complex-linear (no ``.real``), which keeps it an orthogonal
    projector on C^M.
    """
    W = np.asarray(atf)
    _check_length(W, frame.dft_length, "atf")
    t = np.fft.ifft(W, axis=-1)
    t[..., frame.filter_length:] = 0.0
    return np.fft.fft(t, axis=-1)


def os_convolve(loudspeaker_history, atf, frame: FrameConfig) -> np.ndarray:
    """
    Overlap-save filtering of one block: last R samples of the circular convolution.

    Args:
        loudspeaker_history: Most recent M samples of one (or ``(B, M)`` several) channel(s)
        atf: Q2-embedded transfer function(s) matching ``loudspeaker_history``

    Returns:
        The R valid output samples (per channel when inputs are stacked)
    """
    x = np.asarray(loudspeaker_history, dtype=float)
    W = np.asarray(atf)
    _check_length(x, frame.dft_length, "loudspeaker_history")
    _check_length(W, frame.dft_length, "atf")
    y = np.fft.ifft(np.fft.fft(x, axis=-1) * W, axis=-1).real
    return y[..., frame.filter_length:]


def zero_pad_block(block, frame: FrameConfig) -> np.ndarray:
    """Q1 applied to an R-sample block: ``[0_L; block]``."""
    b = np.asarray(block)
    _check_length(b, frame.frame_shift, "block")
    pad = [(0, 0)] * (b.ndim - 1) + [(frame.filter_length, 0)]
    return np.pad(b, pad)


def block_count(num_samples: int, frame: FrameConfig) -> int:
    """Number of complete R-sample blocks in a stream."""
    return int(num_samples) // frame.frame_shift


class LoudspeakerBuffer:
    """
    Sliding window of the most recent M loudspeaker samples per channel.

    Block τ covers samples τR−M+1 … τR; samples before the stream start are zero.
    Single writer per stream.
    """

    def __init__(self, frame: FrameConfig):
        self.frame = frame
        self._history = np.zeros((frame.num_channels, frame.dft_length))

    @property
    def history(self) -> np.ndarray:
        return self._history.copy()

    def push(self, block) -> np.ndarray:
        """Append one ``(B, R)`` block and return the ``(B, M)`` spectra of the new window."""
        b = np.asarray(block, dtype=float)
        if b.shape != (self.frame.num_channels, self.frame.frame_shift):
            raise ValueError(
                f"block must have shape {(self.frame.num_channels, self.frame.frame_shift)}, got {b.shape}"
            )
        R = self.frame.frame_shift
        self._history = np.concatenate([self._history[:, R:], b], axis=1)
        return np.fft.fft(self._history, axis=-1)

    def reset(self) -> None:
        self._history[:] = 0.0
