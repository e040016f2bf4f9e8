"""
Scenario synthesis for identification experiments.

**What:** Builds one trial's loudspeaker excitation, ground-truth AIRs, clean
echo and additive noise from an :class:`ExperimentConfig` and a trial index.

**How:** Every random draw comes from child streams of the trial's seed
sequence, so a (config, trial_index) pair always reproduces the same signals.
The clean echo is a direct time-domain convolution with the full-length truth,
independent of the overlap-save code used by the estimators. Noise components
are scaled so their SNR over the whole signal matches the config exactly.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
import soundfile as sf
from scipy.signal import convolve, lfilter, resample_poly

from .constants import (
    CROSSFADE_S,
    SEED_STREAM_TRIAL,
    SPEECH_AR_ORDER,
    SPEECH_PAUSE_PROB,
    SPEECH_POLE_RADIUS,
    SPEECH_SEGMENT_S,
    SPEECH_SYLLABLE_RATE,
)
from .dsp import LoudspeakerBuffer, embed_filter
from .models import Excitation, ExperimentConfig, FarEndConfig, FrameConfig
from .rir import AirSample, sample_mic_position, simulate_positions, simulate_rir
from .utils import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Signals of one trial; all streams share the length ``num_samples``."""
    excitation: np.ndarray
    clean: np.ndarray
    noise_wgn: np.ndarray
    noise_sp: np.ndarray
    ground_truth: AirSample
    trial_seed: int

    @property
    def noise(self) -> np.ndarray:
        return self.noise_wgn + self.noise_sp

    @property
    def observation(self) -> np.ndarray:
        return self.clean + self.noise

    @property
    def num_samples(self) -> int:
        return self.clean.size


# Excitation sources

def speech_like(num_samples: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    """
    Speech-like test signal with unit RMS.

    White noise through an all-pole filter (four resonances at radius 0.9),
    modulated at a syllable rate and gated by random 250 ms pauses.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be positive")
    pairs = SPEECH_AR_ORDER // 2
    freqs = np.sort(rng.uniform(200.0, min(3500.0, 0.45 * fs), size=pairs))
    poles = SPEECH_POLE_RADIUS * np.exp(1j * 2 * np.pi * freqs / fs)
    a = np.poly(np.concatenate([poles, poles.conj()])).real
    voiced = lfilter([1.0], a, rng.standard_normal(num_samples))

    t = np.arange(num_samples) / fs
    envelope = 0.5 * (1.0 - np.cos(2 * np.pi * SPEECH_SYLLABLE_RATE * t + rng.uniform(0, 2 * np.pi)))

    seg = max(1, int(round(SPEECH_SEGMENT_S * fs)))
    n_seg = -(-num_samples // seg)
    active = rng.random(n_seg) >= SPEECH_PAUSE_PROB
    if not active.any():
        active[0] = True
    gate = np.repeat(active.astype(float), seg)[:num_samples]
    ramp = np.hanning(max(3, seg // 4))
    gate = np.convolve(gate, ramp / ramp.sum(), mode="same")

    signal = voiced * envelope * gate
    rms = np.sqrt(np.mean(signal**2))
    return signal / rms if rms > 0 else signal


@lru_cache(maxsize=32)
def _read_wav(path: str) -> Tuple[np.ndarray, int]:
    data, sr = sf.read(path, dtype="float64", always_2d=True)
    if data.shape[1] != 1:
        raise ValueError(f"{path}: expected a mono file, got {data.shape[1]} channels")
    return data[:, 0], int(sr)


def load_wav(path: str, fs: float) -> np.ndarray:
    """Read a mono WAV file and resample it to ``fs`` with a polyphase windowed-sinc filter."""
    if not Path(path).is_file():
        raise FileNotFoundError(f"WAV file not found: {path}")
    data, sr = _read_wav(str(path))
    if sr == fs:
        return data.copy()
    ratio = Fraction(float(fs) / sr).limit_denominator(1000)
    logger.debug("Resampling %s from %d Hz to %s Hz (%s)", path, sr, fs, ratio)
    return resample_poly(data, ratio.numerator, ratio.denominator)


def _source_signal(wav_paths: Sequence[str], num_samples: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    if not wav_paths:
        return speech_like(num_samples, fs, rng)
    path = wav_paths[int(rng.integers(len(wav_paths)))]
    data = load_wav(path, fs)
    if data.size == 0 or not np.any(data):
        raise ValueError(f"{path}: silent or empty recording")
    reps = -(-num_samples // data.size) + 1
    looped = np.tile(data, reps)
    start = int(rng.integers(data.size))
    return looped[start: start + num_samples].copy()


def crossfade_gains(num_samples: int, fs: float, switch_time: float) -> Tuple[np.ndarray, np.ndarray]:
    """Raised-cosine hand-over from the first to the second talker centred on ``switch_time``."""
    t = np.arange(num_samples) / fs
    x = np.clip((t - (switch_time - CROSSFADE_S / 2)) / CROSSFADE_S, 0.0, 1.0)
    second = 0.5 * (1.0 - np.cos(np.pi * x))
    return 1.0 - second, second


def _far_end_responses(far_end: FarEndConfig, num_channels: int) -> np.ndarray:
    """Impulse responses from each far-end talker to each playback channel, shape (2, B, W_far)."""
    mics = far_end.mic_positions(num_channels)
    return np.stack([
        np.stack([simulate_rir(far_end.room, talker, mic) for mic in mics])
        for talker in far_end.talker_positions
    ])


def teleconference_excitation(config: ExperimentConfig, num_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Two far-end talkers with disjoint activity rendered through the far-end room into every channel."""
    fs = config.frame.fs
    talkers = [_source_signal(config.wav_paths, num_samples, fs, rng) for _ in range(2)]
    gains = crossfade_gains(num_samples, fs, config.switch_time)
    responses = _far_end_responses(config.far_end, config.frame.num_channels)
    out = np.zeros((config.frame.num_channels, num_samples))
    for talker, gain, per_channel in zip(talkers, gains, responses):
        driven = talker * gain
        for b, h in enumerate(per_channel):
            out[b] += convolve(driven, h)[:num_samples]
    return out


def render_excitation(config: ExperimentConfig, num_samples: int, rng: np.random.Generator) -> np.ndarray:
    B, fs = config.frame.num_channels, config.frame.fs
    if config.excitation == Excitation.WGN:
        return rng.standard_normal((B, num_samples))
    if config.excitation == Excitation.SPEECH_INDEPENDENT:
        return np.stack([_source_signal(config.wav_paths, num_samples, fs, rng) for _ in range(B)])
    if config.excitation == Excitation.TELECONFERENCE:
        return teleconference_excitation(config, num_samples, rng)
    raise ValueError(f"unknown excitation {config.excitation!r}")


# Mixing

def mix_at_snr(reference, noise, snr_db: float) -> np.ndarray:
    """
    Scale ``noise`` so that 10*log10(‖reference‖²/‖noise‖²) equals ``snr_db``.

    An infinite SNR returns zeros.
    """
    noise = np.asarray(noise, dtype=float)
    if np.isinf(snr_db) and snr_db > 0:
        return np.zeros_like(noise)
    ref_power = float(np.sum(np.asarray(reference, dtype=float) ** 2))
    noise_power = float(np.sum(noise**2))
    if ref_power == 0:
        raise ValueError("SNR unrealizable: clean observation is silent")
    if noise_power == 0:
        raise ValueError("SNR unrealizable: noise source is silent")
    return noise * np.sqrt(ref_power / (noise_power * 10.0 ** (snr_db / 10.0)))


def scenario_length(config: ExperimentConfig) -> int:
    """Samples per trial, rounded down to whole blocks."""
    R = config.frame.frame_shift
    n = int(config.duration * config.frame.fs) // R * R
    if n < R:
        raise ValueError(f"duration {config.duration}s is shorter than one block")
    return n


def synthesize_scenario(config: ExperimentConfig, trial_index: int) -> Scenario:
    """Deterministic trial signals for ``(config, trial_index)``."""
    seq = derive_seed(config.seed, SEED_STREAM_TRIAL, trial_index)
    pos_rng, exc_rng, wgn_rng, sp_rng = (np.random.default_rng(s) for s in seq.spawn(4))
    num_samples = scenario_length(config)

    mic = sample_mic_position(config.geometry, pos_rng, config.room)
    truth = AirSample(simulate_positions(config.room, config.geometry.loudspeaker_positions, mic), mic)
    excitation = render_excitation(config, num_samples, exc_rng)
    clean = np.zeros(num_samples)
    for x, h in zip(excitation, truth.channels):
        clean += convolve(x, h)[:num_samples]

    noise_wgn = mix_at_snr(clean, wgn_rng.standard_normal(num_samples), config.snr_wgn)
    if np.isinf(config.snr_sp):
        noise_sp = np.zeros(num_samples)
    else:
        noise_sp = mix_at_snr(clean, _source_signal(config.wav_paths, num_samples, config.frame.fs, sp_rng),
                              config.snr_sp)
    trial_seed = int(seq.generate_state(1, np.uint32)[0])
    logger.debug("Trial %d synthesized (seed word %d, mic %s)", trial_index, trial_seed, mic)
    return Scenario(excitation, clean, noise_wgn, noise_sp, truth, trial_seed)


def overlap_save_echo(excitation, truth: AirSample, frame: FrameConfig, blocks: Optional[int] = None) -> np.ndarray:
    """
    Clean echo computed block-wise through the overlap-save primitives.

    Only valid when the truth fits in L taps; used to cross-check the direct path.
    """
    h = truth.channels
    if h.shape[1] > frame.filter_length and np.any(h[:, frame.filter_length:]):
        raise ValueError("truth is longer than the filter length")
    atfs = embed_filter(h[:, : frame.filter_length], frame)
    buf = LoudspeakerBuffer(frame)
    R = frame.frame_shift
    total = blocks if blocks is not None else excitation.shape[1] // R
    out = np.zeros(total * R)
    for t in range(total):
        spectra = buf.push(excitation[:, t * R: (t + 1) * R])
        out[t * R: (t + 1) * R] = np.fft.ifft(np.sum(spectra * atfs, axis=0)).real[frame.filter_length:]
    return out
