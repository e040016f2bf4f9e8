"""
Room impulse response simulation with the image-source method.

**What:** Simulated loudspeaker-to-microphone impulse responses for a shoebox
room, random microphone placement over a spherical segment around the
loudspeaker array, and batch generation of training corpora and test AIRs.

**How:** Walls share one reflection coefficient derived from T60 with
Eyring's formula. Image amplitudes are gathered on a delay grid oversampled
32 times and rendered through a Hann-windowed sinc of 81 taps (one polyphase
branch per sub-sample phase), so every tap before the direct-path delay
minus 40 is exactly zero and the output is prefix-stable in W.

**Why:** Training and test AIRs describe one acoustic scene. Each sample
draws its position from a generator keyed by (seed, stream, index), and the
result is the same for any worker count.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .constants import (
    DELAY_OVERSAMPLE,
    SEED_STREAM_CORPUS,
    SEED_STREAM_TEST,
    SINC_HALF_WIDTH,
    SPEED_OF_SOUND,
)
from .models import FrameConfig, RoomSpec, SceneGeometry
from .subspace import Provenance, TrainingSet
from .utils import derive_rng, ordered_map, stable_hash

logger = logging.getLogger(__name__)

Point = Tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class AirSample:
    """Full-length impulse responses from every loudspeaker to one microphone position."""
    channels: np.ndarray
    mic_position: Point

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    def air_vector(self, filter_length: int) -> np.ndarray:
        """First ``filter_length`` taps per channel, stacked channel-major."""
        return self.channels[:, :filter_length].reshape(-1).copy()


def eyring_reflection(room: RoomSpec) -> float:
    """Pressure reflection coefficient shared by all six walls."""
    lx, ly, lz = room.dimensions
    volume = lx * ly * lz
    surface = 2.0 * (lx * ly + lx * lz + ly * lz)
    return math.exp(-(24.0 * math.log(10.0) / SPEED_OF_SOUND) * volume / (2.0 * surface * room.t60))


def reflection_order(room: RoomSpec) -> int:
    travel = SPEED_OF_SOUND * room.air_length / room.fs
    return int(math.ceil(travel / min(room.dimensions))) + 1


def _fractional_delay_bank() -> np.ndarray:
    """
    Hann-windowed sinc taps for every sub-sample phase, shape (oversample, 2*half + 2).

    Row ``r`` holds k(m - r/oversample) for integer m in [-half, half + 1].
    """
    half = SINC_HALF_WIDTH
    m = np.arange(-half, half + 2)
    phases = np.arange(DELAY_OVERSAMPLE) / DELAY_OVERSAMPLE
    t = m[None, :] - phases[:, None]
    window = np.where(np.abs(t) < half + 1, 0.5 * (1.0 + np.cos(np.pi * t / (half + 1))), 0.0)
    return window * np.sinc(t)


_DELAY_BANK = _fractional_delay_bank()


def _check_point(room: RoomSpec, point, what: str) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"{what} must be a 3-D point, got shape {p.shape}")
    if not room.contains(p):
        raise ValueError(f"{what} {tuple(p)} is outside room {room.dimensions}")
    return p


def simulate_rir(room: RoomSpec, source, mic, reflection: Optional[float] = None) -> np.ndarray:
    """
    Impulse response of length W from ``source`` to ``mic``.

    Args:
        room: Room geometry, T60, sampling rate and response length
        source: Source position in metres
        mic: Microphone position in metres
        reflection: Override of the Eyring wall reflection coefficient (0 gives free field)

    Returns:
        Real array of length ``room.air_length``
    """
    src = _check_point(room, source, "source")
    rcv = _check_point(room, mic, "mic")
    if np.allclose(src, rcv):
        raise ValueError("source and mic must not coincide")
    beta = eyring_reflection(room) if reflection is None else float(reflection)
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"reflection coefficient must lie in [0, 1], got {beta}")

    W = room.air_length
    dims = np.asarray(room.dimensions, dtype=float)
    order = reflection_order(room) if beta > 0 else 0
    n = np.arange(-order, order + 1)
    grid = np.stack(np.meshgrid(n, n, n, indexing="ij"), axis=-1).reshape(-1, 3)

    max_delay = W + SINC_HALF_WIDTH
    scale = room.fs / SPEED_OF_SOUND
    quantized, amplitudes = [], []
    for parity in np.ndindex(2, 2, 2):
        p = np.asarray(parity)
        images = (1 - 2 * p) * (src + 2.0 * grid * dims)
        dist = np.linalg.norm(images - rcv, axis=1)
        delay = dist * scale
        keep = delay < max_delay
        if not np.any(keep):
            continue
        hits = np.abs(grid[keep] + p).sum(axis=1) + np.abs(grid[keep]).sum(axis=1)
        amp = np.power(beta, hits) / (4.0 * np.pi * dist[keep])
        quantized.append(np.rint(delay[keep] * DELAY_OVERSAMPLE).astype(np.int64))
        amplitudes.append(amp)

    if not quantized:
        logger.debug("no image source within %d samples of %s", W, tuple(rcv))
        return np.zeros(W)
    q = np.concatenate(quantized)
    amp = np.concatenate(amplitudes)
    whole, phase = np.divmod(q, DELAY_OVERSAMPLE)
    length = int(whole.max()) + 1
    h = np.zeros(length + _DELAY_BANK.shape[1] - 1)
    for r in np.unique(phase):
        sel = phase == r
        taps = np.bincount(whole[sel], weights=amp[sel], minlength=length)
        h += np.convolve(taps, _DELAY_BANK[r])
    h = h[SINC_HALF_WIDTH:]
    out = np.zeros(W)
    out[: min(W, h.size)] = h[:W]
    return out


def direct_path_delay(room: RoomSpec, source, mic) -> float:
    """Direct-path delay in (fractional) samples."""
    return float(np.linalg.norm(np.asarray(source) - np.asarray(mic)) * room.fs / SPEED_OF_SOUND)


def sample_mic_position(geom: SceneGeometry, rng: np.random.Generator, room: Optional[RoomSpec] = None,
                        max_attempts: int = 1000) -> Point:
    """
    Draw a microphone position uniformly over the volume of the spherical segment.

    The radius follows the r² density, the azimuth is uniform and the sine of the
    elevation is uniform. Draws outside ``room`` are rejected.
    """
    r_min, r_max = geom.radius_range
    th_min, th_max = np.radians(geom.azimuth_range)
    s_min, s_max = np.sin(np.radians(geom.elevation_range))
    center = np.asarray(geom.array_center, dtype=float)
    for _ in range(max_attempts):
        u = rng.random(3)
        r = np.cbrt(r_min**3 + u[0] * (r_max**3 - r_min**3))
        theta = th_min + u[1] * (th_max - th_min)
        sin_phi = s_min + u[2] * (s_max - s_min)
        cos_phi = np.sqrt(max(0.0, 1.0 - sin_phi**2))
        point = center + r * np.array([cos_phi * np.cos(theta), cos_phi * np.sin(theta), sin_phi])
        if room is None or room.contains(point):
            return tuple(float(v) for v in point)
    raise ValueError(f"segment of {geom!r} has no point inside the room after {max_attempts} draws")


def _simulate_sample(args) -> AirSample:
    room, geom, seed, stream, index = args
    rng = derive_rng(seed, stream, index)
    mic = sample_mic_position(geom, rng, room)
    channels = np.stack([simulate_rir(room, src, mic) for src in geom.loudspeaker_positions])
    return AirSample(channels, mic)


def _generate(room: RoomSpec, geom: SceneGeometry, count: int, seed: int, stream: int,
              threads: int, desc: str) -> List[AirSample]:
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    geom.check_inside(room)
    jobs = [(room, geom, seed, stream, i) for i in range(count)]
    return ordered_map(_simulate_sample, jobs, threads=threads, desc=desc)


def generate_corpus(room: RoomSpec, geom: SceneGeometry, frame: FrameConfig, count: int, seed: int,
                    threads: int = 1) -> TrainingSet:
    """Simulate ``count`` positions and keep the first L taps of every channel."""
    if geom.num_channels != frame.num_channels:
        raise ValueError(f"geometry has {geom.num_channels} loudspeakers, frame expects {frame.num_channels}")
    if room.air_length < frame.filter_length:
        raise ValueError("room.air_length must be >= frame.filter_length")
    samples = _generate(room, geom, count, seed, SEED_STREAM_CORPUS, threads, "corpus")
    vectors = np.stack([s.air_vector(frame.filter_length) for s in samples])
    logger.info("Generated corpus: K=%d, B=%d, L=%d", count, frame.num_channels, frame.filter_length)
    return TrainingSet(vectors, frame, Provenance(seed=seed, geometry_hash=stable_hash(room, geom)))


def generate_test_airs(room: RoomSpec, geom: SceneGeometry, count: int, seed: int,
                       threads: int = 1) -> List[AirSample]:
    """Full-length ground-truth AIRs, drawn from a seed stream separate from the corpus."""
    return _generate(room, geom, count, seed, SEED_STREAM_TEST, threads, "test AIRs")


def simulate_positions(room: RoomSpec, sources: Sequence[Point], mic: Point) -> np.ndarray:
    """Impulse responses from several sources to one microphone, shape (len(sources), W)."""
    return np.stack([simulate_rir(room, s, mic) for s in sources])
