"""
Data Models for airsubspace

Pydantic models for configuration validation and serialization across all modules.
Every record forbids unknown keys so that a typo in a config file is an error.
"""
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .constants import (
    BETA_PR_DEFAULT,
    DEFAULT_DURATION_S,
    DEFAULT_FILTER_LENGTH,
    DEFAULT_FRAME_SHIFT,
    DEFAULT_FS,
    DEFAULT_SWITCH_TIME_S,
    ERLE_LAMBDA_DEFAULT,
    K_TAU_DEFAULT,
    KF_A_DEFAULT,
    KF_LAMBDA_N_DEFAULT,
    KF_LAMBDA_W_DEFAULT,
    KF_P0_BASELINE,
    KF_P0_FUSION,
    SEARCH_STRIDE_DEFAULT,
)

Point = Tuple[float, float, float]
Range = Tuple[float, float]


# Enums

class Metric(str, Enum):
    """Neighbour search distance"""
    EUCLIDEAN = "euclidean"
    KF = "kf"


class FusionMode(str, Enum):
    """How the projected estimate is merged with the Kalman mean"""
    HARD_PROJECTION = "hard_projection"
    SOFT_COMBINATION = "soft_combination"


class Excitation(str, Enum):
    """Loudspeaker excitation scenario"""
    WGN = "wgn"
    SPEECH_INDEPENDENT = "speech_independent"
    TELECONFERENCE = "teleconference"


class VariantKind(str, Enum):
    """Estimator family run by the harness"""
    BASELINE_KF = "baseline_kf"
    KFASP = "kfasp"
    ORACLE_GT = "oracle_gt"
    ORACLE_NN = "oracle_nn"


class SubspaceModelKind(str, Enum):
    """Affine subspace model evaluated by the analysis command"""
    GLOBAL = "global"
    MIXTURE = "mixture"
    KNN = "knn"


class TrialAveraging(str, Enum):
    """Domain in which per-trial curves are averaged"""
    DB = "db"
    LINEAR = "linear"


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=True, validate_default=True)


# Signal Framing

class FrameConfig(_Record):
    """Block framing: filter length L, frame shift R, DFT length M = R + L."""
    filter_length: int = Field(default=DEFAULT_FILTER_LENGTH, ge=1)
    frame_shift: int = Field(default=DEFAULT_FRAME_SHIFT, ge=1)
    num_channels: int = Field(default=2, ge=1)
    fs: float = Field(default=DEFAULT_FS, gt=0)

    @property
    def dft_length(self) -> int:
        return self.filter_length + self.frame_shift

    @property
    def vector_length(self) -> int:
        """Length Q = L * B of a stacked time-domain filter vector."""
        return self.filter_length * self.num_channels


# Room Acoustics

class RoomSpec(_Record):
    """Shoebox room simulated with the image-source method."""
    dimensions: Point = (6.0, 5.0, 3.5)
    t60: float = Field(default=0.3, gt=0)
    fs: float = Field(default=DEFAULT_FS, gt=0)
    air_length: int = Field(default=2048, ge=1)

    @model_validator(mode="after")
    def _check_dimensions(self) -> "RoomSpec":
        if any(d <= 0 for d in self.dimensions):
            raise ValueError(f"room dimensions must be positive, got {self.dimensions}")
        return self

    def contains(self, point) -> bool:
        """True when the point lies strictly inside the room."""
        return all(0.0 < p < d for p, d in zip(point, self.dimensions))


class SceneGeometry(_Record):
    """Loudspeaker array and the spherical segment microphones are drawn from."""
    loudspeaker_positions: List[Point] = Field(
        default_factory=lambda: [(2.95, 2.0, 1.2), (3.05, 2.0, 1.2)], min_length=1
    )
    array_center: Point = (3.0, 2.0, 1.2)
    radius_range: Range = (1.2, 1.4)
    azimuth_range: Range = (45.0, 135.0)
    elevation_range: Range = (-5.0, 40.0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "SceneGeometry":
        r_min, r_max = self.radius_range
        if r_min < 0 or r_min > r_max:
            raise ValueError(f"radius_range must satisfy 0 <= r_min <= r_max, got {self.radius_range}")
        for name in ("azimuth_range", "elevation_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be ordered, got {(lo, hi)}")
        lo, hi = self.elevation_range
        if lo < -90.0 or hi > 90.0:
            raise ValueError(f"elevation_range must lie within [-90, 90], got {(lo, hi)}")
        return self

    @property
    def num_channels(self) -> int:
        return len(self.loudspeaker_positions)

    def check_inside(self, room: RoomSpec) -> None:
        """Raise ValueError unless every fixed position lies strictly inside the room."""
        for pos in [*self.loudspeaker_positions, self.array_center]:
            if not room.contains(pos):
                raise ValueError(f"position {pos} is outside room {room.dimensions}")


# Estimators

class KfHyperParams(_Record):
    """Kalman filter transition and noise-tracking parameters."""
    a: float = Field(default=KF_A_DEFAULT, gt=0, le=1)
    lambda_w: float = Field(default=KF_LAMBDA_W_DEFAULT, ge=0, le=1)
    lambda_n: float = Field(default=KF_LAMBDA_N_DEFAULT, ge=0, le=1)
    p0: float = Field(default=KF_P0_BASELINE, gt=0)


class FusionConfig(_Record):
    """Neighbourhood subspace fusion settings."""
    k_tau: int = Field(default=K_TAU_DEFAULT, ge=2)
    beta_pr: float = Field(default=BETA_PR_DEFAULT, gt=0)
    metric: Metric = Metric.KF
    mode: FusionMode = FusionMode.SOFT_COMBINATION
    p0: float = Field(default=KF_P0_FUSION, gt=0)
    enabled: bool = True
    search_stride: int = Field(default=SEARCH_STRIDE_DEFAULT, ge=1)


class VariantConfig(_Record):
    """One estimator configuration evaluated by the experiment runner."""
    kind: VariantKind = VariantKind.BASELINE_KF
    name: Optional[str] = None
    hyper: KfHyperParams = Field(default_factory=KfHyperParams)
    fusion: Optional[FusionConfig] = None

    @model_validator(mode="after")
    def _fill_defaults(self) -> "VariantConfig":
        if self.kind == VariantKind.KFASP and self.fusion is None:
            object.__setattr__(self, "fusion", FusionConfig())
        if self.kind != VariantKind.KFASP and self.fusion is not None:
            raise ValueError(f"{VariantKind(self.kind).value} variants take no fusion settings")
        if self.kind == VariantKind.KFASP and "p0" in self.hyper.model_fields_set and self.hyper.p0 != self.fusion.p0:
            raise ValueError(
                f"kfasp variants initialize P from fusion.p0={self.fusion.p0}; hyper.p0={self.hyper.p0} conflicts"
            )
        if self.name is None:
            object.__setattr__(self, "name", self.default_name())
        return self

    def default_name(self) -> str:
        if self.kind != VariantKind.KFASP:
            return VariantKind(self.kind).value
        f = self.fusion
        mode = "hard" if f.mode == FusionMode.HARD_PROJECTION else "soft"
        suffix = "" if f.enabled else "-off"
        return f"kfasp-{f.metric}-{mode}{suffix}"


# Harness

class CorpusConfig(_Record):
    """Training corpus location and size."""
    path: str = "corpus.airs"
    count: int = Field(default=1000, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)


class FarEndConfig(_Record):
    """Far-end room used to render correlated teleconference playback."""
    room: RoomSpec = Field(default_factory=lambda: RoomSpec(dimensions=(5.0, 4.0, 3.0), t60=0.4, air_length=1024))
    talker_positions: Tuple[Point, Point] = ((1.5, 2.0, 1.5), (3.5, 2.5, 1.6))
    mic_center: Point = (2.5, 1.2, 1.2)
    mic_spacing: float = Field(default=0.1, gt=0)

    def mic_positions(self, count: int) -> List[Point]:
        """Linear array along x centred on mic_center."""
        cx, cy, cz = self.mic_center
        offsets = [(i - (count - 1) / 2.0) * self.mic_spacing for i in range(count)]
        return [(cx + o, cy, cz) for o in offsets]


class ExperimentConfig(_Record):
    """Full description of a multi-trial estimator comparison."""
    frame: FrameConfig = Field(default_factory=FrameConfig)
    room: RoomSpec = Field(default_factory=RoomSpec)
    geometry: SceneGeometry = Field(default_factory=SceneGeometry)
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    excitation: Excitation = Excitation.WGN
    wav_paths: List[str] = Field(default_factory=list)
    snr_wgn: float = float("inf")
    snr_sp: float = float("inf")
    trials: int = Field(default=20, ge=1)
    duration: float = Field(default=DEFAULT_DURATION_S, gt=0)
    variants: List[VariantConfig] = Field(default_factory=lambda: [VariantConfig()], min_length=1)
    seed: int = Field(default=0, ge=0)
    switch_time: float = Field(default=DEFAULT_SWITCH_TIME_S, ge=0)
    erle_lambda: float = Field(default=ERLE_LAMBDA_DEFAULT, ge=0, lt=1)
    trial_averaging: TrialAveraging = TrialAveraging.DB
    far_end: FarEndConfig = Field(default_factory=FarEndConfig)

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        if self.room.fs != self.frame.fs:
            raise ValueError(f"room.fs ({self.room.fs}) must equal frame.fs ({self.frame.fs})")
        if self.room.air_length < self.frame.filter_length:
            raise ValueError("room.air_length must be >= frame.filter_length")
        if self.geometry.num_channels != self.frame.num_channels:
            raise ValueError(
                f"geometry has {self.geometry.num_channels} loudspeakers, "
                f"frame expects {self.frame.num_channels}"
            )
        self.geometry.check_inside(self.room)
        if self.excitation == Excitation.TELECONFERENCE:
            far = self.far_end
            if far.room.fs != self.frame.fs:
                raise ValueError("far_end.room.fs must equal frame.fs")
            for pos in [*far.talker_positions, *far.mic_positions(self.frame.num_channels)]:
                if not far.room.contains(pos):
                    raise ValueError(f"far-end position {pos} is outside room {far.room.dimensions}")
        for snr in (self.snr_wgn, self.snr_sp):
            if snr != snr or snr == float("-inf"):
                raise ValueError(f"SNR must be finite or +inf, got {snr}")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise ValueError(f"variant names must be unique, got {names}")
        return self

    @property
    def corpus_seed(self) -> int:
        return self.seed if self.corpus.seed is None else self.corpus.seed


class AnalysisConfig(_Record):
    """Offline projection study of subspace models against held-out AIRs."""
    corpus_path: str = "corpus.airs"
    room: RoomSpec = Field(default_factory=RoomSpec)
    geometry: SceneGeometry = Field(default_factory=SceneGeometry)
    test_count: int = Field(default=100, ge=1)
    test_seed: int = Field(default=1, ge=0)
    models: List[SubspaceModelKind] = Field(
        default_factory=lambda: [SubspaceModelKind.GLOBAL, SubspaceModelKind.MIXTURE, SubspaceModelKind.KNN]
    )
    clusters: int = Field(default=40, ge=1)
    dims: List[int] = Field(default_factory=lambda: [0, 4, 8, 16, 32])
    kmeans_seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_dims(self) -> "AnalysisConfig":
        if any(d < 0 for d in self.dims):
            raise ValueError(f"dims must be non-negative, got {self.dims}")
        self.geometry.check_inside(self.room)
        return self
