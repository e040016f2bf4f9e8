"""
Tests for configuration models
"""
import pytest

from airsubspace.models import (
    AnalysisConfig,
    CorpusConfig,
    ExperimentConfig,
    Excitation,
    FarEndConfig,
    FrameConfig,
    FusionConfig,
    FusionMode,
    KfHyperParams,
    Metric,
    RoomSpec,
    SceneGeometry,
    VariantConfig,
    VariantKind,
)


class TestFrameConfig:
    """Test FrameConfig model"""

    def test_derived_lengths(self):
        """Test M = R + L and Q = B * L"""
        frame = FrameConfig(filter_length=256, frame_shift=128, num_channels=2)
        assert frame.dft_length == 384
        assert frame.vector_length == 512

    def test_defaults(self):
        """Test desk-scale defaults"""
        frame = FrameConfig()
        assert frame.filter_length == 256
        assert frame.frame_shift == 256
        assert frame.fs == 8000

    def test_rejects_zero_length(self):
        """Test filter length validation (must be >= 1)"""
        with pytest.raises(ValueError):
            FrameConfig(filter_length=0)

    def test_rejects_unknown_keys(self):
        """Test that typos in config keys are errors"""
        with pytest.raises(ValueError):
            FrameConfig(filter_lenght=256)

    def test_frozen(self):
        """Test records are immutable"""
        frame = FrameConfig()
        with pytest.raises(ValueError):
            frame.filter_length = 3


class TestRoomAndGeometry:
    """Test RoomSpec and SceneGeometry models"""

    def test_contains(self):
        """Test strict containment"""
        room = RoomSpec(dimensions=(4.0, 3.0, 2.5))
        assert room.contains((1.0, 1.0, 1.0))
        assert not room.contains((0.0, 1.0, 1.0))
        assert not room.contains((4.5, 1.0, 1.0))

    def test_rejects_non_positive_dimensions(self):
        """Test room dimension validation"""
        with pytest.raises(ValueError, match="positive"):
            RoomSpec(dimensions=(4.0, 0.0, 2.5))

    def test_default_geometry(self):
        """Test the default two-loudspeaker scene"""
        geom = SceneGeometry()
        assert geom.num_channels == 2
        assert geom.radius_range == (1.2, 1.4)
        geom.check_inside(RoomSpec())

    def test_unordered_range(self):
        """Test range ordering validation"""
        with pytest.raises(ValueError, match="radius_range"):
            SceneGeometry(radius_range=(1.4, 1.2))
        with pytest.raises(ValueError, match="azimuth_range"):
            SceneGeometry(azimuth_range=(90.0, 45.0))

    def test_elevation_bounds(self):
        """Test elevation must stay within [-90, 90]"""
        with pytest.raises(ValueError, match="elevation_range"):
            SceneGeometry(elevation_range=(-100.0, 0.0))

    def test_check_inside(self):
        """Test loudspeakers outside the room are rejected"""
        geom = SceneGeometry(loudspeaker_positions=[(10.0, 2.0, 1.2)])
        with pytest.raises(ValueError, match="outside"):
            geom.check_inside(RoomSpec())


class TestVariantConfig:
    """Test VariantConfig model"""

    def test_baseline_name(self):
        """Test baseline default name"""
        variant = VariantConfig()
        assert variant.kind == VariantKind.BASELINE_KF
        assert variant.name == "baseline_kf"
        assert variant.fusion is None

    def test_kfasp_fills_fusion(self):
        """Test fusion defaults for KF-ASP variants"""
        variant = VariantConfig(kind="kfasp")
        assert variant.fusion == FusionConfig()
        assert variant.fusion.k_tau == 80
        assert variant.fusion.p0 == 0.1
        assert variant.name == "kfasp-kf-soft"

    def test_kfasp_name_variants(self):
        """Test generated names reflect metric, mode and switch"""
        hard = VariantConfig(kind="kfasp", fusion={"metric": "euclidean", "mode": "hard_projection"})
        off = VariantConfig(kind="kfasp", fusion={"enabled": False})
        assert hard.name == "kfasp-euclidean-hard"
        assert off.name == "kfasp-kf-soft-off"

    def test_explicit_name(self):
        """Test explicit names win"""
        assert VariantConfig(kind="kfasp", name="mine").name == "mine"

    def test_baseline_rejects_fusion(self):
        """Test baseline variants take no fusion table"""
        with pytest.raises(ValueError, match="no fusion"):
            VariantConfig(kind="baseline_kf", fusion={})

    @pytest.mark.parametrize("kind", ["oracle_gt", "oracle_nn"])
    def test_oracle_kinds(self, kind):
        """Test oracle variants are named after their kind and take no fusion table"""
        assert VariantConfig(kind=kind).name == kind
        assert VariantConfig(kind=kind).fusion is None
        with pytest.raises(ValueError, match=f"{kind} variants take no fusion"):
            VariantConfig(kind=kind, fusion={})

    def test_kfasp_conflicting_p0(self):
        """Test an explicit hyper.p0 must agree with fusion.p0"""
        with pytest.raises(ValueError, match="fusion.p0"):
            VariantConfig(kind="kfasp", hyper={"p0": 0.01})
        with pytest.raises(ValueError, match="fusion.p0"):
            VariantConfig(kind="kfasp", hyper={"p0": 0.01}, fusion={"p0": 0.2})

    def test_kfasp_matching_p0(self):
        """Test agreeing or implicit p0 values are accepted"""
        assert VariantConfig(kind="kfasp", hyper={"p0": 0.2}, fusion={"p0": 0.2}).fusion.p0 == 0.2
        implicit = VariantConfig(kind="kfasp", hyper={"a": 0.999})
        assert implicit.hyper.p0 == KfHyperParams().p0
        assert implicit.fusion.p0 == 0.1
        assert VariantConfig(kind="baseline_kf", hyper={"p0": 0.01}).hyper.p0 == 0.01

    def test_enum_values_are_strings(self):
        """Test enums are stored as their values"""
        fusion = FusionConfig(metric=Metric.EUCLIDEAN, mode=FusionMode.HARD_PROJECTION)
        assert fusion.model_dump()["metric"] == "euclidean"
        assert fusion.mode == "hard_projection"

    def test_hyper_ranges(self):
        """Test Kalman hyperparameter validation"""
        with pytest.raises(ValueError):
            KfHyperParams(a=0.0)
        with pytest.raises(ValueError):
            KfHyperParams(lambda_w=1.5)
        with pytest.raises(ValueError):
            FusionConfig(k_tau=1)


class TestExperimentConfig:
    """Test ExperimentConfig cross-field checks"""

    def test_defaults_are_consistent(self):
        """Test the default config validates"""
        config = ExperimentConfig()
        assert config.excitation == Excitation.WGN
        assert config.snr_wgn == float("inf")
        assert config.trials == 20
        assert config.duration == 10.0

    def test_fs_mismatch(self):
        """Test room and frame sampling rates must agree"""
        with pytest.raises(ValueError, match="fs"):
            ExperimentConfig(room={"fs": 16000})

    def test_air_length_shorter_than_filter(self):
        """Test W >= L"""
        with pytest.raises(ValueError, match="air_length"):
            ExperimentConfig(room={"air_length": 128})

    def test_channel_count_mismatch(self):
        """Test loudspeaker count must equal B"""
        with pytest.raises(ValueError, match="loudspeakers"):
            ExperimentConfig(frame={"num_channels": 3})

    def test_duplicate_variant_names(self):
        """Test variant names must be unique"""
        with pytest.raises(ValueError, match="unique"):
            ExperimentConfig(variants=[{}, {}])

    def test_nan_snr(self):
        """Test NaN SNR is rejected"""
        with pytest.raises(ValueError, match="SNR"):
            ExperimentConfig(snr_wgn=float("nan"))

    def test_far_end_checked_for_teleconference(self):
        """Test far-end positions are only checked for the teleconference scenario"""
        far_end = FarEndConfig(talker_positions=((9.0, 2.0, 1.5), (3.5, 2.5, 1.6)))
        ExperimentConfig(far_end=far_end)
        with pytest.raises(ValueError, match="far-end"):
            ExperimentConfig(excitation="teleconference", far_end=far_end)

    def test_corpus_seed(self):
        """Test corpus seed falls back to the experiment seed"""
        assert ExperimentConfig(seed=5).corpus_seed == 5
        assert ExperimentConfig(seed=5, corpus=CorpusConfig(seed=9)).corpus_seed == 9

    def test_mic_positions(self):
        """Test far-end microphone array layout"""
        mics = FarEndConfig().mic_positions(2)
        assert mics[0][0] == pytest.approx(2.45)
        assert mics[1][0] == pytest.approx(2.55)


class TestAnalysisConfig:
    """Test AnalysisConfig model"""

    def test_defaults(self):
        """Test default study settings"""
        config = AnalysisConfig()
        assert config.models == ["global", "mixture", "knn"]
        assert config.dims == [0, 4, 8, 16, 32]
        assert config.clusters == 40

    def test_negative_dim(self):
        """Test dimensions must be non-negative"""
        with pytest.raises(ValueError, match="dims"):
            AnalysisConfig(dims=[-1])
