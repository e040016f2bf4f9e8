"""
Reproduction runs for the subspace study and the estimator comparison.

All tests here are slow (minutes to hours); run them with ``pytest --slow``.
"""
import os

import numpy as np
import pytest

from airsubspace.experiment import analyze_subspace, run_experiment
from airsubspace.metrics import blocks_to_reach
from airsubspace.models import ExperimentConfig, FrameConfig, RoomSpec, SceneGeometry
from airsubspace.rir import generate_corpus, generate_test_airs

pytestmark = pytest.mark.slow

DESK_FRAME = FrameConfig(filter_length=256, frame_shift=256, num_channels=2, fs=8000)
DESK_ROOM = RoomSpec(t60=0.3, air_length=2048)
PAPER_FRAME = FrameConfig(filter_length=512, frame_shift=512, num_channels=2, fs=8000)
PAPER_ROOM = RoomSpec(t60=0.3, air_length=4096)
SOFT = "kfasp-kf-soft"
HARD = "kfasp-kf-hard"


def _desk_config(**overrides):
    base = {
        "frame": DESK_FRAME.model_dump(),
        "room": DESK_ROOM.model_dump(),
        "trials": 20,
        "duration": 10.0,
        "seed": 0,
        "snr_wgn": 0.0,
        "variants": [
            {"kind": "baseline_kf"},
            {"kind": "kfasp", "fusion": {"mode": "soft_combination"}},
            {"kind": "kfasp", "fusion": {"mode": "hard_projection"}},
        ],
    }
    base.update(overrides)
    return ExperimentConfig.model_validate(base)


def _tail_mean(curve, times, seconds):
    return float(np.mean(curve[times > times[-1] - seconds]))


@pytest.fixture(scope="module")
def geometry():
    return SceneGeometry()


@pytest.fixture(scope="module")
def desk_corpus(geometry):
    return generate_corpus(DESK_ROOM, geometry, DESK_FRAME, count=1000, seed=0)


@pytest.fixture(scope="module")
def wgn_result(desk_corpus):
    return run_experiment(_desk_config(), training=desk_corpus)


class TestSubspaceStudy:
    """Projection of held-out AIRs onto the three model families"""

    def test_model_ordering(self, desk_corpus, geometry):
        """Test knn beats the mixture and the mixture beats the global model at every dimension"""
        test_airs = generate_test_airs(DESK_ROOM, geometry, count=100, seed=1)
        dims = [4, 8, 16, 32]
        rows = analyze_subspace(desk_corpus, test_airs, ["global", "mixture", "knn"], dims, clusters=40)
        score = {(r.model, r.dim): r.mismatch_db for r in rows}
        for dim in dims:
            assert score[("knn", dim)] < score[("mixture", dim)] < score[("global", dim)]

    def test_nearest_neighbour_smoke(self, desk_corpus, geometry):
        """Test the nearest training AIR sits between the truncated truth and 0 dB at desk scale"""
        test_airs = generate_test_airs(DESK_ROOM, geometry, count=50, seed=1)
        rows = analyze_subspace(desk_corpus, test_airs, ["knn"], [0])
        score = {(r.model, r.dim): r.mismatch_db for r in rows}
        assert score[("knn", 0)] == pytest.approx(score[("oracle_nn", None)])
        assert score[("oracle_gt", None)] < score[("knn", 0)] < 0.0

    def test_nearest_neighbour_level(self, geometry):
        """Test the single nearest training AIR lands near -6.7 dB with W = 4096, L = 512 and K = 5000"""
        threads = os.cpu_count() or 1
        corpus = generate_corpus(PAPER_ROOM, geometry, PAPER_FRAME, count=5000, seed=0, threads=threads)
        test_airs = generate_test_airs(PAPER_ROOM, geometry, count=500, seed=1, threads=threads)
        assert corpus.frame.vector_length == 2 * 512
        assert test_airs[0].channels.shape == (2, 4096)
        rows = analyze_subspace(corpus, test_airs, ["knn"], [0])
        score = {(r.model, r.dim): r.mismatch_db for r in rows}
        assert score[("knn", 0)] == pytest.approx(-6.7, abs=1.5)


class TestEstimatorComparison:
    """Baseline Kalman filter against subspace fusion"""

    def test_faster_convergence(self, wgn_result):
        """Test soft fusion reaches -10 dB in at most 0.6 times the baseline's blocks"""
        def median_blocks(name):
            counts = []
            for log in wgn_result.logs[name]:
                reached = blocks_to_reach(log.mismatch_db, -10.0)
                counts.append(len(log.mismatch_db) + 1 if reached is None else reached)
            return float(np.median(counts))

        assert median_blocks(SOFT) <= 0.6 * median_blocks("baseline_kf")

    def test_steady_state_ordering(self, wgn_result):
        """Test hard projection settles above the baseline and soft fusion stays close to it"""
        curves = wgn_result.curves
        times = curves["baseline_kf"].block_times
        baseline = _tail_mean(curves["baseline_kf"].mismatch_db, times, 2.0)
        assert _tail_mean(curves[HARD].mismatch_db, times, 2.0) > baseline
        assert abs(_tail_mean(curves[SOFT].mismatch_db, times, 2.0) - baseline) <= 3.0

    def test_nonuniqueness(self, desk_corpus):
        """Test a talker switch exposes the baseline's biased solution but not the fused one"""
        config = _desk_config(
            excitation="teleconference",
            snr_wgn=10.0,
            switch_time=5.0,
            variants=[{"kind": "baseline_kf"}, {"kind": "kfasp"}],
        )
        curves = run_experiment(config, training=desk_corpus).curves
        times = curves["baseline_kf"].block_times
        before = (times > 4.5) & (times <= 5.0)
        after = (times > 5.0) & (times <= 6.0)

        def erle_drop(name):
            erle = curves[name].erle_db
            return float(np.mean(erle[before]) - np.min(erle[after]))

        baseline_drop = erle_drop("baseline_kf")
        assert baseline_drop >= 5.0
        assert erle_drop(SOFT) <= 0.5 * baseline_drop

        converged = times > 2.0
        assert np.all(curves[SOFT].mismatch_db[converged] < curves["baseline_kf"].mismatch_db[converged])

    def test_reduced_corpus(self, desk_corpus):
        """Test soft fusion degrades gracefully with a small corpus while hard projection does not"""
        small = desk_corpus.subset(range(200))
        config = _desk_config(variants=[
            {"kind": "kfasp", "fusion": {"mode": "soft_combination"}},
            {"kind": "kfasp", "fusion": {"mode": "hard_projection"}},
        ])
        curves = run_experiment(config, training=small).curves
        times = curves[SOFT].block_times
        soft = _tail_mean(curves[SOFT].mismatch_db, times, 2.0)
        hard = _tail_mean(curves[HARD].mismatch_db, times, 2.0)
        assert soft <= hard - 3.0
