"""
Experiment orchestration: multi-trial estimator comparison and the offline
projection study of subspace models.

**What:** ``run_experiment`` runs every configured estimator on the same
synthesized trials and writes one CSV of averaged curves per estimator plus
a JSON manifest. ``analyze_subspace`` projects held-out ground-truth AIRs onto
global, clustered and nearest-neighbour subspace models and tabulates the
average system mismatch per model and dimension.

**How:** Trials are independent and may run in a process pool; results are
joined in trial order before aggregation, so outputs do not depend on the
number of workers.
"""
import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .constants import (
    AIRSUBSPACE_VERSION,
    ANALYSIS_CSV_NAME,
    CSV_COLUMNS,
    MANIFEST_NAME,
    SEED_STREAM_TRIAL,
)
from .fdkf import FdkfFilter
from .kfasp import KfAspFilter
from .metrics import AggregateCurves, TrialLog, aggregate_trials, erle, system_mismatch
from .models import AnalysisConfig, ExperimentConfig, SubspaceModelKind, VariantConfig, VariantKind
from .oracle import oracle_gt_filter, oracle_nn_filter
from .rir import AirSample, generate_test_airs
from .scenario import Scenario, synthesize_scenario
from .storage import CorpusStore
from .subspace import TrainingSet, build_knn_subspace, fit_global, fit_mixture, kmeans, knn_select
from .utils import derive_seed, ordered_map

logger = logging.getLogger(__name__)


# Estimator runs

def build_estimator(variant: VariantConfig, config: ExperimentConfig, training: Optional[TrainingSet],
                    truth: Optional[AirSample] = None) -> FdkfFilter:
    """Fresh estimator for one trial; the oracle kinds also need that trial's ground truth."""
    if variant.kind == VariantKind.BASELINE_KF:
        return FdkfFilter(config.frame, variant.hyper)
    if variant.kind in (VariantKind.ORACLE_GT, VariantKind.ORACLE_NN) and truth is None:
        raise ValueError(f"variant {variant.name} needs the ground truth")
    if variant.kind == VariantKind.ORACLE_GT:
        return oracle_gt_filter(truth, config.frame)
    if training is None:
        raise ValueError(f"variant {variant.name} needs a training set")
    if variant.kind == VariantKind.ORACLE_NN:
        return oracle_nn_filter(truth, config.frame, training)
    return KfAspFilter(config.frame, training, variant.fusion, variant.hyper)


def run_variant(variant: VariantConfig, config: ExperimentConfig, scenario: Scenario,
                training: Optional[TrainingSet]) -> TrialLog:
    """Stream one scenario through one estimator and record its per-block curves."""
    frame = config.frame
    R = frame.frame_shift
    blocks = scenario.num_samples // R
    estimator = build_estimator(variant, config, training, scenario.ground_truth)
    observation = scenario.observation
    mismatch = np.empty(blocks)
    echo = np.empty((blocks, R))
    for t in range(blocks):
        span = slice(t * R, (t + 1) * R)
        result = estimator.process_block(scenario.excitation[:, span], observation[span])
        mismatch[t] = system_mismatch(scenario.ground_truth.channels, result.filters)
        echo[t] = result.echo_estimate
    erle_db = erle(scenario.clean[: blocks * R].reshape(blocks, R), echo, config.erle_lambda)
    times = (np.arange(blocks) + 1) * R / frame.fs
    return TrialLog(mismatch, erle_db, times, scenario.trial_seed)


def trial_seed(config: ExperimentConfig, trial_index: int) -> int:
    return int(derive_seed(config.seed, SEED_STREAM_TRIAL, trial_index).generate_state(1, np.uint32)[0])


def _run_trial(args) -> Dict[str, TrialLog]:
    config, training, index = args
    try:
        scenario = synthesize_scenario(config, index)
        return {v.name: run_variant(v, config, scenario, training) for v in config.variants}
    except Exception as e:
        seed = trial_seed(config, index)
        logger.error("Trial %d (seed %d) failed: %s", index, seed, e)
        raise RuntimeError(f"trial {index} (seed {seed}) failed") from e


@dataclass
class ExperimentResult:
    curves: Dict[str, AggregateCurves]
    logs: Dict[str, List[TrialLog]]
    csv_paths: Dict[str, Path] = field(default_factory=dict)
    manifest_path: Optional[Path] = None


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def curves_to_csv(name: str, curves: AggregateCurves, averaging: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for t in range(curves.block_times.size):
        writer.writerow([
            name,
            f"mean_{averaging}",
            t + 1,
            _fmt(curves.block_times[t]),
            _fmt(curves.mismatch_db[t]),
            _fmt(curves.erle_db[t]),
        ])
    return buf.getvalue()


def _needs_training(config: ExperimentConfig) -> bool:
    return any(v.kind in (VariantKind.KFASP, VariantKind.ORACLE_NN) for v in config.variants)


def run_experiment(config: ExperimentConfig, training: Optional[TrainingSet] = None,
                   out_dir: Optional[Union[str, Path]] = None, threads: int = 1,
                   store: Optional[CorpusStore] = None) -> ExperimentResult:
    """
    Run all trials for all variants, aggregate and optionally write CSVs and a manifest.

    The corpus is read from ``config.corpus.path`` when not passed in and a
    fusion or oracle_nn variant needs it.
    """
    store = store or CorpusStore()
    if training is None and _needs_training(config):
        training = store.read_training_set(config.corpus.path, frame_shift=config.frame.frame_shift)
    logger.info("Running %d trial(s) x %d variant(s)", config.trials, len(config.variants))

    jobs = [(config, training, i) for i in range(config.trials)]
    per_trial = ordered_map(_run_trial, jobs, threads=threads, desc="trials")
    logs = {v.name: [trial[v.name] for trial in per_trial] for v in config.variants}
    curves = {name: aggregate_trials(trial_logs, config.trial_averaging) for name, trial_logs in logs.items()}
    result = ExperimentResult(curves, logs)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, c in curves.items():
            path = out / f"{name}.csv"
            path.write_text(curves_to_csv(name, c, config.trial_averaging), encoding="utf-8")
            result.csv_paths[name] = path
            logger.info("Wrote %s", path)
        manifest = {
            "version": AIRSUBSPACE_VERSION,
            "config": config.model_dump(),
            "trial_seeds": [trial_seed(config, i) for i in range(config.trials)],
            "csv": {name: p.name for name, p in result.csv_paths.items()},
        }
        if training is not None:
            manifest["corpus"] = {
                "count": training.count,
                "seed": training.provenance.seed,
                "geometry_hash": training.provenance.geometry_hash,
            }
        result.manifest_path = CorpusStore(out).write_json(MANIFEST_NAME, manifest)
    return result


# Subspace analysis

@dataclass(frozen=True)
class AnalysisRow:
    model: str
    dim: Optional[int]
    mismatch_db: float
    effective_dim: Optional[int] = None


def _mismatch(sample: AirSample, vector: np.ndarray, filter_length: int) -> float:
    return system_mismatch(sample.channels, vector.reshape(sample.num_channels, filter_length))


def analyze_subspace(training: TrainingSet, test_airs: Sequence[AirSample],
                     models: Sequence[SubspaceModelKind], dims: Sequence[int],
                     clusters: int = 40, kmeans_seed: int = 0) -> List[AnalysisRow]:
    """
    Average system mismatch of projecting each test AIR onto each model.

    Always includes the ``oracle_gt`` (first L taps of the truth) and
    ``oracle_nn`` (nearest training AIR) rows. Mixture rows use the cluster
    whose projection has the lowest mismatch. KNN rows of dimension D use the
    D + 1 nearest training AIRs; ``knn_offset`` rows use only their mean.
    Dimensions beyond a model's capacity are skipped with a warning. Mixture
    rows report the smallest cluster dimension as ``effective_dim``.
    """
    if not test_airs:
        raise ValueError("analysis needs at least one test AIR")
    frame = training.frame
    L, Q, K = frame.filter_length, frame.vector_length, training.count
    truths = np.stack([s.air_vector(L) for s in test_airs])
    scores: Dict[tuple, List[float]] = {}
    effective: Dict[tuple, int] = {}

    def record(model: str, dim: Optional[int], sample: AirSample, vector: np.ndarray) -> None:
        scores.setdefault((model, dim), []).append(_mismatch(sample, vector, L))

    for sample, w in zip(test_airs, truths):
        record("oracle_gt", None, sample, w)
        nn = knn_select(w, training, 1)[0]
        record("oracle_nn", None, sample, training.vectors[nn])

    for kind in models:
        if kind == SubspaceModelKind.MIXTURE:
            clustering = kmeans(training, min(clusters, K), kmeans_seed)
        for dim in dims:
            if kind == SubspaceModelKind.GLOBAL:
                if dim > min(Q, K - 1):
                    logger.warning("skipping global D=%d: capacity is %d", dim, min(Q, K - 1))
                    continue
                model = fit_global(training, dim)
                for sample, proj in zip(test_airs, model.project(truths)):
                    record("global", dim, sample, proj)
            elif kind == SubspaceModelKind.MIXTURE:
                if dim > Q:
                    logger.warning("skipping mixture D=%d: exceeds Q=%d", dim, Q)
                    continue
                mixture = fit_mixture(training, clusters, dim, kmeans_seed, clustering)
                effective[("mixture", dim)] = mixture.min_dimension
                for sample, w in zip(test_airs, truths):
                    best = min(_mismatch(sample, c, L) for c in mixture.project_all(w))
                    scores.setdefault(("mixture", dim), []).append(best)
            elif kind == SubspaceModelKind.KNN:
                if dim + 1 > K or dim > Q:
                    logger.warning("skipping knn D=%d: needs %d neighbours, corpus has %d", dim, dim + 1, K)
                    continue
                for sample, w in zip(test_airs, truths):
                    neighbours = training.vectors[knn_select(w, training, dim + 1)]
                    record("knn", dim, sample, build_knn_subspace(neighbours).project(w))
                    record("knn_offset", dim, sample, neighbours.mean(axis=0))
            else:
                raise ValueError(f"unknown subspace model {kind!r}")

    rows = [AnalysisRow(model, dim, float(np.mean(values)), effective.get((model, dim), dim))
            for (model, dim), values in scores.items()]
    for row in rows:
        logger.debug("analysis %s D=%s (effective %s): %.2f dB", row.model, row.dim, row.effective_dim, row.mismatch_db)
    return rows


def rows_to_csv(rows: Sequence[AnalysisRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("model", "dim", "mismatch_db", "effective_dim"))
    for row in rows:
        writer.writerow((row.model, "" if row.dim is None else row.dim, _fmt(row.mismatch_db),
                         "" if row.effective_dim is None else row.effective_dim))
    return buf.getvalue()


def run_analysis(config: AnalysisConfig, store: Optional[CorpusStore] = None,
                 out_dir: Optional[Union[str, Path]] = None, threads: int = 1) -> List[AnalysisRow]:
    """Load the corpus, draw fresh test AIRs and tabulate the projection study."""
    store = store or CorpusStore()
    training = store.read_training_set(config.corpus_path)
    if config.room.air_length < training.frame.filter_length:
        raise ValueError("room.air_length must be >= the corpus filter length")
    test_airs = generate_test_airs(config.room, config.geometry, config.test_count, config.test_seed, threads)
    rows = analyze_subspace(training, test_airs, config.models, config.dims, config.clusters, config.kmeans_seed)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / ANALYSIS_CSV_NAME
        path.write_text(rows_to_csv(rows), encoding="utf-8")
        CorpusStore(out).write_json(MANIFEST_NAME, {
            "version": AIRSUBSPACE_VERSION,
            "config": config.model_dump(),
            "corpus": {"count": training.count, "geometry_hash": training.provenance.geometry_hash},
        })
        logger.info("Wrote %s", path)
    return rows
