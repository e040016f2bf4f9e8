"""
Command-line entry point.

Subcommands: ``gen-rirs`` (simulate a training corpus), ``analyze-subspace``
(projection study), ``run`` (estimator comparison) and ``inspect`` (corpus
statistics as JSON).
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .config import load_analysis_config, load_experiment_config
from .constants import LOG_FORMAT
from .env import get_runtime_config
from .experiment import run_analysis, run_experiment
from .rir import generate_corpus
from .storage import CorpusStore
from .subspace import TrainingSet

logger = logging.getLogger(__name__)

INSPECT_SAMPLE = 200


def _add_common(parser: argparse.ArgumentParser, out: bool = True) -> None:
    parser.add_argument("--config", type=Path, help="TOML config file")
    parser.add_argument("--seed", type=int, help="Override the seed (u64)")
    if out:
        parser.add_argument("--out", type=Path, help="Output directory")
    parser.add_argument("--threads", type=int, help="Worker processes (default AIRSUBSPACE_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="airsubspace", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--log-level", help="Logging level (default AIRSUBSPACE_LOG_LEVEL or INFO)")
    parser.add_argument("--data-dir", type=Path, help="Corpus directory (default AIRSUBSPACE_DATA_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-rirs", help="Simulate a training corpus into the data directory")
    _add_common(gen, out=False)
    gen.add_argument("--count", type=int, help="Override corpus.count")

    analyze = sub.add_parser("analyze-subspace", help="Project held-out AIRs onto subspace models")
    _add_common(analyze)
    analyze.add_argument("--test-count", type=int, help="Override analysis.test_count")

    run = sub.add_parser("run", help="Run the estimator comparison")
    _add_common(run)
    run.add_argument("--trials", type=int, help="Override trials")

    inspect = sub.add_parser("inspect", help="Print corpus statistics")
    _add_common(inspect, out=False)
    inspect.add_argument("corpus", nargs="?", help="Corpus path (default corpus.path from the config)")
    return parser


def corpus_stats(training: TrainingSet, sample: int = INSPECT_SAMPLE) -> dict:
    """Summary statistics of a corpus, with nearest-neighbour distances over the first ``sample`` members."""
    norms = np.linalg.norm(training.vectors, axis=1)
    stats = {
        "K": training.count,
        "B": training.frame.num_channels,
        "L": training.frame.filter_length,
        "fs": training.frame.fs,
        "seed": training.provenance.seed,
        "geometry_hash": training.provenance.geometry_hash,
        "norm_mean": float(norms.mean()),
        "norm_min": float(norms.min()),
        "norm_max": float(norms.max()),
    }
    subset = training.vectors[:sample]
    if subset.shape[0] >= 2:
        d = cdist(subset, subset, "sqeuclidean")
        np.fill_diagonal(d, np.inf)
        nn = d.min(axis=1)
        stats["nn_distance_quantiles"] = {
            str(q): float(v) for q, v in zip((0.05, 0.5, 0.95), np.quantile(nn, (0.05, 0.5, 0.95)))
        }
    return stats


def _cmd_gen_rirs(args, runtime) -> int:
    config = load_experiment_config(args.config)
    seed = args.seed if args.seed is not None else config.corpus_seed
    count = args.count or config.corpus.count
    store = CorpusStore(runtime["data_dir"])
    training = generate_corpus(config.room, config.geometry, config.frame, count, seed, runtime["threads"])
    store.write_training_set(config.corpus.path, training, extra={
        "room": config.room.model_dump(mode="json"),
        "geometry": config.geometry.model_dump(mode="json"),
    })
    return 0


def _cmd_analyze(args, runtime) -> int:
    config = load_analysis_config(args.config, test_seed=args.seed, test_count=args.test_count)
    rows = run_analysis(config, CorpusStore(runtime["data_dir"]), args.out, runtime["threads"])
    for row in rows:
        print(f"{row.model:12s} {'' if row.dim is None else row.dim:>5} {row.mismatch_db:8.2f} dB")
    return 0


def _cmd_run(args, runtime) -> int:
    config = load_experiment_config(args.config, seed=args.seed, trials=args.trials)
    out = args.out or Path(runtime["data_dir"]) / "runs" / f"seed{config.seed}"
    result = run_experiment(config, out_dir=out, threads=runtime["threads"],
                            store=CorpusStore(runtime["data_dir"]))
    logger.info("Manifest: %s", result.manifest_path)
    return 0


def _cmd_inspect(args, runtime) -> int:
    if args.corpus:
        key = args.corpus
    else:
        key = load_experiment_config(args.config).corpus.path
    training = CorpusStore(runtime["data_dir"]).read_training_set(key)
    print(json.dumps(corpus_stats(training), indent=2, sort_keys=True))
    return 0


COMMANDS = {
    "gen-rirs": _cmd_gen_rirs,
    "analyze-subspace": _cmd_analyze,
    "run": _cmd_run,
    "inspect": _cmd_inspect,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        runtime = get_runtime_config(
            log_level=args.log_level,
            threads=args.threads,
            data_dir=str(args.data_dir) if args.data_dir else None,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(level=runtime["log_level"], format=LOG_FORMAT)
    try:
        return COMMANDS[args.command](args, runtime)
    except (ValueError, FileNotFoundError) as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
