"""
Evaluation measures: system mismatch, ERLE and trial aggregation.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .constants import ERLE_LAMBDA_DEFAULT
from .models import TrialAveraging
from .utils import ratio_db

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrialLog:
    """Per-block curves of one trial."""
    mismatch_db: np.ndarray
    erle_db: np.ndarray
    block_times: np.ndarray
    trial_seed: int = 0

    def __post_init__(self):
        lengths = {len(self.mismatch_db), len(self.erle_db), len(self.block_times)}
        if len(lengths) != 1:
            raise ValueError(f"trial log curves must have equal lengths, got {sorted(lengths)}")

    @property
    def blocks(self) -> int:
        return len(self.block_times)


def system_mismatch(truth, estimate) -> float:
    """
    Channel-averaged normalized misalignment in dB.

    The estimate (B, L) is zero-padded to the truth length (B, W). A perfect
    match maps to the -200 dB floor.
    """
    w = np.atleast_2d(np.asarray(truth, dtype=float))
    w_hat = np.atleast_2d(np.asarray(estimate, dtype=float))
    if w.shape[0] != w_hat.shape[0]:
        raise ValueError(f"channel count mismatch: {w.shape[0]} vs {w_hat.shape[0]}")
    if w_hat.shape[1] > w.shape[1]:
        raise ValueError(f"estimate length {w_hat.shape[1]} exceeds truth length {w.shape[1]}")
    norms = np.sum(w**2, axis=1)
    if np.any(norms == 0):
        raise ValueError("truth channel with zero norm")
    padded = np.zeros_like(w)
    padded[:, : w_hat.shape[1]] = w_hat
    ratio = np.mean(np.sum((w - padded) ** 2, axis=1) / norms)
    return float(ratio_db(ratio, 1.0))


def erle(d_clean, d_hat, lambda_e: float = ERLE_LAMBDA_DEFAULT) -> np.ndarray:
    """
    Echo return loss enhancement per block.

    Both block powers are smoothed recursively with ``lambda_e``; a vanishing
    residual maps to the +200 dB ceiling.

    Args:
        d_clean: Clean echo blocks, shape (T, R)
        d_hat: Echo estimates, shape (T, R)
    """
    d = np.atleast_2d(np.asarray(d_clean, dtype=float))
    d_est = np.atleast_2d(np.asarray(d_hat, dtype=float))
    if d.shape != d_est.shape:
        raise ValueError(f"stream shapes differ: {d.shape} vs {d_est.shape}")
    if not 0.0 <= lambda_e < 1.0:
        raise ValueError(f"lambda_e must lie in [0, 1), got {lambda_e}")
    signal = np.sum(d**2, axis=1)
    residual = np.sum((d - d_est) ** 2, axis=1)
    num = np.empty_like(signal)
    den = np.empty_like(residual)
    acc_num = acc_den = 0.0
    for t in range(signal.size):
        acc_num = lambda_e * acc_num + (1.0 - lambda_e) * signal[t]
        acc_den = lambda_e * acc_den + (1.0 - lambda_e) * residual[t]
        num[t], den[t] = acc_num, acc_den
    return ratio_db(num, den)


@dataclass(frozen=True, eq=False)
class AggregateCurves:
    mismatch_db: np.ndarray
    erle_db: np.ndarray
    block_times: np.ndarray
    trials: int


def _average(curves: np.ndarray, averaging: TrialAveraging) -> np.ndarray:
    if averaging == TrialAveraging.LINEAR:
        return ratio_db(np.mean(10.0 ** (curves / 10.0), axis=0), 1.0)
    return np.mean(curves, axis=0)


def aggregate_trials(logs: Sequence[TrialLog], averaging: TrialAveraging = TrialAveraging.DB) -> AggregateCurves:
    """Per-block mean over trials, in the dB domain unless linear averaging is requested."""
    if not logs:
        raise ValueError("cannot aggregate an empty list of trial logs")
    lengths = {log.blocks for log in logs}
    if len(lengths) != 1:
        raise ValueError(f"trial logs differ in length: {sorted(lengths)}")
    mismatch = np.stack([log.mismatch_db for log in logs])
    erle_curves = np.stack([log.erle_db for log in logs])
    return AggregateCurves(
        mismatch_db=_average(mismatch, averaging),
        erle_db=_average(erle_curves, averaging),
        block_times=np.asarray(logs[0].block_times, dtype=float),
        trials=len(logs),
    )


def blocks_to_reach(curve, threshold_db: float) -> Optional[int]:
    """Number of blocks until the curve first drops to ``threshold_db`` (None if never)."""
    hits = np.flatnonzero(np.asarray(curve) <= threshold_db)
    return int(hits[0]) + 1 if hits.size else None


def windowed_median(curve, window: int) -> List[float]:
    """Medians of consecutive non-overlapping windows."""
    c = np.asarray(curve, dtype=float)
    return [float(np.median(c[i: i + window])) for i in range(0, c.size - window + 1, window)]
