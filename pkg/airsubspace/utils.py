"""
Small helpers shared by the estimator, corpus and harness modules.
"""
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, TypeVar

import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from .constants import ERLE_CEILING_DB, MISMATCH_FLOOR_DB

T = TypeVar("T")
R = TypeVar("R")


def ratio_db(num: Any, den: Any, floor: float = MISMATCH_FLOOR_DB, ceiling: float = ERLE_CEILING_DB) -> np.ndarray:
    """
    Express num/den in decibels, clipping the infinite cases.

    A zero numerator maps to ``floor`` and a zero denominator to ``ceiling``
    so that results stay finite for serialization.

    Args:
        num: Non-negative power (scalar or array)
        den: Non-negative power, broadcastable against ``num``

    Returns:
        10*log10(num/den) clipped to [floor, ceiling]

    Example:
        >>> float(ratio_db(1.0, 4.0))
        -6.020599913279624
        >>> float(ratio_db(0.0, 1.0))
        -200.0
        >>> float(ratio_db(1.0, 0.0))
        200.0
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 10.0 * np.log10(num / den)
    out = np.where(den == 0, ceiling, out)
    out = np.where((num == 0) & (den != 0), floor, out)
    out = np.where((num == 0) & (den == 0), 0.0, out)
    return np.clip(out, floor, ceiling)


def derive_seed(seed: int, stream: int, index: int) -> np.random.SeedSequence:
    """Seed sequence for item ``index`` of ``stream``; independent of scheduling order."""
    return np.random.SeedSequence([int(seed), int(stream), int(index)])


def derive_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, stream, index))


def stable_hash(*records: BaseModel) -> str:
    """Short sha256 digest of the JSON form of pydantic records."""
    payload = json.dumps([r.model_dump(mode="json") for r in records], sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1, desc: Optional[str] = None) -> List[R]:
    """
    Map ``fn`` over ``items`` and return results in input order.

    Runs inline for ``threads == 1`` and in a process pool otherwise; ``fn``
    must then be a picklable module-level function. Progress goes to stderr.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in tqdm(items, desc=desc, disable=desc is None, leave=False)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        results = pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads)))
        return list(tqdm(results, total=len(items), desc=desc, disable=desc is None, leave=False))
