"""Environment variable helpers for airsubspace."""
from __future__ import annotations

import logging
import os
from typing import Dict, Optional, Union

from .constants import (
    DEFAULT_DATA_DIR,
    DEFAULT_THREADS,
    ENV_DATA_DIR,
    ENV_LOG_LEVEL,
    ENV_LOG_LEVEL_FALLBACK,
    ENV_THREADS,
    LOG_LEVEL_DEFAULT,
)

logger = logging.getLogger(__name__)


def get_env_value(primary: str, *fallbacks: str, default: Optional[str] = None) -> Optional[str]:
    """Return the first available environment variable value."""
    for name in (primary, *fallbacks):
        value = os.environ.get(name)
        if value:
            if name != primary:
                logger.debug("Using fallback env %s for %s", name, primary)
            return value
    return default


def get_runtime_config(**overrides: Optional[Union[str, int]]) -> Dict[str, Union[str, int]]:
    """Build the runtime settings, with explicit overrides winning over env vars."""
    log_level = overrides.get("log_level") or get_env_value(
        ENV_LOG_LEVEL, ENV_LOG_LEVEL_FALLBACK, default=LOG_LEVEL_DEFAULT
    )
    data_dir = overrides.get("data_dir") or get_env_value(ENV_DATA_DIR, default=DEFAULT_DATA_DIR)

    threads = overrides.get("threads")
    if threads is None:
        raw = get_env_value(ENV_THREADS)
        try:
            threads = int(raw) if raw else DEFAULT_THREADS
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", ENV_THREADS, raw)
            threads = DEFAULT_THREADS
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    return {
        "log_level": str(log_level).upper(),
        "data_dir": str(data_dir),
        "threads": threads,
    }
