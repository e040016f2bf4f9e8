"""Config file loading for airsubspace (TOML, validated by the pydantic models)."""
from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union

from pydantic import BaseModel

from .models import AnalysisConfig, ExperimentConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

ANALYSIS_SECTION = "analysis"


def read_toml(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    with path.open("rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ValueError(f"{path}: invalid TOML: {e}") from e


def load_model(model: Type[ModelT], path: Optional[Union[str, Path]] = None,
               section: Optional[str] = None, **overrides: Any) -> ModelT:
    """
    Validate a config record from a TOML file plus top-level overrides.

    Args:
        model: Pydantic model to build
        path: TOML file (defaults only when omitted)
        section: Optional table holding the record (e.g. ``"analysis"``)
        overrides: Top-level fields that win over the file, ``None`` values ignored

    Raises:
        FileNotFoundError: If ``path`` does not exist
        ValueError: On invalid TOML, unknown keys or out-of-range values
    """
    data: Dict[str, Any] = read_toml(path) if path is not None else {}
    if section is None:
        data.pop(ANALYSIS_SECTION, None)
    else:
        data = dict(data.get(section, {}))
    data.update({k: v for k, v in overrides.items() if v is not None})
    logger.debug("Validating %s from %s", model.__name__, path or "defaults")
    return model.model_validate(data)


def load_experiment_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> ExperimentConfig:
    return load_model(ExperimentConfig, path, **overrides)


def load_analysis_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> AnalysisConfig:
    """
    Analysis settings from the ``[analysis]`` table.

    ``room``, ``geometry`` and the corpus path fall back to the top-level
    experiment tables of the same file.
    """
    data: Dict[str, Any] = read_toml(path) if path is not None else {}
    section = dict(data.get(ANALYSIS_SECTION, {}))
    for key in ("room", "geometry"):
        if key in data and key not in section:
            section[key] = data[key]
    if "corpus_path" not in section and "path" in data.get("corpus", {}):
        section["corpus_path"] = data["corpus"]["path"]
    section.update({k: v for k, v in overrides.items() if v is not None})
    return AnalysisConfig.model_validate(section)
