"""Configuration settings for gapdyn experiments."""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from core import TimeRange
from ingest.csv_io import parse_timestamp
from pipeline.models import ExperimentConfig

# Paths are resolved against the current working directory
CURRENT_DIR = Path.cwd()
CONFIG_DIR = CURRENT_DIR / "experiment_config"
LOG_DIR = CURRENT_DIR / "logs"
DEFAULT_CONFIG_FILE = "experiment.json"

SEED_ENV = "GAPDYN_SEED"

# Keys read by the CLI and logging layer rather than by ExperimentConfig
RUN_KEYS = ("input", "synthetic", "output_dir", "export_series",
            "log_level", "log_file", "log_max_bytes", "log_backup_count")

logger = logging.getLogger(__name__)


def parse_hour(value: Union[int, str]) -> int:
    """Epoch hour from an integer or a ``YYYY-MM-DDTHH:00`` string."""
    if isinstance(value, bool):
        raise ValueError(f"Invalid hour: {value!r}")
    if isinstance(value, int):
        return value
    text = str(value).strip()
    if text.lstrip("-").isdigit():
        return int(text)
    return parse_timestamp(text)


def parse_time_range(value: Any) -> TimeRange:
    """Time range from ``{"start": ..., "end": ...}``, ``[start, end]`` or ``"start/end"``.

    Raises:
        ValueError: If the value cannot be interpreted
    """
    if isinstance(value, TimeRange):
        return value
    if isinstance(value, dict):
        start, end = value.get("start"), value.get("end")
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        start, end = value
    elif isinstance(value, str) and "/" in value:
        start, end = value.split("/", 1)
    else:
        raise ValueError(f"Invalid time range: {value!r} (expected start/end)")
    if start is None or end is None:
        raise ValueError(f"Time range needs both start and end: {value!r}")
    try:
        return TimeRange(start=parse_hour(start), end=parse_hour(end))
    except Exception as e:
        raise ValueError(f"Invalid time range {value!r}: {e}")


def env_seed() -> int:
    """Default seed from the environment, 0 when unset.

    Raises:
        ValueError: If the variable is not a non-negative integer
    """
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}")
    if seed < 0:
        raise ValueError(f"{SEED_ENV} must be non-negative, got {seed}")
    return seed


class Config:
    """Experiment configuration file plus command-line overrides."""

    def __init__(self, path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None):
        """Initialize configuration.

        Args:
            path: JSON configuration file. When omitted, experiment_config/experiment.json
                is used if present, otherwise built-in defaults apply.
            overrides: Values from command-line flags; None entries are ignored
        """
        self.path = Path(path) if path else None
        self.file_config: Dict[str, Any] = {}
        self.overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

        self._load()

    def _load(self) -> None:
        """Load the JSON configuration file, if any.

        Raises:
            FileNotFoundError: If an explicit path does not exist
            ValueError: If the file is not a JSON object
        """
        config_path = self.path
        if config_path is None:
            default = CONFIG_DIR / DEFAULT_CONFIG_FILE
            if not default.exists():
                logger.debug(f"No {DEFAULT_CONFIG_FILE} in {CONFIG_DIR}; using defaults")
                return
            config_path = default

        if not config_path.exists():
            logger.error(f"Configuration file not found: {config_path}")
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        try:
            with open(config_path, 'r') as f:
                loaded = json.load(f)
        except json.JSONDecodeError as e:
            logger.error(f"Invalid JSON in experiment config at {config_path}: {e}")
            raise ValueError(f"Invalid JSON in experiment config at {config_path}: {e}")

        if not isinstance(loaded, dict):
            raise ValueError(f"Experiment config at {config_path} must be a JSON object")
        self.file_config = loaded
        self.path = config_path
        logger.info(f"Loaded experiment config from {config_path}")

    def get(self, key: str, default: Any = None) -> Any:
        """Flag value, then file value, then default."""
        if key in self.overrides:
            return self.overrides[key]
        return self.file_config.get(key, default)

    def experiment_settings(self) -> Dict[str, Any]:
        """Merged ExperimentConfig fields with time ranges converted to epoch hours."""
        merged = {k: v for k, v in self.file_config.items() if k not in RUN_KEYS}
        merged.update({k: v for k, v in self.overrides.items() if k not in RUN_KEYS})

        for key in ("train_range", "eval_range"):
            if key in merged:
                merged[key] = parse_time_range(merged[key])
        if "seed" not in merged:
            merged["seed"] = env_seed()
        return merged

    def experiment_config(self) -> ExperimentConfig:
        """Validated ExperimentConfig.

        Raises:
            pydantic.ValidationError: If a field is out of range
        """
        return ExperimentConfig.model_validate(self.experiment_settings())

    @property
    def INPUT(self) -> Optional[str]:
        return self.get("input")

    @property
    def SYNTHETIC(self) -> Optional[Dict[str, Any]]:
        return self.get("synthetic")

    @property
    def OUTPUT_DIR(self) -> str:
        return str(self.get("output_dir", "results"))

    @property
    def EXPORT_SERIES(self) -> bool:
        return bool(self.get("export_series", False))

    @property
    def SEED(self) -> int:
        seed = self.get("seed")
        return int(seed) if seed is not None else env_seed()

    @property
    def LOG_DIR(self) -> str:
        return str(LOG_DIR)

    @property
    def LOG_LEVEL(self) -> str:
        return self.get("log_level", "INFO")

    @property
    def LOG_FILE(self) -> Optional[str]:
        """Log file path; None keeps logging on standard error only."""
        return self.get("log_file")

    @property
    def LOG_MAX_BYTES(self) -> int:
        return int(self.get("log_max_bytes", 2 * 1024 * 1024))

    @property
    def LOG_BACKUP_COUNT(self) -> int:
        return int(self.get("log_backup_count", 5))


def ensure_directories(*paths: Union[str, Path]) -> None:
    """Create output directories if they don't exist."""
    for path in paths:
        Path(path).mkdir(parents=True, exist_ok=True)
        logger.debug(f"Ensured directory {path}")
