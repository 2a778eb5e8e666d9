"""Configuration management for the SUTA toolkit."""

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .errors import FormatError
from .logger import get_logger

logger = get_logger(__name__)

# Load environment variables
load_dotenv()

PROJECT_ROOT = Path(__file__).parent.parent.parent
DEFAULT_EXPERIMENT_CONFIG = PROJECT_ROOT / "config" / "experiment.json"


def get_env(key: str, default: Optional[str] = None, required: bool = False) -> str:
    """
    Get environment variable value.

    Args:
        key: Environment variable key
        default: Default value if not found
        required: Whether the variable is required

    Returns:
        Environment variable value

    Raises:
        ValueError: If required variable is not set
    """
    value = os.getenv(key, default)

    if required and value is None:
        raise ValueError(f"Required environment variable {key} is not set")

    return value


def load_config(config_path: Optional[Path] = None) -> Dict[str, Any]:
    """
    Load configuration from JSON file.

    A missing file yields an empty dict (callers fall back to defaults);
    a file that exists but is not valid JSON is an error.

    Args:
        config_path: Path to configuration file (default: the SUTA_EXPERIMENT_CONFIG setting)

    Returns:
        Configuration dictionary

    Raises:
        FormatError: If the file exists but cannot be parsed
    """
    if config_path is None:
        config_path = config.experiment_config

    if not config_path.exists():
        logger.warning(f"Configuration file not found: {config_path}")
        return {}

    try:
        with open(config_path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"Invalid JSON in {config_path}: {e}") from e

    logger.debug(f"Loaded configuration from {config_path}")
    return data


class Config:
    """Process-wide settings read from the environment."""

    def __init__(self):
        self.log_level = get_env("LOG_LEVEL", "INFO")

        self.output_dir = Path(get_env("SUTA_OUTPUT_DIR", "./runs"))
        self.jobs = int(get_env("SUTA_JOBS", "1"))
        self.experiment_config = Path(
            get_env("SUTA_EXPERIMENT_CONFIG", str(DEFAULT_EXPERIMENT_CONFIG))
        )


# Global config instance
config = Config()
