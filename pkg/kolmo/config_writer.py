"""
Configuration writer module for saving resolved run configs next to their output.
"""

# built-in imports
from pathlib import Path

# 3rd party imports
import yaml

# kolmo imports
from kolmo.config import RunConfig


def save_config(config: RunConfig, file_path: Path) -> None:
    """
    Save a run configuration as YAML.

    Args:
        config: Validated run configuration
        file_path: Path to save the config
    """
    # Create parent directories if they don't exist
    file_path.parent.mkdir(parents=True, exist_ok=True)

    with open(file_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=True)
