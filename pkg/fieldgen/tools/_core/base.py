"""Base types and protocols for tool handlers."""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Protocol

from fieldgen.config import ExperimentConfig, load_config


@dataclass
class ToolResult:
    """Standardized tool result."""

    success: bool
    data: Optional[Dict[str, Any]] = None
    error: Optional[str] = None
    message: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        result: Dict[str, Any] = {"success": self.success}
        if self.data is not None:
            result["data"] = self.data
        if self.error is not None:
            result["error"] = self.error
        if self.message is not None:
            result["message"] = self.message
        return result


class ConfigProvider(Protocol):
    """Protocol for experiment config retrieval strategies."""

    def get_config(self) -> ExperimentConfig:
        """Get the validated experiment config."""
        ...


class FileConfigProvider:
    """Read the config from a JSON file (CLI --config, tool ``config`` argument)."""

    def __init__(self, path: str | Path):
        self._path = Path(path)

    def get_config(self) -> ExperimentConfig:
        return load_config(self._path)


class InlineConfigProvider:
    """Wrap an in-memory config object."""

    def __init__(self, config: ExperimentConfig):
        self._config = config

    def get_config(self) -> ExperimentConfig:
        """Return the stored config."""
        return self._config


class DefaultConfigProvider:
    """Defaults for every field."""

    def get_config(self) -> ExperimentConfig:
        return load_config(None)


def provider_for(arguments: Dict[str, Any]) -> ConfigProvider:
    """File provider when the arguments name a config, defaults otherwise."""
    path = arguments.get("config")
    return FileConfigProvider(path) if path else DefaultConfigProvider()
