"""Core shared implementations for fieldgen tools."""

from .base import (
    ConfigProvider,
    DefaultConfigProvider,
    FileConfigProvider,
    InlineConfigProvider,
    ToolResult,
    provider_for,
)
from .handlers import analyze, audit, compare, fit, plot, recover, simulate

__all__ = [
    # Base types
    "ToolResult",
    "ConfigProvider",
    "FileConfigProvider",
    "InlineConfigProvider",
    "DefaultConfigProvider",
    "provider_for",
    # Handlers
    "simulate",
    "audit",
    "analyze",
    "fit",
    "compare",
    "recover",
    "plot",
]
