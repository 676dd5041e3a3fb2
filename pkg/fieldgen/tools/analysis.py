"""MCP tools for trial analysis."""

from typing import Any, Dict

from mcp.types import Tool as MCPTool

from ._core.base import provider_for
from ._core.handlers import analyze as _analyze
from .simulation import CONFIG_PROPERTY


def analyze_trials_tool() -> MCPTool:
    """Turn trial CSVs into indices and generalization curves."""
    return MCPTool(
        name="analyze_trials",
        description=(
            "Compute adaptation indices for every clamp trial, perpendicular errors for every "
            "field trial, intra- and inter-generalization curves (raw and baseline-corrected) "
            "and their +45/-45 asymmetries. Writes indices.csv, pe.csv, curves/*.csv and "
            "asymmetries.csv."
        ),
        inputSchema={
            "type": "object",
            "properties": {
                "config": CONFIG_PROPERTY,
                "inputs": {
                    "type": "array",
                    "items": {"type": "string"},
                    "description": "Trial CSV files or directories searched recursively",
                },
                "phase": {
                    "type": "string",
                    "enum": ["baseline", "post"],
                    "default": "post",
                    "description": "Which clamps form the curves",
                },
                "sign": {
                    "type": "integer",
                    "enum": [1, -1],
                    "default": 1,
                    "description": "Asymmetry sign convention",
                },
                "out": {"type": "string", "description": "Output directory"},
            },
        },
    )


async def handle_analyze_trials(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """Handle analyze_trials tool execution."""
    result = await _analyze(arguments, provider_for(arguments))
    return result.to_dict()
