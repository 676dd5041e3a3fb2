"""MCP tool for figure emission."""

from typing import Any, Dict

from mcp.types import Tool as MCPTool

from ._core.base import provider_for
from ._core.handlers import plot as _plot
from .simulation import CONFIG_PROPERTY


def emit_plots_tool() -> MCPTool:
    """Write SVG figures."""
    return MCPTool(
        name="emit_plots",
        description=(
            "Write deterministic SVG figures: one generalization curve panel per group, an "
            "asymmetry bar panel, representation polar plots for each fit and a baseline "
            "index panel."
        ),
        inputSchema={
            "type": "object",
            "properties": {
                "config": CONFIG_PROPERTY,
                "indices": {"type": "string", "description": "Index CSV written by analyze_trials"},
                "fits": {"type": "array", "items": {"type": "string"}},
                "phase": {"type": "string", "enum": ["baseline", "post"], "default": "post"},
                "sign": {"type": "integer", "enum": [1, -1], "default": 1},
                "out": {"type": "string"},
            },
        },
    )


async def handle_emit_plots(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """Handle emit_plots tool execution."""
    result = await _plot(arguments, provider_for(arguments))
    return result.to_dict()
