"""MCP tools for protocol simulation and auditing."""

from typing import Any, Dict

from mcp.types import Tool as MCPTool

from ._core.base import provider_for
from ._core.handlers import audit as _audit
from ._core.handlers import simulate as _simulate

CONFIG_PROPERTY = {
    "type": "string",
    "description": "Path to a JSON experiment config (defaults are used when omitted)",
}

BASELINES_PROPERTY = {
    "type": "string",
    "description": "CSV of measured baseline paths (direction_deg,t,x,y) for the impedance model",
}


def simulate_protocol_tool() -> MCPTool:
    """Simulate a full experimental protocol."""
    return MCPTool(
        name="simulate_protocol",
        description=(
            "Simulate the 548-trial force-field protocol for one training group or all eight. "
            "Writes the schedule and per-trial CSVs (time, hand path, forces, joint angles) "
            "plus a manifest with content hashes to the output directory."
        ),
        inputSchema={
            "type": "object",
            "properties": {
                "config": CONFIG_PROPERTY,
                "group": {
                    "type": "integer",
                    "description": "Training direction in degrees (0-315, multiple of 45); all groups when omitted",
                    "enum": [0, 45, 90, 135, 180, 225, 270, 315],
                },
                "seed": {
                    "type": "integer",
                    "description": "Protocol seed (overrides the config's protocol_seeds)",
                },
                "baselines": BASELINES_PROPERTY,
                "check_step": {
                    "type": "boolean",
                    "description": "Re-run one training-direction clamp per group at half the step and report the differences",
                    "default": False,
                },
                "out": {"type": "string", "description": "Output directory"},
                "jobs": {
                    "type": "integer",
                    "description": "Worker processes",
                    "minimum": 1,
                },
            },
        },
    )


async def handle_simulate_protocol(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """Handle simulate_protocol tool execution."""
    result = await _simulate(arguments, provider_for(arguments))
    return result.to_dict()


def audit_protocol_tool() -> MCPTool:
    """Audit generated schedules."""
    return MCPTool(
        name="audit_protocol",
        description=(
            "Generate the trial schedule for one group or all eight and check block composition "
            "(26 baseline trials per target, 65-trial adaptation blocks, 15 test clamps per target) "
            "and the alternating order of the test block. Returns every violation found."
        ),
        inputSchema={
            "type": "object",
            "properties": {
                "config": CONFIG_PROPERTY,
                "group": {
                    "type": "integer",
                    "description": "Training direction in degrees; all groups when omitted",
                    "enum": [0, 45, 90, 135, 180, 225, 270, 315],
                },
                "seed": {"type": "integer", "description": "Protocol seed"},
            },
        },
    )


async def handle_audit_protocol(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """Handle audit_protocol tool execution."""
    result = await _audit(arguments, provider_for(arguments))
    return result.to_dict()
