"""MCP tools for model fitting, comparison and recovery studies."""

from typing import Any, Dict

from mcp.types import Tool as MCPTool

from ._core.base import provider_for
from ._core.handlers import compare as _compare
from ._core.handlers import fit as _fit
from ._core.handlers import recover as _recover
from .simulation import BASELINES_PROPERTY, CONFIG_PROPERTY

MODEL_PROPERTY = {
    "type": "string",
    "enum": ["standard", "impedance"],
    "description": "standard: offset Gaussian representation; impedance: symmetric representation plus limb impedance",
}


def fit_model_tool() -> MCPTool:
    """Fit a generalization model."""
    return MCPTool(
        name="fit_model",
        description=(
            "Fit the standard or impedance model to an index CSV by maximum likelihood "
            "(multi-start bounded simplex). Saves a FitResult JSON with parameters, NLL, RMSE, "
            "AICc and parameter count."
        ),
        inputSchema={
            "type": "object",
            "properties": {
                "config": CONFIG_PROPERTY,
                "indices": {"type": "string", "description": "Index CSV written by analyze_trials"},
                "model": MODEL_PROPERTY,
                "phase": {"type": "string", "enum": ["baseline", "post"], "default": "post"},
                "response": {
                    "type": "string",
                    "description": "Cached impedance response JSON (built from basis simulations when absent)",
                },
                "baselines": BASELINES_PROPERTY,
                "out": {"type": "string", "description": "Output directory"},
                "jobs": {"type": "integer", "minimum": 1},
            },
            "required": ["model"],
        },
    )


async def handle_fit_model(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """Handle fit_model tool execution."""
    result = await _fit(arguments, provider_for(arguments))
    return result.to_dict()


def compare_models_tool() -> MCPTool:
    """Compare fits by AICc."""
    return MCPTool(
        name="compare_models",
        description=(
            "Rank FitResult JSON files made on the same dataset by AICc and report per-group "
            "parameters and predicted asymmetries. Fits from different datasets are rejected."
        ),
        inputSchema={
            "type": "object",
            "properties": {
                "config": CONFIG_PROPERTY,
                "fits": {
                    "type": "array",
                    "items": {"type": "string"},
                    "description": "FitResult JSON paths",
                },
                "sign": {"type": "integer", "enum": [1, -1], "default": 1},
                "out": {"type": "string", "description": "Directory for comparison.txt"},
            },
            "required": ["fits"],
        },
    )


async def handle_compare_models(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """Handle compare_models tool execution."""
    result = await _compare(arguments, provider_for(arguments))
    return result.to_dict()


def run_recovery_tool() -> MCPTool:
    """Run a synthetic-data recovery study."""
    return MCPTool(
        name="run_recovery",
        description=(
            "Generate noisy synthetic index datasets from one model, fit both models to each, "
            "and report how often AICc selects the generating model and how well its "
            "parameters are recovered."
        ),
        inputSchema={
            "type": "object",
            "properties": {
                "config": CONFIG_PROPERTY,
                "model": MODEL_PROPERTY,
                "seeds": {"type": "integer", "minimum": 1, "description": "Number of datasets"},
                "noise_sd": {"type": "number", "minimum": 0},
                "response": {"type": "string", "description": "Cached impedance response JSON"},
                "baselines": BASELINES_PROPERTY,
                "out": {"type": "string"},
                "jobs": {"type": "integer", "minimum": 1},
            },
            "required": ["model"],
        },
    )


async def handle_run_recovery(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """Handle run_recovery tool execution."""
    result = await _recover(arguments, provider_for(arguments))
    return result.to_dict()
