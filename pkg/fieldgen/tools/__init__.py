"""MCP tools for fieldgen."""

from .analysis import analyze_trials_tool, handle_analyze_trials
from .modeling import (
    compare_models_tool,
    fit_model_tool,
    handle_compare_models,
    handle_fit_model,
    handle_run_recovery,
    run_recovery_tool,
)
from .plots import emit_plots_tool, handle_emit_plots
from .simulation import (
    audit_protocol_tool,
    handle_audit_protocol,
    handle_simulate_protocol,
    simulate_protocol_tool,
)

__all__ = [
    # Simulation
    "simulate_protocol_tool",
    "handle_simulate_protocol",
    "audit_protocol_tool",
    "handle_audit_protocol",
    # Analysis
    "analyze_trials_tool",
    "handle_analyze_trials",
    # Modeling
    "fit_model_tool",
    "handle_fit_model",
    "compare_models_tool",
    "handle_compare_models",
    "run_recovery_tool",
    "handle_run_recovery",
    # Plots
    "emit_plots_tool",
    "handle_emit_plots",
]
