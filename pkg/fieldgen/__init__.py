"""Force-field adaptation toolkit: simulated reaching, adaptation indices and model comparison."""

__version__ = "1.0.0"
