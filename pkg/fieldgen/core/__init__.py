"""Numerical core: arm mechanics, fields, controllers, trials, protocol, analysis and fitting."""
