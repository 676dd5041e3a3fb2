"""Utilities: record I/O, plotting and worker pools."""
