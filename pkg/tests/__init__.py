"""Tests for fieldgen."""
